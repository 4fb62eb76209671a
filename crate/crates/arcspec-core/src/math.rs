//! Scalar special functions and Gauss-Legendre rules used across the crate.

use alloc::vec::Vec;
use libm::{cos, exp, fabs, log};

/// psi(1) = -gamma_E, stored to full double precision.
pub const PSI_ONE: f64 = -0.57721566490153286;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.57721566490153286;

pub const PI: f64 = core::f64::consts::PI;

/// Complementary exponential integral Ein(x) = int_0^x (1 - e^{-t})/t dt.
///
/// Entire function; evaluated by its power series for small arguments and
/// via gamma + ln x + E1(x) (continued fraction) otherwise.
pub fn ein(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x <= 1.0 {
        // Ein(x) = sum_{k>=1} (-1)^{k+1} x^k / (k * k!)
        let mut term = x; // x^k / k!
        let mut sum = x;
        for k in 2..30u32 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if fabs(add) < 1e-18 * fabs(sum) {
                break;
            }
        }
        sum
    } else {
        EULER_GAMMA + log(x) + e1(x)
    }
}

/// Exponential integral E1(x) for x >= 1 via a modified Lentz continued
/// fraction: E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...))).
fn e1(x: f64) -> f64 {
    debug_assert!(x >= 1.0);
    if x > 700.0 {
        return 0.0;
    }
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..200u32 {
        let a = -(i as f64) * (i as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if fabs(del - 1.0) < 1e-16 {
            break;
        }
    }
    exp(-x) * h
}

/// Nodes and weights of the m-point Gauss-Legendre rule on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; nodes ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = alloc::vec![0.0; m];
    let mut weights = alloc::vec![0.0; m];
    let half = m.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess for the i-th root (descending order).
        let mut x = cos(PI * (i as f64 + 0.75) / (m as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_m(x) and P_m'(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if fabs(dx) < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[m - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// Barycentric weights for a node set (used for panel-local Lagrange bases).
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = alloc::vec![1.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w[i] /= nodes[i] - nodes[j];
            }
        }
    }
    w
}

/// Evaluate all Lagrange basis polynomials of the node set at `x`.
pub fn lagrange_all(nodes: &[f64], bary: &[f64], x: f64, out: &mut [f64]) {
    let n = nodes.len();
    for i in 0..n {
        let d = x - nodes[i];
        if fabs(d) < 1e-14 {
            for v in out.iter_mut() {
                *v = 0.0;
            }
            out[i] = 1.0;
            return;
        }
        out[i] = bary[i] / d;
    }
    let s: f64 = out.iter().sum();
    for v in out.iter_mut() {
        *v /= s;
    }
}

/// Least-squares line fit y = a + b x; returns (a, b).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    let b = (n * sxy - sx * sy) / det;
    let a = (sy - b * sx) / n;
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::sqrt;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for m in [2usize, 4, 8, 12, 16] {
            let (x, w) = gauss_legendre(m);
            let sum: f64 = w.iter().sum();
            assert!((sum - 2.0).abs() < 1e-14, "m={m} weight sum {sum}");
            // Exact for degree 2m-1.
            let p = 2 * m - 2;
            let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * libm::pow(*x, p as f64)).sum();
            let exact = 2.0 / (p as f64 + 1.0);
            assert!((integral - exact).abs() < 1e-13, "m={m} deg={p}");
        }
    }

    #[test]
    fn gauss_legendre_matches_two_point_rule() {
        let (x, w) = gauss_legendre(2);
        assert!((x[0] + 1.0 / sqrt(3.0)).abs() < 1e-15);
        assert!((x[1] - 1.0 / sqrt(3.0)).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ein_small_and_large() {
        // Ein(x) ~ x - x^2/4 for small x.
        let x = 1e-6;
        assert!((ein(x) - (x - x * x / 4.0)).abs() < 1e-18);
        // Large x: Ein(x) -> gamma + ln x.
        let x = 50.0;
        assert!((ein(x) - (EULER_GAMMA + log(x))).abs() < 1e-15);
        // Cross-check at the series/continued-fraction seam by quadrature.
        let (gx, gw) = gauss_legendre(40);
        for x0 in [0.5f64, 1.0, 1.5, 4.0] {
            let mut q = 0.0;
            for (t, w) in gx.iter().zip(&gw) {
                let u = 0.5 * x0 * (t + 1.0);
                q += 0.5 * x0 * w * (1.0 - exp(-u)) / u;
            }
            assert!((ein(x0) - q).abs() < 1e-13, "x0={x0}: {} vs {q}", ein(x0));
        }
    }

    #[test]
    fn lagrange_partition_of_unity() {
        let (x, _) = gauss_legendre(8);
        let bw = barycentric_weights(&x);
        let mut vals = [0.0; 8];
        lagrange_all(&x, &bw, 0.3333, &mut vals);
        let s: f64 = vals.iter().sum();
        assert!((s - 1.0).abs() < 1e-13);
        // Reproduces a cubic exactly.
        let f = |t: f64| 1.0 + t - 2.0 * t * t + 0.5 * t * t * t;
        let interp: f64 = x.iter().zip(&vals).map(|(xi, l)| l * f(*xi)).sum();
        assert!((interp - f(0.3333)).abs() < 1e-13);
    }
}

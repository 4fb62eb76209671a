//! Deterministic symmetric eigensolvers: Sturm bisection for tridiagonal
//! matrices and Lanczos with full reorthogonalization for large dense
//! operators.

use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, sqrt};

use crate::error::{Error, Result};

/// A symmetric linear operator given by its action on vectors.
pub trait SymOp: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Symmetric tridiagonal matrix; `off` has length `diag.len() - 1`.
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly less than `x` (Sturm sequence count).
    pub fn count_less(&self, x: f64) -> usize {
        let mut count = 0usize;
        let mut d = 1.0f64;
        for i in 0..self.diag.len() {
            let off2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            d = self.diag[i] - x - off2 / d;
            if d == 0.0 {
                d = 1e-300;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += fabs(self.off[i - 1]);
            }
            if i + 1 < n {
                r += fabs(self.off[i]);
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `idx`-th eigenvalue in ascending order (0-based), by bisection.
    pub fn eigenvalue(&self, idx: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let scale = fabs(lo).max(fabs(hi)).max(1e-300);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_less(mid) > idx {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-16 * scale {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// The `k` smallest eigenvalues, ascending.
    pub fn eigenvalues_smallest(&self, k: usize) -> Result<Vec<f64>> {
        if k > self.dim() {
            return Err(Error::EigenCountOutOfRange { requested: k, dim: self.dim() });
        }
        Ok((0..k).map(|i| self.eigenvalue(i)).collect())
    }

    /// The `k` largest eigenvalues, descending.
    pub fn eigenvalues_largest(&self, k: usize) -> Result<Vec<f64>> {
        if k > self.dim() {
            return Err(Error::EigenCountOutOfRange { requested: k, dim: self.dim() });
        }
        let n = self.dim();
        Ok((0..k).map(|i| self.eigenvalue(n - 1 - i)).collect())
    }

    /// Eigenvector for an isolated eigenvalue via shifted inverse iteration
    /// with partial pivoting; returned normalized.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.dim();
        let mut rng = SplitMix64::new(0x2545F4914F6CDD1D);
        let mut v: Vec<f64> = (0..n).map(|_| rng.next_sym()).collect();
        normalize(&mut v);
        let scale = self
            .diag
            .iter()
            .map(|d| fabs(*d))
            .fold(0.0f64, f64::max)
            .max(1.0);
        let shift = lambda + 1e-13 * scale;
        let mut w = vec![0.0; n];
        for _ in 0..4 {
            solve_shifted(self, shift, &v, &mut w);
            normalize(&mut w);
            core::mem::swap(&mut v, &mut w);
        }
        v
    }
}

/// Solve (T - shift I) y = b by Gaussian elimination with partial pivoting.
/// Pivoting introduces one fill-in superdiagonal `f`.
fn solve_shifted(t: &SymTridiagonal, shift: f64, b: &[f64], y: &mut [f64]) {
    let n = t.dim();
    let mut d: Vec<f64> = t.diag.iter().map(|v| v - shift).collect();
    let mut e: Vec<f64> = (0..n).map(|i| if i + 1 < n { t.off[i] } else { 0.0 }).collect();
    let mut f = vec![0.0; n];
    let mut rhs = b.to_vec();
    let sub: Vec<f64> = e.clone();
    for i in 0..n - 1 {
        // Row i: [d_i, e_i, f_i]; row i+1 starts as [sub_i, d_{i+1}, e_{i+1}].
        let mut lower = sub[i];
        if fabs(lower) > fabs(d[i]) {
            // Swap rows i and i+1 across the three bands and the rhs.
            let row_i = [d[i], e[i], f[i], rhs[i]];
            d[i] = lower;
            e[i] = d[i + 1];
            f[i] = e[i + 1];
            rhs[i] = rhs[i + 1];
            lower = row_i[0];
            d[i + 1] = row_i[1];
            e[i + 1] = row_i[2];
            rhs[i + 1] = row_i[3];
        }
        let piv = if d[i] == 0.0 { 1e-300 } else { d[i] };
        let m = lower / piv;
        d[i + 1] -= m * e[i];
        e[i + 1] -= m * f[i];
        rhs[i + 1] -= m * rhs[i];
    }
    // Back substitution.
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s -= e[i] * y[i + 1];
        }
        if i + 2 < n {
            s -= f[i] * y[i + 2];
        }
        let piv = if d[i] == 0.0 { 1e-300 } else { d[i] };
        y[i] = s / piv;
    }
}

fn normalize(v: &mut [f64]) {
    let n: f64 = sqrt(v.iter().map(|x| x * x).sum());
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Dot product with eight independent accumulators; the fixed reduction
/// tree lets the compiler vectorize while keeping results deterministic.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n8 = a.len() & !7usize;
    let mut acc = [0.0f64; 8];
    let (a8, at) = a.split_at(n8);
    let (b8, bt) = b.split_at(n8);
    for (ca, cb) in a8.chunks_exact(8).zip(b8.chunks_exact(8)) {
        for k in 0..8 {
            acc[k] += ca[k] * cb[k];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5]))
        + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in at.iter().zip(bt) {
        s += x * y;
    }
    s
}

/// Deterministic splitmix64 stream mapped to [-1, 1); used to seed
/// iterations without symmetry bias.
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }
    pub fn next_sym(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }
}

/// Result of a Lanczos run: Ritz values descending, with residual-based
/// convergence flags and optional Ritz vectors.
pub struct LanczosResult {
    pub values: Vec<f64>,
    pub converged: Vec<bool>,
    pub vectors: Option<Vec<Vec<f64>>>,
}

/// Largest eigenvalues of a symmetric operator by Lanczos with full
/// reorthogonalization. Deterministic start vector; `tol` is an absolute
/// residual tolerance on |beta_m * y_last|.
pub fn lanczos_largest(
    op: &dyn SymOp,
    k: usize,
    max_iter: usize,
    tol: f64,
    want_vectors: bool,
) -> Result<LanczosResult> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::EigenCountOutOfRange { requested: k, dim: n });
    }
    let m_max = max_iter.min(n);
    let mut rng = SplitMix64::new(0x6A09E667F3BCC909);
    let mut v: Vec<f64> = (0..n).map(|_| rng.next_sym()).collect();
    normalize(&mut v);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m_max);
    let mut alphas: Vec<f64> = Vec::with_capacity(m_max);
    let mut betas: Vec<f64> = Vec::with_capacity(m_max);
    let mut w = vec![0.0; n];

    let mut m = 0usize;
    while m < m_max {
        basis.push(v.clone());
        op.apply(&v, &mut w);
        if m > 0 {
            let b = betas[m - 1];
            let prev = &basis[m - 1];
            for i in 0..n {
                w[i] -= b * prev[i];
            }
        }
        let a = dot(&w, &v);
        alphas.push(a);
        for i in 0..n {
            w[i] -= a * v[i];
        }
        // Full reorthogonalization, two passes.
        for _ in 0..2 {
            for q in basis.iter() {
                let c = dot(&w, q);
                for i in 0..n {
                    w[i] -= c * q[i];
                }
            }
        }
        let b = sqrt(dot(&w, &w));
        betas.push(b);
        m += 1;
        if b < 1e-14 {
            break; // invariant subspace found
        }
        v.clear();
        v.extend(w.iter().map(|x| x / b));

        // Convergence check on the top-k Ritz pairs every few steps.
        if m >= k + 2 && (m % 8 == 0 || m == m_max) {
            if ritz_converged(&alphas, &betas, k, tol) {
                break;
            }
        }
    }

    let t = SymTridiagonal {
        diag: alphas.clone(),
        off: betas[..m - 1].to_vec(),
    };
    let kk = k.min(m);
    let values = t.eigenvalues_largest(kk)?;
    let beta_last = betas[m - 1];
    let mut converged = Vec::with_capacity(kk);
    let mut vectors = if want_vectors { Some(Vec::with_capacity(kk)) } else { None };
    for &lam in &values {
        let y = t.eigenvector(lam);
        converged.push(fabs(beta_last * y[m - 1]) < tol.max(1e-14));
        if let Some(vecs) = vectors.as_mut() {
            let mut x = vec![0.0; n];
            for (j, q) in basis.iter().enumerate() {
                let c = y[j];
                for i in 0..n {
                    x[i] += c * q[i];
                }
            }
            normalize(&mut x);
            vecs.push(x);
        }
    }
    Ok(LanczosResult { values, converged, vectors })
}

fn ritz_converged(alphas: &[f64], betas: &[f64], k: usize, tol: f64) -> bool {
    let m = alphas.len();
    if m < k + 1 {
        return false;
    }
    let t = SymTridiagonal {
        diag: alphas.to_vec(),
        off: betas[..m - 1].to_vec(),
    };
    let beta_last = betas[m - 1];
    for i in 0..k {
        let lam = t.eigenvalue(m - 1 - i);
        let y = t.eigenvector(lam);
        if fabs(beta_last * y[m - 1]) >= tol {
            return false;
        }
    }
    true
}

/// Dense symmetric matrix in row-major full storage.
#[derive(Clone)]
pub struct DenseSym {
    pub n: usize,
    pub data: Vec<f64>,
}

impl DenseSym {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    /// Relative asymmetry ||A - A^T|| / ||A|| (Frobenius), then averages
    /// A and A^T in place. Returns the raw defect.
    pub fn symmetrize(&mut self) -> f64 {
        let n = self.n;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let a = self.data[i * n + j];
                let b = self.data[j * n + i];
                num += (a - b) * (a - b);
                den += a * a + b * b;
                let avg = 0.5 * (a + b);
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg;
            }
            den += self.data[i * n + i] * self.data[i * n + i];
        }
        if den == 0.0 {
            0.0
        } else {
            sqrt(num / den)
        }
    }
}

impl SymOp for DenseSym {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            y[i] = dot(&self.data[i * n..(i + 1) * n], x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymTridiagonal {
        SymTridiagonal {
            diag: vec![2.0; n],
            off: vec![-1.0; n - 1],
        }
    }

    #[test]
    fn tridiagonal_bisection_matches_analytic_laplacian() {
        let n = 64;
        let t = laplacian(n);
        let evs = t.eigenvalues_smallest(5).unwrap();
        for (i, ev) in evs.iter().enumerate() {
            let exact = 2.0 - 2.0 * libm::cos((i as f64 + 1.0) * crate::math::PI / (n as f64 + 1.0));
            assert!((ev - exact).abs() < 1e-12, "i={i}: {ev} vs {exact}");
        }
    }

    #[test]
    fn one_by_one_matrix() {
        let t = SymTridiagonal { diag: vec![3.5], off: vec![] };
        assert_eq!(t.eigenvalues_smallest(1).unwrap(), vec![3.5]);
    }

    #[test]
    fn eigenvector_residual_small() {
        let t = laplacian(50);
        let lam = t.eigenvalue(0);
        let v = t.eigenvector(lam);
        // || T v - lam v ||
        let n = t.dim();
        let mut res: f64 = 0.0;
        for i in 0..n {
            let mut s = t.diag[i] * v[i] - lam * v[i];
            if i > 0 {
                s += t.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                s += t.off[i] * v[i + 1];
            }
            res += s * s;
        }
        assert!(sqrt(res) < 1e-10, "residual {}", sqrt(res));
    }

    #[test]
    fn lanczos_recovers_dense_spectrum() {
        // Diagonal-dominant dense symmetric matrix with known top values.
        let n = 120;
        let mut a = DenseSym::zeros(n);
        let mut rng = SplitMix64::new(7);
        for i in 0..n {
            for j in i..n {
                let v = 0.01 * rng.next_sym();
                a.data[i * n + j] = v;
                a.data[j * n + i] = v;
            }
            a.data[i * n + i] = i as f64 * 0.1;
        }
        let res = lanczos_largest(&a, 3, 120, 1e-12, true).unwrap();
        // Compare against full-ish reference via many Lanczos iterations.
        let reference = lanczos_largest(&a, 3, n, 1e-14, false).unwrap();
        for i in 0..3 {
            assert!((res.values[i] - reference.values[i]).abs() < 1e-9);
            assert!(res.converged[i]);
        }
        // Ritz vector residual.
        let v = &res.vectors.as_ref().unwrap()[0];
        let mut y = vec![0.0; n];
        a.apply(v, &mut y);
        let lam = res.values[0];
        let res_norm: f64 = sqrt(y.iter().zip(v).map(|(yi, vi)| (yi - lam * vi) * (yi - lam * vi)).sum());
        assert!(res_norm < 1e-8, "residual {res_norm}");
    }

    #[test]
    fn lanczos_finds_clustered_top_values() {
        let n = 400;
        let mut a = DenseSym::zeros(n);
        for i in 0..n {
            a.data[i * n + i] = -(i as f64) * 1e-3;
        }
        // Small coupling to make it non-diagonal.
        for i in 0..n - 1 {
            a.data[i * n + i + 1] = 1e-4;
            a.data[(i + 1) * n + i] = 1e-4;
        }
        let res = lanczos_largest(&a, 4, 400, 1e-12, false).unwrap();
        for i in 1..4 {
            assert!(res.values[i - 1] > res.values[i]);
        }
        assert!(res.values[0] < 1.0e-3 && res.values[0] > -1e-3);
    }

    #[test]
    fn symmetrize_reports_defect() {
        let mut a = DenseSym::zeros(2);
        a.data = vec![1.0, 2.0, 2.0 + 1e-6, 1.0];
        let defect = a.symmetrize();
        assert!(defect > 0.0 && defect < 1e-5);
        assert_eq!(a.data[1], a.data[2]);
    }
}

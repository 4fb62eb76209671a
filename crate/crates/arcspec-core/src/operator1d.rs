//! Finite-difference discretization of the effective comparison operators
//! S = -d^2/ds^2 - gamma^2/4 with Dirichlet or Neumann ends, plus the
//! extended operator S_d^ex and its rescaled twin on (0, L).

use alloc::vec::Vec;

use crate::curve::ArcCurve;
use crate::error::{Error, Result};
use crate::linalg::SymTridiagonal;

/// Boundary condition of the 1D operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Uniform grid on (a, b) with n interior nodes and spacing (b-a)/(n+1).
#[derive(Debug, Clone, Copy)]
pub struct Grid1D {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 8 || !(b > a) {
            return Err(Error::InvalidSpec(alloc::format!(
                "grid needs n >= 8 interior nodes and b > a, got n={n}, [{a}, {b}]"
            )));
        }
        Ok(Self { a, b, n })
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / (self.n + 1) as f64
    }
}

/// Eigenvalues of one discretized comparison operator with its metadata.
#[derive(Debug, Clone)]
pub struct Spectrum1D {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    pub bc: BoundaryCondition,
    pub grid: Grid1D,
    /// Potential samples -gamma^2/4 at the matrix nodes.
    pub potential: Vec<f64>,
}

/// Second-order central-difference matrix of -d''/ds'' - gamma^2/4.
///
/// Dirichlet keeps the n interior nodes. Neumann keeps the two boundary
/// nodes as well (dimension n + 2) with mirrored ghost nodes folded into a
/// symmetric form, so the zero-potential constant mode is exactly null.
pub fn assemble_1d(
    curve: &ArcCurve,
    grid: &Grid1D,
    bc: BoundaryCondition,
) -> Result<(SymTridiagonal, Vec<f64>)> {
    let (lo, hi) = curve.domain();
    let tol = 1e-9 * (1.0 + curve.length);
    if grid.a < lo - tol || grid.b > hi + tol {
        return Err(Error::GridOutsideDomain);
    }
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    match bc {
        BoundaryCondition::Dirichlet => {
            let mut diag = Vec::with_capacity(grid.n);
            let mut potential = Vec::with_capacity(grid.n);
            for i in 0..grid.n {
                let s = grid.a + (i + 1) as f64 * h;
                let g = curve.gamma(s)?;
                let v = -0.25 * g * g;
                potential.push(v);
                diag.push(2.0 * inv_h2 + v);
            }
            let off = alloc::vec![-inv_h2; grid.n - 1];
            Ok((SymTridiagonal { diag, off }, potential))
        }
        BoundaryCondition::Neumann => {
            let dim = grid.n + 2;
            let mut diag = Vec::with_capacity(dim);
            let mut potential = Vec::with_capacity(dim);
            for i in 0..dim {
                let s = grid.a + i as f64 * h;
                let g = curve.gamma(s)?;
                let v = -0.25 * g * g;
                potential.push(v);
                diag.push(2.0 * inv_h2 + v);
            }
            let mut off = alloc::vec![-inv_h2; dim - 1];
            let sqrt2 = libm::sqrt(2.0);
            off[0] = -sqrt2 * inv_h2;
            off[dim - 2] = -sqrt2 * inv_h2;
            Ok((SymTridiagonal { diag, off }, potential))
        }
    }
}

/// The k smallest eigenvalues of a symmetric tridiagonal matrix, ascending.
pub fn eigenvalues_1d(matrix: &SymTridiagonal, k: usize) -> Result<Vec<f64>> {
    matrix.eigenvalues_smallest(k)
}

/// Assemble and diagonalize in one step.
pub fn spectrum_1d(
    curve: &ArcCurve,
    grid: &Grid1D,
    bc: BoundaryCondition,
    k: usize,
) -> Result<Spectrum1D> {
    let (matrix, potential) = assemble_1d(curve, grid, bc)?;
    let eigenvalues = eigenvalues_1d(&matrix, k)?;
    Ok(Spectrum1D { eigenvalues, bc, grid: *grid, potential })
}

/// Pairs (lambda_j(S^N), lambda_j(S)) on (0, L), satisfying the
/// Dirichlet-Neumann bracketing inequality per index.
pub fn bracketing_table(curve: &ArcCurve, n: usize, k: usize) -> Result<Vec<(f64, f64)>> {
    let grid = Grid1D::new(0.0, curve.length, n)?;
    let neumann = spectrum_1d(curve, &grid, BoundaryCondition::Neumann, k)?;
    let dirichlet = spectrum_1d(curve, &grid, BoundaryCondition::Dirichlet, k)?;
    Ok(neumann
        .eigenvalues
        .into_iter()
        .zip(dirichlet.eigenvalues)
        .collect())
}

/// Spectra of the extended operator S_d^ex on (-d, L+d) and of the rescaled
/// operator on (0, L) with kinetic prefactor (L/(L+2d))^2 and pulled-back
/// curvature. The two are unitarily equivalent and the discretizations
/// coincide node by node.
pub fn extended_rescaled_spectrum(
    curve: &ArcCurve,
    d: f64,
    n: usize,
    k: usize,
) -> Result<(Spectrum1D, Spectrum1D)> {
    let extended = curve.extend(d)?;
    let l = curve.length;
    let grid_ex = Grid1D::new(-d, l + d, n)?;
    let spec_ex = spectrum_1d(&extended, &grid_ex, BoundaryCondition::Dirichlet, k)?;

    // Rescaled operator on (0, L): y = L (s + d) / (L + 2d).
    let grid = Grid1D::new(0.0, l, n)?;
    let h = grid.spacing();
    let scale = l / (l + 2.0 * d);
    let inv_h2 = scale * scale / (h * h);
    let mut diag = Vec::with_capacity(n);
    let mut potential = Vec::with_capacity(n);
    for i in 0..n {
        let y = (i + 1) as f64 * h;
        let s = y / scale - d;
        let g = extended.gamma(s)?;
        let v = -0.25 * g * g;
        potential.push(v);
        diag.push(2.0 * inv_h2 + v);
    }
    let off = alloc::vec![-inv_h2; n - 1];
    let matrix = SymTridiagonal { diag, off };
    let eigenvalues = eigenvalues_1d(&matrix, k)?;
    let spec_rescaled = Spectrum1D {
        eigenvalues,
        bc: BoundaryCondition::Dirichlet,
        grid,
        potential,
    };
    Ok((spec_ex, spec_rescaled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{ArcCurve, CurveKind, CurveSpec};
    use crate::math::PI;

    fn segment(length: f64) -> ArcCurve {
        ArcCurve::build(&CurveSpec {
            kind: CurveKind::Segment,
            length,
            d0: 0.2,
            samples: 0,
        })
        .unwrap()
    }

    fn quarter_circle() -> ArcCurve {
        ArcCurve::build(&CurveSpec {
            kind: CurveKind::CircularArc { radius: 1.0 },
            length: PI / 2.0,
            d0: 0.1,
            samples: 0,
        })
        .unwrap()
    }

    #[test]
    fn dirichlet_box_levels() {
        let c = segment(1.0);
        let grid = Grid1D::new(0.0, 1.0, 4095).unwrap();
        let s = spectrum_1d(&c, &grid, BoundaryCondition::Dirichlet, 3).unwrap();
        assert!((s.eigenvalues[0] - PI * PI).abs() < 1e-5);
        assert!((s.eigenvalues[1] - 4.0 * PI * PI).abs() < 1e-4);
    }

    #[test]
    fn neumann_constant_mode() {
        let c = segment(1.0);
        let grid = Grid1D::new(0.0, 1.0, 511).unwrap();
        let s = spectrum_1d(&c, &grid, BoundaryCondition::Neumann, 2).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-10);
        assert!((s.eigenvalues[1] - PI * PI).abs() < 2e-3);
    }

    #[test]
    fn circle_shifted_box_levels() {
        let c = quarter_circle();
        let grid = Grid1D::new(0.0, PI / 2.0, 4095).unwrap();
        let s = spectrum_1d(&c, &grid, BoundaryCondition::Dirichlet, 2).unwrap();
        assert!((s.eigenvalues[0] - 3.75).abs() < 1e-5, "{}", s.eigenvalues[0]);
        assert!((s.eigenvalues[1] - 15.75).abs() < 1e-4);
    }

    #[test]
    fn bracketing_pairs() {
        let seg = segment(1.0);
        let table = bracketing_table(&seg, 2047, 3).unwrap();
        assert!(table[0].0.abs() < 1e-8);
        assert!((table[0].1 - PI * PI).abs() < 1e-4);
        assert!((table[1].0 - PI * PI).abs() < 1e-3);
        assert!((table[1].1 - 4.0 * PI * PI).abs() < 1e-3);
        let circ = quarter_circle();
        let table = bracketing_table(&circ, 2047, 10).unwrap();
        assert!((table[0].0 + 0.25).abs() < 1e-6);
        assert!((table[0].1 - 3.75).abs() < 1e-4);
        for (n, d) in &table {
            assert!(n <= d);
        }
    }

    #[test]
    fn convergence_order_two() {
        let c = segment(1.0);
        let mut errors = alloc::vec::Vec::new();
        for n in [255usize, 511, 1023] {
            let grid = Grid1D::new(0.0, 1.0, n).unwrap();
            let s = spectrum_1d(&c, &grid, BoundaryCondition::Dirichlet, 1).unwrap();
            errors.push((s.eigenvalues[0] - PI * PI).abs());
        }
        for w in errors.windows(2) {
            let order = libm::log2(w[0] / w[1]);
            assert!((order - 2.0).abs() < 0.2, "observed order {order}");
        }
    }

    #[test]
    fn one_by_one_matrix_identity() {
        let m = SymTridiagonal { diag: alloc::vec![3.25], off: alloc::vec![] };
        assert_eq!(eigenvalues_1d(&m, 1).unwrap(), alloc::vec![3.25]);
    }

    #[test]
    fn extended_segment_box() {
        let c = segment(1.0);
        let (ex, rescaled) = extended_rescaled_spectrum(&c, 0.05, 2047, 2).unwrap();
        let expected = (PI / 1.1) * (PI / 1.1);
        assert!((ex.eigenvalues[0] - expected).abs() < 1e-4, "{}", ex.eigenvalues[0]);
        // Change-of-variable identity.
        for (a, b) in ex.eigenvalues.iter().zip(&rescaled.eigenvalues) {
            assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn extended_d_zero_recovers_s() {
        let c = quarter_circle();
        let grid = Grid1D::new(0.0, c.length, 1023).unwrap();
        let s = spectrum_1d(&c, &grid, BoundaryCondition::Dirichlet, 2).unwrap();
        let (ex, rescaled) = extended_rescaled_spectrum(&c, 0.0, 1023, 2).unwrap();
        for j in 0..2 {
            assert!((ex.eigenvalues[j] - s.eigenvalues[j]).abs() < 1e-12);
            assert!((rescaled.eigenvalues[j] - s.eigenvalues[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn extended_spectrum_linear_in_d() {
        let c = quarter_circle();
        let grid = Grid1D::new(0.0, c.length, 2047).unwrap();
        let s = spectrum_1d(&c, &grid, BoundaryCondition::Dirichlet, 1).unwrap();
        let mut gaps = alloc::vec::Vec::new();
        for d in [0.04, 0.02, 0.01] {
            let (ex, _) = extended_rescaled_spectrum(&c, d, 2047, 1).unwrap();
            gaps.push((ex.eigenvalues[0] - s.eigenvalues[0]).abs());
        }
        for w in gaps.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.5..=2.5).contains(&ratio), "halving ratio {ratio}");
        }
    }

    #[test]
    fn grid_outside_domain_rejected() {
        let c = segment(1.0);
        let grid = Grid1D::new(-0.1, 1.0, 100).unwrap();
        assert!(matches!(
            assemble_1d(&c, &grid, BoundaryCondition::Dirichlet),
            Err(Error::GridOutsideDomain)
        ));
    }
}

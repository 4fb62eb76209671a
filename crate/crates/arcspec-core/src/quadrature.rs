//! Composite Gauss-Legendre quadrature on (0, L) with dyadic grading toward
//! both endpoints, used to discretize the Birman-Schwinger operator.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// One quadrature panel [a, b].
#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
}

impl Panel {
    pub fn width(&self) -> f64 {
        self.b - self.a
    }
}

/// Graded composite Gauss-Legendre rule on (0, L).
///
/// Every panel carries the same m-point rule, so node i belongs to panel
/// i / m. The first and last base cells are split dyadically toward the
/// endpoints to resolve the endpoint behavior of Birman-Schwinger
/// eigenvectors.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub length: f64,
    /// Points per panel.
    pub m: usize,
    pub panels: Vec<Panel>,
    /// Global node positions, strictly increasing in (0, L).
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Reference Gauss-Legendre nodes on [-1, 1], ascending.
    pub ref_nodes: Vec<f64>,
    pub ref_weights: Vec<f64>,
    /// Barycentric weights of the reference nodes.
    pub bary: Vec<f64>,
}

impl Quadrature {
    /// Build a graded rule with close to `n_q` nodes in total.
    pub fn graded(length: f64, n_q: usize) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::InvalidSpec(alloc::format!(
                "quadrature interval length {length} must be positive"
            )));
        }
        let m = 8usize;
        if n_q < 8 * m {
            return Err(Error::QuadratureTooCoarse(alloc::format!(
                "n_q = {n_q} below the minimum of {}",
                8 * m
            )));
        }
        let n_panels = n_q / m;
        let levels = (((n_panels - 2) / 2).saturating_sub(1)).min(8);
        let n_mid = n_panels - 2 * (levels + 1);
        // Base cell width; the two end cells are each split into a dyadic
        // stack of `levels + 1` panels.
        let h = length / (n_mid + 2) as f64;

        let mut breaks: Vec<f64> = Vec::with_capacity(n_panels + 1);
        breaks.push(0.0);
        for k in (0..=levels).rev() {
            breaks.push(h * libm::exp2(-(k as f64)));
        }
        for k in 1..n_mid {
            breaks.push(h + k as f64 * h);
        }
        breaks.push(length - h);
        for k in 1..=levels {
            breaks.push(length - h * libm::exp2(-(k as f64)));
        }
        breaks.push(length);

        let (ref_nodes, ref_weights) = math::gauss_legendre(m);
        let bary = math::barycentric_weights(&ref_nodes);
        let mut panels = Vec::with_capacity(breaks.len() - 1);
        let mut nodes = Vec::with_capacity(m * (breaks.len() - 1));
        let mut weights = Vec::with_capacity(m * (breaks.len() - 1));
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            panels.push(Panel { a, b });
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (x, wt) in ref_nodes.iter().zip(&ref_weights) {
                nodes.push(mid + half * x);
                weights.push(half * wt);
            }
        }
        let quad = Self {
            length,
            m,
            panels,
            nodes,
            weights,
            ref_nodes,
            ref_weights,
            bary,
        };
        let total: f64 = quad.weights.iter().sum();
        debug_assert!(libm::fabs(total - length) < 1e-10 * (1.0 + length));
        Ok(quad)
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Panel index owning node `i`.
    pub fn panel_of(&self, i: usize) -> usize {
        i / self.m
    }

    /// Node index range of panel `p`.
    pub fn panel_nodes(&self, p: usize) -> core::ops::Range<usize> {
        p * self.m..(p + 1) * self.m
    }

    /// Largest panel width (attained in the middle of the interval).
    pub fn max_width(&self) -> f64 {
        self.panels
            .iter()
            .map(|p| p.width())
            .fold(0.0f64, f64::max)
    }

    /// Map a global arc length into the reference coordinate of panel `p`.
    pub fn to_ref(&self, p: usize, s: f64) -> f64 {
        let panel = &self.panels[p];
        (2.0 * s - panel.a - panel.b) / panel.width()
    }
}

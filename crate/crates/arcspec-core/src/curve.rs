//! Arc-length-parametrized open arcs in 3-space: construction from several
//! spec kinds, Frenet/Tang frames, regular extensions, tubular-coordinate
//! metrics and injectivity diagnostics.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use libm::{cos, fabs, sin, sqrt};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

pub fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: &Vec3) -> f64 {
    sqrt(dot3(a, a))
}

pub fn sub3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn axpy3(y: &mut Vec3, alpha: f64, x: &Vec3) {
    y[0] += alpha * x[0];
    y[1] += alpha * x[1];
    y[2] += alpha * x[2];
}

fn scale3(a: &Vec3, c: f64) -> Vec3 {
    [a[0] * c, a[1] * c, a[2] * c]
}

fn normalize3(a: &mut Vec3) {
    let n = norm3(a);
    if n > 0.0 {
        *a = scale3(a, 1.0 / n);
    }
}

/// Curve family selector with per-kind parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveKind {
    Segment,
    CircularArc { radius: f64 },
    HelixArc { a: f64, b: f64 },
    CurvatureProfile { s: Vec<f64>, gamma: Vec<f64>, tau: Vec<f64> },
    SampledPoints { points: Vec<Vec3> },
}

/// Input description of a finite open arc.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    pub kind: CurveKind,
    /// Arc length L > 0. For sampled points the value is recomputed from the
    /// data and this field acts as a sanity hint only.
    pub length: f64,
    /// Margin available for regular extensions, d0 >= 0.
    pub d0: f64,
    /// Samples of the internal uniform grid; 0 selects the default (2048).
    pub samples: usize,
}

impl CurveSpec {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            CurveKind::Segment => "segment",
            CurveKind::CircularArc { .. } => "circular-arc",
            CurveKind::HelixArc { .. } => "helix-arc",
            CurveKind::CurvatureProfile { .. } => "curvature-profile",
            CurveKind::SampledPoints { .. } => "sampled-points",
        }
    }
}

/// Frenet triple with the accumulated Tang angle at one arc-length position.
#[derive(Debug, Clone, Copy)]
pub struct FrenetFrame {
    pub s: f64,
    pub t: Vec3,
    pub n: Vec3,
    pub b: Vec3,
    pub beta: f64,
}

/// Tubular-coordinate metric data at (s, r, phi).
#[derive(Debug, Clone, Copy)]
pub struct TubePoint {
    pub s: f64,
    pub r: f64,
    pub phi: f64,
    pub h: f64,
    pub sqrt_g: f64,
}

/// Result of the injectivity diagnostic for a tube of radius d.
#[derive(Debug, Clone, Copy)]
pub struct InjectivityReport {
    pub d: f64,
    /// 1 - d * max gamma; positive means the lateral factor stays positive.
    pub h_margin: f64,
    /// Minimum chord distance among sample pairs with arc separation
    /// exceeding pi * d (none in range gives infinity).
    pub min_separation: f64,
    /// The chord distance the minimum must exceed, 2d.
    pub required_separation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy)]
struct GeomSample {
    pos: Vec3,
    t: Vec3,
    n: Vec3,
    b: Vec3,
    beta: f64,
    gamma: f64,
    tau: f64,
}

/// Uniform sample block over one parameter interval.
#[derive(Debug, Clone)]
struct SampleGrid {
    s0: f64,
    h: f64,
    samples: Vec<GeomSample>,
}

impl SampleGrid {
    fn s_end(&self) -> f64 {
        self.s0 + self.h * (self.samples.len() - 1) as f64
    }

    fn stencil(&self, s: f64) -> (usize, [f64; 4]) {
        let n = self.samples.len();
        debug_assert!(n >= 4);
        let rel = (s - self.s0) / self.h;
        let i = libm::floor(rel) as isize;
        let i0 = (i - 1).clamp(0, n as isize - 4) as usize;
        let mut xs = [0.0; 4];
        for (k, x) in xs.iter_mut().enumerate() {
            *x = self.s0 + (i0 + k) as f64 * self.h;
        }
        (i0, xs)
    }

    fn lagrange4(xs: &[f64; 4], x: f64) -> [f64; 4] {
        let mut w = [0.0; 4];
        for i in 0..4 {
            let mut p = 1.0;
            for j in 0..4 {
                if i != j {
                    p *= (x - xs[j]) / (xs[i] - xs[j]);
                }
            }
            w[i] = p;
        }
        w
    }

    fn eval(&self, s: f64) -> GeomSample {
        let (i0, xs) = self.stencil(s);
        let w = Self::lagrange4(&xs, s);
        let mut out = GeomSample {
            pos: [0.0; 3],
            t: [0.0; 3],
            n: [0.0; 3],
            b: [0.0; 3],
            beta: 0.0,
            gamma: 0.0,
            tau: 0.0,
        };
        for k in 0..4 {
            let g = &self.samples[i0 + k];
            axpy3(&mut out.pos, w[k], &g.pos);
            axpy3(&mut out.t, w[k], &g.t);
            axpy3(&mut out.n, w[k], &g.n);
            out.beta += w[k] * g.beta;
            out.gamma += w[k] * g.gamma;
            out.tau += w[k] * g.tau;
        }
        normalize3(&mut out.t);
        let c = dot3(&out.n, &out.t);
        axpy3(&mut out.n, -c, &out.t);
        normalize3(&mut out.n);
        out.b = cross3(&out.t, &out.n);
        out
    }

    /// Value and first two derivatives of a scalar field given per sample.
    fn scalar_derivs(&self, s: f64, field: impl Fn(&GeomSample) -> f64) -> (f64, f64, f64) {
        let (i0, xs) = self.stencil(s);
        let ys: Vec<f64> = (0..4).map(|k| field(&self.samples[i0 + k])).collect();
        lagrange4_derivs(&xs, &ys, s)
    }
}

/// Value, first and second derivative of the cubic through 4 points.
fn lagrange4_derivs(xs: &[f64; 4], ys: &[f64], x: f64) -> (f64, f64, f64) {
    let mut v = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for i in 0..4 {
        let mut denom = 1.0;
        for j in 0..4 {
            if i != j {
                denom *= xs[i] - xs[j];
            }
        }
        // ell_i(x) = prod_{j != i} (x - xs[j]) / denom.
        let others: Vec<f64> = (0..4).filter(|&j| j != i).map(|j| x - xs[j]).collect();
        let p = others[0] * others[1] * others[2];
        let p1 = others[0] * others[1] + others[0] * others[2] + others[1] * others[2];
        let p2 = 2.0 * (others[0] + others[1] + others[2]);
        v += ys[i] * p / denom;
        d1 += ys[i] * p1 / denom;
        d2 += ys[i] * p2 / denom;
    }
    (v, d1, d2)
}

/// Natural cubic spline over strictly increasing knots.
#[derive(Debug, Clone)]
pub struct Spline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl Spline {
    pub fn natural(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 3 || ys.len() != n {
            return Err(Error::InvalidSpec(String::from(
                "spline needs at least 3 matched knots",
            )));
        }
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidSpec(String::from(
                    "spline knots must be strictly increasing",
                )));
            }
        }
        // Solve the standard tridiagonal system for second derivatives.
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut upper = vec![0.0; n];
        diag[0] = 1.0;
        diag[n - 1] = 1.0;
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            diag[i] = 2.0 * (h0 + h1);
            upper[i] = h1;
            rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        }
        // Thomas algorithm with the lower band equal to h0.
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = 0.0;
        d[0] = 0.0;
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let denom = diag[i] - h0 * c[i - 1];
            c[i] = upper[i] / denom;
            d[i] = (rhs[i] - h0 * d[i - 1]) / denom;
        }
        let mut m = vec![0.0; n];
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Ok(Self { xs: xs.to_vec(), ys: ys.to_vec(), m })
    }

    fn interval(&self, x: f64) -> usize {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 0;
        }
        if x >= self.xs[n - 1] {
            return n - 2;
        }
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.xs[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.interval(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let i = self.interval(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        (self.ys[i + 1] - self.ys[i]) / h
            + ((3.0 * b * b - 1.0) * self.m[i + 1] - (3.0 * a * a - 1.0) * self.m[i]) * h / 6.0
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        let i = self.interval(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.m[i] + b * self.m[i + 1]
    }

    pub fn deriv3(&self, x: f64) -> f64 {
        let i = self.interval(x);
        let h = self.xs[i + 1] - self.xs[i];
        (self.m[i + 1] - self.m[i]) / h
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }
}

/// Closed-form shortcut for the analytic curve kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Analytic {
    Segment,
    Circle { r: f64 },
    Helix { a: f64, b: f64 },
    Sampled,
}

/// Quadratic prolongation p(x) = c0 + c1 x + c2 x^2 of a scalar profile
/// beyond an endpoint, x being the signed outward offset.
#[derive(Debug, Clone, Copy, Default)]
struct QuadExt {
    c0: f64,
    c1: f64,
    c2: f64,
}

impl QuadExt {
    fn eval(&self, x: f64) -> f64 {
        self.c0 + x * (self.c1 + x * self.c2)
    }
    fn deriv(&self, x: f64) -> f64 {
        self.c1 + 2.0 * x * self.c2
    }
    fn deriv2(&self) -> f64 {
        2.0 * self.c2
    }
}

/// Arc-length-parametrized curve over [-d, L+d].
#[derive(Debug, Clone)]
pub struct ArcCurve {
    analytic: Analytic,
    kind_name: &'static str,
    pub length: f64,
    /// Current extension, 0 on freshly built curves.
    pub d: f64,
    /// Declared extension margin.
    pub d0: f64,
    main: SampleGrid,
    left: Option<SampleGrid>,
    right: Option<SampleGrid>,
    /// Curvature/torsion prolongations at [start, end] for numeric kinds.
    gamma_ext: [QuadExt; 2],
    tau_ext: [QuadExt; 2],
    max_gamma: f64,
}

const DEFAULT_SAMPLES: usize = 2048;

/// Frenet-Serret state advanced by the curve integrator.
#[derive(Debug, Clone, Copy)]
struct FsState {
    pos: Vec3,
    t: Vec3,
    n: Vec3,
    b: Vec3,
}

impl FsState {
    fn canonical() -> Self {
        Self {
            pos: [0.0; 3],
            t: [1.0, 0.0, 0.0],
            n: [0.0, 1.0, 0.0],
            b: [0.0, 0.0, 1.0],
        }
    }

    fn rhs(&self, gamma: f64, tau: f64) -> Self {
        Self {
            pos: self.t,
            t: scale3(&self.n, gamma),
            n: {
                let mut v = scale3(&self.t, -gamma);
                axpy3(&mut v, tau, &self.b);
                v
            },
            b: scale3(&self.n, -tau),
        }
    }

    fn axpy(&mut self, c: f64, other: &Self) {
        axpy3(&mut self.pos, c, &other.pos);
        axpy3(&mut self.t, c, &other.t);
        axpy3(&mut self.n, c, &other.n);
        axpy3(&mut self.b, c, &other.b);
    }

    fn renormalize(&mut self) {
        normalize3(&mut self.t);
        let c = dot3(&self.n, &self.t);
        axpy3(&mut self.n, -c, &self.t);
        normalize3(&mut self.n);
        self.b = cross3(&self.t, &self.n);
    }
}

/// One RK4 step of the Frenet-Serret system; `step` may be negative.
fn fs_rk4(state: &FsState, s: f64, step: f64, gt: &impl Fn(f64) -> (f64, f64)) -> FsState {
    let (g1, t1) = gt(s);
    let (g2, t2) = gt(s + 0.5 * step);
    let (g4, t4) = gt(s + step);
    let k1 = state.rhs(g1, t1);
    let mut s2 = *state;
    s2.axpy(0.5 * step, &k1);
    let k2 = s2.rhs(g2, t2);
    let mut s3 = *state;
    s3.axpy(0.5 * step, &k2);
    let k3 = s3.rhs(g2, t2);
    let mut s4 = *state;
    s4.axpy(step, &k3);
    let k4 = s4.rhs(g4, t4);
    let mut out = *state;
    out.axpy(step / 6.0, &k1);
    out.axpy(step / 3.0, &k2);
    out.axpy(step / 3.0, &k3);
    out.axpy(step / 6.0, &k4);
    out
}

/// Integrate Frenet-Serret from `init` at `s_start`, storing `count` samples
/// at spacing `h` (signed). `beta0` seeds the Tang angle.
fn fs_integrate(
    init: FsState,
    s_start: f64,
    h: f64,
    count: usize,
    beta0: f64,
    gt: &impl Fn(f64) -> (f64, f64),
) -> Vec<GeomSample> {
    let mut out = Vec::with_capacity(count);
    let mut state = init;
    let mut beta = beta0;
    let substeps = 4usize;
    let dt = h / substeps as f64;
    for k in 0..count {
        let s = s_start + k as f64 * h;
        let (gamma, tau) = gt(s);
        out.push(GeomSample {
            pos: state.pos,
            t: state.t,
            n: state.n,
            b: state.b,
            beta,
            gamma,
            tau,
        });
        if k + 1 == count {
            break;
        }
        for j in 0..substeps {
            let sj = s + j as f64 * dt;
            state = fs_rk4(&state, sj, dt, gt);
            state.renormalize();
            // Simpson step for beta' = tau.
            let (_, ta) = gt(sj);
            let (_, tm) = gt(sj + 0.5 * dt);
            let (_, tb) = gt(sj + dt);
            beta += dt * (ta + 4.0 * tm + tb) / 6.0;
        }
    }
    out
}

impl ArcCurve {
    /// Construct the curve from its spec with extension d = 0.
    pub fn build(spec: &CurveSpec) -> Result<Self> {
        if !(spec.length > 0.0) && !matches!(spec.kind, CurveKind::SampledPoints { .. }) {
            return Err(Error::InvalidSpec(String::from("curve length must be positive")));
        }
        if spec.d0 < 0.0 {
            return Err(Error::InvalidSpec(String::from("extension margin d0 must be >= 0")));
        }
        let ns = if spec.samples == 0 { DEFAULT_SAMPLES } else { spec.samples.max(16) };
        let curve = match &spec.kind {
            CurveKind::Segment => Self::analytic_curve(Analytic::Segment, "segment", spec, ns)?,
            CurveKind::CircularArc { radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidSpec(String::from("radius must be positive")));
                }
                Self::analytic_curve(Analytic::Circle { r: *radius }, "circular-arc", spec, ns)?
            }
            CurveKind::HelixArc { a, b } => {
                if !(*a > 0.0) {
                    return Err(Error::InvalidSpec(String::from(
                        "helix parameter a must be positive",
                    )));
                }
                Self::analytic_curve(Analytic::Helix { a: *a, b: *b }, "helix-arc", spec, ns)?
            }
            CurveKind::CurvatureProfile { s, gamma, tau } => {
                Self::from_profile(spec, s, gamma, tau, ns)?
            }
            CurveKind::SampledPoints { points } => Self::from_points(spec, points, ns)?,
        };
        curve.check_self_intersection()?;
        Ok(curve)
    }

    fn analytic_curve(
        analytic: Analytic,
        kind_name: &'static str,
        spec: &CurveSpec,
        ns: usize,
    ) -> Result<Self> {
        let length = spec.length;
        let h = length / (ns - 1) as f64;
        let samples = (0..ns)
            .map(|k| analytic_sample(analytic, k as f64 * h))
            .collect();
        let max_gamma = match analytic {
            Analytic::Segment => 0.0,
            Analytic::Circle { r } => 1.0 / r,
            Analytic::Helix { a, b } => a / (a * a + b * b),
            Analytic::Sampled => unreachable!(),
        };
        Ok(Self {
            analytic,
            kind_name,
            length,
            d: 0.0,
            d0: spec.d0,
            main: SampleGrid { s0: 0.0, h, samples },
            left: None,
            right: None,
            gamma_ext: [QuadExt::default(); 2],
            tau_ext: [QuadExt::default(); 2],
            max_gamma,
        })
    }

    fn from_profile(
        spec: &CurveSpec,
        s_tab: &[f64],
        gamma_tab: &[f64],
        tau_tab: &[f64],
        ns: usize,
    ) -> Result<Self> {
        let length = spec.length;
        if s_tab.len() != gamma_tab.len() || s_tab.len() != tau_tab.len() {
            return Err(Error::InvalidSpec(String::from(
                "curvature profile tables must have equal lengths",
            )));
        }
        if gamma_tab.iter().any(|g| *g < 0.0) {
            return Err(Error::InvalidSpec(String::from(
                "curvature table has negative entries",
            )));
        }
        let tol = 1e-9 * (1.0 + length);
        if s_tab.is_empty() || s_tab[0] > tol || *s_tab.last().unwrap() < length - tol {
            return Err(Error::InvalidSpec(String::from(
                "curvature profile must cover [0, L]",
            )));
        }
        let gs = Spline::natural(s_tab, gamma_tab)?;
        let ts = Spline::natural(s_tab, tau_tab)?;
        let gt = move |s: f64| (gs.eval(s), ts.eval(s));
        let h = length / (ns - 1) as f64;
        let samples = fs_integrate(FsState::canonical(), 0.0, h, ns, 0.0, &gt);
        let max_gamma = samples.iter().map(|g| g.gamma).fold(0.0f64, f64::max);
        Ok(Self {
            analytic: Analytic::Sampled,
            kind_name: "curvature-profile",
            length,
            d: 0.0,
            d0: spec.d0,
            main: SampleGrid { s0: 0.0, h, samples },
            left: None,
            right: None,
            gamma_ext: [QuadExt::default(); 2],
            tau_ext: [QuadExt::default(); 2],
            max_gamma,
        })
    }

    fn from_points(spec: &CurveSpec, points: &[Vec3], ns: usize) -> Result<Self> {
        if points.len() < 5 {
            return Err(Error::InvalidSpec(String::from(
                "sampled-points needs at least 5 points",
            )));
        }
        // Chord-length parameter.
        let mut u = vec![0.0; points.len()];
        for i in 1..points.len() {
            let step = norm3(&sub3(&points[i], &points[i - 1]));
            if step < 1e-14 {
                return Err(Error::InvalidSpec(String::from(
                    "sampled-points contains repeated points",
                )));
            }
            u[i] = u[i - 1] + step;
        }
        let px: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let py: Vec<f64> = points.iter().map(|p| p[1]).collect();
        let pz: Vec<f64> = points.iter().map(|p| p[2]).collect();
        let sx = Spline::natural(&u, &px)?;
        let sy = Spline::natural(&u, &py)?;
        let sz = Spline::natural(&u, &pz)?;
        let speed = |uu: f64| {
            let d = [sx.deriv(uu), sy.deriv(uu), sz.deriv(uu)];
            norm3(&d)
        };
        // Cumulative arc length at the knots by per-interval Gauss rule.
        let (gx, gw) = crate::math::gauss_legendre(8);
        let mut arc = vec![0.0; u.len()];
        for i in 1..u.len() {
            let (a, b) = (u[i - 1], u[i]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let seg: f64 = gx.iter().zip(&gw).map(|(x, w)| w * speed(mid + half * x)).sum();
            arc[i] = arc[i - 1] + half * seg;
        }
        let length = *arc.last().unwrap();
        if !(length > 0.0) {
            return Err(Error::InvalidSpec(String::from("degenerate sampled points")));
        }
        // Invert s(u) for a uniform arc-length grid.
        let u_of_s = |s_target: f64| -> f64 {
            let mut lo = 0usize;
            let mut hi = arc.len() - 1;
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if arc[mid] <= s_target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mut uu = u[lo] + (u[hi] - u[lo]) * (s_target - arc[lo]) / (arc[hi] - arc[lo]);
            for _ in 0..30 {
                // Arc length from u[lo] to uu by Gauss rule, Newton update.
                let half = 0.5 * (uu - u[lo]);
                let mid = 0.5 * (uu + u[lo]);
                let f: f64 = gx
                    .iter()
                    .zip(&gw)
                    .map(|(x, w)| w * speed(mid + half * x))
                    .sum::<f64>()
                    * half
                    + arc[lo]
                    - s_target;
                let df = speed(uu).max(1e-12);
                let duu = f / df;
                uu -= duu;
                if fabs(duu) < 1e-13 * (1.0 + u[hi]) {
                    break;
                }
            }
            uu.clamp(u[0], *u.last().unwrap())
        };
        // Curvature/torsion profiles on the uniform grid.
        let curvature_data = |uu: f64| -> (f64, f64, Vec3, Vec3) {
            let d1 = [sx.deriv(uu), sy.deriv(uu), sz.deriv(uu)];
            let d2 = [sx.deriv2(uu), sy.deriv2(uu), sz.deriv2(uu)];
            let d3 = [sx.deriv3(uu), sy.deriv3(uu), sz.deriv3(uu)];
            let sp = norm3(&d1);
            let cr = cross3(&d1, &d2);
            let cr_norm = norm3(&cr);
            let gamma = cr_norm / (sp * sp * sp);
            let tau = if cr_norm > 1e-12 {
                dot3(&cr, &d3) / (cr_norm * cr_norm)
            } else {
                0.0
            };
            // Arc-length second derivative (principal normal direction).
            let mut acc = d2;
            let c = dot3(&d1, &d2) / (sp * sp);
            axpy3(&mut acc, -c, &d1);
            (gamma, tau, scale3(&d1, 1.0 / sp), scale3(&acc, 1.0 / (sp * sp)))
        };
        let h = length / (ns - 1) as f64;
        let mut s_grid = vec![0.0; ns];
        let mut g_grid = vec![0.0; ns];
        let mut t_grid = vec![0.0; ns];
        let mut first_curved: Option<(usize, Vec3)> = None;
        let mut t0 = [1.0, 0.0, 0.0];
        let mut pos0 = points[0];
        for k in 0..ns {
            let s = k as f64 * h;
            s_grid[k] = s;
            let uu = u_of_s(s);
            let (g, tau, tan, acc) = curvature_data(uu);
            g_grid[k] = g;
            t_grid[k] = tau;
            if k == 0 {
                t0 = tan;
                pos0 = [sx.eval(uu), sy.eval(uu), sz.eval(uu)];
            }
            if first_curved.is_none() && g > 1e-8 {
                let mut nrm = acc;
                normalize3(&mut nrm);
                first_curved = Some((k, nrm));
            }
        }
        // Initial normal: from the first curved point (projected against t0),
        // or a deterministic complement for straight data.
        let mut n0 = match first_curved {
            Some((_, nrm)) => nrm,
            None => complement(&t0),
        };
        let c = dot3(&n0, &t0);
        axpy3(&mut n0, -c, &t0);
        normalize3(&mut n0);
        let mut t0n = t0;
        normalize3(&mut t0n);
        let init = FsState {
            pos: pos0,
            t: t0n,
            n: n0,
            b: cross3(&t0n, &n0),
        };
        let gs = Spline::natural(&s_grid, &g_grid)?;
        let ts = Spline::natural(&s_grid, &t_grid)?;
        let gt = move |s: f64| (gs.eval(s).max(0.0), ts.eval(s));
        let samples = fs_integrate(init, 0.0, h, ns, 0.0, &gt);
        let max_gamma = samples.iter().map(|g| g.gamma).fold(0.0f64, f64::max);
        Ok(Self {
            analytic: Analytic::Sampled,
            kind_name: "sampled-points",
            length,
            d: 0.0,
            d0: spec.d0,
            main: SampleGrid { s0: 0.0, h, samples },
            left: None,
            right: None,
            gamma_ext: [QuadExt::default(); 2],
            tau_ext: [QuadExt::default(); 2],
            max_gamma,
        })
    }

    pub fn kind_name(&self) -> &'static str {
        self.kind_name
    }

    /// Extended parameter domain [-d, L+d].
    pub fn domain(&self) -> (f64, f64) {
        (-self.d, self.length + self.d)
    }

    pub fn max_gamma(&self) -> f64 {
        self.max_gamma
    }

    fn check_domain(&self, s: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        let tol = 1e-9 * (1.0 + self.length);
        if s < lo - tol || s > hi + tol {
            return Err(Error::OutOfDomain { s, lo, hi });
        }
        Ok(())
    }

    fn sample_at(&self, s: f64) -> Result<GeomSample> {
        self.check_domain(s)?;
        match self.analytic {
            Analytic::Sampled => {
                let grid = if s < 0.0 {
                    self.left.as_ref().unwrap_or(&self.main)
                } else if s > self.length {
                    self.right.as_ref().unwrap_or(&self.main)
                } else {
                    &self.main
                };
                Ok(grid.eval(s.clamp(grid.s0, grid.s_end())))
            }
            a => Ok(analytic_sample(a, s)),
        }
    }

    pub fn position(&self, s: f64) -> Result<Vec3> {
        Ok(self.sample_at(s)?.pos)
    }

    pub fn gamma(&self, s: f64) -> Result<f64> {
        Ok(self.sample_at(s)?.gamma)
    }

    pub fn tau(&self, s: f64) -> Result<f64> {
        Ok(self.sample_at(s)?.tau)
    }

    /// Frenet triple plus Tang angle at s.
    pub fn frame(&self, s: f64) -> Result<FrenetFrame> {
        let g = self.sample_at(s)?;
        Ok(FrenetFrame {
            s,
            t: g.t,
            n: g.n,
            b: g.b,
            beta: g.beta,
        })
    }

    /// (gamma, gamma', gamma'') at s.
    pub fn gamma_derivs(&self, s: f64) -> Result<(f64, f64, f64)> {
        self.check_domain(s)?;
        match self.analytic {
            Analytic::Segment => Ok((0.0, 0.0, 0.0)),
            Analytic::Circle { r } => Ok((1.0 / r, 0.0, 0.0)),
            Analytic::Helix { a, b } => Ok((a / (a * a + b * b), 0.0, 0.0)),
            Analytic::Sampled => {
                if s < 0.0 {
                    let q = &self.gamma_ext[0];
                    return Ok((q.eval(-s), -q.deriv(-s), q.deriv2()));
                }
                if s > self.length {
                    let q = &self.gamma_ext[1];
                    let x = s - self.length;
                    return Ok((q.eval(x), q.deriv(x), q.deriv2()));
                }
                Ok(self.main.scalar_derivs(s, |g| g.gamma))
            }
        }
    }

    /// tau' at s.
    pub fn tau_deriv(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        match self.analytic {
            Analytic::Sampled => {
                if s < 0.0 {
                    return Ok(-self.tau_ext[0].deriv(-s));
                }
                if s > self.length {
                    return Ok(self.tau_ext[1].deriv(s - self.length));
                }
                Ok(self.main.scalar_derivs(s, |g| g.tau).1)
            }
            _ => Ok(0.0),
        }
    }

    /// Euclidean chord distance |Gamma(s1) - Gamma(s2)|.
    pub fn chord(&self, s1: f64, s2: f64) -> Result<f64> {
        let u = fabs(s1 - s2);
        match self.analytic {
            Analytic::Segment => Ok(u),
            Analytic::Circle { r } => Ok(2.0 * r * fabs(sin(0.5 * u / r))),
            Analytic::Helix { a, b } => {
                let c = 1.0 / sqrt(a * a + b * b);
                let trans = 2.0 * a * sin(0.5 * c * u);
                let axial = b * c * u;
                Ok(sqrt(trans * trans + axial * axial))
            }
            Analytic::Sampled => {
                let near = 0.05 / (1.0 + self.max_gamma);
                if u < near {
                    // Two-term chord expansion avoids cancellation between
                    // interpolated positions at small separations.
                    let gm = self.gamma(0.5 * (s1 + s2))?;
                    Ok(u * (1.0 - gm * gm * u * u / 24.0))
                } else {
                    let p1 = self.position(s1)?;
                    let p2 = self.position(s2)?;
                    Ok(norm3(&sub3(&p1, &p2)))
                }
            }
        }
    }

    /// Regularly extend the curve by d on both ends.
    pub fn extend(&self, d: f64) -> Result<Self> {
        if d < 0.0 || d > self.d0 + 1e-12 {
            return Err(Error::ExtensionExceedsMargin { requested: d, margin: self.d0 });
        }
        let mut out = self.clone();
        out.d = d;
        if d == 0.0 {
            out.left = None;
            out.right = None;
            return Ok(out);
        }
        if self.analytic == Analytic::Sampled {
            let l = self.length;
            // Quadratic prolongations matching value and two derivatives.
            let (g0, g0p, g0pp) = self.main.scalar_derivs(0.0, |g| g.gamma);
            let (gl, glp, glpp) = self.main.scalar_derivs(l, |g| g.gamma);
            let (t0, t0p, t0pp) = self.main.scalar_derivs(0.0, |g| g.tau);
            let (tl, tlp, tlpp) = self.main.scalar_derivs(l, |g| g.tau);
            out.gamma_ext = [
                QuadExt { c0: g0, c1: -g0p, c2: 0.5 * g0pp },
                QuadExt { c0: gl, c1: glp, c2: 0.5 * glpp },
            ];
            out.tau_ext = [
                QuadExt { c0: t0, c1: -t0p, c2: 0.5 * t0pp },
                QuadExt { c0: tl, c1: tlp, c2: 0.5 * tlpp },
            ];
            let h = self.main.h;
            let n_ext = libm::ceil(d / h) as usize + 1;
            let h_ext = d / (n_ext - 1) as f64;
            // Right block forward from s = L.
            let end = self.main.samples.last().unwrap();
            let right_ext = out.gamma_ext[1];
            let right_tau = out.tau_ext[1];
            let gt_right = move |s: f64| (right_ext.eval(s - l), right_tau.eval(s - l));
            let init_r = FsState { pos: end.pos, t: end.t, n: end.n, b: end.b };
            let right = fs_integrate(init_r, l, h_ext, n_ext, end.beta, &gt_right);
            out.right = Some(SampleGrid { s0: l, h: h_ext, samples: right });
            // Left block backward from s = 0, then reversed into ascending
            // order.
            let start = &self.main.samples[0];
            let left_ext = out.gamma_ext[0];
            let left_tau = out.tau_ext[0];
            let gt_left = move |s: f64| (left_ext.eval(-s), left_tau.eval(-s));
            let init_l = FsState { pos: start.pos, t: start.t, n: start.n, b: start.b };
            let mut left = fs_integrate(init_l, 0.0, -h_ext, n_ext, start.beta, &gt_left);
            left.reverse();
            out.left = Some(SampleGrid { s0: -d, h: h_ext, samples: left });
            out.max_gamma = out
                .max_gamma
                .max(out.left.as_ref().unwrap().samples.iter().map(|g| fabs(g.gamma)).fold(0.0, f64::max))
                .max(out.right.as_ref().unwrap().samples.iter().map(|g| fabs(g.gamma)).fold(0.0, f64::max));
        }
        out.check_self_intersection()?;
        Ok(out)
    }

    /// Metric data of the tubular coordinates at (s, r, phi).
    pub fn tube_metric(&self, s: f64, r: f64, phi: f64) -> Result<TubePoint> {
        let g = self.sample_at(s)?;
        let h = 1.0 + r * g.gamma * cos(phi - g.beta);
        if h <= 0.0 {
            return Err(Error::TubeOverlap { s, r });
        }
        Ok(TubePoint { s, r, phi, h, sqrt_g: h * r })
    }

    /// Effective curvature-induced potential of the straightened tube.
    pub fn effective_potential(&self, s: f64, r: f64, phi: f64) -> Result<f64> {
        let (gamma, gamma_p, gamma_pp) = self.gamma_derivs(s)?;
        let tau = self.tau(s)?;
        let tau_p = self.tau_deriv(s)?;
        let beta = self.frame(s)?.beta;
        let theta = phi - beta;
        let (ct, st) = (cos(theta), sin(theta));
        let h = 1.0 + r * gamma * ct;
        if h <= 0.0 {
            return Err(Error::TubeOverlap { s, r });
        }
        let h_s = r * (gamma_p * ct + gamma * tau * st);
        let h_ss = r * ((gamma_pp - gamma * tau * tau) * ct + (2.0 * gamma_p * tau + gamma * tau_p) * st);
        Ok(-gamma * gamma / (4.0 * h) + h_ss / (2.0 * h * h * h)
            - 5.0 * h_s * h_s / (4.0 * h * h * h * h))
    }

    /// Report whether a tube of radius d around the curve stays injective.
    pub fn injectivity_check(&self, d: f64) -> InjectivityReport {
        let h_margin = 1.0 - d * self.max_gamma;
        let m = 256.min(self.main.samples.len());
        let stride = (self.main.samples.len() - 1) / (m - 1);
        let pts: Vec<(f64, Vec3)> = (0..m)
            .map(|k| {
                let i = k * stride;
                (self.main.s0 + i as f64 * self.main.h, self.main.samples[i].pos)
            })
            .collect();
        let sep_floor = crate::math::PI * d;
        let mut min_sep = f64::INFINITY;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                if pts[j].0 - pts[i].0 > sep_floor {
                    let dist = norm3(&sub3(&pts[i].1, &pts[j].1));
                    min_sep = min_sep.min(dist);
                }
            }
        }
        let chord_ok = min_sep > 2.0 * d;
        InjectivityReport {
            d,
            h_margin,
            min_separation: min_sep,
            required_separation: 2.0 * d,
            pass: h_margin > 0.0 && chord_ok,
        }
    }

    /// Sampled shifted curve at transverse distance rho and Tang angle phi.
    pub fn shifted_curve(&self, rho: f64, phi: f64) -> Result<Vec<Vec3>> {
        if !(rho > 0.0) {
            return Err(Error::InvalidSpec(String::from("shift distance must be positive")));
        }
        if rho * self.max_gamma >= 1.0 {
            return Err(Error::TubeOverlap { s: 0.0, r: rho });
        }
        let mut out = Vec::with_capacity(self.main.samples.len());
        for (k, g) in self.main.samples.iter().enumerate() {
            let _ = k;
            let theta = phi - g.beta;
            let mut p = g.pos;
            axpy3(&mut p, -rho * cos(theta), &g.n);
            axpy3(&mut p, -rho * sin(theta), &g.b);
            out.push(p);
        }
        Ok(out)
    }

    /// The tube-coordinate point x(s, r, phi) in 3-space.
    pub fn tube_point(&self, s: f64, r: f64, phi: f64) -> Result<Vec3> {
        let g = self.sample_at(s)?;
        let theta = phi - g.beta;
        let mut p = g.pos;
        axpy3(&mut p, -r * cos(theta), &g.n);
        axpy3(&mut p, -r * sin(theta), &g.b);
        Ok(p)
    }

    fn check_self_intersection(&self) -> Result<()> {
        let m = 257.min(self.main.samples.len());
        let stride = ((self.main.samples.len() - 1) / (m - 1)).max(1);
        let pts: Vec<(f64, Vec3)> = (0..self.main.samples.len())
            .step_by(stride)
            .map(|i| (self.main.s0 + i as f64 * self.main.h, self.main.samples[i].pos))
            .collect();
        let coarse = self.length / 16.0;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let sep = pts[j].0 - pts[i].0;
                if sep > coarse {
                    let dist = norm3(&sub3(&pts[i].1, &pts[j].1));
                    if dist < 1e-9 {
                        return Err(Error::SelfIntersecting {
                            s_a: pts[i].0,
                            s_b: pts[j].0,
                            distance: dist,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Grid positions on [0, L] as (s, point) pairs, for export.
    pub fn grid_points(&self) -> Vec<(f64, Vec3)> {
        self.main
            .samples
            .iter()
            .enumerate()
            .map(|(i, g)| (self.main.s0 + i as f64 * self.main.h, g.pos))
            .collect()
    }
}

/// A deterministic unit vector orthogonal to t.
fn complement(t: &Vec3) -> Vec3 {
    let trial = if fabs(t[0]) < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let mut n = trial;
    let c = dot3(&n, t);
    axpy3(&mut n, -c, t);
    normalize3(&mut n);
    n
}

fn analytic_sample(a: Analytic, s: f64) -> GeomSample {
    match a {
        Analytic::Segment => GeomSample {
            pos: [s, 0.0, 0.0],
            t: [1.0, 0.0, 0.0],
            n: [0.0, 1.0, 0.0],
            b: [0.0, 0.0, 1.0],
            beta: 0.0,
            gamma: 0.0,
            tau: 0.0,
        },
        Analytic::Circle { r } => {
            let th = s / r;
            GeomSample {
                pos: [r * sin(th), r * (1.0 - cos(th)), 0.0],
                t: [cos(th), sin(th), 0.0],
                n: [-sin(th), cos(th), 0.0],
                b: [0.0, 0.0, 1.0],
                beta: 0.0,
                gamma: 1.0 / r,
                tau: 0.0,
            }
        }
        Analytic::Helix { a, b } => {
            let c = 1.0 / sqrt(a * a + b * b);
            let th = c * s;
            let gamma = a * c * c;
            let tau = b * c * c;
            GeomSample {
                pos: [a * cos(th), a * sin(th), b * th],
                t: [-a * c * sin(th), a * c * cos(th), b * c],
                n: [-cos(th), -sin(th), 0.0],
                b: [b * c * sin(th), -b * c * cos(th), a * c],
                beta: tau * s,
                gamma,
                tau,
            }
        }
        Analytic::Sampled => unreachable!(),
    }
}

/// Spec-level wrappers mirroring the module operations.
pub fn build_curve(spec: &CurveSpec) -> Result<ArcCurve> {
    ArcCurve::build(spec)
}

pub fn frenet_frame(curve: &ArcCurve, s: f64) -> Result<FrenetFrame> {
    curve.frame(s)
}

pub fn extend_curve(curve: &ArcCurve, d: f64) -> Result<ArcCurve> {
    curve.extend(d)
}

pub fn tube_metric(curve: &ArcCurve, s: f64, r: f64, phi: f64) -> Result<TubePoint> {
    curve.tube_metric(s, r, phi)
}

pub fn effective_potential(curve: &ArcCurve, s: f64, r: f64, phi: f64) -> Result<f64> {
    curve.effective_potential(s, r, phi)
}

pub fn injectivity_check(curve: &ArcCurve, d: f64) -> InjectivityReport {
    curve.injectivity_check(d)
}

pub fn shifted_curve(curve: &ArcCurve, rho: f64, phi: f64) -> Result<Vec<Vec3>> {
    curve.shifted_curve(rho, phi)
}

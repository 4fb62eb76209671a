use alloc::string::String;
use core::fmt;

/// Errors produced by curve construction, operator assembly and the
/// spectral solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A curve specification violates one of its invariants.
    InvalidSpec(String),
    /// Two curve samples with large arc-length separation (nearly) coincide.
    SelfIntersecting { s_a: f64, s_b: f64, distance: f64 },
    /// Requested extension exceeds the declared margin d0.
    ExtensionExceedsMargin { requested: f64, margin: f64 },
    /// The tubular coordinate map degenerates (h <= 0) at the requested point.
    TubeOverlap { s: f64, r: f64 },
    /// Requested arc-length position lies outside the curve domain.
    OutOfDomain { s: f64, lo: f64, hi: f64 },
    /// A 1D grid does not fit inside the curve domain.
    GridOutsideDomain,
    /// Requested eigenvalue count exceeds the matrix dimension.
    EigenCountOutOfRange { requested: usize, dim: usize },
    /// Quadrature panels are too coarse for the requested decay rate or
    /// eigenvalue count.
    QuadratureTooCoarse(String),
    /// The j-th Birman-Schwinger eigenvalue never crosses alpha.
    NoCrossing { j: usize, alpha: f64 },
    /// Bracket expansion for the kappa root-finder was exhausted.
    BracketExhausted { j: usize, alpha: f64 },
    /// The root-finder hit its iteration cap before reaching tolerance.
    RootIterationsExhausted { j: usize, alpha: f64, residual: f64 },
    /// Logarithmic fit has too few radii to be well conditioned.
    IllConditionedFit,
    /// Evaluation point lies on the interaction support.
    PointOnCurve,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSpec(msg) => write!(f, "invalid curve spec: {msg}"),
            Error::SelfIntersecting { s_a, s_b, distance } => write!(
                f,
                "curve self-intersects: |Gamma({s_a}) - Gamma({s_b})| = {distance}"
            ),
            Error::ExtensionExceedsMargin { requested, margin } => write!(
                f,
                "extension {requested} exceeds declared margin d0 = {margin}"
            ),
            Error::TubeOverlap { s, r } => {
                write!(f, "tube overlaps itself at s = {s}, r = {r} (h <= 0)")
            }
            Error::OutOfDomain { s, lo, hi } => {
                write!(f, "arc length {s} outside domain [{lo}, {hi}]")
            }
            Error::GridOutsideDomain => write!(f, "1D grid interval not contained in curve domain"),
            Error::EigenCountOutOfRange { requested, dim } => {
                write!(f, "requested {requested} eigenvalues of a dimension-{dim} operator")
            }
            Error::QuadratureTooCoarse(msg) => write!(f, "quadrature too coarse: {msg}"),
            Error::NoCrossing { j, alpha } => write!(
                f,
                "no Birman-Schwinger crossing: mu_{j} stays below alpha = {alpha}"
            ),
            Error::BracketExhausted { j, alpha } => {
                write!(f, "bracket expansion exhausted for j = {j}, alpha = {alpha}")
            }
            Error::RootIterationsExhausted { j, alpha, residual } => write!(
                f,
                "kappa root-finder for j = {j}, alpha = {alpha} stalled at residual {residual}"
            ),
            Error::IllConditionedFit => write!(f, "log fit needs at least 3 radii"),
            Error::PointOnCurve => write!(f, "evaluation point lies on the curve"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

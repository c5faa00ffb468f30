use num_complex::Complex64;
use thiserror::Error;

/// Classifies failures for process exit codes: configuration/validation
/// problems vs. breakdowns of a numerical procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureClass {
    Validation,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("pencil fails admissibility checks: {0:?}")]
    InvalidPencil(Vec<String>),

    #[error("argument x = {x} outside the interval [0, pi]")]
    OutOfDomain { x: f64 },

    #[error("dimension mismatch: expected {expected}x{expected}, got {rows}x{cols}")]
    DimensionMismatch {
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("derivative of coefficient function is not available")]
    DerivativeUnavailable,

    #[error("step size underflow at x = {x} (h = {h:.3e})")]
    StepSizeUnderflow { x: f64, h: f64 },

    #[error("integrator exceeded {max_steps} steps")]
    TooManySteps { max_steps: usize },

    #[error("matrix {what} is numerically singular")]
    SingularMatrix { what: String },

    #[error("rho = {rho} is too close to the spectrum ({what} has condition number {cond:.3e})")]
    NearEigenvalue {
        rho: Complex64,
        what: String,
        cond: f64,
    },

    #[error("|rho| = {got} below the oracle's validity floor {min}")]
    RhoTooSmall { min: f64, got: f64 },

    #[error("grids do not overlap or rho values differ between trajectories")]
    TrajectoryMismatch,

    #[error("requested point x = {x} is not a node of the trajectory grid")]
    NotAGridNode { x: f64 },

    #[error(
        "Picard iteration did not converge in {iterations} iterations (last diff {last_diff:.3e})"
    )]
    PicardDiverged { iterations: usize, last_diff: f64 },

    #[error("characteristic function vanishes on the contour (min |Delta| = {min_abs:.3e}); perturb the contour")]
    ZeroOnContour { min_abs: f64 },

    #[error("winding number did not stabilize after refining to {nodes} contour nodes")]
    WindingUnstable { nodes: usize },

    #[error("contour quadrature did not converge (last change {last_change:.3e})")]
    QuadratureNotConverged { last_change: f64 },

    #[error(
        "pole at {rho} is not isolated by the given contour (count = {count}, expected {expected})"
    )]
    PoleNotIsolated {
        rho: Complex64,
        count: usize,
        expected: usize,
    },

    #[error("multiplicity {mult} exceeds the supported maximum 3 for residue extraction")]
    MultiplicityTooHigh { mult: usize },

    #[error("limit along the ray does not converge (decay slope {slope:.3})")]
    NonConvergentLimit { slope: f64 },

    #[error("asymptotic form is not defined for kind {kind} with sector {sector}")]
    UndefinedAsymptoticForm { kind: String, sector: String },

    #[error("invalid sector ray: {0}")]
    InvalidRay(String),

    #[error("pencil dimensions differ: {m} vs {mt}")]
    PairDimensionMismatch { m: usize, mt: usize },

    #[error("bad configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn class(&self) -> FailureClass {
        match self {
            Error::InvalidPencil(_)
            | Error::OutOfDomain { .. }
            | Error::DimensionMismatch { .. }
            | Error::DerivativeUnavailable
            | Error::InvalidRay(_)
            | Error::PairDimensionMismatch { .. }
            | Error::Config(_) => FailureClass::Validation,
            _ => FailureClass::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

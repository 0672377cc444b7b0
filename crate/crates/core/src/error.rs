use thiserror::Error;

/// Errors raised by the geometric operations in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("reverse time {tau} outside the flow horizon [0, {tau_max}]")]
    OutOfHorizon { tau: f64, tau_max: f64 },
    #[error("scale function c(tau) = {value} is not positive at tau = {tau}")]
    NonPositiveScale { tau: f64, value: f64 },
    #[error("the trace Harnack quantity is undefined at tau = 0")]
    TauZero,
    #[error("empty evaluation grid")]
    EmptyGrid,
    #[error("invalid flow: {0}")]
    InvalidFlow(String),

    #[error("curve leaves the flow horizon or the manifold: {0}")]
    CurveOutOfHorizon(String),
    #[error("curve needs at least two samples, got {0}")]
    DegenerateCurve(usize),
    #[error("variational solver did not converge after {iterations} iterations (best L = {best}, gradient residual = {residual:e})")]
    NoConvergence {
        iterations: usize,
        best: f64,
        residual: f64,
    },
    #[error("assumption gate failed: {0}")]
    AssumptionFailed(String),
    #[error("stencil touches a singular radius: {0}")]
    SingularRadius(String),

    #[error("value {rho} lies outside the regular ball of radius {limit}")]
    OutsideRegularBall { rho: f64, limit: f64 },
    #[error("stencil leaves the grid: {0}")]
    BoundaryStencil(String),
    #[error("time step {dt:e} violates the explicit stability bound {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("profile reached the regular radius at t = {t} (sup rho = {sup_rho})")]
    RegularBallExit { t: f64, sup_rho: f64 },
    #[error("map is not a solution of the flow equation (residual {residual:e} > {threshold:e})")]
    NotASolution { residual: f64, threshold: f64 },
    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("integrator could not meet the requested tolerance: {0}")]
    ToleranceNotMet(String),
    #[error("classification {found} contradicts the expected behaviour for m = {m}")]
    ClassificationConflict { m: usize, found: String },
    #[error("fit window holds only {0} samples")]
    WindowTooNarrow(usize),
    #[error("trajectory is not node-convergent")]
    NotConvergent,

    #[error("jet violates its structural constraint: {0}")]
    ConstraintViolated(String),
    #[error("map is not harmonic (tension residual {residual:e} > {threshold:e})")]
    NotHarmonic { residual: f64, threshold: f64 },
    #[error("exponent q = {q} must exceed 2m - 3 = {bound}")]
    QTooSmall { q: f64, bound: f64 },

    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("cut-off exponent must be 3/4 for the theorem constants, got {0}")]
    WrongAlpha(f64),
    #[error("no grid nodes fall inside the inner window")]
    EmptyWindow,
    #[error("window extends beyond the available data: {0}")]
    WindowExceedsData(String),
    #[error("need at least three windows, got {0}")]
    InsufficientWindows(usize),

    #[error("{0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

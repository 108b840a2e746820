use thiserror::Error;

pub type Result<T> = std::result::Result<T, HeatError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeatError {
    #[error("box half-width must be positive, got {0}")]
    NonPositiveExtent(f64),
    #[error("points per axis must be even and at least 8, got {0}")]
    OddPointCount(usize),
    #[error("dimension {0} is not supported (1..=3)")]
    UnsupportedDimension(usize),
    #[error("non-finite sample {value} at node {node}")]
    NonFiniteSample { node: usize, value: f64 },
    #[error("non-finite weight at node {0}")]
    NonFiniteWeight(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("fields use different diffusivities")]
    DiffusivityMismatch,
    #[error("inverse Gaussian weight overflows at |x| = {radius}")]
    OverflowInInverseGaussWeight { radius: f64 },
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("derivative order {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("blow-up solution evaluated at t = {t} >= T = {blowup}")]
    EvaluationPastBlowUp { t: f64, blowup: f64 },
    #[error("estimated off-box mass fraction {escaped:e} exceeds tolerance {tol:e}")]
    TailEscape { escaped: f64, tol: f64 },
    #[error("FFT convolution needs a power-of-two point count, got {0}")]
    NotPowerOfTwo(usize),
    #[error("data is not integrable on the whole space: {0}")]
    NotIntegrable(&'static str),
    #[error("half-line data must vanish for x <= 0 (node {node} holds {value})")]
    DataNotSupportedInHalfLine { node: usize, value: f64 },
    #[error("rescaled argument {0} leaves the source box")]
    RescaledArgumentOffGrid(f64),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("mass mismatch: expected {expected}, found {found}")]
    MassMismatch { expected: f64, found: f64 },
    #[error("error series has zero entries and too few positive ones to fit")]
    ZeroErrorEntry,
    #[error("rate function is not strictly decreasing to zero near t = {0}")]
    RateNotDecreasing(f64),
    #[error("field is not positive at |x| = {0}")]
    NonPositiveField(f64),
    #[error("no sign change on the grid at t = {0}")]
    NoSignChangeOnGrid(f64),
    #[error("density is negative ({value:e}) at node {node}")]
    NegativeDensity { node: usize, value: f64 },
    #[error("box half-width {have} is below the required {need}")]
    BoxTooSmall { have: f64, need: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl HeatError {
    /// Guards that signal a numerical limit of the grid rather than bad input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            HeatError::TailEscape { .. }
                | HeatError::OverflowInInverseGaussWeight { .. }
                | HeatError::RescaledArgumentOffGrid(_)
                | HeatError::NoSignChangeOnGrid(_)
                | HeatError::BoxTooSmall { .. }
                | HeatError::NonPositiveField(_)
        )
    }
}

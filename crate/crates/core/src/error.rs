use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at node {0}")]
    NonFinite(usize),

    #[error("cube off grid")]
    CubeOffGrid,

    #[error("cube under-resolved: side {side} < 2h = {min}")]
    CubeUnderResolved { side: f64, min: f64 },

    #[error("invalid cube: {0}")]
    InvalidCube(String),

    #[error("nonpositive weight at node {0}")]
    NonPositiveWeight(usize),

    #[error("invalid exponents: {0}")]
    Exponents(String),

    #[error("singular node")]
    SingularNode,

    #[error("under-resolved truncation: delta {delta} < 2h = {min}")]
    UnderResolvedTruncation { delta: f64, min: f64 },

    #[error("FFT plan needs {required} bytes, budget is {budget} bytes")]
    BudgetExceeded { required: u64, budget: u64 },

    #[error("empty cube family")]
    EmptyFamily,

    #[error("zero oscillation; witness undefined")]
    ZeroOscillation,

    #[error("annulus leaves the grid box: radius {radius}")]
    AnnulusOffGrid { radius: f64 },

    #[error("shift is not a multiple of the grid spacing: {0}")]
    ShiftNotOnGrid(f64),

    #[error("infeasible cube scheme: {reason} (largest feasible length {feasible})")]
    InfeasibleScheme { reason: String, feasible: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

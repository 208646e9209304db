use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("assignment {w:?} is not in the parameter space of `{instance}`")]
    OutsideSpace { instance: String, w: Vec<f64> },

    #[error("non-finite {what} in `{instance}` at w = {w:?}")]
    NonFinite {
        instance: String,
        what: &'static str,
        w: Vec<f64>,
    },

    #[error("instance `{instance}` produced negative violation C[{index}] = {value} at w = {w:?}")]
    NegativeViolation {
        instance: String,
        index: usize,
        value: f64,
        w: Vec<f64>,
    },

    #[error("multiplier component {index} is {value}; multipliers must be finite and >= 0")]
    InvalidMultiplier { index: usize, value: f64 },

    #[error("threshold component {index} is {value}; thresholds must be finite and >= 0")]
    InvalidThreshold { index: usize, value: f64 },

    #[error("grid needs {required} evaluations but the budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },

    #[error("unknown instance `{0}`")]
    UnknownInstance(String),

    #[error("instance `{instance}` is missing parameter `{key}`")]
    MissingParam { instance: String, key: String },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),

    #[error("invalid bracket [{lo}, {hi}]: C(w*(lo)) = {c_lo}, C(w*(hi)) = {c_hi}, theta = {theta}")]
    InvalidBracket {
        lo: f64,
        hi: f64,
        c_lo: f64,
        c_hi: f64,
        theta: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

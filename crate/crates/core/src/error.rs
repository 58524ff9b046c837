use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpliceError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite sample in {0}")]
    NonFinite(&'static str),

    /// A sample outside the known t-range was read with a non-zero multiplier.
    #[error("out-of-domain read at t = {t:.6}")]
    OutOfDomain { t: f64 },

    #[error("weighted samples overflow (max weight e^{exponent:.1})")]
    Overflow { exponent: f64 },

    #[error("derivative order {requested} exceeds the cutoff order {max}")]
    DerivativeOrder { requested: usize, max: usize },

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator failed the linearity check (relative defect {defect:.3e})")]
    NonLinear { defect: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, SpliceError>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("layout contains no access points")]
    NoAccessPoints,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("code generator is not linear in the real/imaginary symbol parts")]
    NotLinear,

    #[error("shadow covariance could not be factorized")]
    CovarianceFactorization,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("energy budget exhausted: pilot energy {pilot_energy} >= budget {budget}")]
    BudgetExhausted { pilot_energy: f64, budget: f64 },

    #[error("exponential rates are too close for the hyperexponential formula")]
    DegenerateRates,

    #[error("need at least {needed} samples for the requested quantile, got {got}")]
    SampleSize { needed: usize, got: usize },

    #[error("unknown {kind} '{name}'")]
    UnknownStrategy { kind: &'static str, name: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

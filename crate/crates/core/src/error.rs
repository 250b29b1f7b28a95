use thiserror::Error;

/// Errors produced by the library. Display strings start with the variant
/// name so command-line users see the same identifier the API reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),

    #[error("InvalidSpace: {0}")]
    InvalidSpace(String),

    #[error("InvalidMeasure: {0}")]
    InvalidMeasure(String),

    #[error("NotExactOrder: reference measure has coincident atoms {0} and {1}")]
    NotExactOrder(usize, usize),

    #[error("MetricMismatch: {0}")]
    MetricMismatch(String),

    #[error("SingularCovariance: covariance of component {0} is not positive definite")]
    SingularCovariance(usize),

    #[error("InfeasibleMarginals: source mass {source_mass} vs target mass {target_mass}")]
    InfeasibleMarginals { source_mass: f64, target_mass: f64 },

    #[error("SupportTooLarge: {rows}x{cols} exceeds the {limit}x{limit} solver cap")]
    SupportTooLarge {
        rows: usize,
        cols: usize,
        limit: usize,
    },

    #[error("UnsupportedCellOrder: no r-bar exponent known for cells of size {0}")]
    UnsupportedCellOrder(usize),

    #[error("DimensionUnsupported: operation requires d = 1, got d = {0}")]
    DimensionUnsupported(usize),

    #[error("NonpositiveWeight: weight {0} is not positive, penalty is -inf")]
    NonpositiveWeight(usize),

    #[error("DegenerateData: n < k (n = {n}, k = {k})")]
    DegenerateData { n: usize, k: usize },

    #[error("UnsupportedModel: {0}")]
    UnsupportedModel(String),

    #[error("InsufficientData: {0}")]
    InsufficientData(String),

    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),

    #[error("Parse: {0}")]
    Parse(String),

    #[error("Io: {0}")]
    Io(#[from] std::io::Error),

    #[error("Json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("Csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

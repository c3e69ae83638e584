use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("regions belong to different domains")]
    DomainMismatch,

    #[error("empty inner sample")]
    EmptyInnerSample,

    #[error("oracle failed at input row {row}, inner point {point}: {source}")]
    Oracle {
        row: usize,
        point: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{what} = {value} is outside {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("value {value} at ({row}, {col}) is outside the support of its marginal")]
    OutsideSupport { row: usize, col: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient quadrature: {nodes} nodes, need at least 8")]
    InsufficientQuadrature { nodes: usize },

    #[error(
        "degenerate bandwidth: all output sets coincide on the inner sample (constant output)"
    )]
    DegenerateBandwidth,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("non-informative output: HSIC(U, Z) estimate {0:e} is numerically zero")]
    NonInformativeOutput(f64),

    #[error("enumeration budget: {0} inputs exceeds the limit of 4")]
    EnumerationBudget(usize),

    #[error("input kernel is not ANOVA with respect to the input marginal (deviation {0:e})")]
    NotAnova(f64),

    #[error("invalid probability table: {0}")]
    InvalidProbabilities(String),

    #[error("resolution below alpha=0.05: {0} permutations, need at least 19")]
    TooFewPermutations(usize),

    #[error("nonphysical mass {0}")]
    NonphysicalMass(f64),

    #[error("oracle budget exceeded: {required} calls required, cap is {cap}")]
    BudgetExceeded { required: u64, cap: u64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced anywhere in the bounding pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column {column:?} in header {header:?}")]
    MissingColumn { column: String, header: Vec<String> },

    #[error("non-numeric value {value:?} at row {row}, column {column:?}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("non-finite value at row {row}, column {column:?}")]
    NonFinite { row: usize, column: String },

    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),

    #[error("zero variance in column {column:?}")]
    ZeroVariance { column: String },

    #[error("empty input")]
    EmptyInput,

    #[error("quantile {0} outside [0, 1]")]
    QuantileOutOfRange(f64),

    #[error("z-bin {bin} is empty; lower the grid size M (currently {m})")]
    EmptyBin { bin: usize, m: usize },

    #[error("all joint-grid cells fell below the density threshold n_min = {n_min}")]
    AllCellsDropped { n_min: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("mixing factor row {row} is all zeros")]
    DegenerateMixingRow { row: usize },

    #[error("kernel matrix not positive definite even after jitter {jitter}")]
    KernelNotPositiveDefinite { jitter: f64 },

    #[error("training diverged: loss = {loss} at epoch {epoch}")]
    TrainingDiverged { epoch: usize, loss: f64 },

    #[error("weak instrument: sample covariance of (Z, X) is zero")]
    WeakInstrument,

    #[error("non-finite gradient in parameter {index} ({name})")]
    NonFiniteGradient { index: usize, name: String },

    #[error("solver abort: non-finite Lagrangian at round {round}, step {step}")]
    NonFiniteLagrangian { round: usize, step: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("{what}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("operands are defined on different time grids")]
    GridMismatch,

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("{stage} integration diverged at step {step}")]
    IntegrationDiverged { stage: &'static str, step: usize },

    #[error("no Armijo exponent up to {l_max} gives sufficient descent")]
    ArmijoStall { l_max: u32 },

    #[error("control value outside the control hull at cell {cell} (atom {atom})")]
    Infeasible { atom: usize, cell: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("malformed CSV: {0}")]
    Parse(String),
}

impl Error {
    /// Short machine-friendly name of the error class.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid-grid",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::GridMismatch => "grid-mismatch",
            Error::InvalidMixture(_) => "invalid-mixture",
            Error::IntegrationDiverged { .. } => "integration-diverged",
            Error::ArmijoStall { .. } => "armijo-stall",
            Error::Infeasible { .. } => "infeasible-input",
            Error::InvalidConfig(_) => "invalid-config",
            Error::UnknownProblem(_) => "unknown-problem",
            Error::Io(_) => "io",
            Error::Csv(_) | Error::Parse(_) => "csv",
        }
    }
}

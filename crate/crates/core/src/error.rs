use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("cell (class {class}, group {group}) has fraction {fraction} but rounds to 0 instances at target size {target_size}")]
    CellStarvation {
        class: usize,
        group: usize,
        fraction: f64,
        target_size: usize,
    },

    #[error("cell (class {class}, group {group}) needs {needed} instances but only {available} are available (deficit {})", needed - available)]
    InsufficientCell {
        class: usize,
        group: usize,
        needed: usize,
        available: usize,
    },

    #[error("{path}:{line}: {message}")]
    Csv {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("class {0} is empty")]
    EmptyClass(usize),

    #[error("loss variant {0} needs group labels but the batch has none")]
    MissingGroups(&'static str),

    #[error("loss variant {0} needs an adversary head")]
    MissingAdversary(&'static str),

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Divergence { epoch: usize },

    #[error("group classifier needs at least two groups present")]
    SingleGroup,

    #[error("weight matrix has no nonzero row")]
    ZeroWeights,

    #[error("no candidate reaches the F-score floor {0}")]
    EmptyFloor(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("config {config_id}: {source}")]
    Config {
        config_id: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable tag used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Dimension(_) => "dimension",
            Error::CellStarvation { .. } => "cell_starvation",
            Error::InsufficientCell { .. } => "insufficient_cell",
            Error::Csv { .. } => "csv",
            Error::EmptyClass(_) => "empty_class",
            Error::MissingGroups(_) => "missing_groups",
            Error::MissingAdversary(_) => "missing_adversary",
            Error::Divergence { .. } => "divergence",
            Error::SingleGroup => "single_group",
            Error::ZeroWeights => "zero_weights",
            Error::EmptyFloor(_) => "empty_floor",
            Error::Empty(_) => "empty",
            Error::Config { source, .. } => source.kind(),
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

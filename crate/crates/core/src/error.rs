use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ball did not leave the field of view within {max_duration} s")]
    NonTerminating { max_duration: f64 },

    #[error("trajectory has no in-view sample")]
    EmptyTrajectory,

    #[error(
        "distribution infeasible for split `{split}`: {accepted} accepted out of {attempts} attempts"
    )]
    DistributionInfeasible {
        split: String,
        accepted: usize,
        attempts: usize,
    },

    #[error("degenerate interval between predictions {prev} and {index} (repeated timestamp)")]
    DegenerateInterval { prev: usize, index: usize },

    #[error("quadratic fit needs at least 3 distinct abscissae, got {distinct}")]
    RankDeficient { distinct: usize },

    #[error("motion of {delta} m exceeds the robot range of {range} m")]
    OutOfEnvelope { delta: f64, range: f64 },

    #[error("predictor state is stale: {gap} s since the last input, reset required")]
    StaleState { gap: f64 },

    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("schema version {found} is not supported (expected {expected})")]
    SchemaMismatch { found: u32, expected: u32 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

use std::path::PathBuf;

use crate::Rank;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid parameters: bad rank, zero processes, size mismatches, empty grids.
    #[error("configuration error: {0}")]
    Config(String),

    /// Every live rank is blocked on a receive or barrier with nothing in flight.
    #[error("deadlock: ranks {blocked:?} are blocked with no matching message in flight")]
    Deadlock { blocked: Vec<Rank> },

    #[error("rank {rank} panicked: {message}")]
    RankPanicked { rank: Rank, message: String },

    /// The gathered output was not a sorted permutation of the input.
    #[error("verification failed for {config}: {reason}")]
    Verification { config: String, reason: String },

    /// Least-squares fit is underdetermined.
    #[error("calibration is singular; missing: {}", missing.join("; "))]
    SingularFit { missing: Vec<String> },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

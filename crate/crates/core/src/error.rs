use std::path::PathBuf;

use thiserror::Error;

use crate::grid::GridCoord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: String, right: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("map line {line}: {msg}")]
    MapParse { line: usize, msg: String },

    #[error("wavefront source {0} is occupied")]
    OccupiedSource(GridCoord),

    #[error("robot poses: {0}")]
    RobotIds(String),

    #[error("scenario field `{field}`: {msg}")]
    Scenario { field: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn scenario(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Scenario {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input files or parameters, as opposed to
    /// failures while running or writing results.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::ShapeMismatch { .. }
                | Error::InvalidGrid(_)
                | Error::MapParse { .. }
                | Error::OccupiedSource(_)
                | Error::RobotIds(_)
                | Error::Scenario { .. }
        )
    }
}

use thiserror::Error;

/// Errors surfaced by the planner, simulator and harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point ({0:.3}, {1:.3}, {2:.3}) lies outside the exploration bounds")]
    OutOfBounds(f64, f64, f64),
    #[error("invalid bounds: box_min must be strictly below box_max on every axis")]
    InvalidBounds,
    #[error("no geometric path between the requested cells")]
    NoPath,
    #[error("kinodynamic search failed after expanding {expanded} nodes")]
    SearchFailed { expanded: usize },
    #[error("at least two local viewpoints are required, got {0}")]
    NotEnoughViewpoints(usize),
    #[error("unknown world '{name}', available fixtures: {available}")]
    UnknownWorld { name: String, available: String },
    #[error("world file line {line}: {msg}")]
    WorldFile { line: usize, msg: String },
    #[error("config error in key '{key}': {msg}")]
    Config { key: String, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

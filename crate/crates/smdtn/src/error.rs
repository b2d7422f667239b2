//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("geojson parse error at byte {offset}: {msg}")]
    GeoParse { offset: usize, msg: String },

    #[error("feature {index}: {msg}")]
    Feature { index: usize, msg: String },

    #[error("empty dataset: no routes found")]
    EmptyDataset,

    #[error("route `{route_id}` is degenerate (shorter than 1 m)")]
    DegenerateRoute { route_id: String },

    #[error("bad graph file: {0}")]
    GraphFormat(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("unknown config key `{key}` on line {line}")]
    UnknownKey { key: String, line: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("empty scenario: no train nodes configured")]
    EmptyScenario,

    #[error("message {id} of {size} bytes exceeds buffer capacity {capacity}")]
    Oversize { id: u32, size: u64, capacity: u64 },

    #[error("transfer already active on link {from} -> {to}")]
    BusyLink { from: u32, to: u32 },

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("tick {tick}: {source}")]
    Runtime {
        tick: u64,
        #[source]
        source: Box<SimError>,
    },
}

impl SimError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 i/o, 2 config/parse, 3 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Io { .. } => 1,
            SimError::GeoParse { .. }
            | SimError::Feature { .. }
            | SimError::EmptyDataset
            | SimError::DegenerateRoute { .. }
            | SimError::GraphFormat(_)
            | SimError::Config { .. }
            | SimError::UnknownKey { .. }
            | SimError::InvalidConfig(_)
            | SimError::EmptyScenario => 2,
            _ => 3,
        }
    }
}

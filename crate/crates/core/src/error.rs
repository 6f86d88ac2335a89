use thiserror::Error;

/// Errors raised by the simulator and its I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("non-finite value {value} at grid index {index} (i={i}, j={j}, k={k})")]
    NonFinite {
        value: f64,
        index: usize,
        i: usize,
        j: usize,
        k: usize,
    },

    #[error("non-finite interpolation point at position {0}")]
    NonFinitePoint(usize),

    #[error("representation mismatch: expected {expected} field")]
    Representation { expected: &'static str },

    #[error("grid mismatch between fields")]
    GridMismatch,

    #[error("time step {dt} exceeds CFL limit {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("Jacobian of back-to-labels map near singular: det = {det} at index {index}")]
    NearSingular { det: f64, index: usize },

    #[error("{0} is undefined for zero rotation rate")]
    ZeroRotation(&'static str),

    #[error("empty tracer set: {0}")]
    EmptySet(&'static str),

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("checkpoint: {message} (offset {offset})")]
    Checkpoint { message: String, offset: u64 },

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("run aborted at t = {t}: {reason}")]
    Aborted { t: f64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

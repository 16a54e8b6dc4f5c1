use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or settings that cannot describe a valid model or run.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument outside the documented domain of an operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A federation round that violates the aggregation protocol.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// The oracle solver or a diagnostic could not produce a trustworthy value.
    #[error("diagnostic error: {message} (last gradient norm {grad_norm:e})")]
    Diagnostic { message: String, grad_norm: f64 },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

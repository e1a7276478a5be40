//! Error types shared across the toolkit.

use thiserror::Error;

/// Errors produced by simulation, reconstruction and deconvolution routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violated a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Underlying I/O failure while reading or writing artifacts.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A file did not match the expected on-disk layout.
    #[error("bad file format: {0}")]
    Format(String),

    /// An iterative solver blew up; the trace is kept for post-mortems.
    #[error("optimization diverged after {iterations} iterations (loss {final_loss:.3e} from initial {initial_loss:.3e})")]
    Diverged {
        iterations: usize,
        initial_loss: f64,
        final_loss: f64,
        loss_trace: Vec<f64>,
    },

    /// A forward/backward pass produced a non-finite value.
    #[error("numeric overflow at iteration {iteration}: {detail}")]
    NumericOverflow { iteration: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

use alloc::string::String;
use core::fmt;

/// Errors surfaced by the model, sensitivity and simulation layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input violated a documented invariant. `field` names the offender.
    Validation { field: &'static str, message: String },
    /// An indexed input (e.g. one route out of many) was invalid.
    ValidationAt {
        field: &'static str,
        index: usize,
        message: String,
    },
    /// A scheduling bug: an event was submitted behind the simulation clock.
    PastEvent { now_ns: u64, event_ns: u64 },
}

impl Error {
    pub fn validation(field: &'static str, message: impl Into<String>) -> Self {
        Error::Validation {
            field,
            message: message.into(),
        }
    }

    pub fn validation_at(field: &'static str, index: usize, message: impl Into<String>) -> Self {
        Error::ValidationAt {
            field,
            index,
            message: message.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Validation { field, message } => write!(f, "invalid {field}: {message}"),
            Error::ValidationAt {
                field,
                index,
                message,
            } => write!(f, "invalid {field}[{index}]: {message}"),
            Error::PastEvent { now_ns, event_ns } => write!(
                f,
                "event scheduled in the past: clock={now_ns}ns event={event_ns}ns"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes do not chain.
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    /// A flat vector had the wrong length.
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A scalar argument is outside its domain.
    InvalidArgument { what: &'static str, detail: String },
    /// Two networks that must share an architecture do not.
    ArchitectureMismatch,
    /// `step` was called before `reset`.
    NotReset,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { op, left, right } => write!(
                f,
                "{op}: incompatible shapes {}x{} and {}x{}",
                left.0, left.1, right.0, right.1
            ),
            Error::LengthMismatch {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected length {expected}, found {found}"),
            Error::InvalidArgument { what, detail } => write!(f, "invalid {what}: {detail}"),
            Error::ArchitectureMismatch => f.write_str("network architectures differ"),
            Error::NotReset => f.write_str("environment stepped before reset"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(what: &'static str, detail: impl fmt::Display) -> Error {
    use alloc::string::ToString;
    Error::InvalidArgument {
        what,
        detail: detail.to_string(),
    }
}

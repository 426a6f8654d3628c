use thiserror::Error;

/// Errors produced by the signal, channel and equalizer layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid length: {0}")]
    InvalidLength(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("value {0} is not a PAM4 level")]
    OutOfAlphabet(f64),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("config: {0}")]
    Config(String),
    #[error("format: {0}")]
    Format(#[from] FormatError),
    #[error("io: {0}")]
    Io(String),
}

/// Binary file format violations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported version {0}")]
    Version(u32),
    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("trailing data: expected {expected} bytes, found {found}")]
    Trailing { expected: u64, found: u64 },
    #[error("unknown state kind {0}")]
    UnknownKind(u32),
    #[error("corrupt state: {0}")]
    Corrupt(String),
}

impl Error {
    /// True for configuration problems, as opposed to data or format errors.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidParameter(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(xs: &[f64]) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

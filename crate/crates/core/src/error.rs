use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Arguments violate a precondition (geometry, ranges, bit depth).
    InvalidArgument(String),
    /// A named kernel or entity does not exist.
    NotFound(String),
    /// The requested kernel tier is not available on this CPU.
    Capability(String),
    /// Shared analysis does not match the picture grid or frame count.
    IncompatibleAnalysis(String),
    /// Malformed archive bytes.
    Format(String),
    /// Archive ended before the payload was complete.
    Truncated,
    /// Analysis scaling between non-dyadic resolutions.
    UnsupportedScale { from: (u32, u32), to: (u32, u32) },
    /// Fewer than four RD points on a curve.
    InsufficientData(usize),
    /// The two RD curves do not overlap.
    NoOverlap,
    /// Ladder description problems (missing tier input and the like).
    Config(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            Error::NotFound(m) => write!(f, "not found: {m}"),
            Error::Capability(m) => write!(f, "unsupported capability: {m}"),
            Error::IncompatibleAnalysis(m) => write!(f, "incompatible analysis: {m}"),
            Error::Format(m) => write!(f, "format error: {m}"),
            Error::Truncated => f.write_str("archive truncated"),
            Error::UnsupportedScale { from, to } => write!(
                f,
                "unsupported scale {}x{} -> {}x{}: only dyadic upscaling is supported",
                from.0, from.1, to.0, to.1
            ),
            Error::InsufficientData(n) => {
                write!(f, "insufficient data: {n} RD points, at least 4 required")
            }
            Error::NoOverlap => f.write_str("RD curves do not overlap"),
            Error::Config(m) => write!(f, "config error: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;

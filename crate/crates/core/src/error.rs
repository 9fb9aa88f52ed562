use core::fmt;

use crate::hashfamilies::Scheme;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The universe size is not representable by the requested scheme.
    UnsupportedUniverse {
        scheme: Scheme,
        dim: u64,
        reason: &'static str,
    },
    /// Storing `k` permutation tables of size `D` would exceed the memory cap.
    PermutationTooLarge {
        bytes: u128,
        cap: u64,
    },
    InvalidParameter(&'static str),
    /// Feature indices must be strictly increasing and below `D`.
    InvalidFeatureSet {
        position: usize,
        index: u32,
        dim: u64,
    },
    HeaderMismatch,
    MissingMinima,
    DegenerateProfile,
    EmptySketch,
    DimensionExceeded {
        index: u64,
        dim: u64,
    },
    NonBinaryLabel(f64),
    InfeasibleProfile,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnsupportedUniverse { scheme, dim, reason } => {
                write!(f, "universe size {dim} unsupported by {scheme:?}: {reason}")
            }
            Error::PermutationTooLarge { bytes, cap } => {
                write!(f, "permutation tables need {bytes} bytes, above the cap of {cap} bytes")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::InvalidFeatureSet { position, index, dim } => {
                write!(f, "feature index {index} at position {position} is out of order or not below {dim}")
            }
            Error::HeaderMismatch => f.write_str("sketch headers do not match"),
            Error::MissingMinima => f.write_str("full minima are not available for this sketch"),
            Error::DegenerateProfile => f.write_str("resemblance is undefined when either set is empty"),
            Error::EmptySketch => f.write_str("sketch is flagged as computed from an empty set"),
            Error::DimensionExceeded { index, dim } => {
                write!(f, "feature index {index} exceeds model dimension {dim}")
            }
            Error::NonBinaryLabel(y) => write!(f, "label {y} is not -1 or +1"),
            Error::InfeasibleProfile => f.write_str("no pair of sets has the requested sizes and intersection"),
        }
    }
}

impl core::error::Error for Error {}

use alloc::string::String;
use core::fmt;

/// Errors reported by the packing kernel and the analysis routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A box length was non-positive or not finite.
    InvalidBox,
    /// A parameter or configuration value is out of its valid range.
    InvalidParameter(String),
    /// The box is too small to hold a cell grid of at least three cells per
    /// axis whose edge still covers the interaction range.
    BoxTooSmall { required: f64, available: f64 },
    /// RSA gave up on particle `index` after `attempts` rejected positions.
    PlacementFailure { index: usize, attempts: u32 },
    /// The iteration cap was hit before the target volume fraction. The
    /// snapshot passed to the generator holds the last accepted state.
    IterationLimitExceeded { iterations: u64, volume_fraction: f64 },
    /// Number density is only defined for a cubic box.
    NonCubicBox,
    /// The requested shell thickness breaks the single-image assumption.
    DeltaMaxTooLarge { delta_max: f64, limit: f64 },
    /// No wrapping cluster forms for any gap up to `delta_max`.
    NotPercolating { delta_max: f64 },
    /// Some Voronoi cell received fewer than the minimum number of samples.
    InsufficientSampling { min_hits: u64, required: u64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidBox => write!(f, "box lengths must be finite and strictly positive"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::BoxTooSmall { required, available } => write!(
                f,
                "box too small: cell edge {available} is below the required {required}"
            ),
            Error::PlacementFailure { index, attempts } => write!(
                f,
                "RSA placement failed for particle {index} after {attempts} attempts; \
                 initial volume fraction is too high"
            ),
            Error::IterationLimitExceeded {
                iterations,
                volume_fraction,
            } => write!(
                f,
                "iteration limit {iterations} reached at volume fraction {volume_fraction}"
            ),
            Error::NonCubicBox => write!(f, "number density requires a cubic box"),
            Error::DeltaMaxTooLarge { delta_max, limit } => {
                write!(f, "delta_max {delta_max} exceeds the admissible limit {limit}")
            }
            Error::NotPercolating { delta_max } => {
                write!(f, "no wrapping cluster for shell thickness up to {delta_max}")
            }
            Error::InsufficientSampling { min_hits, required } => write!(
                f,
                "a Voronoi cell received {min_hits} samples, fewer than {required}"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

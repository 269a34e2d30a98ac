//! Error type shared by all pipeline stages.

use alloc::string::String;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong between raw data and generated samples.
///
/// Variants carry enough position information (row/column/step) to point at
/// the offending datum; none of them allocate on the happy path.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    /// A matrix dimension does not line up with what the operation needs.
    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// Fewer than two samples: empirical covariance is undefined.
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),

    /// A NaN or infinity where a finite value is required.
    #[error("non-finite value at row {row}, column {col} of {what}")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },

    /// An argument outside its documented range.
    #[error("invalid argument {name}: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// Every covariance eigenvalue fell below the rank cutoff; the data set
    /// is (numerically) a single repeated point.
    #[error("no covariance eigenvalue above the rank cutoff; data has no spread")]
    RankDeficient,

    /// The symmetric eigensolver did not converge.
    #[error("eigenvalue iteration failed to converge for {what}")]
    EigenFailure { what: &'static str },

    /// A requested basis eigenvalue is numerically zero or negative, so the
    /// scaled basis cannot be inverted stably.
    #[error(
        "transition-matrix eigenvalue {index} is {value:.3e}; the requested basis \
         is numerically degenerate (increase the kernel smoothing or reduce m)"
    )]
    DegenerateSpectrum { index: usize, value: f64 },

    /// The integrator produced a non-finite state.
    #[error("trajectory diverged at step {step}; reduce the step size (increase fac)")]
    Diverged { step: usize },

    /// A pipeline stage failed; wraps the stage name around the cause.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    /// Tag an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: alloc::boxed::Box::new(self),
        }
    }
}

//! Error type shared across the crate.

/// Errors raised by reservoir generation, fitting, forecasting and scoring.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// The raw reservoir matrix has (numerically) zero spectral radius and
    /// cannot be rescaled. Regenerate with a fresh member index or a larger
    /// inclusion probability.
    #[error("degenerate reservoir: raw spectral radius {radius:e} is below {floor:e}")]
    DegenerateReservoir { radius: f64, floor: f64 },

    /// A matrix contained NaN or infinite entries.
    #[error("non-finite entries in {context}")]
    NonFinite { context: &'static str },

    /// Incompatible shapes were passed to an operation.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    /// A lagged input would fall before the start of the series.
    #[error("insufficient history: time {t} needs an observation at {required}, before the series start")]
    InsufficientHistory { t: usize, required: i64 },

    /// Normalization was requested on a zero-variance column.
    #[error("column {column} has zero variance and cannot be standardized")]
    ConstantColumn { column: usize },

    /// The unpenalized normal equations are rank deficient.
    #[error("normal equations are singular with r_v = 0; use a positive ridge penalty")]
    SingularSystem,

    /// A calendar month has no observations inside the climatology window.
    #[error("climatology years {start}..={end} contain no observations for month {month}")]
    MissingClimatologyMonth { month: u32, start: i32, end: i32 },

    /// More components were requested than the data's numerical rank supports.
    #[error("requested {requested} components but the numerical rank is {rank}")]
    RankDeficient { requested: usize, rank: usize },

    /// No grid cell falls inside the requested region.
    #[error("no grid cells inside the requested region")]
    EmptyRegion,

    /// An ensemble operation received zero members.
    #[error("ensemble has no members")]
    EmptyEnsemble,

    /// The integrator produced a state of implausible magnitude.
    #[error("state magnitude exceeded {limit:e} at step {step}; check dt and forcing")]
    NumericalBlowup { step: usize, limit: f64 },

    /// A configuration field violates its documented range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Every point of a tuning grid failed to produce a score.
    #[error("no grid point produced a usable score; first failure: {first}")]
    AllGridPointsFailed { first: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(context: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

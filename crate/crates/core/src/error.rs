use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage, attached to errors surfacing from `bss_eval`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Validate,
    Normalize,
    Correlate,
    SdrFilters,
    SirFilters,
    Assignment,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Validate => "validate",
            Stage::Normalize => "normalize",
            Stage::Correlate => "correlate",
            Stage::SdrFilters => "sdr-filters",
            Stage::SirFilters => "sir-filters",
            Stage::Assignment => "assignment",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("channel {channel} has zero energy")]
    ZeroSignal { channel: usize },

    #[error("non-finite sample in channel {channel} at index {index}")]
    NonFinite { channel: usize, index: usize },

    #[error("references have {references} samples but estimates have {estimates}")]
    LengthMismatch { references: usize, estimates: usize },

    #[error("sample rate {actual} Hz differs from {expected} Hz")]
    SampleRateMismatch { expected: u32, actual: u32 },

    #[error("input channels differ in length: {expected} vs {actual} samples")]
    ChannelLengthMismatch { expected: usize, actual: usize },

    #[error("filter length {filter_length} must be shorter than the signal length {samples}")]
    FilterTooLong { filter_length: usize, samples: usize },

    #[error("empty input: at least one channel and one sample are required")]
    EmptyInput,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("preconditioner is not positive definite (bin {bin})")]
    NonPositivePreconditioner { bin: usize },

    #[error("conjugate gradient breakdown at iteration {iteration}: non-positive curvature {curvature:e}")]
    BreakdownDetected { iteration: usize, curvature: f64 },

    #[error("system is singular even after diagonal loading")]
    SingularSystem,

    #[error("Levinson recursion broke down at order {order}")]
    LevinsonBreakdown { order: usize },

    #[error("Gram matrix of the shift matrices is singular")]
    SingularGram,

    #[error("oracle problem too large: {rows} rows exceeds the cap of {cap}")]
    OracleTooLarge { rows: usize, cap: usize },

    #[error("{stage} failed for index {index}: {source}")]
    Stage {
        stage: Stage,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("wav: {0}")]
    Wav(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(self, stage: Stage, index: usize) -> Error {
        Error::Stage {
            stage,
            index,
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping stage context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Short machine-readable name of the root error.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::ZeroSignal { .. } => "ZeroSignal",
            Error::NonFinite { .. } => "NonFinite",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::SampleRateMismatch { .. } => "SampleRateMismatch",
            Error::ChannelLengthMismatch { .. } => "ChannelLengthMismatch",
            Error::FilterTooLong { .. } => "FilterTooLong",
            Error::EmptyInput => "EmptyInput",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonPositivePreconditioner { .. } => "NonPositivePreconditioner",
            Error::BreakdownDetected { .. } => "BreakdownDetected",
            Error::SingularSystem => "SingularSystem",
            Error::LevinsonBreakdown { .. } => "LevinsonBreakdown",
            Error::SingularGram => "SingularGram",
            Error::OracleTooLarge { .. } => "OracleTooLarge",
            Error::Stage { .. } => unreachable!(),
            Error::Wav(_) => "Wav",
            Error::Io(_) => "Io",
        }
    }

    /// True for input validation failures (as opposed to numerical or I/O ones).
    pub fn is_validation(&self) -> bool {
        matches!(
            self.root(),
            Error::ZeroSignal { .. }
                | Error::NonFinite { .. }
                | Error::LengthMismatch { .. }
                | Error::SampleRateMismatch { .. }
                | Error::ChannelLengthMismatch { .. }
                | Error::FilterTooLong { .. }
                | Error::EmptyInput
                | Error::InvalidConfig(_)
                | Error::DimensionMismatch { .. }
        )
    }

    pub fn is_solver(&self) -> bool {
        matches!(
            self.root(),
            Error::NonPositivePreconditioner { .. }
                | Error::BreakdownDetected { .. }
                | Error::SingularSystem
                | Error::LevinsonBreakdown { .. }
                | Error::SingularGram
        )
    }
}

use thiserror::Error;

/// Errors produced by protocol construction, execution and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: got {got} entries, expected {want}")]
    DimensionMismatch { got: usize, want: usize },

    #[error("loss order p must be >= 1, got {0}")]
    InvalidLossOrder(f64),

    #[error("NaN entry at index {0}")]
    NanEntry(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("binomial tail threshold {theta} out of range for n = {n}")]
    ThetaOutOfRange { theta: usize, n: usize },

    #[error("one-bit task has no users")]
    EmptyTask,

    #[error("insufficient budget for rough pass")]
    RoughBudgetExhausted,

    #[error("cannot encode one sample: l = {l} is below the {bits} bits needed per symbol")]
    FrameTooNarrow { l: usize, bits: usize },

    #[error("frame width l0 = {l0} exceeds message width l = {l}")]
    FrameWiderThanMessage { l0: usize, l: usize },

    #[error("block estimate has {got} entries, partition has {want} blocks")]
    BlockCountMismatch { got: usize, want: usize },

    #[error("insufficient encoders for recursion depth {depth}")]
    RecursionStarved { depth: usize },

    #[error("budget too tight even for thresholding: k' = {kprime}")]
    ThresholdBudgetTooTight { kprime: f64 },

    #[error("protocol requires n = 1 sample per encoder, got n = {0}")]
    NeedsSingleSample(usize),

    #[error("message width l must be >= 1")]
    ZeroWidth,

    #[error("transcript already holds a message from encoder {0}")]
    DuplicateMessage(usize),

    #[error("encoder index {index} out of range for m = {m}")]
    EncoderOutOfRange { index: usize, m: usize },

    #[error("sweep grid crosses regimes: {0}")]
    RegimeCrossing(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("trial {trial} failed: {source}")]
    TrialFailed {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config file error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid antenna array: {0}")]
    InvalidArray(String),

    #[error("invalid target {index}: {reason}")]
    InvalidTarget { index: usize, reason: String },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("target index {index} out of range for {n_targets} targets")]
    TargetIndex { index: usize, n_targets: usize },

    #[error("pairwise quantity requested for a target paired with itself ({0})")]
    SameTarget(usize),

    #[error("graph has {found} vertices but the scene has {expected} targets")]
    GraphSize { expected: usize, found: usize },

    #[error("{0} gates supplied for a different number of targets")]
    GateCount(usize),

    #[error("closed-form confusion probability needs a shared prior covariance")]
    UnsupportedClosedForm,

    #[error("{pairs} target pairs exceed the enumeration limit of {limit}")]
    TooManyPairs { pairs: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("steering matrix has rank {rank}, construction needs {needed}")]
    RankDeficient { rank: usize, needed: usize },

    #[error("construction precondition violated: {0}")]
    Construction(String),

    #[error("time-bandwidth product {0} is not a positive integer")]
    TimeBandwidth(f64),

    #[error("ambiguity grid of {points} points exceeds the cap of {cap}; use a larger sidelobe level, a smaller BT or subsampling")]
    GridTooLarge { points: u128, cap: u128 },

    #[error("exhaustive enumeration over {n_targets} targets requires the long-run flag")]
    LongRunRequired { n_targets: usize },
}

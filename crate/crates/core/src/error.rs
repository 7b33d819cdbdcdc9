use thiserror::Error;

/// Errors raised by pattern construction, analysis and scheduling.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("({m}, {n}) is not a co-prime pair (gcd = {gcd})")]
    NotCoprime { m: u64, n: u64, gcd: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("shift of {numer}/{denom} ticks is not representable on a grid with q = {q}")]
    GridResolution { numer: u64, denom: u64, q: u32 },

    #[error("lag {lag} outside the supported range [-{max}, {max}]")]
    LagOutOfRange { lag: i64, max: i64 },

    #[error("every lag of the autocorrelation estimate is undefined")]
    UndefinedSpectrum,

    #[error("sampler {sampler}: signals {first} and {second} both claim tick {tick}")]
    SlotCollision {
        sampler: u32,
        tick: u64,
        first: u32,
        second: u32,
    },

    #[error(
        "sampler {sampler}: gap of {gap} ticks after tick {tick} leaves no room (need {needed})"
    )]
    TooFast {
        sampler: u32,
        tick: u64,
        gap: u64,
        needed: u64,
    },

    #[error("no shift in [0, {limit}) ticks keeps the sampler progressions disjoint")]
    NoFeasibleShift { limit: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

//! Time-division-multiplexed co-prime sub-Nyquist sampling.
//!
//! - [`grid`]: co-prime pairs, the integer tick grid, sampling patterns.
//! - [`patterns`]: generators for the Nyquist TDM, extended co-prime,
//!   two-sampler half-shift and ExSCA layouts.
//! - [`diffsets`]: difference sets, weight functions (brute force and closed
//!   form), the correlogram bias window.
//! - [`estimator`]: simulated acquisition and correlation / spectrum estimates.
//! - [`scheduler`]: switch schedules, coincidence checks, offset search and
//!   the signal/sampler assignment model.
//! - [`cli`]: the `coprime-tdm` command-line tool.

pub mod cli;
pub mod diffsets;
pub mod error;
pub mod estimator;
pub mod golden;
pub mod grid;
pub mod patterns;
pub mod scheduler;

pub use error::{Error, Result};
pub use grid::{make_coprime_pair, merge_patterns, CoprimePair, SamplingPattern, TickGrid};
pub use patterns::{ExscaConfig, Layout, Scheme};

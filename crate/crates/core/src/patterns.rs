//! Generators for every sampling pattern family: uniform Nyquist TDM, the
//! extended co-prime sampler for both multiplexed signals, the two-sampler
//! variant with a half-period shift, and the extremely sparse (ExSCA) layout.
//!
//! Sampler ids follow one convention throughout:
//!
//! | scheme                    | sampler 1          | sampler 2         | sampler 3  |
//! |---------------------------|--------------------|-------------------|------------|
//! | `nyquist-tdm`             | x1 and x2          |                   |            |
//! | `extended`                | M-spaced, x1 + x2  | N-spaced, x1      | N-spaced, x2 |
//! | `extended-tdm-2sampler`   | M-spaced, x1 + x2  | N-spaced, x1 + x2 |            |
//! | `exsca`                   | ExM-spaced         | ExN-spaced        |            |
//!
//! Extended generators cover the window `[0, 2MN d)`. Continuous operation is
//! modelled as periodic repetition of that window.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{merge_patterns, CoprimePair, MergedPattern, SamplingPattern, TickGrid};

pub const SAMPLER_M: u32 = 1;
pub const SAMPLER_N: u32 = 2;
/// Dedicated N-spaced sampler of the second signal in the three-sampler scheme.
pub const SAMPLER_N_X2: u32 = 3;

/// Uniform samples `offset, offset + period, ...` below `span` on a `q = 1` grid.
pub fn gen_uniform(period_ticks: u64, offset_ticks: u64, span: u64) -> Result<SamplingPattern> {
    gen_uniform_on(TickGrid::new(1, span)?, period_ticks, offset_ticks)
}

pub fn gen_uniform_on(
    grid: TickGrid,
    period_ticks: u64,
    offset_ticks: u64,
) -> Result<SamplingPattern> {
    if period_ticks == 0 {
        return Err(Error::InvalidParam(
            "sampling period must be >= 1 tick".into(),
        ));
    }
    let instants = (offset_ticks..grid.span_ticks)
        .step_by(period_ticks as usize)
        .collect();
    SamplingPattern::new(grid, 1, 1, instants)
}

fn extended_grid(pair: &CoprimePair, q: u32) -> Result<TickGrid> {
    TickGrid::new(q, 2 * pair.period() * q as u64)
}

/// First signal of the extended co-prime sampler: `M`-branch `{Mn : n < N}` and
/// `N`-branch `{Nm : m < 2M}`.
pub fn gen_extended_x1(pair: &CoprimePair) -> Result<(SamplingPattern, SamplingPattern)> {
    let grid = extended_grid(pair, 1)?;
    let (m, n) = (pair.m(), pair.n());
    let m_branch = SamplingPattern::new(grid, 1, SAMPLER_M, (0..n).map(|i| m * i).collect())?;
    let n_branch = SamplingPattern::new(grid, 1, SAMPLER_N, (0..2 * m).map(|j| n * j).collect())?;
    Ok((m_branch, n_branch))
}

/// Second signal of the extended co-prime sampler: the `M`-branch takes the
/// vacant second co-prime period, `{Mn : N <= n < 2N}`.
pub fn gen_extended_x2(pair: &CoprimePair) -> Result<(SamplingPattern, SamplingPattern)> {
    let grid = extended_grid(pair, 1)?;
    let (m, n) = (pair.m(), pair.n());
    let m_branch = SamplingPattern::new(grid, 2, SAMPLER_M, (n..2 * n).map(|i| m * i).collect())?;
    let n_branch =
        SamplingPattern::new(grid, 2, SAMPLER_N_X2, (0..2 * m).map(|j| n * j).collect())?;
    Ok((m_branch, n_branch))
}

/// Smallest grid subdivision on which the `N d / 2` shift is integral.
pub fn half_shift_q(pair: &CoprimePair) -> u32 {
    if pair.n().is_multiple_of(2) {
        1
    } else {
        2
    }
}

/// Second signal when both signals share two samplers: the `N`-branch is
/// shifted by `N d / 2`. Uses the coarsest grid that can hold the shift.
pub fn gen_tdm_two_sampler_x2(pair: &CoprimePair) -> Result<(SamplingPattern, SamplingPattern)> {
    gen_tdm_two_sampler_x2_on(pair, half_shift_q(pair))
}

pub fn gen_tdm_two_sampler_x2_on(
    pair: &CoprimePair,
    q: u32,
) -> Result<(SamplingPattern, SamplingPattern)> {
    let grid = extended_grid(pair, q)?;
    let (m, n, qq) = (pair.m(), pair.n(), q as u64);
    let shift = grid.ticks_for(n, 2)?;
    let m_branch =
        SamplingPattern::new(grid, 2, SAMPLER_M, (n..2 * n).map(|i| qq * m * i).collect())?;
    let n_branch = SamplingPattern::new(
        grid,
        2,
        SAMPLER_N,
        (0..2 * m).map(|j| qq * n * j + shift).collect(),
    )?;
    Ok((m_branch, n_branch))
}

/// Parameters of an extremely sparse co-prime sampler pair.
///
/// Offsets are tick indices on a grid with subdivision `q`. The second signal's
/// offsets are derived: `s21 = s11 + Ex M / 2`, `s22 = s12 + Ex N / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExscaConfig {
    pub pair: CoprimePair,
    pub ex: u64,
    pub q: u32,
    pub s11: u64,
    pub s12: u64,
}

impl ExscaConfig {
    pub fn new(pair: CoprimePair, ex: u64, q: u32, s11: u64, s12: u64) -> Result<Self> {
        if ex == 0 {
            return Err(Error::InvalidParam(
                "sparsity factor Ex must be >= 1".into(),
            ));
        }
        if q == 0 {
            return Err(Error::InvalidParam(
                "grid subdivision q must be >= 1".into(),
            ));
        }
        Ok(ExscaConfig {
            pair,
            ex,
            q,
            s11,
            s12,
        })
    }

    /// Smallest `q` on which both half shifts `Ex M / 2` and `Ex N / 2` are integral.
    pub fn min_q(pair: &CoprimePair, ex: u64) -> u32 {
        if (ex * pair.m()).is_multiple_of(2) && (ex * pair.n()).is_multiple_of(2) {
            1
        } else {
            2
        }
    }

    fn grid_probe(&self) -> TickGrid {
        TickGrid {
            q: self.q,
            span_ticks: u64::MAX,
        }
    }

    /// Sampler-1 spacing in ticks.
    pub fn period_1(&self) -> u64 {
        self.ex * self.pair.m() * self.q as u64
    }

    /// Sampler-2 spacing in ticks.
    pub fn period_2(&self) -> u64 {
        self.ex * self.pair.n() * self.q as u64
    }

    pub fn s21(&self) -> Result<u64> {
        Ok(self.s11 + self.grid_probe().ticks_for(self.ex * self.pair.m(), 2)?)
    }

    pub fn s22(&self) -> Result<u64> {
        Ok(self.s12 + self.grid_probe().ticks_for(self.ex * self.pair.n(), 2)?)
    }

    /// `(sampler-1 offset, sampler-2 offset)` for signal 1 or 2.
    pub fn offsets(&self, signal: u32) -> Result<(u64, u64)> {
        match signal {
            1 => Ok((self.s11, self.s12)),
            2 => Ok((self.s21()?, self.s22()?)),
            other => Err(Error::InvalidParam(format!(
                "ExSCA signal must be 1 or 2, got {other}; use gen_exsca_slotted for more"
            ))),
        }
    }

    /// Offsets when `Ex` signals share the two samplers in equal slots:
    /// signal `i` is delayed by `(i - 1) Ex M / Ex` and `(i - 1) Ex N / Ex`.
    pub fn slotted_offsets(&self, signal: u32) -> Result<(u64, u64)> {
        if signal == 0 || signal as u64 > self.ex {
            return Err(Error::InvalidParam(format!(
                "slotted ExSCA with Ex={} supports signals 1..={}, got {signal}",
                self.ex, self.ex
            )));
        }
        let slot = (signal - 1) as u64 * self.q as u64;
        Ok((
            self.s11 + slot * self.pair.m(),
            self.s12 + slot * self.pair.n(),
        ))
    }
}

fn exsca_pair(
    cfg: &ExscaConfig,
    signal: u32,
    offsets: (u64, u64),
    span: u64,
) -> Result<(SamplingPattern, SamplingPattern)> {
    let grid = TickGrid::new(cfg.q, span)?;
    let a = (offsets.0..span).step_by(cfg.period_1() as usize).collect();
    let b = (offsets.1..span).step_by(cfg.period_2() as usize).collect();
    Ok((
        SamplingPattern::new(grid, signal, 1, a)?,
        SamplingPattern::new(grid, signal, 2, b)?,
    ))
}

/// ExSCA branches of signal 1 or 2 over `[0, span)` ticks.
pub fn gen_exsca(
    cfg: &ExscaConfig,
    signal: u32,
    span: u64,
) -> Result<(SamplingPattern, SamplingPattern)> {
    exsca_pair(cfg, signal, cfg.offsets(signal)?, span)
}

/// ExSCA branches for signal `1..=Ex` under equal slotting.
pub fn gen_exsca_slotted(
    cfg: &ExscaConfig,
    signal: u32,
    span: u64,
) -> Result<(SamplingPattern, SamplingPattern)> {
    exsca_pair(cfg, signal, cfg.slotted_offsets(signal)?, span)
}

/// Acquisition scheme selector shared by the CLI and the C ABI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[value(name = "nyquist-tdm")]
    NyquistTdm,
    #[value(name = "extended")]
    Extended,
    #[serde(rename = "extended-tdm-2sampler")]
    #[value(name = "extended-tdm-2sampler")]
    ExtendedTdm2Sampler,
    #[value(name = "exsca")]
    Exsca,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::NyquistTdm => "nyquist-tdm",
            Scheme::Extended => "extended",
            Scheme::ExtendedTdm2Sampler => "extended-tdm-2sampler",
            Scheme::Exsca => "exsca",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Scheme::NyquistTdm,
            Scheme::Extended,
            Scheme::ExtendedTdm2Sampler,
            Scheme::Exsca,
        ]
        .into_iter()
        .find(|v| v.name() == s)
        .ok_or_else(|| Error::InvalidParam(format!("unknown scheme {s:?}")))
    }
}

/// Grid subdivision used for the `nyquist-tdm` layout: the second signal is
/// offset by `d / 2` and a one-tick switching aperture still fits between samples.
pub const NYQUIST_TDM_Q: u32 = 4;

/// A fully specified two-signal acquisition layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub pair: CoprimePair,
    pub scheme: Scheme,
    /// ExSCA parameters, required for [`Scheme::Exsca`].
    pub exsca: Option<ExscaConfig>,
    /// Window length in ticks. Required for ExSCA; defaults to `2MN` in `d` units otherwise.
    pub span: Option<u64>,
}

impl Layout {
    pub fn new(pair: CoprimePair, scheme: Scheme) -> Self {
        Layout {
            pair,
            scheme,
            exsca: None,
            span: None,
        }
    }

    pub fn signals(&self) -> [u32; 2] {
        [1, 2]
    }

    /// Per-sampler branches for `signal` (1 or 2), expressed on the grid shared
    /// by both signals of the layout.
    pub fn branches(&self, signal: u32) -> Result<Vec<SamplingPattern>> {
        if signal != 1 && signal != 2 {
            return Err(Error::InvalidParam(format!(
                "signal must be 1 or 2, got {signal}"
            )));
        }
        let window = 2 * self.pair.period();
        match self.scheme {
            Scheme::NyquistTdm => {
                let q = NYQUIST_TDM_Q;
                let span = self.span.unwrap_or(window * q as u64);
                let grid = TickGrid::new(q, span)?;
                let offset = if signal == 1 {
                    0
                } else {
                    grid.ticks_for(1, 2)?
                };
                Ok(vec![
                    gen_uniform_on(grid, q as u64, offset)?.with_ids(signal, 1)
                ])
            }
            Scheme::Extended => {
                let (a, b) = if signal == 1 {
                    gen_extended_x1(&self.pair)?
                } else {
                    gen_extended_x2(&self.pair)?
                };
                Ok(vec![a, b])
            }
            Scheme::ExtendedTdm2Sampler => {
                let q = half_shift_q(&self.pair);
                if signal == 1 {
                    let (a, b) = gen_extended_x1(&self.pair)?;
                    Ok(vec![a.refined(q)?, b.refined(q)?])
                } else {
                    let (a, b) = gen_tdm_two_sampler_x2_on(&self.pair, q)?;
                    Ok(vec![a, b])
                }
            }
            Scheme::Exsca => {
                let cfg = self.exsca.ok_or_else(|| {
                    Error::InvalidParam("exsca scheme needs Ex and shift parameters".into())
                })?;
                let span = self.span.ok_or_else(|| {
                    Error::InvalidParam("exsca scheme needs an explicit span".into())
                })?;
                let (a, b) = gen_exsca(&cfg, signal, span)?;
                Ok(vec![a, b])
            }
        }
    }

    /// Combined pattern of `signal` across all its samplers.
    pub fn combined(&self, signal: u32) -> Result<MergedPattern> {
        let branches = self.branches(signal)?;
        let mut iter = branches.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::InvalidParam("layout produced no branches".into()))?;
        let mut merged = MergedPattern {
            pattern: first,
            overlaps: Vec::new(),
        };
        for next in iter {
            let step = merge_patterns(&merged.pattern, &next)?;
            merged.overlaps.extend(step.overlaps);
            merged.pattern = step.pattern;
        }
        merged.overlaps.sort_unstable();
        merged.overlaps.dedup();
        Ok(merged)
    }
}

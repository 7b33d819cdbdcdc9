//! Simulated acquisition through sampling patterns and correlation / spectrum
//! estimation from the resulting zero-filled Nyquist-grid records.
//!
//! Process parameters are expressed in units of the Nyquist period `d`; the
//! dense signal is synthesised on the pattern's tick grid (step `d / q`) and
//! then masked by the pattern, repeated for the requested number of periods.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diffsets::frequency_grid;
use crate::error::{Error, Result};
use crate::grid::{SamplingPattern, TickGrid};

/// One randomised-phase sinusoid `A cos(2 pi f t + phi)`, `f` in cycles per `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub frequency: f64,
}

/// Wide-sense stationary test processes with known autocorrelation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Process {
    WhiteNoise {
        variance: f64,
    },
    /// First-order autoregression with correlation `pole^|tau|` per unit of `d`.
    Ar1 {
        pole: f64,
        variance: f64,
    },
    SinusoidsPlusNoise {
        components: Vec<Sinusoid>,
        noise_variance: f64,
    },
}

impl Process {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParam(msg.into()));
        match self {
            Process::WhiteNoise { variance } if !(variance.is_finite() && *variance >= 0.0) => {
                bad("variance must be finite and nonnegative")
            }
            Process::Ar1 { pole, variance } => {
                if !(variance.is_finite() && *variance >= 0.0) {
                    bad("variance must be finite and nonnegative")
                } else if !(0.0..1.0).contains(pole) {
                    bad("AR(1) pole must lie in [0, 1)")
                } else {
                    Ok(())
                }
            }
            Process::SinusoidsPlusNoise {
                components,
                noise_variance,
            } => {
                if !(noise_variance.is_finite() && *noise_variance >= 0.0) {
                    return bad("noise variance must be finite and nonnegative");
                }
                if components
                    .iter()
                    .any(|c| !c.amplitude.is_finite() || !c.frequency.is_finite())
                {
                    return bad("sinusoid parameters must be finite");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Analytic autocorrelation at lag `tau` (units of `d`).
    pub fn autocorr(&self, tau: f64) -> f64 {
        let impulse = |v: f64| if tau == 0.0 { v } else { 0.0 };
        match self {
            Process::WhiteNoise { variance } => impulse(*variance),
            Process::Ar1 { pole, variance } => variance * pole.powf(tau.abs()),
            Process::SinusoidsPlusNoise {
                components,
                noise_variance,
            } => {
                components
                    .iter()
                    .map(|c| 0.5 * c.amplitude * c.amplitude * (2.0 * PI * c.frequency * tau).cos())
                    .sum::<f64>()
                    + impulse(*noise_variance)
            }
        }
    }

    /// Dense realisation of `len` samples spaced `step` (units of `d`) apart.
    pub fn synthesize(&self, step: f64, len: usize, rng: &mut impl Rng) -> Vec<f64> {
        let mut normal = || -> f64 { rng.sample(StandardNormal) };
        match self {
            Process::WhiteNoise { variance } => {
                let sd = variance.sqrt();
                (0..len).map(|_| sd * normal()).collect()
            }
            Process::Ar1 { pole, variance } => {
                let a = pole.powf(step);
                let innovation = (variance * (1.0 - a * a)).sqrt();
                let mut out = Vec::with_capacity(len);
                let mut x = variance.sqrt() * normal();
                for _ in 0..len {
                    out.push(x);
                    x = a * x + innovation * normal();
                }
                out
            }
            Process::SinusoidsPlusNoise {
                components,
                noise_variance,
            } => {
                let phases: Vec<f64> = components
                    .iter()
                    .map(|_| 2.0 * PI * rng.random::<f64>())
                    .collect();
                let sd = noise_variance.sqrt();
                (0..len)
                    .map(|k| {
                        let t = k as f64 * step;
                        let tone: f64 = components
                            .iter()
                            .zip(&phases)
                            .map(|(c, phi)| c.amplitude * (2.0 * PI * c.frequency * t + phi).cos())
                            .sum();
                        tone + sd * rng.sample::<f64, _>(StandardNormal)
                    })
                    .collect()
            }
        }
    }
}

/// A process together with the seed of its realisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalModel {
    pub process: Process,
    pub seed: u64,
}

impl SignalModel {
    pub fn new(process: Process, seed: u64) -> Self {
        SignalModel { process, seed }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Zero-filled record of one signal on its tick grid. `grid` describes one
/// acquisition period; the record spans `periods` of them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcquisitionRecord {
    pub grid: TickGrid,
    pub periods: u64,
    pub signal_id: u32,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl AcquisitionRecord {
    /// Masks an already synthesised dense signal with the periodically repeated pattern.
    pub fn from_dense(dense: &[f64], pattern: &SamplingPattern, periods: u64) -> Result<Self> {
        if periods == 0 {
            return Err(Error::InvalidParam(
                "at least one period is required".into(),
            ));
        }
        let len = (pattern.grid().span_ticks * periods) as usize;
        if dense.len() != len {
            return Err(Error::InvalidParam(format!(
                "dense signal has {} samples, record needs {len}",
                dense.len()
            )));
        }
        let mut mask = vec![false; len];
        let mut values = vec![0.0; len];
        for k in pattern.periodic_instants(periods) {
            let k = k as usize;
            mask[k] = true;
            values[k] = dense[k];
        }
        Ok(AcquisitionRecord {
            grid: pattern.grid(),
            periods,
            signal_id: pattern.signal_id(),
            values,
            mask,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn occupied(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    fn occupied_indices(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(k, _)| k)
            .collect()
    }
}

/// Samples `model` on the pattern's grid over `num_periods` repetitions and
/// keeps only the pattern instants.
pub fn acquire(
    model: &SignalModel,
    pattern: &SamplingPattern,
    num_periods: u64,
) -> Result<AcquisitionRecord> {
    if num_periods == 0 {
        return Err(Error::InvalidParam(
            "at least one period is required".into(),
        ));
    }
    model.process.validate()?;
    let len = (pattern.grid().span_ticks * num_periods) as usize;
    let dense = model
        .process
        .synthesize(pattern.grid().step(), len, &mut model.rng());
    AcquisitionRecord::from_dense(&dense, pattern, num_periods)
}

/// Estimate at one lag. `estimate` is `None` when no sample pair realises the lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagEstimate {
    pub lag: i64,
    pub estimate: Option<f64>,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Autocorrelation {
    pub grid: TickGrid,
    /// Lags `0..=lag_max`; negative lags follow by symmetry.
    pub lags: Vec<LagEstimate>,
}

impl Autocorrelation {
    pub fn get(&self, lag: i64) -> Option<&LagEstimate> {
        self.lags.get(lag.unsigned_abs() as usize)
    }

    pub fn undefined_lags(&self) -> Vec<i64> {
        self.lags
            .iter()
            .filter(|e| e.estimate.is_none())
            .map(|e| e.lag)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCorrelation {
    pub grid: TickGrid,
    /// Lags `-lag_max..=lag_max`.
    pub lags: Vec<LagEstimate>,
}

impl CrossCorrelation {
    /// Lag with the largest defined estimate.
    pub fn peak(&self) -> Option<LagEstimate> {
        self.lags
            .iter()
            .filter(|e| e.estimate.is_some())
            .copied()
            .max_by(|a, b| a.estimate.partial_cmp(&b.estimate).unwrap())
    }
}

fn lag_estimate(lag: i64, sum: f64, count: u64) -> LagEstimate {
    LagEstimate {
        lag,
        estimate: (count > 0).then(|| sum / count as f64),
        count,
    }
}

/// Unbiased lag-product average over every realised pair `(k, k + l)`,
/// including pairs spanning period boundaries.
pub fn estimate_autocorr(rec: &AcquisitionRecord, lag_max: u64) -> Autocorrelation {
    let width = lag_max as usize + 1;
    let mut sums = vec![0.0; width];
    let mut counts = vec![0u64; width];
    let len = rec.len();
    for k in rec.occupied_indices() {
        let x = rec.values[k];
        for l in 0..width.min(len - k) {
            if rec.mask[k + l] {
                sums[l] += x * rec.values[k + l];
                counts[l] += 1;
            }
        }
    }
    Autocorrelation {
        grid: rec.grid,
        lags: (0..width)
            .map(|l| lag_estimate(l as i64, sums[l], counts[l]))
            .collect(),
    }
}

/// Cross-correlation `E[x1(k) x2(k + l)]` for `l in [-lag_max, lag_max]`.
pub fn estimate_crosscorr(
    rec1: &AcquisitionRecord,
    rec2: &AcquisitionRecord,
    lag_max: u64,
) -> Result<CrossCorrelation> {
    if rec1.grid != rec2.grid || rec1.len() != rec2.len() {
        return Err(Error::GridMismatch {
            left: format!("{} x {} periods", rec1.grid, rec1.periods),
            right: format!("{} x {} periods", rec2.grid, rec2.periods),
        });
    }
    let lag_max_i = lag_max as i64;
    let width = 2 * lag_max as usize + 1;
    let mut sums = vec![0.0; width];
    let mut counts = vec![0u64; width];
    let len = rec1.len() as i64;
    for k in rec1.occupied_indices() {
        let x = rec1.values[k];
        let k = k as i64;
        let lo = (-lag_max_i).max(-k);
        let hi = lag_max_i.min(len - 1 - k);
        for l in lo..=hi {
            let j = (k + l) as usize;
            if rec2.mask[j] {
                let idx = (l + lag_max_i) as usize;
                sums[idx] += x * rec2.values[j];
                counts[idx] += 1;
            }
        }
    }
    Ok(CrossCorrelation {
        grid: rec1.grid,
        lags: (0..width)
            .map(|i| lag_estimate(i as i64 - lag_max_i, sums[i], counts[i]))
            .collect(),
    })
}

/// Correlogram spectrum on the uniform `[0, 2 pi)` bin grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    /// Bin centres in radians per `d`.
    pub omega: Vec<f64>,
    pub values: Vec<f64>,
    /// Lags whose estimate was undefined and treated as zero.
    pub undefined_lags: Vec<i64>,
}

impl Spectrum {
    pub fn has_undefined(&self) -> bool {
        !self.undefined_lags.is_empty()
    }
}

/// Cosine transform of the symmetrised autocorrelation estimate.
pub fn correlogram_psd(ac: &Autocorrelation, num_freqs: usize) -> Result<Spectrum> {
    if num_freqs == 0 {
        return Err(Error::InvalidParam("num_freqs must be >= 1".into()));
    }
    if ac.lags.iter().all(|e| e.estimate.is_none()) {
        return Err(Error::UndefinedSpectrum);
    }
    let undefined_lags = ac.undefined_lags();
    if !undefined_lags.is_empty() {
        log::warn!(
            "{} undefined lag(s) treated as zero in the correlogram",
            undefined_lags.len()
        );
    }
    let step = ac.grid.step();
    let omega = frequency_grid(num_freqs);
    let values = omega
        .iter()
        .map(|&w| {
            ac.lags
                .iter()
                .map(|e| {
                    let r = e.estimate.unwrap_or(0.0);
                    if e.lag == 0 {
                        r
                    } else {
                        2.0 * r * (w * e.lag as f64 * step).cos()
                    }
                })
                .sum()
        })
        .collect();
    Ok(Spectrum {
        omega,
        values,
        undefined_lags,
    })
}

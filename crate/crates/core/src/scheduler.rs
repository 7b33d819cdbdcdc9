//! Switch schedules for multiplexed samplers, ExSCA coincidence checks, the
//! offset search, and the signal/sampler assignment model.
//!
//! Timing model: every sample at tick `k` needs its switch parked at the right
//! position over the aperture `[k, k + hold_ticks)`. Consecutive samples of the
//! same signal on one sampler form a single switch event. Between two events
//! the free gap is split at its midpoint: the first half is the transition
//! window of the outgoing event, the second half is settling margin that
//! belongs to the hold of the incoming event.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::diffsets::weight_brute_force;
use crate::error::{Error, Result};
use crate::grid::{merge_patterns, CoprimePair, SamplingPattern, TickGrid};
use crate::patterns::{gen_exsca, ExscaConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleOptions {
    /// Aperture each sample needs at its position, in ticks (>= 1).
    pub hold_ticks: u64,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        ScheduleOptions { hold_ticks: 1 }
    }
}

/// Switch parked at `position` over `[t, t + hold)`, then in transit for
/// `transition` ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub t: u64,
    pub position: u32,
    pub hold: u64,
    pub transition: u64,
}

impl SwitchEvent {
    pub fn hold_end(&self) -> u64 {
        self.t + self.hold
    }
}

/// Event list of one sampler's input switch plus the sampler's trigger ticks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchSchedule {
    pub switch_id: u32,
    pub grid: TickGrid,
    pub events: Vec<SwitchEvent>,
    pub triggers: Vec<u64>,
}

impl SwitchSchedule {
    /// Position the switch holds at `tick`, if it is parked then.
    pub fn position_at(&self, tick: u64) -> Option<u32> {
        let idx = self.events.partition_point(|e| e.t <= tick);
        let e = self.events.get(idx.checked_sub(1)?)?;
        (tick < e.hold_end()).then_some(e.position)
    }

    fn in_transition(&self, tick: u64) -> bool {
        let idx = self.events.partition_point(|e| e.t <= tick);
        idx.checked_sub(1)
            .and_then(|i| self.events.get(i))
            .is_some_and(|e| tick >= e.hold_end() && tick < e.hold_end() + e.transition)
    }

    /// Checks ordering, non-overlap, and positive transitions between positions.
    pub fn validate(&self) -> Result<()> {
        for pair in self.events.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let busy = a.hold_end() + a.transition;
            if b.t <= a.t || busy > b.t {
                return Err(Error::InvalidParam(format!(
                    "switch {}: event at {} overlaps event at {}",
                    self.switch_id, a.t, b.t
                )));
            }
            if a.position != b.position && a.transition == 0 {
                return Err(Error::InvalidParam(format!(
                    "switch {}: zero transition before tick {}",
                    self.switch_id, b.t
                )));
            }
        }
        Ok(())
    }
}

/// Builds one schedule per sampler id found among `patterns`.
pub fn build_schedule(patterns: &[SamplingPattern]) -> Result<Vec<SwitchSchedule>> {
    build_schedule_with(patterns, ScheduleOptions::default())
}

pub fn build_schedule_with(
    patterns: &[SamplingPattern],
    opts: ScheduleOptions,
) -> Result<Vec<SwitchSchedule>> {
    if opts.hold_ticks == 0 {
        return Err(Error::InvalidParam("hold must be at least one tick".into()));
    }
    let mut by_sampler: BTreeMap<u32, Vec<&SamplingPattern>> = BTreeMap::new();
    for p in patterns {
        by_sampler.entry(p.sampler_id()).or_default().push(p);
    }
    by_sampler
        .into_iter()
        .map(|(sampler, group)| schedule_one(sampler, &group, opts.hold_ticks))
        .collect()
}

fn schedule_one(sampler: u32, group: &[&SamplingPattern], hold: u64) -> Result<SwitchSchedule> {
    let grid = group[0].grid();
    if let Some(other) = group.iter().find(|p| p.grid() != grid) {
        return Err(Error::GridMismatch {
            left: grid.to_string(),
            right: other.grid().to_string(),
        });
    }

    let mut slots: Vec<(u64, u32)> = group
        .iter()
        .flat_map(|p| p.instants().iter().map(|&k| (k, p.signal_id())))
        .collect();
    slots.sort_unstable();
    if let Some(w) = slots.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::SlotCollision {
            sampler,
            tick: w[0].0,
            first: w[0].1,
            second: w[1].1,
        });
    }

    // maximal runs of one position: (position, first tick, last tick)
    let mut runs: Vec<(u32, u64, u64)> = Vec::new();
    for &(k, signal) in &slots {
        match runs.last_mut() {
            Some(run) if run.0 == signal => {
                if k - run.2 < hold {
                    return Err(Error::TooFast {
                        sampler,
                        tick: run.2,
                        gap: k - run.2,
                        needed: hold,
                    });
                }
                run.2 = k;
            }
            Some(run) => {
                let gap = k - run.2;
                if gap < hold + 1 {
                    return Err(Error::TooFast {
                        sampler,
                        tick: run.2,
                        gap,
                        needed: hold + 1,
                    });
                }
                runs.push((signal, k, k));
            }
            None => runs.push((signal, k, k)),
        }
    }

    let mut events: Vec<SwitchEvent> = Vec::with_capacity(runs.len());
    let mut start = runs.first().map_or(0, |r| r.1);
    for (i, &(position, _, last)) in runs.iter().enumerate() {
        let hold_end = last + hold;
        let (transition, next_start) = match runs.get(i + 1) {
            Some(next) => {
                let free = next.1 - hold_end;
                let half = free.div_ceil(2);
                (half, hold_end + half)
            }
            None => (0, hold_end),
        };
        events.push(SwitchEvent {
            t: start,
            position,
            hold: hold_end - start,
            transition,
        });
        start = next_start;
    }

    let schedule = SwitchSchedule {
        switch_id: sampler,
        grid,
        events,
        triggers: slots.iter().map(|s| s.0).collect(),
    };
    schedule.validate()?;
    Ok(schedule)
}

/// Walks the schedule and records which signal each trigger samples.
pub fn replay(schedule: &SwitchSchedule) -> Result<Vec<(u64, u32)>> {
    schedule
        .triggers
        .iter()
        .map(|&k| {
            schedule.position_at(k).map(|pos| (k, pos)).ok_or_else(|| {
                Error::InvalidParam(format!(
                    "switch {}: trigger at tick {k} falls outside every hold",
                    schedule.switch_id
                ))
            })
        })
        .collect()
}

/// Reconstructs one pattern per `(signal, sampler)` from a set of schedules.
pub fn replay_patterns(schedules: &[SwitchSchedule]) -> Result<Vec<SamplingPattern>> {
    let mut out = Vec::new();
    for s in schedules {
        let mut per_signal: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
        for (k, signal) in replay(s)? {
            per_signal.entry(signal).or_default().push(k);
        }
        for (signal, ticks) in per_signal {
            out.push(SamplingPattern::new(s.grid, signal, s.switch_id, ticks)?);
        }
    }
    Ok(out)
}

/// One line per tick with every switch's state: the held position (with `*`
/// when the sampler triggers), `~` while in transit, `.` when idle.
pub fn waveform(schedules: &[SwitchSchedule]) -> String {
    let span = schedules
        .iter()
        .map(|s| s.grid.span_ticks)
        .max()
        .unwrap_or(0);
    let mut out = String::from("tick");
    for s in schedules {
        out.push_str(&format!("\tSW{}", s.switch_id));
    }
    out.push('\n');
    let triggers: Vec<BTreeSet<u64>> = schedules
        .iter()
        .map(|s| s.triggers.iter().copied().collect())
        .collect();
    for tick in 0..span {
        out.push_str(&tick.to_string());
        for (s, trig) in schedules.iter().zip(&triggers) {
            let cell = match s.position_at(tick) {
                Some(pos) if trig.contains(&tick) => format!("{pos}*"),
                Some(pos) => pos.to_string(),
                None if s.in_transition(tick) => "~".to_string(),
                None => ".".to_string(),
            };
            out.push('\t');
            out.push_str(&cell);
        }
        out.push('\n');
    }
    out
}

/// Common terms of the progressions `a0 + p i` and `b0 + r j` below `span`.
pub fn progression_intersection(a0: u64, p: u64, b0: u64, r: u64, span: u64) -> Vec<u64> {
    assert!(p > 0 && r > 0, "progression steps must be positive");
    let (a, pp, b, rr) = (a0 as i128, p as i128, b0 as i128, r as i128);
    let eg = pp.extended_gcd(&rr);
    let g = eg.gcd;
    if (b - a) % g != 0 {
        return Vec::new();
    }
    let lcm = pp / g * rr;
    let modulus = rr / g;
    let k = ((b - a) / g * eg.x).rem_euclid(modulus);
    let mut x = a + pp * k;
    let floor = a.max(b);
    if x < floor {
        x += (floor - x + lcm - 1) / lcm * lcm;
    }
    let mut out = Vec::new();
    while x < span as i128 {
        out.push(x as u64);
        x += lcm;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignalOverlap {
    pub signal: u32,
    /// Ticks sampled by both samplers for this signal.
    pub instants: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverlapReport {
    pub span: u64,
    pub per_signal: Vec<SignalOverlap>,
}

impl OverlapReport {
    /// True when any signal is sampled twice at the same instant (aliasing hazard).
    pub fn hazard(&self) -> bool {
        self.per_signal.iter().any(|s| !s.instants.is_empty())
    }

    pub fn total(&self) -> usize {
        self.per_signal.iter().map(|s| s.instants.len()).sum()
    }
}

/// Instants where both samplers acquire the same signal, for signals 1 and 2.
pub fn check_exsca_overlap(cfg: &ExscaConfig, span: u64) -> Result<OverlapReport> {
    let per_signal = [1, 2]
        .into_iter()
        .map(|signal| {
            let (o1, o2) = cfg.offsets(signal)?;
            Ok(SignalOverlap {
                signal,
                instants: progression_intersection(o1, cfg.period_1(), o2, cfg.period_2(), span),
            })
        })
        .collect::<Result<_>>()?;
    Ok(OverlapReport { span, per_signal })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ShiftCandidate {
    /// Sampler-2 offset in ticks of the search grid.
    pub s12: u64,
    pub overlap_free: bool,
    pub overlaps: usize,
    /// Distinct lags (symmetric range) with nonzero weight for signal 2.
    pub distinct_lags: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftSearch {
    /// Grid subdivision the offsets are expressed on.
    pub q: u32,
    pub span_ticks: u64,
    pub best: ShiftCandidate,
    pub candidates: Vec<ShiftCandidate>,
}

impl ShiftSearch {
    /// Best offset in units of `d`.
    pub fn best_s12_in_d(&self) -> Ratio<u64> {
        Ratio::new(self.best.s12, self.q as u64)
    }
}

fn score_shifts(pair: &CoprimePair, ex: u64, q: u32, span_d: u64) -> Result<Vec<ShiftCandidate>> {
    let span = span_d * q as u64;
    let probe = ExscaConfig::new(*pair, ex, q, 0, 0)?;
    (0..probe.period_2())
        .map(|s12| {
            let cfg = ExscaConfig { s12, ..probe };
            let report = check_exsca_overlap(&cfg, span)?;
            let distinct_lags = if span == 0 {
                0
            } else {
                let (a, b) = gen_exsca(&cfg, 2, span)?;
                let merged = merge_patterns(&a, &b.with_ids(2, 1))?.pattern;
                weight_brute_force(&merged, span - 1).coarray().len()
            };
            Ok(ShiftCandidate {
                s12,
                overlap_free: !report.hazard(),
                overlaps: report.total(),
                distinct_lags,
            })
        })
        .collect()
}

/// Scans sampler-2 offsets `s12` in `[0, Ex N)` (with `s11 = 0`) for the
/// overlap-free choice that covers the most distinct lags for signal 2.
///
/// `span` is measured in units of `d`. The scan starts on the coarsest grid
/// holding both half shifts; when every offset there collides it is repeated at
/// twice that resolution, since integral offsets can be forced onto a shared
/// residue of the two progressions.
pub fn search_shift(pair: &CoprimePair, ex: u64, span: u64) -> Result<ShiftSearch> {
    let q0 = ExscaConfig::min_q(pair, ex);
    for q in [q0, 2 * q0] {
        let candidates = score_shifts(pair, ex, q, span)?;
        let best = candidates
            .iter()
            .filter(|c| c.overlap_free)
            .max_by(|a, b| {
                a.distinct_lags
                    .cmp(&b.distinct_lags)
                    .then(b.s12.cmp(&a.s12))
            })
            .copied();
        if let Some(best) = best {
            return Ok(ShiftSearch {
                q,
                span_ticks: span * q as u64,
                best,
                candidates,
            });
        }
        log::debug!("no overlap-free offset on q={q}; refining");
    }
    Err(Error::NoFeasibleShift {
        limit: ex * pair.n() * 2 * q0 as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub id: u32,
    pub nyquist_period: Ratio<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub id: u32,
    pub min_period: Ratio<u64>,
}

/// Connection of a signal to a sampler. The signal is sampled on that sampler
/// every `decimation` of its Nyquist periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub signal: u32,
    pub sampler: u32,
    pub decimation: u64,
}

/// Bipartite signal-to-sampler connection graph.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AssignmentModel {
    pub signals: Vec<SignalSpec>,
    pub samplers: Vec<SamplerSpec>,
    pub edges: Vec<Edge>,
}

impl AssignmentModel {
    /// `signals` Nyquist-rate signals sharing one sampler of period `d / signals`.
    pub fn nyquist_tdm(signals: u32, d: Ratio<u64>) -> Self {
        AssignmentModel {
            signals: (1..=signals)
                .map(|id| SignalSpec {
                    id,
                    nyquist_period: d,
                })
                .collect(),
            samplers: vec![SamplerSpec {
                id: 1,
                min_period: d / signals.max(1) as u64,
            }],
            edges: (1..=signals)
                .map(|signal| Edge {
                    signal,
                    sampler: 1,
                    decimation: 1,
                })
                .collect(),
        }
    }

    /// `signals` signals on an `Md` / `Nd` sampler pair with ExSCA spacings.
    pub fn exsca(pair: &CoprimePair, ex: u64, signals: u32) -> Self {
        let d = pair.d();
        let samplers = vec![
            SamplerSpec {
                id: 1,
                min_period: d * pair.m(),
            },
            SamplerSpec {
                id: 2,
                min_period: d * pair.n(),
            },
        ];
        let edges = (1..=signals)
            .flat_map(|signal| {
                [
                    Edge {
                        signal,
                        sampler: 1,
                        decimation: ex * pair.m(),
                    },
                    Edge {
                        signal,
                        sampler: 2,
                        decimation: ex * pair.n(),
                    },
                ]
            })
            .collect();
        AssignmentModel {
            signals: (1..=signals)
                .map(|id| SignalSpec {
                    id,
                    nyquist_period: d,
                })
                .collect(),
            samplers,
            edges,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SamplerLoad {
    pub sampler: u32,
    /// `sum over edges of min_period / demanded period`.
    pub utilization: Ratio<u64>,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssignmentReport {
    pub loads: Vec<SamplerLoad>,
    pub unconnected_signals: Vec<u32>,
    pub issues: Vec<String>,
}

impl AssignmentReport {
    pub fn feasible(&self) -> bool {
        self.issues.is_empty()
            && self.unconnected_signals.is_empty()
            && self.loads.iter().all(|l| l.feasible)
    }
}

/// Rate feasibility of every edge and per-sampler utilisation.
pub fn plan_assignment(model: &AssignmentModel) -> AssignmentReport {
    let mut issues = Vec::new();
    if model.signals.is_empty() {
        issues.push("model has no signals".to_string());
    }
    let signals: BTreeMap<u32, &SignalSpec> = model.signals.iter().map(|s| (s.id, s)).collect();
    let samplers: BTreeMap<u32, &SamplerSpec> = model.samplers.iter().map(|s| (s.id, s)).collect();
    let mut load: BTreeMap<u32, Ratio<u64>> = samplers
        .keys()
        .map(|&id| (id, Ratio::from_integer(0)))
        .collect();
    let mut connected = BTreeSet::new();

    for e in &model.edges {
        let (Some(sig), Some(smp)) = (signals.get(&e.signal), samplers.get(&e.sampler)) else {
            issues.push(format!(
                "edge {} -> {} references an unknown node",
                e.signal, e.sampler
            ));
            continue;
        };
        if e.decimation == 0 || *sig.nyquist_period.numer() == 0 {
            issues.push(format!(
                "edge {} -> {} has a zero period",
                e.signal, e.sampler
            ));
            continue;
        }
        let demanded = sig.nyquist_period * e.decimation;
        if smp.min_period > demanded {
            issues.push(format!(
                "sampler {} (min period {}) cannot follow signal {} every {}",
                e.sampler, smp.min_period, e.signal, demanded
            ));
        }
        connected.insert(e.signal);
        *load.get_mut(&e.sampler).expect("sampler registered") += smp.min_period / demanded;
    }

    let unconnected_signals = signals
        .keys()
        .filter(|id| !connected.contains(*id))
        .copied()
        .collect();
    let loads = load
        .into_iter()
        .map(|(sampler, utilization)| SamplerLoad {
            sampler,
            utilization,
            feasible: utilization <= Ratio::from_integer(1),
        })
        .collect();
    AssignmentReport {
        loads,
        unconnected_signals,
        issues,
    }
}

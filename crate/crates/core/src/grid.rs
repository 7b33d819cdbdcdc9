//! Co-prime parameters, the rational tick grid, and sampling patterns.
//!
//! Every sample instant lives on an integer tick of a [`TickGrid`] whose
//! resolution is `d / q`. Differences between instants are therefore exact
//! integers, including the half-period shifted branches that land on `1.5 d`.

use std::collections::BTreeSet;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampler id used for a pattern that combines branches from different samplers.
pub const COMBINED_SAMPLER: u32 = 0;

/// A validated co-prime pair `(M, N)` together with the Nyquist period `d` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPair", into = "RawPair")]
pub struct CoprimePair {
    m: u64,
    n: u64,
    d: Ratio<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    m: u64,
    n: u64,
    #[serde(default = "one", with = "ratio_text")]
    d: Ratio<u64>,
}

fn one() -> Ratio<u64> {
    Ratio::from_integer(1)
}

impl TryFrom<RawPair> for CoprimePair {
    type Error = Error;

    fn try_from(raw: RawPair) -> Result<Self> {
        make_coprime_pair(raw.m, raw.n, raw.d)
    }
}

impl From<CoprimePair> for RawPair {
    fn from(p: CoprimePair) -> Self {
        RawPair {
            m: p.m,
            n: p.n,
            d: p.d,
        }
    }
}

/// Builds a [`CoprimePair`], rejecting non-co-prime or degenerate factors.
pub fn make_coprime_pair(m: u64, n: u64, d: Ratio<u64>) -> Result<CoprimePair> {
    if m <= 1 || n <= 1 {
        return Err(Error::InvalidParam(format!(
            "co-prime factors must both exceed 1, got ({m}, {n})"
        )));
    }
    if *d.numer() == 0 {
        return Err(Error::InvalidParam(
            "Nyquist period d must be positive".into(),
        ));
    }
    let gcd = m.gcd(&n);
    if gcd != 1 {
        return Err(Error::NotCoprime { m, n, gcd });
    }
    Ok(CoprimePair { m, n, d })
}

impl CoprimePair {
    /// Shorthand for a pair with `d = 1`.
    pub fn new(m: u64, n: u64) -> Result<Self> {
        make_coprime_pair(m, n, Ratio::from_integer(1))
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn d(&self) -> Ratio<u64> {
        self.d
    }

    /// The co-prime period `M N` in units of `d`.
    pub fn period(&self) -> u64 {
        self.m * self.n
    }
}

impl fmt::Display for CoprimePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(M={}, N={}, d={})", self.m, self.n, self.d)
    }
}

/// Integer tick grid with resolution `d / q` and a finite span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TickGrid {
    pub q: u32,
    pub span_ticks: u64,
}

impl TickGrid {
    pub fn new(q: u32, span_ticks: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParam(
                "grid subdivision q must be >= 1".into(),
            ));
        }
        if span_ticks == 0 {
            return Err(Error::InvalidParam("grid span must be >= 1 tick".into()));
        }
        Ok(TickGrid { q, span_ticks })
    }

    /// Tick length in units of `d`.
    pub fn step(&self) -> f64 {
        1.0 / self.q as f64
    }

    /// Span measured in units of `d`.
    pub fn span_in_d(&self) -> Ratio<u64> {
        Ratio::new(self.span_ticks, self.q as u64)
    }

    /// The same window at a finer resolution. `q` must divide `new_q`.
    pub fn refined(&self, new_q: u32) -> Result<Self> {
        if new_q == 0 || !new_q.is_multiple_of(self.q) {
            return Err(Error::InvalidParam(format!(
                "cannot refine a q={} grid to q={new_q}",
                self.q
            )));
        }
        let factor = (new_q / self.q) as u64;
        TickGrid::new(new_q, self.span_ticks * factor)
    }

    /// Converts a shift expressed as `numer / denom` grid units of `d` into ticks.
    pub(crate) fn ticks_for(&self, numer: u64, denom: u64) -> Result<u64> {
        let scaled = numer * self.q as u64;
        if !scaled.is_multiple_of(denom) {
            return Err(Error::GridResolution {
                numer,
                denom,
                q: self.q,
            });
        }
        Ok(scaled / denom)
    }
}

impl fmt::Display for TickGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "grid(q={}, span={})", self.q, self.span_ticks)
    }
}

/// A sorted set of sample instants for one signal on one sampler.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPattern")]
pub struct SamplingPattern {
    grid: TickGrid,
    signal_id: u32,
    sampler_id: u32,
    instants: Vec<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPattern {
    grid: TickGrid,
    signal_id: u32,
    sampler_id: u32,
    instants: Vec<u64>,
}

impl TryFrom<RawPattern> for SamplingPattern {
    type Error = Error;

    fn try_from(raw: RawPattern) -> Result<Self> {
        let grid = TickGrid::new(raw.grid.q, raw.grid.span_ticks)?;
        if raw.instants.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParam(
                "pattern instants must be strictly increasing".into(),
            ));
        }
        SamplingPattern::new(grid, raw.signal_id, raw.sampler_id, raw.instants)
    }
}

impl SamplingPattern {
    /// Builds a pattern; instants are sorted and deduplicated.
    pub fn new(
        grid: TickGrid,
        signal_id: u32,
        sampler_id: u32,
        mut instants: Vec<u64>,
    ) -> Result<Self> {
        instants.sort_unstable();
        instants.dedup();
        if let Some(&last) = instants.last() {
            if last >= grid.span_ticks {
                return Err(Error::InvalidParam(format!(
                    "instant {last} lies outside {grid}"
                )));
            }
        }
        Ok(SamplingPattern {
            grid,
            signal_id,
            sampler_id,
            instants,
        })
    }

    pub fn empty(grid: TickGrid, signal_id: u32, sampler_id: u32) -> Self {
        SamplingPattern {
            grid,
            signal_id,
            sampler_id,
            instants: Vec::new(),
        }
    }

    /// Inverse of [`SamplingPattern::indicator`].
    pub fn from_indicator(
        grid: TickGrid,
        signal_id: u32,
        sampler_id: u32,
        indicator: &[bool],
    ) -> Result<Self> {
        if indicator.len() as u64 != grid.span_ticks {
            return Err(Error::InvalidParam(format!(
                "indicator length {} does not match {grid}",
                indicator.len()
            )));
        }
        let instants = indicator
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(k, _)| k as u64)
            .collect();
        SamplingPattern::new(grid, signal_id, sampler_id, instants)
    }

    pub fn grid(&self) -> TickGrid {
        self.grid
    }

    pub fn signal_id(&self) -> u32 {
        self.signal_id
    }

    pub fn sampler_id(&self) -> u32 {
        self.sampler_id
    }

    pub fn instants(&self) -> &[u64] {
        &self.instants
    }

    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }

    pub fn contains(&self, tick: u64) -> bool {
        self.instants.binary_search(&tick).is_ok()
    }

    pub fn with_ids(mut self, signal_id: u32, sampler_id: u32) -> Self {
        self.signal_id = signal_id;
        self.sampler_id = sampler_id;
        self
    }

    /// Occupancy vector of length `span_ticks`.
    pub fn indicator(&self) -> Vec<bool> {
        let mut out = vec![false; self.grid.span_ticks as usize];
        for &k in &self.instants {
            out[k as usize] = true;
        }
        out
    }

    /// Instant positions in units of `d`.
    pub fn times_in_d(&self) -> Vec<Ratio<u64>> {
        let q = self.grid.q as u64;
        self.instants.iter().map(|&k| Ratio::new(k, q)).collect()
    }

    /// Re-expresses the pattern on a finer grid covering the same window.
    pub fn refined(&self, new_q: u32) -> Result<Self> {
        let grid = self.grid.refined(new_q)?;
        let factor = (new_q / self.grid.q) as u64;
        Ok(SamplingPattern {
            grid,
            signal_id: self.signal_id,
            sampler_id: self.sampler_id,
            instants: self.instants.iter().map(|k| k * factor).collect(),
        })
    }

    /// Instants of `periods` back-to-back repetitions with period `span_ticks`.
    pub fn periodic_instants(&self, periods: u64) -> impl Iterator<Item = u64> + '_ {
        let span = self.grid.span_ticks;
        (0..periods).flat_map(move |p| self.instants.iter().map(move |&k| p * span + k))
    }
}

/// Result of [`merge_patterns`]: the union plus every instant both inputs claimed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedPattern {
    pub pattern: SamplingPattern,
    pub overlaps: Vec<u64>,
}

impl MergedPattern {
    pub fn has_overlap(&self) -> bool {
        !self.overlaps.is_empty()
    }
}

/// Union of two branches of the same signal. Coinciding instants are kept once
/// and reported in [`MergedPattern::overlaps`].
pub fn merge_patterns(a: &SamplingPattern, b: &SamplingPattern) -> Result<MergedPattern> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch {
            left: a.grid.to_string(),
            right: b.grid.to_string(),
        });
    }
    if a.signal_id != b.signal_id {
        return Err(Error::InvalidParam(format!(
            "cannot merge patterns of signals {} and {}",
            a.signal_id, b.signal_id
        )));
    }
    let left: BTreeSet<u64> = a.instants.iter().copied().collect();
    let right: BTreeSet<u64> = b.instants.iter().copied().collect();
    let overlaps = left.intersection(&right).copied().collect();
    let instants = left.union(&right).copied().collect();
    let sampler_id = if a.sampler_id == b.sampler_id {
        a.sampler_id
    } else {
        COMBINED_SAMPLER
    };
    Ok(MergedPattern {
        pattern: SamplingPattern {
            grid: a.grid,
            signal_id: a.signal_id,
            sampler_id,
            instants,
        },
        overlaps,
    })
}

/// Rescales every pattern onto the finest grid among them. All patterns must
/// cover the same window measured in `d`.
pub fn to_common_grid(patterns: &[SamplingPattern]) -> Result<Vec<SamplingPattern>> {
    let Some(first) = patterns.first() else {
        return Ok(Vec::new());
    };
    let q = patterns.iter().fold(1u32, |acc, p| acc.lcm(&p.grid.q));
    let window = first.grid.span_in_d();
    patterns
        .iter()
        .map(|p| {
            if p.grid.span_in_d() != window {
                return Err(Error::GridMismatch {
                    left: first.grid.to_string(),
                    right: p.grid.to_string(),
                });
            }
            p.refined(q)
        })
        .collect()
}

/// Serde helper writing a rational as `"a/b"` (or `"a"`) and accepting either a
/// string or a bare integer on input.
pub(crate) mod ratio_text {
    use num_rational::Ratio;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&value.to_string())
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Text {
        Int(u64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<u64>, D::Error> {
        match Text::deserialize(d)? {
            Text::Int(v) => Ok(Ratio::from_integer(v)),
            Text::Str(s) => parse(&s).map_err(de::Error::custom),
        }
    }

    pub fn parse(s: &str) -> Result<Ratio<u64>, String> {
        let s = s.trim();
        let (numer, denom) = match s.split_once('/') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (s, "1"),
        };
        let numer: u64 = numer.parse().map_err(|_| format!("bad rational {s:?}"))?;
        let denom: u64 = denom.parse().map_err(|_| format!("bad rational {s:?}"))?;
        if denom == 0 {
            return Err(format!("zero denominator in {s:?}"));
        }
        Ok(Ratio::new(numer, denom))
    }
}

pub use ratio_text::parse as parse_ratio;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(span: u64) -> TickGrid {
        TickGrid::new(1, span).unwrap()
    }

    fn pat(sampler: u32, instants: &[u64]) -> SamplingPattern {
        SamplingPattern::new(grid(24), 1, sampler, instants.to_vec()).unwrap()
    }

    #[test]
    fn coprime_pair_validation() {
        let p = CoprimePair::new(4, 3).unwrap();
        assert_eq!((p.m(), p.n(), p.d()), (4, 3, Ratio::from_integer(1)));
        assert!(CoprimePair::new(5, 3).is_ok());
        assert_eq!(
            CoprimePair::new(4, 6),
            Err(Error::NotCoprime { m: 4, n: 6, gcd: 2 })
        );
        assert!(matches!(
            CoprimePair::new(1, 3),
            Err(Error::InvalidParam(_))
        ));
        assert!(matches!(
            CoprimePair::new(3, 0),
            Err(Error::InvalidParam(_))
        ));
        assert!(matches!(
            make_coprime_pair(4, 3, Ratio::from_integer(0)),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn pair_json_accepts_rational_text() {
        let p: CoprimePair = serde_json::from_str(r#"{"m":4,"n":3,"d":"1/2"}"#).unwrap();
        assert_eq!(p.d(), Ratio::new(1, 2));
        let p: CoprimePair = serde_json::from_str(r#"{"m":4,"n":3}"#).unwrap();
        assert_eq!(p.d(), Ratio::from_integer(1));
        assert!(serde_json::from_str::<CoprimePair>(r#"{"m":4,"n":6}"#).is_err());
        assert!(serde_json::from_str::<CoprimePair>(r#"{"m":4,"n":3,"x":1}"#).is_err());
    }

    #[test]
    fn merge_extended_x1_branches() {
        let m_branch = pat(1, &[0, 4, 8]);
        let n_branch = pat(2, &[0, 3, 6, 9, 12, 15, 18, 21]);
        let merged = merge_patterns(&m_branch, &n_branch).unwrap();
        assert_eq!(
            merged.pattern.instants(),
            &[0, 3, 4, 6, 8, 9, 12, 15, 18, 21]
        );
        assert_eq!(merged.overlaps, vec![0]);
        assert_eq!(merged.pattern.sampler_id(), COMBINED_SAMPLER);
    }

    #[test]
    fn merge_x2_branches_and_empty() {
        let merged = merge_patterns(&pat(1, &[]), &pat(1, &[5])).unwrap();
        assert_eq!(merged.pattern.instants(), &[5]);
        assert!(!merged.has_overlap());
        assert_eq!(merged.pattern.sampler_id(), 1);

        let merged = merge_patterns(
            &pat(1, &[12, 16, 20]),
            &pat(2, &[0, 3, 6, 9, 12, 15, 18, 21]),
        )
        .unwrap();
        assert_eq!(
            merged.pattern.instants(),
            &[0, 3, 6, 9, 12, 15, 16, 18, 20, 21]
        );
        assert_eq!(merged.overlaps, vec![12]);
    }

    #[test]
    fn merge_rejects_mismatched_grids() {
        let a = pat(1, &[0]);
        let b = SamplingPattern::new(TickGrid::new(2, 48).unwrap(), 1, 1, vec![0]).unwrap();
        assert!(matches!(
            merge_patterns(&a, &b),
            Err(Error::GridMismatch { .. })
        ));
        let c = pat(1, &[0]).with_ids(2, 1);
        assert!(matches!(
            merge_patterns(&a, &c),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn out_of_span_instant_is_rejected() {
        assert!(SamplingPattern::new(grid(4), 1, 1, vec![4]).is_err());
    }

    #[test]
    fn json_field_names() {
        let p = pat(2, &[0, 3]);
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(
            text,
            r#"{"grid":{"q":1,"span_ticks":24},"signal_id":1,"sampler_id":2,"instants":[0,3]}"#
        );
        let back: SamplingPattern = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        let unsorted =
            r#"{"grid":{"q":1,"span_ticks":24},"signal_id":1,"sampler_id":2,"instants":[3,0]}"#;
        assert!(serde_json::from_str::<SamplingPattern>(unsorted).is_err());
    }

    #[test]
    fn refine_and_common_grid() {
        let p = pat(1, &[0, 3, 21]);
        let r = p.refined(2).unwrap();
        assert_eq!(r.grid(), TickGrid::new(2, 48).unwrap());
        assert_eq!(r.instants(), &[0, 6, 42]);
        assert!(p.refined(3).unwrap().refined(2).is_err());

        let half = SamplingPattern::new(TickGrid::new(2, 48).unwrap(), 1, 2, vec![3]).unwrap();
        let common = to_common_grid(&[p.clone(), half]).unwrap();
        assert!(common.iter().all(|c| c.grid().q == 2));
        let longer = pat(1, &[0]).refined(1).unwrap();
        let other = SamplingPattern::new(grid(12), 1, 1, vec![0]).unwrap();
        assert!(to_common_grid(&[longer, other]).is_err());
    }

    #[test]
    fn ratio_text_parsing() {
        assert_eq!(parse_ratio("3/2").unwrap(), Ratio::new(3, 2));
        assert_eq!(parse_ratio("7").unwrap(), Ratio::from_integer(7));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("x").is_err());
    }

    fn arb_pattern() -> impl Strategy<Value = SamplingPattern> {
        (1u64..64).prop_flat_map(|span| {
            proptest::collection::vec(0..span, 0..32).prop_map(move |v| {
                SamplingPattern::new(TickGrid::new(1, span).unwrap(), 1, 1, v).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn indicator_round_trip(p in arb_pattern()) {
            let back = SamplingPattern::from_indicator(p.grid(), 1, 1, &p.indicator()).unwrap();
            prop_assert_eq!(back, p);
        }

        #[test]
        fn merge_commutative_and_idempotent(
            a in proptest::collection::vec(0u64..40, 0..20),
            b in proptest::collection::vec(0u64..40, 0..20),
        ) {
            let g = TickGrid::new(1, 40).unwrap();
            let pa = SamplingPattern::new(g, 1, 1, a).unwrap();
            let pb = SamplingPattern::new(g, 1, 1, b).unwrap();
            let ab = merge_patterns(&pa, &pb).unwrap();
            let ba = merge_patterns(&pb, &pa).unwrap();
            prop_assert_eq!(&ab, &ba);
            let aa = merge_patterns(&pa, &pa).unwrap();
            prop_assert_eq!(&aa.pattern, &pa);
            prop_assert_eq!(aa.overlaps.as_slice(), pa.instants());
        }
    }
}

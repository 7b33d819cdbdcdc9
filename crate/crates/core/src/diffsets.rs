//! Difference sets and weight functions (per-lag contributor counts), the
//! closed-form weight of the multiplexed second signal, and the correlogram
//! bias window.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{merge_patterns, CoprimePair, SamplingPattern, TickGrid};
use crate::patterns::{gen_extended_x1, gen_extended_x2};

/// Self weight function `w(l)` stored for `l in [0, lag_max]`; `w(-l) = w(l)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightFunction {
    pub grid: TickGrid,
    pub lag_max: u64,
    pub weights: Vec<u64>,
}

impl WeightFunction {
    /// Weight at a signed lag; zero outside the stored range.
    pub fn at(&self, lag: i64) -> u64 {
        self.weights
            .get(lag.unsigned_abs() as usize)
            .copied()
            .unwrap_or(0)
    }

    /// Sum over the symmetric range `[-lag_max, lag_max]`.
    pub fn total(&self) -> u64 {
        let tail: u64 = self.weights.iter().skip(1).sum();
        self.weights.first().copied().unwrap_or(0) + 2 * tail
    }

    /// Lags in `[-lag_max, lag_max]` with nonzero weight (the coarray).
    pub fn coarray(&self) -> Vec<i64> {
        let lag_max = self.lag_max as i64;
        (-lag_max..=lag_max).filter(|&l| self.at(l) > 0).collect()
    }

    /// Nonnegative lags with zero weight.
    pub fn holes(&self) -> Vec<u64> {
        (0..=self.lag_max)
            .filter(|&l| self.weights[l as usize] == 0)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffKind {
    SelfDiff,
    Cross,
}

/// Multiset of pairwise differences `b - a` in ticks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DifferenceSet {
    pub kind: DiffKind,
    pub entries: Vec<i64>,
    pub sources: (u32, u32),
}

impl DifferenceSet {
    /// Multiplicity of each distinct lag.
    pub fn histogram(&self) -> BTreeMap<i64, u64> {
        let mut out = BTreeMap::new();
        for &e in &self.entries {
            *out.entry(e).or_insert(0) += 1;
        }
        out
    }
}

pub fn self_differences(p: &SamplingPattern) -> DifferenceSet {
    let ks = p.instants();
    let entries = ks
        .iter()
        .flat_map(|&a| ks.iter().map(move |&b| b as i64 - a as i64))
        .collect();
    DifferenceSet {
        kind: DiffKind::SelfDiff,
        entries,
        sources: (p.sampler_id(), p.sampler_id()),
    }
}

pub fn cross_differences(a: &SamplingPattern, b: &SamplingPattern) -> Result<DifferenceSet> {
    check_grid(a, b)?;
    let entries = a
        .instants()
        .iter()
        .flat_map(|&ta| b.instants().iter().map(move |&tb| tb as i64 - ta as i64))
        .collect();
    Ok(DifferenceSet {
        kind: DiffKind::Cross,
        entries,
        sources: (a.sampler_id(), b.sampler_id()),
    })
}

fn check_grid(a: &SamplingPattern, b: &SamplingPattern) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch {
            left: a.grid().to_string(),
            right: b.grid().to_string(),
        });
    }
    Ok(())
}

/// Counts ordered pairs `(a, b)` of instants with `b - a = l` for `l in [0, lag_max]`.
pub fn weight_brute_force(p: &SamplingPattern, lag_max: u64) -> WeightFunction {
    let mut weights = vec![0u64; lag_max as usize + 1];
    let ks = p.instants();
    for (i, &a) in ks.iter().enumerate() {
        for &b in &ks[i..] {
            let lag = b - a;
            if lag > lag_max {
                break;
            }
            weights[lag as usize] += 1;
        }
    }
    WeightFunction {
        grid: p.grid(),
        lag_max,
        weights,
    }
}

/// Cross weight `w_ab(l) = #{(ta, tb) : tb - ta = l}` on `[-lag_max, lag_max]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossWeight {
    pub grid: TickGrid,
    pub lag_max: u64,
    /// Index `l + lag_max`.
    pub weights: Vec<u64>,
}

impl CrossWeight {
    pub fn at(&self, lag: i64) -> u64 {
        let idx = lag + self.lag_max as i64;
        if idx < 0 {
            return 0;
        }
        self.weights.get(idx as usize).copied().unwrap_or(0)
    }

    pub fn lags(&self) -> impl Iterator<Item = i64> {
        let l = self.lag_max as i64;
        -l..=l
    }

    /// Lags with nonzero weight.
    pub fn support(&self) -> Vec<i64> {
        self.lags().filter(|&l| self.at(l) > 0).collect()
    }
}

pub fn cross_weight(a: &SamplingPattern, b: &SamplingPattern, lag_max: u64) -> Result<CrossWeight> {
    check_grid(a, b)?;
    let width = 2 * lag_max as usize + 1;
    let mut weights = vec![0u64; width];
    let lag_max_i = lag_max as i64;
    for &ta in a.instants() {
        for &tb in b.instants() {
            let lag = tb as i64 - ta as i64;
            if lag.abs() <= lag_max_i {
                weights[(lag + lag_max_i) as usize] += 1;
            }
        }
    }
    Ok(CrossWeight {
        grid: a.grid(),
        lag_max,
        weights,
    })
}

/// The four groups of terms of the closed-form second-signal weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Z2Terms {
    /// Self lags of the `M`-spaced branch.
    pub a: i64,
    /// Self lags of the `N`-spaced branch.
    pub b: i64,
    /// Cross lags within the second co-prime period, minus the doubly counted origin.
    pub c: i64,
    /// Cross lags between the shifted `M` branch and the first-period `N` samples.
    pub d: i64,
}

impl Z2Terms {
    pub fn total(&self) -> i64 {
        self.a + self.b + self.c + self.d
    }
}

fn delta(x: i64) -> i64 {
    i64::from(x == 0)
}

/// Evaluates each term of the closed-form weight at lag `l` (in units of `d`).
pub fn z2_terms(pair: &CoprimePair, l: i64) -> Result<Z2Terms> {
    let m = pair.m() as i64;
    let n = pair.n() as i64;
    let max = 2 * m * n - 1;
    if l.abs() > max {
        return Err(Error::LagOutOfRange { lag: l, max });
    }

    let a = (-(n - 1)..=(n - 1))
        .map(|k| (n - k.abs()) * delta(l - m * k))
        .sum::<i64>()
        + ((n + 1)..=(2 * n - 1))
            .map(|k| delta(l.abs() - m * k))
            .sum::<i64>();

    let b = (-(2 * m - 1)..=(2 * m - 1))
        .map(|j| (2 * m - j.abs()) * delta(l - n * j))
        .sum::<i64>();

    let mut c = -delta(l);
    for k in (n + 1)..=(2 * n - 1) {
        for j in (m + 1)..=(2 * m - 1) {
            c += 2 * delta(l - (m * k - n * j));
        }
    }

    let mut d = 0;
    for k in (n + 1)..=(2 * n - 1) {
        for j in 1..=(m - 1) {
            d += delta(l.abs() - (m * k - n * j).abs());
        }
    }

    Ok(Z2Terms { a, b, c, d })
}

/// Closed-form contributor count of the multiplexed second signal at lag `l`.
pub fn weight_closed_form_z2(pair: &CoprimePair, l: i64) -> Result<i64> {
    Ok(z2_terms(pair, l)?.total())
}

/// Combined extended-co-prime patterns `(p1, p2)` on the `2MN` window.
pub fn extended_combined(pair: &CoprimePair) -> Result<(SamplingPattern, SamplingPattern)> {
    let (m1, n1) = gen_extended_x1(pair)?;
    let (m2, n2) = gen_extended_x2(pair)?;
    Ok((
        merge_patterns(&m1, &n1)?.pattern,
        merge_patterns(&m2, &n2)?.pattern,
    ))
}

/// Outcome of comparing the first- and second-signal weight functions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ZRelationReport {
    pub m: u64,
    pub n: u64,
    /// `z1(l) = z2(l) + 1` at `l = ±Mn`, `n in [1, N-1]`.
    pub plus_one_holds: bool,
    /// `z1(l) = z2(l) - 1` at `l = ±Mn`, `n in [N+1, 2N-1]`.
    pub minus_one_holds: bool,
    /// `z1(l) = z2(l)` at every other lag.
    pub equal_elsewhere: bool,
    pub sum_z1: u64,
    pub sum_z2: u64,
    /// Lags (symmetric range) where the two weights differ.
    pub differing_lags: Vec<i64>,
    /// Lags covered by the second signal but not the first.
    pub extra_lags: Vec<i64>,
    pub expected_extra: usize,
}

impl ZRelationReport {
    pub fn sums_equal(&self) -> bool {
        self.sum_z1 == self.sum_z2
    }

    pub fn extra_count_holds(&self) -> bool {
        self.extra_lags.len() == self.expected_extra
    }

    /// `(name, passed)` for each relation.
    pub fn checks(&self) -> [(&'static str, bool); 5] {
        [
            ("z1 = z2 + 1 at ±Mn, 1 <= n <= N-1", self.plus_one_holds),
            ("z1 = z2 - 1 at ±Mn, N+1 <= n <= 2N-1", self.minus_one_holds),
            ("z1 = z2 elsewhere", self.equal_elsewhere),
            ("sum z1 = sum z2", self.sums_equal()),
            (
                "2(N-1) extra lags covered by z2 only",
                self.extra_count_holds(),
            ),
        ]
    }

    pub fn passed(&self) -> bool {
        self.checks().iter().all(|(_, ok)| *ok)
    }
}

/// Brute-forces both weights over `[-(2MN-1), 2MN-1]` and checks how they relate.
pub fn verify_z_relations(pair: &CoprimePair) -> Result<ZRelationReport> {
    let (p1, p2) = extended_combined(pair)?;
    let lag_max = 2 * pair.period() - 1;
    let z1 = weight_brute_force(&p1, lag_max);
    let z2 = weight_brute_force(&p2, lag_max);
    let (m, n) = (pair.m() as i64, pair.n() as i64);

    let band = |l: i64| -> Option<i64> {
        if l != 0 && l % m == 0 {
            Some(l.abs() / m)
        } else {
            None
        }
    };

    let mut plus_one_holds = true;
    let mut minus_one_holds = true;
    let mut equal_elsewhere = true;
    let mut differing_lags = Vec::new();
    let mut extra_lags = Vec::new();
    let span = lag_max as i64;
    for l in -span..=span {
        let (a, b) = (z1.at(l) as i64, z2.at(l) as i64);
        if a != b {
            differing_lags.push(l);
        }
        if b > 0 && a == 0 {
            extra_lags.push(l);
        }
        match band(l) {
            Some(k) if (1..n).contains(&k) => plus_one_holds &= a == b + 1,
            Some(k) if ((n + 1)..2 * n).contains(&k) => minus_one_holds &= a == b - 1,
            _ => equal_elsewhere &= a == b,
        }
    }

    Ok(ZRelationReport {
        m: pair.m(),
        n: pair.n(),
        plus_one_holds,
        minus_one_holds,
        equal_elsewhere,
        sum_z1: z1.total(),
        sum_z2: z2.total(),
        differing_lags,
        extra_lags,
        expected_extra: 2 * (pair.n() as usize - 1),
    })
}

fn check_freqs(num_freqs: usize) -> Result<()> {
    if num_freqs == 0 {
        return Err(Error::InvalidParam("num_freqs must be >= 1".into()));
    }
    Ok(())
}

/// Bin frequencies `2 pi k / num_freqs` in radians per `d`.
pub fn frequency_grid(num_freqs: usize) -> Vec<f64> {
    (0..num_freqs)
        .map(|k| 2.0 * PI * k as f64 / num_freqs as f64)
        .collect()
}

/// Cosine transform of a symmetric weight: `B(w) = sum_l w(l) cos(w l step)`.
pub fn bias_window(w: &WeightFunction, num_freqs: usize) -> Result<Vec<f64>> {
    check_freqs(num_freqs)?;
    let step = w.grid.step();
    Ok(frequency_grid(num_freqs)
        .into_iter()
        .map(|omega| {
            let tail: f64 = w
                .weights
                .iter()
                .enumerate()
                .skip(1)
                .map(|(l, &v)| v as f64 * (omega * l as f64 * step).cos())
                .sum();
            w.weights[0] as f64 + 2.0 * tail
        })
        .collect())
}

/// Full complex DFT `sum_l w(l) exp(-i w l step)` over the symmetric lag range.
/// Its imaginary part vanishes for a symmetric weight.
pub fn bias_window_complex(w: &WeightFunction, num_freqs: usize) -> Result<Vec<Complex64>> {
    check_freqs(num_freqs)?;
    let step = w.grid.step();
    let lag_max = w.lag_max as i64;
    Ok(frequency_grid(num_freqs)
        .into_iter()
        .map(|omega| {
            (-lag_max..=lag_max)
                .map(|l| w.at(l) as f64 * Complex64::from_polar(1.0, -omega * l as f64 * step))
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::gen_tdm_two_sampler_x2;

    const Z1: [u64; 24] = [
        10, 2, 2, 7, 3, 2, 6, 1, 2, 5, 1, 1, 4, 1, 1, 3, 0, 1, 2, 0, 0, 1, 0, 0,
    ];
    const Z2: [u64; 24] = [
        10, 2, 2, 7, 2, 2, 6, 1, 1, 5, 1, 1, 4, 1, 1, 3, 1, 1, 2, 0, 1, 1, 0, 0,
    ];

    fn pair(m: u64, n: u64) -> CoprimePair {
        CoprimePair::new(m, n).unwrap()
    }

    #[test]
    fn brute_force_matches_published_weights() {
        let (p1, p2) = extended_combined(&pair(4, 3)).unwrap();
        assert_eq!(weight_brute_force(&p1, 23).weights, Z1);
        assert_eq!(weight_brute_force(&p2, 23).weights, Z2);
        assert_eq!(weight_brute_force(&p1, 23).total(), 100);
        assert_eq!(weight_brute_force(&p2, 23).total(), 100);
    }

    #[test]
    fn uniform_weight_is_triangular() {
        let p = SamplingPattern::new(TickGrid::new(1, 8).unwrap(), 1, 1, vec![0, 2, 4, 6]).unwrap();
        let w = weight_brute_force(&p, 6);
        assert_eq!(w.weights, [4, 0, 3, 0, 2, 0, 1]);
        assert_eq!(w.holes(), vec![1, 3, 5]);
        assert_eq!(w.coarray(), vec![-6, -4, -2, 0, 2, 4, 6]);
    }

    #[test]
    fn closed_form_examples() {
        let p = pair(4, 3);
        let t = z2_terms(&p, 0).unwrap();
        assert_eq!((t.a, t.b, t.c, t.d), (3, 8, -1, 0));
        assert_eq!(weight_closed_form_z2(&p, 0).unwrap(), 10);
        assert_eq!(weight_closed_form_z2(&p, 16).unwrap(), 1);
        assert_eq!(weight_closed_form_z2(&p, -16).unwrap(), 1);
        assert_eq!(weight_closed_form_z2(&p, 4).unwrap(), 2);
        assert_eq!(
            weight_closed_form_z2(&p, 24),
            Err(Error::LagOutOfRange { lag: 24, max: 23 })
        );

        let p = pair(5, 2);
        let (_, p2) = extended_combined(&p).unwrap();
        assert_eq!(
            weight_closed_form_z2(&p, 0).unwrap(),
            weight_brute_force(&p2, 0).weights[0] as i64
        );
    }

    #[test]
    fn relations_for_example_pair() {
        let r = verify_z_relations(&pair(4, 3)).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.differing_lags, vec![-20, -16, -8, -4, 4, 8, 16, 20]);
        assert_eq!(r.extra_lags, vec![-20, -16, 16, 20]);
        assert_eq!((r.sum_z1, r.sum_z2), (100, 100));
        assert!(verify_z_relations(&pair(5, 3)).unwrap().passed());
    }

    #[test]
    fn cross_weight_examples() {
        let (p1, _) = extended_combined(&pair(4, 3)).unwrap();
        let w = weight_brute_force(&p1, 23);
        let c = cross_weight(&p1, &p1, 23).unwrap();
        for l in -23..=23 {
            assert_eq!(c.at(l), w.at(l));
        }

        let (m, n) = gen_tdm_two_sampler_x2(&pair(4, 3)).unwrap();
        let c = cross_weight(&m, &n, 47).unwrap();
        assert!(!c.support().is_empty());
        assert!(c.support().iter().all(|l| l.rem_euclid(2) == 1));

        let g = TickGrid::new(1, 8).unwrap();
        let a = SamplingPattern::new(g, 1, 1, vec![0]).unwrap();
        let b = SamplingPattern::new(g, 1, 2, vec![5]).unwrap();
        let c = cross_weight(&a, &b, 7).unwrap();
        assert_eq!(c.support(), vec![5]);
        assert_eq!(c.at(5), 1);

        let other = SamplingPattern::new(TickGrid::new(2, 16).unwrap(), 1, 1, vec![0]).unwrap();
        assert!(cross_weight(&a, &other, 3).is_err());
    }

    #[test]
    fn difference_sets() {
        let (p1, _) = extended_combined(&pair(4, 3)).unwrap();
        let s = self_differences(&p1);
        assert_eq!(s.histogram()[&0], 10);
        assert_eq!(s.entries.len(), 100);
        let (m, n) = gen_extended_x2(&pair(4, 3)).unwrap();
        let c = cross_differences(&m, &n).unwrap();
        assert_eq!(c.kind, DiffKind::Cross);
        assert_eq!(c.entries.len(), 24);
    }

    #[test]
    fn bias_window_anchors() {
        let (p1, p2) = extended_combined(&pair(4, 3)).unwrap();
        let z2 = weight_brute_force(&p2, 23);
        let b = bias_window(&z2, 64).unwrap();
        assert!((b[0] - 100.0).abs() < 1e-9);

        let single = SamplingPattern::new(TickGrid::new(1, 4).unwrap(), 1, 1, vec![2]).unwrap();
        let flat = bias_window(&weight_brute_force(&single, 3), 16).unwrap();
        assert!(flat.iter().all(|v| (v - 1.0).abs() < 1e-12));

        let z1 = weight_brute_force(&p1, 23);
        let b = bias_window(&z1, 48).unwrap();
        assert!((b[0] - 100.0).abs() < 1e-9);
        for k in 1..48 {
            assert!((b[k] - b[48 - k]).abs() < 1e-9);
        }
        let c = bias_window_complex(&z1, 48).unwrap();
        for (re, z) in b.iter().zip(&c) {
            assert!(z.im.abs() < 1e-12);
            assert!((re - z.re).abs() < 1e-9);
        }
        assert!(bias_window(&z1, 0).is_err());
    }
}

//! Reference values for the `(M, N) = (4, 3)` example and the self-check
//! suite behind the `verify` subcommand.

use serde::Serialize;

use crate::diffsets::{
    bias_window, bias_window_complex, extended_combined, verify_z_relations, weight_brute_force,
    weight_closed_form_z2,
};
use crate::error::Result;
use crate::grid::CoprimePair;
use crate::patterns::ExscaConfig;
use crate::scheduler::{check_exsca_overlap, search_shift};

pub const P1: [u8; 24] = [
    1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0,
];
pub const P2: [u8; 24] = [
    1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 0, 0,
];
pub const Z1: [u64; 24] = [
    10, 2, 2, 7, 3, 2, 6, 1, 2, 5, 1, 1, 4, 1, 1, 3, 0, 1, 2, 0, 0, 1, 0, 0,
];
pub const Z2: [u64; 24] = [
    10, 2, 2, 7, 2, 2, 6, 1, 1, 5, 1, 1, 4, 1, 1, 3, 1, 1, 2, 0, 1, 1, 0, 0,
];
pub const WEIGHT_SUM: u64 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: impl Into<String>) -> CheckOutcome {
    CheckOutcome {
        name,
        passed,
        detail: detail.into(),
    }
}

fn example_pair() -> CoprimePair {
    CoprimePair::new(4, 3).expect("(4, 3) is co-prime")
}

pub fn check_patterns() -> Result<CheckOutcome> {
    let (p1, p2) = extended_combined(&example_pair())?;
    let bits = |p: &crate::grid::SamplingPattern| -> Vec<u8> {
        p.indicator().into_iter().map(u8::from).collect()
    };
    let ok = bits(&p1) == P1 && bits(&p2) == P2;
    Ok(outcome(
        "golden patterns p1, p2",
        ok,
        format!("p1={:?}", bits(&p1)),
    ))
}

pub fn check_weights() -> Result<CheckOutcome> {
    let (p1, p2) = extended_combined(&example_pair())?;
    let z1 = weight_brute_force(&p1, 23);
    let z2 = weight_brute_force(&p2, 23);
    let ok = z1.weights == Z1
        && z2.weights == Z2
        && z1.total() == WEIGHT_SUM
        && z2.total() == WEIGHT_SUM;
    Ok(outcome(
        "golden weights z1, z2 (sum = 100)",
        ok,
        format!("sum z1={}, sum z2={}", z1.total(), z2.total()),
    ))
}

/// Closed form against brute force at every lag for co-prime pairs in `[2, max]²`.
pub fn check_closed_form(max: u64) -> Result<CheckOutcome> {
    let mut pairs = 0;
    let mut mismatches = Vec::new();
    for m in 2..=max {
        for n in 2..=max {
            let Ok(pair) = CoprimePair::new(m, n) else {
                continue;
            };
            pairs += 1;
            let (_, p2) = extended_combined(&pair)?;
            let lag_max = 2 * pair.period() - 1;
            let w = weight_brute_force(&p2, lag_max);
            let l_max = lag_max as i64;
            for l in -l_max..=l_max {
                let cf = weight_closed_form_z2(&pair, l)?;
                if cf != w.at(l) as i64 {
                    mismatches.push(format!("({m},{n}) l={l}: closed={cf} brute={}", w.at(l)));
                }
            }
        }
    }
    Ok(outcome(
        "closed-form z2 equals brute force",
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("{pairs} pairs, every lag")
        } else {
            mismatches.join("; ")
        },
    ))
}

pub fn check_relations() -> Result<CheckOutcome> {
    let r = verify_z_relations(&example_pair())?;
    let ok = r.passed()
        && r.differing_lags == [-20, -16, -8, -4, 4, 8, 16, 20]
        && r.extra_lags == [-20, -16, 16, 20];
    Ok(outcome(
        "z1/z2 lag relations",
        ok,
        format!("differ at {:?}, extra {:?}", r.differing_lags, r.extra_lags),
    ))
}

pub fn check_exsca() -> Result<CheckOutcome> {
    let pair = example_pair();
    let cfg = ExscaConfig::new(pair, 2, 1, 0, 1)?;
    let (s21, s22) = (cfg.s21()?, cfg.s22()?);
    let report = check_exsca_overlap(&cfg, 48)?;
    let x2 = &report.per_signal[1].instants;
    let search = search_shift(&pair, 2, 48)?;
    let one_d = search.q as u64;
    let excluded = search
        .candidates
        .iter()
        .any(|c| c.s12 == one_d && !c.overlap_free)
        && search.best.s12 != one_d;
    let ok = s21 == 4 && s22 == 4 && x2.contains(&4) && excluded;
    Ok(outcome(
        "ExSCA shifts and overlap",
        ok,
        format!(
            "s21={s21} s22={s22} x2 overlap={x2:?} best s12={} d",
            search.best_s12_in_d()
        ),
    ))
}

pub fn check_bias_window() -> Result<CheckOutcome> {
    let (_, p2) = extended_combined(&example_pair())?;
    let z2 = weight_brute_force(&p2, 23);
    let b = bias_window(&z2, 96)?;
    let c = bias_window_complex(&z2, 96)?;
    let rel = (b[0] - WEIGHT_SUM as f64).abs() / WEIGHT_SUM as f64;
    let imag = c.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    Ok(outcome(
        "bias window B(0) = sum z",
        rel <= 1e-9 && imag < 1e-12,
        format!("B(0)={} max|Im|={imag:e}", b[0]),
    ))
}

/// Every self-check in a fixed order.
pub fn run_checks() -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_patterns()?,
        check_weights()?,
        check_closed_form(12)?,
        check_relations()?,
        check_exsca()?,
        check_bias_window()?,
    ])
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_checks().unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}

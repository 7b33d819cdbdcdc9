use coprime_tdm::diffsets::extended_combined;
use coprime_tdm::estimator::{
    acquire, correlogram_psd, estimate_autocorr, estimate_crosscorr, AcquisitionRecord, Process,
    SignalModel, Sinusoid,
};
use coprime_tdm::patterns::gen_tdm_two_sampler_x2;
use coprime_tdm::{merge_patterns, CoprimePair};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pair() -> CoprimePair {
    CoprimePair::new(4, 3).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn ar1_estimate_tracks_pole(pole in 0.0..0.8f64, seed in any::<u64>()) {
        let (_, p2) = extended_combined(&pair()).unwrap();
        let model = SignalModel::new(Process::Ar1 { pole, variance: 1.0 }, seed);
        let rec = acquire(&model, &p2, 3000).unwrap();
        let ac = estimate_autocorr(&rec, 23);
        for e in &ac.lags {
            let v = e.estimate.unwrap();
            prop_assert!((v - pole.powi(e.lag as i32)).abs() < 0.1, "lag {} = {v}", e.lag);
        }
    }

    #[test]
    fn white_noise_variance_is_recovered(variance in 0.25..4.0f64, seed in any::<u64>()) {
        let (p1, _) = extended_combined(&pair()).unwrap();
        let model = SignalModel::new(Process::WhiteNoise { variance }, seed);
        let rec = acquire(&model, &p1, 2000).unwrap();
        let r0 = estimate_autocorr(&rec, 0).lags[0].estimate.unwrap();
        prop_assert!((r0 / variance - 1.0).abs() < 0.05);
    }
}

/// Half-grid records of `x` (signal 1) and of `x` delayed by `delay` ticks (signal 2).
fn delayed_records(
    delay: usize,
    periods: u64,
    seed: u64,
) -> (AcquisitionRecord, AcquisitionRecord) {
    let (m1, n1, m2, n2) = {
        let layout = coprime_tdm::Layout::new(pair(), coprime_tdm::Scheme::ExtendedTdm2Sampler);
        let b1 = layout.branches(1).unwrap();
        let b2 = layout.branches(2).unwrap();
        (b1[0].clone(), b1[1].clone(), b2[0].clone(), b2[1].clone())
    };
    let p1 = merge_patterns(&m1, &n1).unwrap().pattern;
    let p2 = merge_patterns(&m2, &n2).unwrap().pattern;
    let len = (p1.grid().span_ticks * periods) as usize;
    let white = Process::WhiteNoise { variance: 1.0 };
    let x = white.synthesize(0.5, len + delay, &mut ChaCha8Rng::seed_from_u64(seed));
    let r1 = AcquisitionRecord::from_dense(&x[delay..], &p1, periods).unwrap();
    let r2 = AcquisitionRecord::from_dense(&x[..len], &p2, periods).unwrap();
    (r1, r2)
}

#[test]
fn crosscorr_peaks_at_half_grid_delay() {
    let (_, x2_n) = gen_tdm_two_sampler_x2(&pair()).unwrap();
    assert_eq!(x2_n.grid().q, 2);
    // Signal 1 leads signal 2 by 3/2 d.
    let (r1, r2) = delayed_records(3, 2000, 11);
    let cc = estimate_crosscorr(&r1, &r2, 12).unwrap();
    let peak = cc.peak().unwrap();
    assert_eq!(peak.lag, 3);
    assert!((peak.estimate.unwrap() - 1.0).abs() < 0.1);
}

#[test]
fn independent_signals_are_uncorrelated() {
    let (p1, p2) = extended_combined(&pair()).unwrap();
    let a = acquire(
        &SignalModel::new(Process::WhiteNoise { variance: 1.0 }, 1),
        &p1,
        2000,
    )
    .unwrap();
    let b = acquire(
        &SignalModel::new(Process::WhiteNoise { variance: 1.0 }, 2),
        &p2.with_ids(1, 0),
        2000,
    )
    .unwrap();
    let cc = estimate_crosscorr(&a, &b, 23).unwrap();
    for e in &cc.lags {
        if let Some(v) = e.estimate {
            assert!(v.abs() < 0.1, "lag {} = {v}", e.lag);
        }
    }
}

#[test]
fn sinusoid_peak_within_one_bin() {
    let (_, p2) = extended_combined(&pair()).unwrap();
    let num_freqs = 64;
    for (k, f) in [(5usize, 5.0 / 64.0), (12, 12.3 / 64.0)] {
        let model = SignalModel::new(
            Process::SinusoidsPlusNoise {
                components: vec![Sinusoid {
                    amplitude: 1.0,
                    frequency: f,
                }],
                noise_variance: 0.01,
            },
            7,
        );
        let rec = acquire(&model, &p2, 2000).unwrap();
        let spec = correlogram_psd(&estimate_autocorr(&rec, 23), num_freqs).unwrap();
        let half = &spec.values[..num_freqs / 2];
        let peak = (0..half.len())
            .max_by(|&a, &b| half[a].partial_cmp(&half[b]).unwrap())
            .unwrap();
        assert!(peak.abs_diff(k) <= 1, "f = {f}: peak bin {peak}");
        assert!(!spec.has_undefined());
    }
}

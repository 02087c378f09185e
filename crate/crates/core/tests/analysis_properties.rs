//! Estimator identities, fringe-fit calibration and a synthetic-stream generator oracle.

mod common;

use afc_link::analysis::estimators::{
    backtrace, concurrence, density_matrix, effective_fidelity, effective_fidelity_matrix, wootters_concurrence,
};
use afc_link::analysis::{count_coincidences, estimate_probabilities, fit_fringe_counts, CoincidenceSettings, JointProbabilities};
use afc_link::config::{validate, HeraldPort};
use afc_link::link::predict_stats;
use afc_link::sim::{Channel, EventRecord, EventStream, StreamHeader, FORMAT_VERSION};
use afc_link::stats::Estimate;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

/// Normalized probabilities from four positive weights.
fn probabilities() -> impl Strategy<Value = JointProbabilities> {
    (0.0f64..1.0, 1e-6f64..1.0, 1e-6f64..1.0, 0.0f64..1.0).prop_map(|(a, b, c, d)| {
        let s = a + b + c + d;
        JointProbabilities::new(a / s, b / s, c / s, d / s)
    })
}

/// Probabilities and a visibility whose X-form state is positive semidefinite.
fn valid_inputs() -> impl Strategy<Value = (JointProbabilities, f64)> {
    (probabilities(), 0.0f64..=1.0).prop_map(|(p, u)| {
        let v_max = (2.0 * (p.p01 * p.p10).sqrt() / p.singles()).min(1.0);
        (p, u * v_max)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn fidelity_routes_agree((p, v) in valid_inputs()) {
        let closed = effective_fidelity(&p, &JointProbabilities::default(), Estimate::exact(v)).unwrap().value;
        let matrix = effective_fidelity_matrix(&p, v).unwrap();
        prop_assert!((closed - matrix).abs() < 1e-9, "{} vs {}", closed, matrix);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn wootters_matches_closed_form((p, v) in valid_inputs(), phase in -3.2f64..3.2) {
        let c = concurrence(&p, &JointProbabilities::default(), Estimate::exact(v));
        let (rho, clipped) = density_matrix(&p, c.d, phase);
        prop_assert!(!clipped || c.d * c.d >= p.p01 * p.p10 * (1.0 - 1e-12));
        prop_assert!((wootters_concurrence(&rho) - c.value).abs() < 1e-9);
    }

    #[test]
    fn concurrence_is_symmetric_under_arm_exchange(
        (p, v) in valid_inputs(),
        ea in 0.05f64..=1.0,
        eb in 0.05f64..=1.0,
    ) {
        let zero = JointProbabilities::default();
        let c = concurrence(&p, &zero, Estimate::exact(v)).value;
        let swapped = concurrence(&p.swapped(), &zero, Estimate::exact(v)).value;
        prop_assert!((c - swapped).abs() < 1e-15);
        let one = backtrace(&p, v, ea, eb);
        let other = backtrace(&p.swapped(), v, eb, ea);
        match (one, other) {
            (Ok(a), Ok(b)) => prop_assert!((a.concurrence - b.concurrence).abs() < 1e-12),
            (a, b) => prop_assert_eq!(a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn backtrace_at_unit_efficiency_is_identity((p, v) in valid_inputs()) {
        let b = backtrace(&p, v, 1.0, 1.0).unwrap();
        let c = concurrence(&p, &JointProbabilities::default(), Estimate::exact(v)).value;
        prop_assert!((b.probabilities.p01 - p.p01).abs() < 1e-15);
        prop_assert!((b.probabilities.p10 - p.p10).abs() < 1e-15);
        prop_assert!((b.probabilities.p11 - p.p11).abs() < 1e-15);
        prop_assert!((b.probabilities.p00 - p.p00).abs() < 1e-12);
        prop_assert!((b.concurrence - c).abs() < 1e-12);
    }
}

#[test]
fn fringe_pulls_have_unit_variance() {
    let v_true = 0.84;
    let phases: Vec<f64> = (0..8).map(|k| k as f64 * std::f64::consts::FRAC_PI_4).collect();
    let exposure = vec![1.0; phases.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pulls: Vec<f64> = (0..1000)
        .map(|_| {
            let counts: Vec<f64> = phases
                .iter()
                .map(|t| Poisson::new(400.0 * (1.0 + v_true * t.sin())).unwrap().sample(&mut rng))
                .collect();
            fit_fringe_counts(&phases, &counts, &exposure).unwrap().visibility.pull(v_true)
        })
        .collect();
    let n = pulls.len() as f64;
    let mean = pulls.iter().sum::<f64>() / n;
    let var = pulls.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((var - 1.0).abs() < 0.1, "pull variance {var}");
    assert!(mean.abs() < 0.15, "pull mean {mean}");
}

const SPACING_PS: u64 = 1_000_000;
const DELAY_PS: u64 = 300_000;

fn synthetic_header(heralds: u64) -> StreamHeader {
    StreamHeader {
        version: FORMAT_VERSION,
        config_digest: [0; 32],
        seed: 0,
        duration_ps: heralds * SPACING_PS,
        lock_period_ps: 0,
        measure_period_ps: heralds * SPACING_PS,
        trial_length_ps: SPACING_PS,
        mode_duration_ps: SPACING_PS,
        modes_per_trial: 1,
        readout_delay_ps: DELAY_PS,
        coincidence_window_ps: 100_000,
        herald_port: HeraldPort::Plus,
        fringe_phases: vec![],
    }
}

/// A stream whose readout pattern after every herald is drawn from `p`.
fn generate(p: &JointProbabilities, heralds: u64, seed: u64) -> EventStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let cdf = [p.p00, p.p00 + p.p01, p.p00 + p.p01 + p.p10];
    for i in 0..heralds {
        let t = i * SPACING_PS;
        let ev = |time_ps, channel| EventRecord { time_ps, channel, trial_index: i as u32, mode_index: 0 };
        records.push(ev(t, Channel::HeraldPlus));
        let u: f64 = rng.random();
        let pattern = cdf.iter().filter(|&&c| u >= c).count();
        // a click just outside the window never counts
        if rng.random::<f64>() < 0.05 {
            records.push(ev(t + DELAY_PS + 60_000, Channel::Readout1));
        }
        let jitter = rng.random_range(0..40_000);
        if pattern & 2 != 0 {
            records.push(ev(t + DELAY_PS - 20_000 + jitter, Channel::Readout1));
        }
        if pattern & 1 != 0 {
            records.push(ev(t + DELAY_PS - 20_000 + jitter, Channel::Readout2));
        }
    }
    records.sort_by_key(|r| r.time_ps);
    EventStream { header: synthetic_header(heralds), records }
}

fn check_generator(p: &JointProbabilities, heralds: u64, seed: u64) {
    let s = generate(p, heralds, seed);
    let stats = count_coincidences(&s, &CoincidenceSettings::from_stream(&s)).unwrap();
    assert_eq!(stats.herald_count, heralds);
    let (est, err) = estimate_probabilities(&stats, false).unwrap();
    let h = heralds as f64;
    let truth = [p.p00, p.p01, p.p10, p.p11];
    let got = [est.p00, est.p01, est.p10, est.p11];
    let errs = [err.p00, err.p01, err.p10, err.p11];
    for k in 0..4 {
        let sigma = (truth[k] * (1.0 - truth[k]) / h).sqrt().max(1.0 / h);
        assert!((got[k] - truth[k]).abs() < 3.0 * sigma, "p{k}: {} vs {}", got[k], truth[k]);
        assert!(errs[k] > 0.0);
    }
}

#[test]
fn synthetic_stream_recovers_generating_probabilities() {
    check_generator(&JointProbabilities::new(0.62, 0.15, 0.13, 0.10), 200_000, 3);
}

#[test]
fn synthetic_stream_from_prediction() {
    let mut c = common::shipped("fig2.cfg");
    c.source_a.mean_pair_probability_per_mode = 0.04;
    c.source_b.mean_pair_probability_per_mode = 0.04;
    let p = predict_stats(&validate(c).unwrap()).unwrap().probabilities;
    check_generator(&p, 400_000, 5);
}

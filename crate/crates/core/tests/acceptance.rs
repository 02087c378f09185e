//! Acceptance gate: one PASS/FAIL line per criterion, tolerances pinned below.
//!
//! Runs without the libtest harness so the lines are always printed; the process
//! exits non-zero when any criterion fails.

mod common;

use afc_link::analysis::estimators::effective_fidelity_matrix;
use afc_link::analysis::{count_coincidences, tomography, CoincidenceSettings, CoincidenceStats};
use afc_link::analysis::estimators::calibrate_backtrace_efficiency;
use afc_link::config::{db_to_transmission, validate, DetectorParams, HeraldPort, LinkConfig, SourceStatistics, ValidatedConfig};
use afc_link::fock::{BosonicState, C64};
use afc_link::link::predict_stats;
use afc_link::multimode::{rate_vs_modes, AcceptancePolicy};
use afc_link::sim::simulate;
use afc_link::stats::{chi2_p_value, weighted_mean_chi2, Estimate};
use afc_link::Tomography;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2021;

// headline statistics
const FIG2_DURATION: f64 = 60.0;
const V_TARGET: f64 = 0.84;
const V_TOL: f64 = 0.03;
const H2C_TARGET: f64 = 0.036;
const H2C_TOL: f64 = 0.012;
const C_TARGET: f64 = 1.15e-2;
const C_REL_TOL: f64 = 0.30;
const RATE_TARGET: f64 = 1430.0;
const RATE_REL_TOL: f64 = 0.05;

// effective fidelity
const F_TARGET: f64 = 0.92;
const F_TOL: f64 = 0.02;
const ROUTE_TOL: f64 = 1e-9;

// idler-loss sweep
const SWEEP_DB: [f64; 8] = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 6.5];
const SWEEP_DURATION: f64 = 600.0;
const ANALYTIC_FLAT_TOL: f64 = 1e-10;
const MIN_P_VALUE: f64 = 0.01;
const SIGMAS: f64 = 3.0;

// back-trace
const BACKTRACED_C: f64 = 7.3e-2;
const BACKTRACE_TOL: f64 = 1e-9;

// multimode
const FIG4_DURATION: f64 = 1200.0;
const SLOPE_REL_TOL: f64 = 0.05;
const MIN_R_SQUARED: f64 = 0.99;

// cross-validation
const RANDOM_CONFIGS: usize = 20;
const HERALDS_PER_CONFIG: f64 = 1e6;
const RANDOM_STATES: usize = 1000;
const FOCK_TOL: f64 = 1e-10;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn cfg(name: &str) -> ValidatedConfig {
    validate(common::shipped(name)).expect("shipped configuration is valid")
}

fn analyze(cfg: &ValidatedConfig, seed: u64, duration: f64) -> (CoincidenceStats, Tomography) {
    let s = simulate(cfg, seed, duration).expect("simulation runs");
    let stats = count_coincidences(&s, &CoincidenceSettings::from_timing(&s, &cfg.timing)).expect("stream is ordered");
    let t = tomography(&stats, &cfg.tomography, false).expect("enough heralds");
    (stats, t)
}

fn herald_rate(stats: &CoincidenceStats) -> Estimate {
    let n = stats.total_heralds as f64;
    Estimate::new(n / stats.duration, n.sqrt() / stats.duration)
}

fn headline(stats: &CoincidenceStats, t: &Tomography) -> Verdict {
    let v = t.visibility.value;
    let h2c = t.h2c.map(|h| h.value);
    let c = t.concurrence.value;
    let rate = herald_rate(stats).value;
    let ok_v = (v - V_TARGET).abs() <= V_TOL;
    let ok_h = h2c.is_some_and(|h| (h - H2C_TARGET).abs() <= H2C_TOL);
    let ok_c = (c - C_TARGET).abs() <= C_REL_TOL * C_TARGET;
    let ok_r = (rate - RATE_TARGET).abs() <= RATE_REL_TOL * RATE_TARGET;
    verdict(
        ok_v && ok_h && ok_c && ok_r,
        format!(
            "V = {:.4} ± {:.4} [{}], h2c = {} [{}], C = {:.3e} ± {:.1e} [{}], rate = {:.1} Hz [{}], counts n00..n11 = {:?} of {} direct heralds",
            v,
            t.visibility.error,
            mark(ok_v),
            t.h2c.map_or("n/a".into(), |h| format!("{:.4} ± {:.4}", h.value, h.error)),
            mark(ok_h),
            c,
            t.concurrence.error,
            mark(ok_c),
            rate,
            mark(ok_r),
            stats.counts(),
            stats.herald_count,
        ),
    )
}

fn fidelity(t: &Tomography) -> Verdict {
    let Some(f) = t.effective_fidelity else {
        return verdict(false, "effective fidelity not estimable".into());
    };
    let Some(matrix) = t.effective_fidelity_matrix else {
        return verdict(false, "matrix route not estimable".into());
    };
    let ok_f = (f.value - F_TARGET).abs() <= F_TOL;
    let ok_routes = (f.value - matrix).abs() <= ROUTE_TOL;
    // the matrix route is also recomputed here from the reported inputs
    let p = t.backtraced.map(|b| b.probabilities).unwrap_or(t.probabilities);
    let again = effective_fidelity_matrix(&p, t.visibility.value).unwrap_or(f64::NAN);
    let ok_again = (f.value - again).abs() <= ROUTE_TOL;
    verdict(
        ok_f && ok_routes && ok_again,
        format!(
            "F_eff = {:.4} ± {:.4} [{}], closed form − matrix route = {:.2e} [{}]",
            f.value,
            f.error,
            mark(ok_f),
            f.value - matrix,
            mark(ok_routes && ok_again)
        ),
    )
}

fn idler_loss_point(base: &LinkConfig, db: f64) -> ValidatedConfig {
    let mut c = base.clone();
    for ch in [&mut c.idler_channel_a, &mut c.idler_channel_b] {
        ch.transmission = Some(ch.transmission() * db_to_transmission(db));
        ch.transmission_db = None;
    }
    validate(c).expect("sweep point is valid")
}

fn idler_sweep() -> Verdict {
    let base = common::shipped("fig3a.cfg");
    let points: Vec<ValidatedConfig> = SWEEP_DB.iter().map(|&db| idler_loss_point(&base, db)).collect();
    let analytic: Vec<f64> = points.iter().map(|c| predict_stats(c).expect("prediction").concurrence).collect();
    let spread = analytic.iter().map(|c| (c - analytic[0]).abs()).fold(0.0, f64::max);
    let ok_analytic = spread <= ANALYTIC_FLAT_TOL;

    let runs: Vec<(CoincidenceStats, Tomography)> = points
        .iter()
        .enumerate()
        .map(|(i, c)| analyze(c, SEED + i as u64, SWEEP_DURATION))
        .collect();
    let simulated: Vec<Estimate> = runs.iter().map(|(_, t)| t.concurrence).collect();
    let (mean, chi2, dof) = weighted_mean_chi2(&simulated);
    let p = chi2_p_value(chi2, dof);
    let ok_flat = p > MIN_P_VALUE;

    let (r0, r1) = (herald_rate(&runs[0].0), herald_rate(&runs[runs.len() - 1].0));
    let ratio = r1.value / r0.value;
    let ratio_err = ratio * ((r0.error / r0.value).powi(2) + (r1.error / r1.value).powi(2)).sqrt();
    let want = 10f64.powf(-SWEEP_DB[SWEEP_DB.len() - 1] / 10.0);
    let ok_ratio = (ratio - want).abs() <= SIGMAS * ratio_err;
    verdict(
        ok_analytic && ok_flat && ok_ratio,
        format!(
            "analytic C spread = {:.3e} (C from {:.6e} to {:.6e}) [{}], simulated C mean = {:.3e} ± {:.1e}, χ² p = {:.3} [{}], rate ratio = {:.4} ± {:.4} vs {:.4} [{}]",
            spread,
            analytic[0],
            analytic[analytic.len() - 1],
            mark(ok_analytic),
            mean.value,
            mean.error,
            p,
            mark(ok_flat),
            ratio,
            ratio_err,
            want,
            mark(ok_ratio)
        ),
    )
}

fn backtrace_ratio() -> Verdict {
    let c = cfg("fig2.cfg");
    let p = predict_stats(&c).expect("prediction");
    let want = BACKTRACED_C / C_TARGET;
    let Some(back) = p.backtraced_concurrence else {
        return verdict(false, "back-trace failed".into());
    };
    let ratio = back / p.concurrence;
    let eta = calibrate_backtrace_efficiency(&p.probabilities, p.visibility, want).ok();
    verdict(
        (ratio - want).abs() <= BACKTRACE_TOL,
        format!(
            "C̃/C = {ratio:.12} vs {want:.12} (|Δ| = {:.2e}); configured η = {}, solved η = {}",
            (ratio - want).abs(),
            c.tomography.backtrace_efficiency_a,
            eta.map_or("n/a".into(), |e| format!("{e:.14}"))
        ),
    )
}

fn multimode() -> Verdict {
    let c = cfg("fig4.cfg");
    let s = simulate(&c, SEED, FIG4_DURATION).expect("simulation runs");
    let r = rate_vs_modes(&s, &c.timing, &c.tomography, AcceptancePolicy::FirstPerTrial).expect("heralds present");
    let fit = r.rate_fit();
    let rate1 = r.entries[0].heralding_rate;
    let ok_slope = (fit.slope / rate1 - 1.0).abs() <= SLOPE_REL_TOL;
    let ok_r2 = fit.r_squared > MIN_R_SQUARED;
    let (mean, chi2, p) = r.concurrence_consistency();
    let ok_c = p > MIN_P_VALUE;
    verdict(
        ok_slope && ok_r2 && ok_c,
        format!(
            "{} modes, slope = {:.3} Hz/mode vs rate(1) = {:.3} Hz ({:+.2} %) [{}], R² = {:.5} [{}], C mean = {:.3e}, χ² = {:.2}, p = {:.3} [{}]",
            r.entries.len(),
            fit.slope,
            rate1,
            100.0 * (fit.slope / rate1 - 1.0),
            mark(ok_slope),
            fit.r_squared,
            mark(ok_r2),
            mean.value,
            chi2,
            p,
            mark(ok_c)
        ),
    )
}

fn random_config(rng: &mut ChaCha8Rng) -> LinkConfig {
    let mut c = common::shipped("fig2.cfg");
    let mut u = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    c.source_a.mean_pair_probability_per_mode = u(0.003, 0.03);
    c.source_b.mean_pair_probability_per_mode = u(0.003, 0.03);
    c.idler_channel_a.transmission = Some(u(0.1, 0.6));
    c.idler_channel_b.transmission = Some(u(0.1, 0.6));
    c.idler_channel_a.phase_diffusion = u(0.0, 3.0);
    c.idler_channel_b.phase_diffusion = u(0.0, 3.0);
    c.signal_channel_a.transmission = Some(u(0.2, 0.9));
    c.signal_channel_b.transmission = Some(u(0.2, 0.9));
    c.signal_channel_a.phase_diffusion = u(0.0, 10.0);
    c.signal_channel_b.phase_diffusion = u(0.0, 10.0);
    for m in [&mut c.memory_a, &mut c.memory_b] {
        m.efficiency_at_tau = Some(u(0.05, 0.5));
        m.echo_center_offset = u(-40e-9, 40e-9);
        m.echo_rms_width = u(60e-9, 150e-9);
    }
    for d in [&mut c.herald_detector_plus, &mut c.herald_detector_minus, &mut c.readout_detector_1, &mut c.readout_detector_2] {
        *d = DetectorParams { efficiency: u(0.3, 0.9), dark_click_probability_per_window: u(0.0, 1e-4), dead_time: 0.0 };
    }
    c.timing.lock_residual = u(0.0, 0.2);
    c.link.idler_mode_overlap = u(0.7, 1.0);
    c.link.herald_port = if u(0.0, 1.0) < 0.5 { HeraldPort::Plus } else { HeraldPort::Minus };
    c.link.source_statistics = if u(0.0, 1.0) < 0.5 { SourceStatistics::Thermal } else { SourceStatistics::Poissonian };
    c
}

struct Comparison {
    failures: Vec<String>,
    worst_pull: f64,
    checks: usize,
}

impl Comparison {
    fn check(&mut self, label: String, got: f64, want: f64, sigma: f64) {
        self.checks += 1;
        let pull = if sigma > 0.0 { (got - want) / sigma } else if got == want { 0.0 } else { f64::INFINITY };
        self.worst_pull = self.worst_pull.max(pull.abs());
        if pull.abs() > SIGMAS {
            self.failures.push(format!("{label}: {got:.4e} vs {want:.4e} ({pull:+.2}σ)"));
        }
    }
}

fn cross_validation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut cmp = Comparison { failures: Vec::new(), worst_pull: 0.0, checks: 0 };
    let mut heralds = Vec::new();
    for i in 0..RANDOM_CONFIGS {
        let c = validate(random_config(&mut rng)).expect("random configuration is valid");
        let pred = predict_stats(&c).expect("prediction");
        let duration = HERALDS_PER_CONFIG / pred.herald_rate;
        let (stats, t) = analyze(&c, SEED + 100 + i as u64, duration);
        heralds.push(stats.total_heralds);
        let h = stats.herald_count as f64;
        let p = &pred.probabilities;
        for (k, (n, want)) in stats.counts().iter().zip([p.p00, p.p01, p.p10, p.p11]).enumerate() {
            let sigma = (want * (1.0 - want) / h).sqrt();
            cmp.check(format!("config {i} p{:02b}", k), *n as f64 / h, want, sigma);
        }
        let outputs = [pred.fringe_output_1.visibility(), pred.fringe_output_2.visibility()];
        for (o, (fit, want)) in t.fringe_fits.iter().zip(outputs).enumerate() {
            cmp.check(format!("config {i} V(out{})", o + 1), fit.visibility.value, want, fit.visibility.error);
        }
        if let (Some(h2c), Some(want)) = (t.h2c, pred.h2c) {
            cmp.check(format!("config {i} h2c"), h2c.value, want, h2c.error);
        }
    }
    let (fock_ok, fock_detail) = fock_suite();
    let min_heralds = heralds.iter().min().copied().unwrap_or(0);
    let enough = min_heralds as f64 >= HERALDS_PER_CONFIG * 0.99;
    verdict(
        cmp.failures.is_empty() && fock_ok && enough,
        format!(
            "{RANDOM_CONFIGS} configs, ≥ {min_heralds} heralds each, {} comparisons, worst pull {:.2}σ, {} beyond {SIGMAS}σ{} [{}]; {fock_detail} [{}]",
            cmp.checks,
            cmp.worst_pull,
            cmp.failures.len(),
            if cmp.failures.is_empty() { String::new() } else { format!(" ({})", cmp.failures.join("; ")) },
            mark(cmp.failures.is_empty() && enough),
            mark(fock_ok)
        ),
    )
}

fn random_state(dims: &[usize], rng: &mut ChaCha8Rng) -> BosonicState {
    let d: usize = dims.iter().product();
    let g = DMatrix::from_fn(d, d, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    BosonicState::from_matrix(dims, rho / tr).expect("valid shape")
}

fn fock_suite() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_trace = 0.0f64;
    let mut worst_herm = 0.0f64;
    let mut worst_commute = 0.0f64;
    for _ in 0..RANDOM_STATES {
        let s = random_state(&[3, 3], &mut rng);
        let (eta, phi, r) = (rng.random::<f64>(), 6.0 * rng.random::<f64>(), rng.random::<f64>());
        let det = DetectorParams { efficiency: 0.05 + 0.95 * rng.random::<f64>(), dark_click_probability_per_window: 0.01 * rng.random::<f64>(), dead_time: 0.0 };
        let out = s.detect_threshold(0, &det).expect("valid mode");
        let mut states = vec![
            s.apply_loss(0, eta).expect("valid loss"),
            s.apply_phase(1, phi).expect("valid mode"),
            s.apply_beam_splitter(0, 1, r, phi).expect("valid splitter"),
        ];
        states.extend(out.conditional_state_click);
        states.extend(out.conditional_state_no_click);
        for x in &states {
            worst_trace = worst_trace.max((x.trace_re() - 1.0).abs());
            worst_herm = worst_herm.max(x.hermiticity_error());
        }
        let t = random_state(&[3, 3, 3], &mut rng);
        let (e1, e2) = (rng.random::<f64>(), rng.random::<f64>());
        let ab = t.apply_loss(0, e1).and_then(|x| x.apply_loss(2, e2)).expect("valid loss");
        let ba = t.apply_loss(2, e2).and_then(|x| x.apply_loss(0, e1)).expect("valid loss");
        worst_commute = worst_commute.max(ab.distance(&ba));
    }
    let hom = BosonicState::fock(&[2, 2], &[1, 1])
        .and_then(|s| s.apply_beam_splitter(0, 1, 0.5, 0.0))
        .map(|s| s.element(&[1, 1], &[1, 1]).norm())
        .unwrap_or(f64::NAN);
    let ok = worst_trace <= FOCK_TOL && worst_herm <= FOCK_TOL && worst_commute <= FOCK_TOL && hom <= FOCK_TOL;
    (
        ok,
        format!(
            "Fock suite on {RANDOM_STATES} random states: trace {worst_trace:.1e}, Hermiticity {worst_herm:.1e}, loss commutation {worst_commute:.1e}, HOM coincidence {hom:.1e}"
        ),
    )
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "out"
    }
}

fn main() {
    let start = std::time::Instant::now();
    let fig2 = cfg("fig2.cfg");
    let (stats, t) = analyze(&fig2, SEED, FIG2_DURATION);
    let results = [
        ("1", "fig2 headline statistics", Some(headline(&stats, &t))),
        ("2", "effective fidelity", Some(fidelity(&t))),
        ("3", "idler-loss invariance", Some(idler_sweep())),
        ("4", "back-traced concurrence", Some(backtrace_ratio())),
        ("5", "multimode linearity", Some(multimode())),
        ("6", "engine cross-validation", Some(cross_validation())),
        ("7", "hardware-only numbers", None),
    ];
    let mut failed = 0;
    for (id, name, v) in &results {
        match v {
            Some(v) => {
                if !v.pass {
                    failed += 1;
                }
                println!("criterion {id} ({name}): {}  {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
            }
            None => println!(
                "criterion {id} ({name}): N/A  excluded; per-τ AFC efficiencies and lock residuals are configuration inputs checked by the property suites"
            ),
        }
    }
    println!("acceptance: {failed} failing criteria, {:.1} s", start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}

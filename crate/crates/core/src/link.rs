//! Exact end-to-end model of the link: two pair sources, idler interference,
//! heralding, and memory readout, evaluated in the truncated Fock space.
//!
//! Mode order of the pre-herald state is `[memory A, idler A, memory B, idler B]`.
//! After heralding only the two memory modes remain.

use serde::{Deserialize, Serialize};

use crate::analysis::estimators::{self, JointProbabilities};
use crate::config::{DetectorParams, HeraldPort, LinkConfig, TimingConfig, ValidatedConfig};
use crate::error::{Error, Result};
use crate::fock::{tmsv_with, BosonicState};
use crate::stats::{gaussian_mass, Estimate, TrigSeries};

pub const MEMORY_A: usize = 0;
pub const IDLER_A: usize = 1;
pub const MEMORY_B: usize = 2;
pub const IDLER_B: usize = 3;

#[derive(Debug, Clone)]
pub struct HeraldOutcome {
    pub herald_probability_per_mode: f64,
    /// Two modes: `[memory A, memory B]`.
    pub conditional_memory_state: BosonicState,
    pub heralding_detector: HeraldPort,
}

/// One branch of the joint outcome of both herald detectors.
#[derive(Debug, Clone)]
pub struct HeraldBranch {
    pub probability: f64,
    pub state: Option<BosonicState>,
}

/// Exclusive click patterns of the two herald detectors.
#[derive(Debug, Clone)]
pub struct HeraldBranches {
    pub plus_only: HeraldBranch,
    pub minus_only: HeraldBranch,
    pub both: HeraldBranch,
}

impl HeraldBranches {
    pub fn any_click_probability(&self) -> f64 {
        self.plus_only.probability + self.minus_only.probability + self.both.probability
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityBudget {
    pub phase_noise_factor: f64,
    pub idler_overlap_factor: f64,
    pub echo_overlap_factor: f64,
    pub total: f64,
}

/// Readout-side parameters derived from a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutModel {
    /// Memory efficiency × window acceptance × signal transmission, per arm.
    pub efficiency_a: f64,
    pub efficiency_b: f64,
    pub echo_overlap: f64,
    /// Coherence factor for photon-number differences `k = 1, 2, ...` from phase noise.
    pub phase_noise: Option<(f64, f64)>,
    pub detector_1: DetectorParams,
    pub detector_2: DetectorParams,
}

/// Herald-conditioned readout statistics at one analysis phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReadoutProbabilities {
    /// Direct detection, one detector per memory.
    pub direct: JointProbabilities,
    /// Joint click pattern behind the signal beam splitter, indexed `2·out1 + out2`.
    pub fringe_joint: [f64; 4],
    pub output_1: f64,
    pub output_2: f64,
    /// Expected number of output clicks, `P(any) + P(both)`.
    pub total_clicks: f64,
}

/// Click statistics of a conditional memory state, direct and as a function of phase.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutTables {
    pub direct: [f64; 4],
    pub fringe: [TrigSeries; 4],
}

impl ReadoutTables {
    pub fn scale_harmonics(&self, factor: impl Fn(usize) -> f64 + Copy) -> Self {
        Self {
            direct: self.direct,
            fringe: std::array::from_fn(|i| self.fringe[i].scale_harmonics(factor)),
        }
    }

    pub fn fringe_at(&self, theta: f64) -> [f64; 4] {
        std::array::from_fn(|i| self.fringe[i].eval(theta).clamp(0.0, 1.0))
    }

    pub fn output_1(&self) -> TrigSeries {
        let mut s = self.fringe[2].clone();
        s.add_scaled(&self.fringe[3], 1.0);
        s
    }

    pub fn output_2(&self) -> TrigSeries {
        let mut s = self.fringe[1].clone();
        s.add_scaled(&self.fringe[3], 1.0);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictedStats {
    pub probabilities: JointProbabilities,
    pub visibility: f64,
    pub d: f64,
    pub concurrence: f64,
    pub concurrence_unclipped: f64,
    pub h2c: Option<f64>,
    pub effective_fidelity: Option<f64>,
    pub backtraced_probabilities: Option<JointProbabilities>,
    pub backtraced_concurrence: Option<f64>,
    pub herald_probability_per_mode: f64,
    pub herald_rate: f64,
    pub visibility_budget: VisibilityBudget,
    /// Herald-conditioned click probability of each signal output versus analysis phase.
    pub fringe_output_1: TrigSeries,
    pub fringe_output_2: TrigSeries,
}

/// Product of the two sources with idler phases and idler losses applied.
pub fn build_pre_herald_state(config: &ValidatedConfig) -> Result<BosonicState> {
    let n = config.link.truncation;
    let stats = config.link.source_statistics;
    let a = tmsv_with(config.source_a.mean_pair_probability_per_mode, n, stats)?;
    let b = tmsv_with(config.source_b.mean_pair_probability_per_mode, n, stats)?;
    a.tensor(&b)
        .apply_phase(IDLER_A, config.idler_channel_a.static_phase)?
        .apply_phase(IDLER_B, config.idler_channel_b.static_phase)?
        .apply_loss(IDLER_A, config.idler_channel_a.transmission())?
        .apply_loss(IDLER_B, config.idler_channel_b.transmission())
}

/// Mix the idlers on a balanced beam splitter. The plus output takes the idler-B slot.
fn mix_idlers(state: &BosonicState) -> Result<BosonicState> {
    if state.mode_count() != 4 {
        return Err(Error::InvalidArgument(format!(
            "expected a 4-mode pre-herald state, got {} modes",
            state.mode_count()
        )));
    }
    state.apply_beam_splitter(IDLER_A, IDLER_B, 0.5, 0.0)
}

/// Partially distinguishable idlers: keep a fraction `overlap` of the memory coherence.
fn apply_idler_overlap(state: BosonicState, overlap: f64) -> Result<BosonicState> {
    if overlap >= 1.0 {
        return Ok(state);
    }
    let dephased = state.damp_coherences(0, |_| 0.0)?;
    state.mix(&dephased, overlap)
}

/// Condition on a click at one herald port, tracing out the other output.
pub fn herald(
    state: &BosonicState,
    port: HeraldPort,
    plus: &DetectorParams,
    minus: &DetectorParams,
    idler_overlap: f64,
) -> Result<HeraldOutcome> {
    let mixed = mix_idlers(state)?;
    let (mode, detector, other) = match port {
        HeraldPort::Plus => (IDLER_B, plus, IDLER_A),
        HeraldPort::Minus => (IDLER_A, minus, IDLER_B - 1),
    };
    let out = mixed.detect_threshold(mode, detector)?;
    let cond = match out.conditional_state_click {
        Some(s) if out.click_probability > 0.0 => s,
        _ => return Err(Error::Unheraldable),
    };
    let memories = cond.trace_out(other)?;
    Ok(HeraldOutcome {
        herald_probability_per_mode: out.click_probability,
        conditional_memory_state: apply_idler_overlap(memories, idler_overlap)?,
        heralding_detector: port,
    })
}

/// Joint outcome of both herald detectors, split into its three click patterns.
pub fn herald_branches(
    state: &BosonicState,
    plus: &DetectorParams,
    minus: &DetectorParams,
    idler_overlap: f64,
) -> Result<HeraldBranches> {
    let mixed = mix_idlers(state)?;
    let p = mixed.detect_threshold(IDLER_B, plus)?;
    let branch = |cond: Option<BosonicState>, weight: f64, click: bool| -> Result<HeraldBranch> {
        let Some(s) = cond else {
            return Ok(HeraldBranch { probability: 0.0, state: None });
        };
        let m = s.detect_threshold(IDLER_A, minus)?;
        let (prob, st) = if click {
            (m.click_probability, m.conditional_state_click)
        } else {
            (m.no_click_probability(), m.conditional_state_no_click)
        };
        let probability = weight * prob;
        let state = match st {
            Some(st) if probability > 0.0 => Some(apply_idler_overlap(st, idler_overlap)?),
            _ => None,
        };
        Ok(HeraldBranch { probability, state })
    };
    Ok(HeraldBranches {
        plus_only: branch(p.conditional_state_click.clone(), p.click_probability, false)?,
        minus_only: branch(p.conditional_state_no_click.clone(), p.no_click_probability(), true)?,
        both: branch(p.conditional_state_click, p.click_probability, true)?,
    })
}

/// Mean over a measure window of `exp(−k² σ²(t)/2)` with `σ²(t) = σ₀² + D t`.
pub fn phase_noise_factor(k: usize, initial_variance: f64, diffusion: f64, window: f64) -> f64 {
    let k2 = (k * k) as f64;
    let x = 0.5 * k2 * diffusion * window;
    let avg = if x < 1e-12 { 1.0 - 0.5 * x } else { -(-x).exp_m1() / x };
    (-0.5 * k2 * initial_variance).exp() * avg
}

/// Relative-phase variance right after locking and its diffusion rate, summed over both interferometers.
pub fn phase_noise_parameters(config: &LinkConfig) -> (f64, f64) {
    let residual = config.timing.lock_residual;
    let diffusion = config.idler_channel_a.phase_diffusion
        + config.idler_channel_b.phase_diffusion
        + config.signal_channel_a.phase_diffusion
        + config.signal_channel_b.phase_diffusion;
    (2.0 * residual * residual, diffusion)
}

/// Overlap `|⟨ψ_A|ψ_B⟩|` of Gaussian echo amplitudes with the given centers and intensity rms widths.
pub fn gaussian_echo_overlap(center_a: f64, width_a: f64, center_b: f64, width_b: f64) -> f64 {
    let s2 = width_a * width_a + width_b * width_b;
    (2.0 * width_a * width_b / s2).sqrt() * (-(center_a - center_b).powi(2) / (4.0 * s2)).exp()
}

/// Reference delay at which the coincidence window is centered.
pub fn readout_delay(config: &LinkConfig) -> f64 {
    0.5 * (config.memory_a.storage_time + config.memory_b.storage_time)
}

/// Echo center of each memory relative to the coincidence-window center.
pub fn echo_offsets(config: &LinkConfig) -> (f64, f64) {
    let tau = readout_delay(config);
    (
        config.memory_a.storage_time + config.memory_a.echo_center_offset - tau,
        config.memory_b.storage_time + config.memory_b.echo_center_offset - tau,
    )
}

/// Fraction of each echo that falls inside the coincidence window.
pub fn window_acceptance(config: &LinkConfig, timing: &TimingConfig) -> (f64, f64) {
    let half = 0.5 * timing.coincidence_window;
    let (oa, ob) = echo_offsets(config);
    (
        gaussian_mass(oa, config.memory_a.echo_rms_width, -half, half),
        gaussian_mass(ob, config.memory_b.echo_rms_width, -half, half),
    )
}

pub fn visibility_budget(config: &ValidatedConfig) -> VisibilityBudget {
    let (var0, diffusion) = phase_noise_parameters(config);
    let phase_noise_factor = phase_noise_factor(1, var0, diffusion, config.timing.measure_period);
    let idler_overlap_factor = config.link.idler_mode_overlap;
    let echo_overlap_factor = echo_overlap(config);
    VisibilityBudget {
        phase_noise_factor,
        idler_overlap_factor,
        echo_overlap_factor,
        total: phase_noise_factor * idler_overlap_factor * echo_overlap_factor,
    }
}

fn echo_overlap(config: &LinkConfig) -> f64 {
    let (oa, ob) = echo_offsets(config);
    gaussian_echo_overlap(oa, config.memory_a.echo_rms_width, ob, config.memory_b.echo_rms_width)
}

impl ReadoutModel {
    /// Readout of the configured link. Phase noise is included only when `with_phase_noise`.
    pub fn from_config(config: &ValidatedConfig, with_phase_noise: bool) -> Self {
        let (acc_a, acc_b) = window_acceptance(config, &config.timing);
        let phase_noise = with_phase_noise.then(|| {
            let (var0, diffusion) = phase_noise_parameters(config);
            (var0, diffusion * config.timing.measure_period)
        });
        Self {
            efficiency_a: config.memory_a.efficiency() * acc_a * config.signal_channel_a.transmission(),
            efficiency_b: config.memory_b.efficiency() * acc_b * config.signal_channel_b.transmission(),
            echo_overlap: echo_overlap(config),
            phase_noise,
            detector_1: config.readout_detector_1.clone(),
            detector_2: config.readout_detector_2.clone(),
        }
    }

    /// Combined coherence factor for photon-number difference `k` on memory A.
    pub fn coherence_factor(&self, k: usize) -> f64 {
        let noise = match self.phase_noise {
            Some((var0, spread)) => phase_noise_factor(k, var0, 1.0, spread),
            None => 1.0,
        };
        self.echo_overlap.powi(k as i32) * noise
    }
}

fn no_click_weights(det: &DetectorParams, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|n| (1.0 - det.dark_click_probability_per_window) * (1.0 - det.efficiency).powi(n as i32))
        .collect()
}

/// Joint click probabilities, indexed `2·c1 + c2`, of detectors on modes `m1` and `m2` of a 2-mode state.
fn joint_clicks(state: &BosonicState, m1: usize, d1: &DetectorParams, m2: usize, d2: &DetectorParams) -> [f64; 4] {
    let w1 = no_click_weights(d1, state.dims()[m1]);
    let w2 = no_click_weights(d2, state.dims()[m2]);
    let mut out = [0.0; 4];
    for i in 0..state.dim() {
        let p = state.matrix()[(i, i)].re;
        if p == 0.0 {
            continue;
        }
        let occ = state.occupation_of(i);
        let (q1, q2) = (w1[occ[m1]], w2[occ[m2]]);
        out[0] += p * q1 * q2;
        out[1] += p * q1 * (1.0 - q2);
        out[2] += p * (1.0 - q1) * q2;
        out[3] += p * (1.0 - q1) * (1.0 - q2);
    }
    out
}

/// Direct and interference click statistics of a heralded memory state.
pub fn readout_tables(memories: &BosonicState, model: &ReadoutModel) -> Result<ReadoutTables> {
    if memories.mode_count() != 2 {
        return Err(Error::InvalidArgument("readout expects a 2-mode memory state".into()));
    }
    let lossy = memories
        .apply_loss(0, model.efficiency_a)?
        .apply_loss(1, model.efficiency_b)?;
    let direct = joint_clicks(&lossy, 0, &model.detector_1, 1, &model.detector_2);
    let damped = lossy.damp_coherences(0, |k| model.coherence_factor(k))?;
    let degree = memories.n_max(0);
    let mixed: Result<Vec<[f64; 4]>> = (0..2 * degree + 1)
        .map(|j| {
            let th = 2.0 * std::f64::consts::PI * j as f64 / (2 * degree + 1) as f64;
            let out = damped.apply_phase(0, th)?.apply_beam_splitter(0, 1, 0.5, 0.0)?;
            // output 1 sits in the memory-B slot of the beam splitter
            Ok(joint_clicks(&out, 1, &model.detector_1, 0, &model.detector_2))
        })
        .collect();
    let samples = mixed?;
    let n = samples.len();
    let fringe = std::array::from_fn(|o| {
        TrigSeries::from_fn(degree, |th| {
            let j = ((th / (2.0 * std::f64::consts::PI) * n as f64).round() as usize) % n;
            samples[j][o]
        })
    });
    Ok(ReadoutTables { direct, fringe })
}

/// Click probabilities after mapping the memories back to light, at analysis phase `theta`.
pub fn readout_probabilities(
    outcome: &HeraldOutcome,
    theta: f64,
    config: &ValidatedConfig,
) -> Result<ReadoutProbabilities> {
    let model = ReadoutModel::from_config(config, true);
    let tables = readout_tables(&outcome.conditional_memory_state, &model)?;
    Ok(probabilities_from_tables(&tables, theta))
}

pub fn probabilities_from_tables(tables: &ReadoutTables, theta: f64) -> ReadoutProbabilities {
    let f = tables.fringe_at(theta);
    let d = tables.direct;
    ReadoutProbabilities {
        direct: JointProbabilities::new(d[0], d[1], d[2], d[3]),
        fringe_joint: f,
        output_1: f[2] + f[3],
        output_2: f[1] + f[3],
        total_clicks: f[1] + f[2] + 2.0 * f[3],
    }
}

/// Complete analytic prediction for a configuration.
pub fn predict_stats(config: &ValidatedConfig) -> Result<PredictedStats> {
    let pre = build_pre_herald_state(config)?;
    let outcome = herald(
        &pre,
        config.link.herald_port,
        &config.herald_detector_plus,
        &config.herald_detector_minus,
        config.link.idler_mode_overlap,
    )?;
    let model = ReadoutModel::from_config(config, true);
    let tables = readout_tables(&outcome.conditional_memory_state, &model)?;
    let d = tables.direct;
    let probabilities = JointProbabilities::new(d[0], d[1], d[2], d[3]);
    let fringe_output_1 = tables.output_1();
    let fringe_output_2 = tables.output_2();
    let visibility = fringe_output_1.visibility();
    Ok(stats_from_parts(config, probabilities, visibility, outcome.herald_probability_per_mode, fringe_output_1, fringe_output_2))
}

fn stats_from_parts(
    config: &ValidatedConfig,
    probabilities: JointProbabilities,
    visibility: f64,
    herald_probability_per_mode: f64,
    fringe_output_1: TrigSeries,
    fringe_output_2: TrigSeries,
) -> PredictedStats {
    let zero = JointProbabilities::default();
    let c = estimators::concurrence(&probabilities, &zero, Estimate::exact(visibility));
    let h2c = estimators::h2c(&probabilities, &zero).ok().map(|e| e.value);
    let tm = &config.tomography;
    let back = estimators::backtrace(&probabilities, visibility, tm.backtrace_efficiency_a, tm.backtrace_efficiency_b).ok();
    let fid_input = back.map(|b| b.probabilities).unwrap_or(probabilities);
    let effective_fidelity = estimators::effective_fidelity(&fid_input, &zero, Estimate::exact(visibility))
        .ok()
        .map(|e| e.value);
    let timing = &config.timing;
    PredictedStats {
        probabilities,
        visibility,
        d: c.d,
        concurrence: c.value,
        concurrence_unclipped: c.unclipped,
        h2c,
        effective_fidelity,
        backtraced_probabilities: back.map(|b| b.probabilities),
        backtraced_concurrence: back.map(|b| b.concurrence),
        herald_probability_per_mode,
        herald_rate: herald_probability_per_mode * timing.mode_attempt_rate() * timing.duty_cycle,
        visibility_budget: visibility_budget(config),
        fringe_output_1,
        fringe_output_2,
    }
}

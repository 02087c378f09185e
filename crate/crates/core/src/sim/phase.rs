//! Interferometric phase drift between lock stages.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::LinkConfig;

/// A Wiener process restarted from `N(0, residual²)` after each lock stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerPhase {
    pub residual: f64,
    pub diffusion: f64,
    pub value: f64,
}

impl WienerPhase {
    pub fn new(residual: f64, diffusion: f64) -> Self {
        Self { residual, diffusion, value: 0.0 }
    }

    pub fn relock(&mut self, rng: &mut impl Rng) {
        self.value = self.residual * standard_normal(rng);
    }

    pub fn advance(&mut self, dt: f64, rng: &mut impl Rng) {
        if dt > 0.0 && self.diffusion > 0.0 {
            self.value += (self.diffusion * dt).sqrt() * standard_normal(rng);
        }
    }
}

pub(crate) fn standard_normal(rng: &mut impl Rng) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").sample(rng)
}

/// Idler and signal relative phases of the two arms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPhases {
    pub idler: WienerPhase,
    pub signal: WienerPhase,
}

impl LinkPhases {
    pub fn from_config(config: &LinkConfig) -> Self {
        let r = config.timing.lock_residual;
        Self {
            idler: WienerPhase::new(r, config.idler_channel_a.phase_diffusion + config.idler_channel_b.phase_diffusion),
            signal: WienerPhase::new(r, config.signal_channel_a.phase_diffusion + config.signal_channel_b.phase_diffusion),
        }
    }

    pub fn relock(&mut self, rng: &mut impl Rng) {
        self.idler.relock(rng);
        self.signal.relock(rng);
    }

    pub fn advance(&mut self, dt: f64, rng: &mut impl Rng) {
        self.idler.advance(dt, rng);
        self.signal.advance(dt, rng);
    }

    pub fn total(&self) -> f64 {
        self.idler.value + self.signal.value
    }
}

/// Relative phases sampled at the temporal-mode boundaries of every measure stage.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseTrajectory {
    /// Seconds from the start of the run.
    pub times: Vec<f64>,
    /// Seconds since the preceding lock stage ended.
    pub since_lock: Vec<f64>,
    pub idler: Vec<f64>,
    pub signal: Vec<f64>,
}

pub fn phase_trajectory(config: &LinkConfig, seed: u64, duration: f64) -> PhaseTrajectory {
    sampled_phase_trajectory(config, seed, duration, config.timing.mode_duration)
}

/// As [`phase_trajectory`] with an arbitrary sampling step.
pub fn sampled_phase_trajectory(config: &LinkConfig, seed: u64, duration: f64, step: f64) -> PhaseTrajectory {
    let t = &config.timing;
    let (measure, cycle) = (t.measure_period, t.cycle_period());
    let per_window = (measure / step).floor() as usize + 1;
    let mut out = PhaseTrajectory::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phases = LinkPhases::from_config(config);
    let mut c = 0u64;
    while (c as f64) * cycle < duration {
        let start = c as f64 * cycle;
        phases.relock(&mut rng);
        for j in 0..per_window {
            let s = j as f64 * step;
            if start + s >= duration || s > measure {
                break;
            }
            if j > 0 {
                phases.advance(step, &mut rng);
            }
            out.times.push(start + s);
            out.since_lock.push(s);
            out.idler.push(phases.idler.value);
            out.signal.push(phases.signal.value);
        }
        c += 1;
    }
    out
}

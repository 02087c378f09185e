//! Test oracles independent of the Fock-space engine.
//!
//! Thermal pair sources, losses and beam splitters are Gaussian operations, and a
//! threshold detector's no-click element is a loss followed by a vacuum
//! projection. Every click probability of the link therefore follows from
//! vacuum probabilities of a Gaussian covariance matrix, with no truncation.

#![allow(dead_code)]

use afc_link::config::{DetectorParams, LinkConfig};
use nalgebra::DMatrix;
use statrs::function::erf::erf;

/// Covariance matrix in `(x, p)` pairs per mode, vacuum = identity.
#[derive(Clone, Debug)]
pub struct Gaussian {
    pub v: DMatrix<f64>,
}

impl Gaussian {
    pub fn vacuum(modes: usize) -> Self {
        Self { v: DMatrix::identity(2 * modes, 2 * modes) }
    }

    pub fn modes(&self) -> usize {
        self.v.nrows() / 2
    }

    fn symplectic(&mut self, s: &DMatrix<f64>) {
        self.v = s * &self.v * s.transpose();
    }

    /// Two-mode squeezed vacuum with mean photon number `n` per mode on `(i, j)`.
    pub fn tmsv(&mut self, i: usize, j: usize, n: f64) {
        let c = 1.0 + 2.0 * n;
        let s = 2.0 * (n * (n + 1.0)).sqrt();
        for (a, b, val) in [(i, i, c), (j, j, c)] {
            self.v[(2 * a, 2 * b)] = val;
            self.v[(2 * a + 1, 2 * b + 1)] = val;
        }
        for (a, b) in [(i, j), (j, i)] {
            self.v[(2 * a, 2 * b)] = s;
            self.v[(2 * a + 1, 2 * b + 1)] = -s;
        }
    }

    pub fn loss(&mut self, m: usize, eta: f64) {
        let mut x = DMatrix::identity(self.v.nrows(), self.v.nrows());
        x[(2 * m, 2 * m)] = eta.sqrt();
        x[(2 * m + 1, 2 * m + 1)] = eta.sqrt();
        self.symplectic(&x);
        self.v[(2 * m, 2 * m)] += 1.0 - eta;
        self.v[(2 * m + 1, 2 * m + 1)] += 1.0 - eta;
    }

    pub fn phase(&mut self, m: usize, phi: f64) {
        let mut r = DMatrix::identity(self.v.nrows(), self.v.nrows());
        let (c, s) = (phi.cos(), phi.sin());
        r[(2 * m, 2 * m)] = c;
        r[(2 * m, 2 * m + 1)] = -s;
        r[(2 * m + 1, 2 * m)] = s;
        r[(2 * m + 1, 2 * m + 1)] = c;
        self.symplectic(&r);
    }

    /// Balanced beam splitter `a → (a + b)/√2`, `b → (b − a)/√2`.
    pub fn balanced_bs(&mut self, a: usize, b: usize) {
        let n = self.v.nrows();
        let mut s = DMatrix::identity(n, n);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for q in 0..2 {
            s[(2 * a + q, 2 * a + q)] = h;
            s[(2 * a + q, 2 * b + q)] = h;
            s[(2 * b + q, 2 * a + q)] = -h;
            s[(2 * b + q, 2 * b + q)] = h;
        }
        self.symplectic(&s);
    }

    /// Probability that every mode in `set` is empty.
    pub fn vacuum_probability(&self, set: &[usize]) -> f64 {
        if set.is_empty() {
            return 1.0;
        }
        let idx: Vec<usize> = set.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.v[(idx[i], idx[j])]);
        let det = (sub + DMatrix::identity(idx.len(), idx.len())).determinant();
        2f64.powi(set.len() as i32) / det.sqrt()
    }

    /// Probability that no detector in `set` clicks.
    pub fn no_click(&self, set: &[(usize, &DetectorParams)]) -> f64 {
        let mut g = self.clone();
        let mut dark = 1.0;
        for (m, d) in set {
            g.loss(*m, d.efficiency);
            dark *= 1.0 - d.dark_click_probability_per_window;
        }
        dark * g.vacuum_probability(&set.iter().map(|s| s.0).collect::<Vec<_>>())
    }

    /// Probability that every detector in `click` fires and none in `quiet` does.
    pub fn pattern(&self, click: &[(usize, &DetectorParams)], quiet: &[(usize, &DetectorParams)]) -> f64 {
        let n = click.len();
        let mut total = 0.0;
        for mask in 0..(1usize << n) {
            let mut set: Vec<(usize, &DetectorParams)> = quiet.to_vec();
            for (k, c) in click.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    set.push(*c);
                }
            }
            let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            total += sign * self.no_click(&set);
        }
        total
    }
}

pub const MEM_A: usize = 0;
pub const ID_A: usize = 1;
pub const MEM_B: usize = 2;
pub const ID_B: usize = 3;

fn gaussian_mass(mean: f64, sigma: f64, half: f64) -> f64 {
    let cdf = |x: f64| 0.5 * (1.0 + erf((x - mean) / (sigma * std::f64::consts::SQRT_2)));
    cdf(half) - cdf(-half)
}

/// Arm efficiencies from memory, echo acceptance and signal channel.
pub fn arm_efficiencies(c: &LinkConfig) -> (f64, f64) {
    let tau = 0.5 * (c.memory_a.storage_time + c.memory_b.storage_time);
    let half = 0.5 * c.timing.coincidence_window;
    let acc = |m: &afc_link::config::MemoryParams| {
        gaussian_mass(m.storage_time + m.echo_center_offset - tau, m.echo_rms_width, half)
    };
    (
        c.memory_a.efficiency() * acc(&c.memory_a) * c.signal_channel_a.transmission(),
        c.memory_b.efficiency() * acc(&c.memory_b) * c.signal_channel_b.transmission(),
    )
}

/// Link state after idler losses and the idler beam splitter; signal losses not yet applied.
pub fn link_state(c: &LinkConfig) -> Gaussian {
    let mut g = Gaussian::vacuum(4);
    g.tmsv(MEM_A, ID_A, c.source_a.mean_pair_probability_per_mode);
    g.tmsv(MEM_B, ID_B, c.source_b.mean_pair_probability_per_mode);
    g.loss(ID_A, c.idler_channel_a.transmission());
    g.loss(ID_B, c.idler_channel_b.transmission());
    g.phase(ID_A, c.idler_channel_a.static_phase);
    g.phase(ID_B, c.idler_channel_b.static_phase);
    g.balanced_bs(ID_A, ID_B);
    g
}

/// Herald on the plus port, which is the idler-B slot.
pub struct OracleStats {
    pub herald_probability: f64,
    /// `[p00, p01, p10, p11]`, index `2·a + b`.
    pub direct: [f64; 4],
}

pub fn oracle_direct(c: &LinkConfig) -> OracleStats {
    let mut g = link_state(c);
    let (ea, eb) = arm_efficiencies(c);
    g.loss(MEM_A, ea);
    g.loss(MEM_B, eb);
    let h = (ID_B, &c.herald_detector_plus);
    let a = (MEM_A, &c.readout_detector_1);
    let b = (MEM_B, &c.readout_detector_2);
    let ph = g.pattern(&[h], &[]);
    let joint = [
        g.pattern(&[h], &[a, b]),
        g.pattern(&[h, b], &[a]),
        g.pattern(&[h, a], &[b]),
        g.pattern(&[h, a, b], &[]),
    ];
    OracleStats { herald_probability: ph, direct: joint.map(|x| x / ph) }
}

/// Herald-conditioned click probability at output 1 versus the analysis phase, before
/// any decoherence of the memory coherence.
pub fn oracle_fringe_output_1(c: &LinkConfig, theta: f64) -> f64 {
    let mut g = link_state(c);
    let (ea, eb) = arm_efficiencies(c);
    g.loss(MEM_A, ea);
    g.loss(MEM_B, eb);
    g.phase(MEM_A, theta);
    g.balanced_bs(MEM_A, MEM_B);
    let h = (ID_B, &c.herald_detector_plus);
    let out1 = (MEM_B, &c.readout_detector_1);
    g.pattern(&[h, out1], &[]) / g.pattern(&[h], &[])
}

/// Visibility of output 1 when harmonic `k` of the fringe is scaled by `factor(k)`.
pub fn oracle_visibility(c: &LinkConfig, factor: impl Fn(usize) -> f64) -> f64 {
    let n = 64;
    let samples: Vec<f64> = (0..n)
        .map(|j| oracle_fringe_output_1(c, 2.0 * std::f64::consts::PI * j as f64 / n as f64))
        .collect();
    let coef = |k: usize| {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, s) in samples.iter().enumerate() {
            let x = 2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64;
            re += s * x.cos();
            im += s * x.sin();
        }
        (re / n as f64, im / n as f64)
    };
    let c0 = coef(0).0;
    let harmonics: Vec<(f64, f64)> = (1..8).map(|k| {
        let (a, b) = coef(k);
        (2.0 * a * factor(k), 2.0 * b * factor(k))
    }).collect();
    let eval = |t: f64| {
        c0 + harmonics
            .iter()
            .enumerate()
            .map(|(k, (a, b))| a * ((k + 1) as f64 * t).cos() + b * ((k + 1) as f64 * t).sin())
            .sum::<f64>()
    };
    let grid: Vec<f64> = (0..20000).map(|j| eval(2.0 * std::f64::consts::PI * j as f64 / 20000.0)).collect();
    let hi = grid.iter().cloned().fold(f64::MIN, f64::max);
    let lo = grid.iter().cloned().fold(f64::MAX, f64::min);
    (hi - lo) / (hi + lo)
}

/// A configuration shipped in the repository's `configs/` directory.
pub fn shipped(name: &str) -> LinkConfig {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    LinkConfig::load(&path, &[]).expect("shipped configuration loads")
}

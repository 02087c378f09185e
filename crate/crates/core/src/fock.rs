//! Dense density operators over a few photon-number-truncated bosonic modes.
//!
//! Basis states are ordered row-major: mode 0 is the most significant digit.
//! Every operation returns a new state; inputs are never mutated.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::config::{DetectorParams, SourceStatistics};
use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct BosonicState {
    dims: Vec<usize>,
    rho: DMatrix<C64>,
}

/// Both branches of a threshold detection. A branch with zero probability has no state.
#[derive(Debug, Clone)]
pub struct DetectionOutcome {
    pub click_probability: f64,
    pub conditional_state_click: Option<BosonicState>,
    pub conditional_state_no_click: Option<BosonicState>,
}

impl DetectionOutcome {
    pub fn no_click_probability(&self) -> f64 {
        1.0 - self.click_probability
    }
}

/// Index bookkeeping for operators acting on a subset of modes.
struct LocalIndex {
    /// Global indices whose local digits are all zero.
    bases: Vec<usize>,
    /// Global offset contributed by each local index.
    offsets: Vec<usize>,
    /// Local index of every global index.
    local_of: Vec<usize>,
    /// Base (local digits zeroed) of every global index.
    base_of: Vec<usize>,
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

impl BosonicState {
    /// Vacuum on every mode.
    pub fn vacuum(dims: &[usize]) -> Self {
        let d: usize = dims.iter().product();
        let mut rho = DMatrix::zeros(d, d);
        rho[(0, 0)] = ONE;
        Self { dims: dims.to_vec(), rho }
    }

    /// Projector onto a Fock basis state `|n_0, n_1, ...⟩`.
    pub fn fock(dims: &[usize], occupation: &[usize]) -> Result<Self> {
        if dims.len() != occupation.len() || occupation.iter().zip(dims).any(|(n, d)| n >= d) {
            return Err(Error::InvalidArgument(format!(
                "occupation {occupation:?} does not fit dims {dims:?}"
            )));
        }
        let mut s = Self::vacuum(dims);
        s.rho[(0, 0)] = ZERO;
        let i = s.index_of(occupation);
        s.rho[(i, i)] = ONE;
        Ok(s)
    }

    /// Pure state from amplitudes over the full basis (normalized here).
    pub fn from_amplitudes(dims: &[usize], amplitudes: &[C64]) -> Result<Self> {
        let d: usize = dims.iter().product();
        if amplitudes.len() != d {
            return Err(Error::InvalidArgument(format!(
                "expected {d} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm <= 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(d, amplitudes.iter().map(|a| a / norm.sqrt()));
        Ok(Self { dims: dims.to_vec(), rho: &v * v.adjoint() })
    }

    pub fn from_matrix(dims: &[usize], rho: DMatrix<C64>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::InvalidArgument(format!(
                "matrix is {}x{}, dims {dims:?} need {d}x{d}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        Ok(Self { dims: dims.to_vec(), rho })
    }

    pub fn mode_count(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Largest photon number representable in `mode`.
    pub fn n_max(&self, mode: usize) -> usize {
        self.dims[mode] - 1
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn element(&self, row: &[usize], col: &[usize]) -> C64 {
        self.rho[(self.index_of(row), self.index_of(col))]
    }

    pub fn index_of(&self, occupation: &[usize]) -> usize {
        occupation
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&n, &d)| acc * d + n)
    }

    pub fn occupation_of(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.dims.len()];
        for (k, &d) in self.dims.iter().enumerate().rev() {
            occ[k] = index % d;
            index /= d;
        }
        occ
    }

    fn stride(&self, mode: usize) -> usize {
        self.dims[mode + 1..].iter().product()
    }

    fn digit(&self, index: usize, mode: usize) -> usize {
        (index / self.stride(mode)) % self.dims[mode]
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.dims.len() {
            return Err(Error::InvalidArgument(format!(
                "mode index {mode} out of range for {} modes",
                self.dims.len()
            )));
        }
        Ok(())
    }

    fn local_index(&self, modes: &[usize]) -> LocalIndex {
        let d = self.dim();
        let strides: Vec<usize> = modes.iter().map(|&m| self.stride(m)).collect();
        let local_dims: Vec<usize> = modes.iter().map(|&m| self.dims[m]).collect();
        let local_total: usize = local_dims.iter().product();
        let offsets = (0..local_total)
            .map(|mut l| {
                let mut off = 0;
                for k in (0..modes.len()).rev() {
                    off += (l % local_dims[k]) * strides[k];
                    l /= local_dims[k];
                }
                off
            })
            .collect();
        let mut local_of = vec![0; d];
        let mut base_of = vec![0; d];
        let mut bases = Vec::new();
        for i in 0..d {
            let mut l = 0;
            let mut base = i;
            for (k, &m) in modes.iter().enumerate() {
                let digit = self.digit(i, m);
                l = l * local_dims[k] + digit;
                base -= digit * strides[k];
            }
            local_of[i] = l;
            base_of[i] = base;
            if l == 0 {
                bases.push(i);
            }
        }
        LocalIndex { bases, offsets, local_of, base_of }
    }

    /// `(op ⊗ 1) ρ (op ⊗ 1)†` summed over a set of local operators.
    fn apply_local(&self, modes: &[usize], ops: &[DMatrix<C64>]) -> DMatrix<C64> {
        let li = self.local_index(modes);
        let d = self.dim();
        let nl = li.offsets.len();
        let mut out = DMatrix::<C64>::zeros(d, d);
        for op in ops {
            // left = (op ⊗ 1) ρ
            let mut left = DMatrix::<C64>::zeros(d, d);
            for &b in &li.bases {
                for lo in 0..nl {
                    let row_out = b + li.offsets[lo];
                    for lin in 0..nl {
                        let u = op[(lo, lin)];
                        if u == ZERO {
                            continue;
                        }
                        let row_in = b + li.offsets[lin];
                        for j in 0..d {
                            left[(row_out, j)] += u * self.rho[(row_in, j)];
                        }
                    }
                }
            }
            // out += left (op ⊗ 1)†
            for j_out in 0..d {
                let (b, lo) = (li.base_of[j_out], li.local_of[j_out]);
                for lin in 0..nl {
                    let u = op[(lo, lin)].conj();
                    if u == ZERO {
                        continue;
                    }
                    let j_in = b + li.offsets[lin];
                    for i in 0..d {
                        out[(i, j_out)] += left[(i, j_in)] * u;
                    }
                }
            }
        }
        out
    }

    /// Pure-loss channel on one mode: beam splitter of transmission `eta` with a vacuum ancilla.
    pub fn apply_loss(&self, mode: usize, eta: f64) -> Result<Self> {
        self.check_mode(mode)?;
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidArgument(format!("transmission out of range: {eta}")));
        }
        if eta == 1.0 {
            return Ok(self.clone());
        }
        let dm = self.dims[mode];
        let kraus: Vec<DMatrix<C64>> = (0..dm)
            .map(|k| {
                let mut a = DMatrix::zeros(dm, dm);
                for n in k..dm {
                    let w = binomial(n, k) * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32);
                    a[(n - k, n)] = C64::new(w.sqrt(), 0.0);
                }
                a
            })
            .collect();
        Ok(Self { dims: self.dims.clone(), rho: self.apply_local(&[mode], &kraus) })
    }

    /// Phase shift `e^{i n φ}` on one mode.
    pub fn apply_phase(&self, mode: usize, phi: f64) -> Result<Self> {
        self.check_mode(mode)?;
        let mut rho = self.rho.clone();
        let d = self.dim();
        for i in 0..d {
            let ni = self.digit(i, mode) as f64;
            for j in 0..d {
                let nj = self.digit(j, mode) as f64;
                if ni != nj {
                    rho[(i, j)] *= C64::from_polar(1.0, (ni - nj) * phi);
                }
            }
        }
        Ok(Self { dims: self.dims.clone(), rho })
    }

    /// Multiply every coherence between photon numbers differing by `k` on `mode` by `factor(k)`.
    ///
    /// `factor(0)` is never queried; populations are untouched.
    pub fn damp_coherences(&self, mode: usize, factor: impl Fn(usize) -> f64) -> Result<Self> {
        self.check_mode(mode)?;
        let mut rho = self.rho.clone();
        let d = self.dim();
        let dm = self.dims[mode];
        let table: Vec<f64> = (0..dm).map(|k| if k == 0 { 1.0 } else { factor(k) }).collect();
        for i in 0..d {
            let ni = self.digit(i, mode);
            for j in 0..d {
                let nj = self.digit(j, mode);
                if ni != nj {
                    rho[(i, j)] *= table[ni.abs_diff(nj)];
                }
            }
        }
        Ok(Self { dims: self.dims.clone(), rho })
    }

    /// Zero-pad `mode` up to `new_dim` basis states.
    pub fn extend_mode(&self, mode: usize, new_dim: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let old = self.dims[mode];
        if new_dim < old {
            return Err(Error::InvalidArgument(format!(
                "cannot shrink mode {mode} from {old} to {new_dim}"
            )));
        }
        if new_dim == old {
            return Ok(self.clone());
        }
        let mut dims = self.dims.clone();
        dims[mode] = new_dim;
        let target = BosonicState::vacuum(&dims);
        let map: Vec<usize> = (0..self.dim())
            .map(|i| target.index_of(&self.occupation_of(i)))
            .collect();
        let mut rho = DMatrix::zeros(target.dim(), target.dim());
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                rho[(map[i], map[j])] = self.rho[(i, j)];
            }
        }
        Ok(Self { dims, rho })
    }

    /// Two-mode mixing with reflectivity `r` (intensity) and phase `phi`.
    ///
    /// Creation operators transform as `a† → t a† + r e^{iφ} b†`,
    /// `b† → −r e^{−iφ} a† + t b†` with `t² + r² = 1`. Both modes are padded
    /// so that every input photon-number sector is represented exactly.
    pub fn apply_beam_splitter(&self, mode_a: usize, mode_b: usize, reflectivity: f64, phi: f64) -> Result<Self> {
        self.check_mode(mode_a)?;
        self.check_mode(mode_b)?;
        if mode_a == mode_b {
            return Err(Error::InvalidArgument("beam splitter needs two distinct modes".into()));
        }
        if !(0.0..=1.0).contains(&reflectivity) {
            return Err(Error::InvalidArgument(format!("reflectivity out of range: {reflectivity}")));
        }
        let n = self.dims[mode_a] + self.dims[mode_b] - 1;
        let padded = self.extend_mode(mode_a, n)?.extend_mode(mode_b, n)?;
        let u = beam_splitter_unitary(n, reflectivity, phi);
        let rho = padded.apply_local(&[mode_a, mode_b], &[u]);
        Ok(Self { dims: padded.dims, rho })
    }

    /// Threshold detection of one mode; the detected mode is traced out of both branches.
    pub fn detect_threshold(&self, mode: usize, detector: &DetectorParams) -> Result<DetectionOutcome> {
        self.check_mode(mode)?;
        let dark = detector.dark_click_probability_per_window;
        let eta = detector.efficiency;
        let no_click: Vec<f64> = (0..self.dims[mode])
            .map(|n| (1.0 - dark) * (1.0 - eta).powi(n as i32))
            .collect();
        let click: Vec<f64> = no_click.iter().map(|w| 1.0 - w).collect();
        let s_click = self.contract_mode(mode, &click);
        let s_none = self.contract_mode(mode, &no_click);
        let p_click = s_click.trace_re().clamp(0.0, 1.0);
        let p_none = s_none.trace_re().clamp(0.0, 1.0);
        let total = p_click + p_none;
        let click_probability = if total > 0.0 { p_click / total } else { 0.0 };
        Ok(DetectionOutcome {
            click_probability,
            conditional_state_click: (p_click > 0.0).then(|| s_click.scaled(1.0 / p_click)),
            conditional_state_no_click: (p_none > 0.0).then(|| s_none.scaled(1.0 / p_none)),
        })
    }

    /// `Tr_mode[(Σ_n w_n |n⟩⟨n|) ρ]`, unnormalized.
    pub(crate) fn contract_mode(&self, mode: usize, weights: &[f64]) -> Self {
        let mut dims = self.dims.clone();
        dims.remove(mode);
        let reduced = BosonicState::vacuum(&dims);
        let dr = reduced.dim();
        let stride = self.stride(mode);
        let dm = self.dims[mode];
        // global index = hi * (dm * stride) + n * stride + lo, reduced = hi * stride + lo
        let expand = |r: usize, n: usize| (r / stride) * dm * stride + n * stride + r % stride;
        let mut rho = DMatrix::zeros(dr, dr);
        for (n, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..dr {
                let gi = expand(i, n);
                for j in 0..dr {
                    rho[(i, j)] += self.rho[(gi, expand(j, n))] * w;
                }
            }
        }
        Self { dims, rho }
    }

    /// Partial trace over one mode, renormalized.
    pub fn trace_out(&self, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let reduced = self.contract_mode(mode, &vec![1.0; self.dims[mode]]);
        let tr = reduced.trace_re();
        Ok(if tr > 0.0 { reduced.scaled(1.0 / tr) } else { reduced })
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self { dims, rho: self.rho.kronecker(&other.rho) }
    }

    /// Convex combination `w·self + (1−w)·other`.
    pub fn mix(&self, other: &Self, weight: f64) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::InvalidArgument("mixing states of different shape".into()));
        }
        Ok(Self {
            dims: self.dims.clone(),
            rho: &self.rho * C64::new(weight, 0.0) + &other.rho * C64::new(1.0 - weight, 0.0),
        })
    }

    pub(crate) fn scaled(&self, s: f64) -> Self {
        Self { dims: self.dims.clone(), rho: &self.rho * C64::new(s, 0.0) }
    }

    pub fn trace_re(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn normalized(&self) -> Self {
        let t = self.trace_re();
        if t > 0.0 {
            self.scaled(1.0 / t)
        } else {
            self.clone()
        }
    }

    /// Largest deviation of ρ from ρ†.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Check the density-operator invariants at the standard tolerances.
    pub fn is_physical(&self) -> bool {
        self.hermiticity_error() < 1e-10
            && (self.trace_re() - 1.0).abs() < 1e-10
            && self.min_eigenvalue() >= -1e-9
    }

    /// Photon-number distribution of one mode.
    pub fn photon_distribution(&self, mode: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dims[mode]];
        for i in 0..self.dim() {
            p[self.digit(i, mode)] += self.rho[(i, i)].re;
        }
        p
    }

    pub fn mean_photon_number(&self, mode: usize) -> f64 {
        self.photon_distribution(mode)
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Frobenius distance, zero-padding the smaller state when shapes differ.
    pub fn distance(&self, other: &Self) -> f64 {
        if self.dims == other.dims {
            return (&self.rho - &other.rho).norm();
        }
        if self.dims.len() != other.dims.len() {
            return f64::INFINITY;
        }
        let dims: Vec<usize> = self.dims.iter().zip(&other.dims).map(|(a, b)| *a.max(b)).collect();
        let pad = |s: &Self| {
            (0..dims.len()).try_fold(s.clone(), |acc, m| acc.extend_mode(m, dims[m]))
        };
        match (pad(self), pad(other)) {
            (Ok(a), Ok(b)) => (&a.rho - &b.rho).norm(),
            _ => f64::INFINITY,
        }
    }

    /// Complex-matrix CSV: `row,col,re,im`, one line per nonzero element.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,re,im\n");
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let z = self.rho[(i, j)];
                if z != ZERO {
                    let _ = writeln!(out, "{i},{j},{:.17e},{:.17e}", z.re, z.im);
                }
            }
        }
        out
    }
}

/// Fock-basis matrix of the two-mode mixing unitary on `n × n` local states.
///
/// Sectors whose total photon number exceeds `n − 1` are left as identity.
pub fn beam_splitter_unitary(n: usize, reflectivity: f64, phi: f64) -> DMatrix<C64> {
    let t = C64::new((1.0 - reflectivity).sqrt(), 0.0);
    let s = C64::from_polar(reflectivity.sqrt(), phi);
    let u = -C64::from_polar(reflectivity.sqrt(), -phi);
    let mut m = DMatrix::<C64>::zeros(n * n, n * n);
    for na in 0..n {
        for nb in 0..n {
            let col = na * n + nb;
            let total = na + nb;
            if total >= n {
                m[(col, col)] = ONE;
                continue;
            }
            let norm = 1.0 / (factorial(na) * factorial(nb)).sqrt();
            for j in 0..=na {
                let left = t.powu(j as u32) * s.powu((na - j) as u32) * binomial(na, j);
                for k in 0..=nb {
                    let right = u.powu(k as u32) * t.powu((nb - k) as u32) * binomial(nb, k);
                    let out_a = j + k;
                    let out_b = total - out_a;
                    let amp = left * right * norm * (factorial(out_a) * factorial(out_b)).sqrt();
                    m[(out_a * n + out_b, col)] += amp;
                }
            }
        }
    }
    m
}

/// Pair-number probabilities of one SPDC mode with mean pair number `p`.
pub fn pair_distribution(p: f64, n_max: usize, statistics: SourceStatistics) -> Vec<f64> {
    (0..=n_max)
        .map(|n| match statistics {
            SourceStatistics::Thermal => p.powi(n as i32) / (1.0 + p).powi(n as i32 + 1),
            SourceStatistics::Poissonian => (-p).exp() * p.powi(n as i32) / factorial(n),
        })
        .collect()
}

/// Two-mode squeezed vacuum `Σ √P(n) |n, n⟩`, truncated at `n_max` pairs and renormalized.
pub fn tmsv(mean_pair_probability: f64, n_max: usize) -> Result<BosonicState> {
    tmsv_with(mean_pair_probability, n_max, SourceStatistics::Thermal)
}

pub fn tmsv_with(p: f64, n_max: usize, statistics: SourceStatistics) -> Result<BosonicState> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("pair probability out of range [0, 1): {p}")));
    }
    let d = n_max + 1;
    let probs = pair_distribution(p, n_max, statistics);
    let mut amps = vec![ZERO; d * d];
    for (n, pn) in probs.iter().enumerate() {
        amps[n * d + n] = C64::new(pn.sqrt(), 0.0);
    }
    BosonicState::from_amplitudes(&[d, d], &amps)
}

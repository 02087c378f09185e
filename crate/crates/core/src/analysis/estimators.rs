//! Closed-form entanglement estimators on the two-memory photon-number statistics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::C64;
use crate::stats::Estimate;

/// Probabilities `p_ij` of `i` excitations at memory A and `j` at memory B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct JointProbabilities {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
}

impl JointProbabilities {
    pub fn new(p00: f64, p01: f64, p10: f64, p11: f64) -> Self {
        Self { p00, p01, p10, p11 }
    }

    pub fn from_matrix(m: [[f64; 2]; 2]) -> Self {
        Self::new(m[0][0], m[0][1], m[1][0], m[1][1])
    }

    pub fn sum(&self) -> f64 {
        self.p00 + self.p01 + self.p10 + self.p11
    }

    pub fn singles(&self) -> f64 {
        self.p01 + self.p10
    }

    /// Exchange the roles of the two memories.
    pub fn swapped(&self) -> Self {
        Self::new(self.p00, self.p10, self.p01, self.p11)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceEstimate {
    /// Coherence magnitude `d = V (p01 + p10) / 2`.
    pub d: f64,
    pub value: f64,
    /// `2|d| − 2√(p00 p11)` before clipping at zero.
    pub unclipped: f64,
    pub error: f64,
}

/// Concurrence of the heralded two-mode state from its photon statistics and visibility.
///
/// The error is first-order propagation, ignoring correlations between the `p_ij`.
pub fn concurrence(p: &JointProbabilities, errors: &JointProbabilities, v: Estimate) -> ConcurrenceEstimate {
    let s = p.singles();
    let d = v.value * s / 2.0;
    let root = (p.p00 * p.p11).max(0.0).sqrt();
    let unclipped = 2.0 * d.abs() - 2.0 * root;
    let sign = if d >= 0.0 { 1.0 } else { -1.0 };
    let mut var = (s * v.error).powi(2)
        + (sign * v.value).powi(2) * (errors.p01.powi(2) + errors.p10.powi(2));
    if p.p00 > 0.0 {
        var += (p.p11 / p.p00) * errors.p00.powi(2);
    }
    var += if p.p11 > 0.0 {
        (p.p00 / p.p11) * errors.p11.powi(2)
    } else {
        4.0 * p.p00 * errors.p11
    };
    ConcurrenceEstimate { d, value: unclipped.max(0.0), unclipped, error: var.sqrt() }
}

/// Heralded cross-correlation `p11 / (p10 p01)` with propagated error.
pub fn h2c(p: &JointProbabilities, errors: &JointProbabilities) -> Result<Estimate> {
    let denom = p.p01 * p.p10;
    if denom <= 0.0 {
        return Err(Error::InsufficientData("insufficient single counts".into()));
    }
    let value = p.p11 / denom;
    let rel_singles = (errors.p01 / p.p01).powi(2) + (errors.p10 / p.p10).powi(2);
    let error = if p.p11 > 0.0 {
        value * ((errors.p11 / p.p11).powi(2) + rel_singles).sqrt()
    } else {
        errors.p11 / denom
    };
    Ok(Estimate::new(value, error))
}

/// Effective fidelity with the ideal state after discarding the vacuum term, closed form.
pub fn effective_fidelity(p: &JointProbabilities, errors: &JointProbabilities, v: Estimate) -> Result<Estimate> {
    let s = p.singles();
    let n = s + p.p11;
    if n <= 0.0 {
        return Err(Error::InsufficientData("no one- or two-excitation events".into()));
    }
    let value = 0.5 * s * (1.0 + v.value) / n;
    let d_v = s / (2.0 * n);
    let d_single = 0.5 * (1.0 + v.value) * p.p11 / (n * n);
    let d_double = -0.5 * (1.0 + v.value) * s / (n * n);
    let var = (d_v * v.error).powi(2)
        + d_single.powi(2) * (errors.p01.powi(2) + errors.p10.powi(2))
        + (d_double * errors.p11).powi(2);
    Ok(Estimate::new(value, var.sqrt()))
}

/// Matrix route: `(Tr √(√ρ̃ σ √ρ̃))²` with the vacuum entry of ρ̃ zeroed and σ the ideal Bell state.
pub fn effective_fidelity_matrix(p: &JointProbabilities, v: f64) -> Result<f64> {
    let n = p.singles() + p.p11;
    if n <= 0.0 {
        return Err(Error::InsufficientData("no one- or two-excitation events".into()));
    }
    let stripped = JointProbabilities { p00: 0.0, ..*p };
    let (rho, _) = density_matrix(&stripped, v * p.singles() / 2.0, 0.0);
    let rho = rho * C64::new(1.0 / n, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi = nalgebra::DVector::from_vec(vec![
        C64::new(0.0, 0.0),
        C64::new(h, 0.0),
        C64::new(h, 0.0),
        C64::new(0.0, 0.0),
    ]);
    let sigma = &psi * psi.adjoint();
    Ok(uhlmann_fidelity(&rho, &sigma))
}

/// Principal square root of a positive semidefinite Hermitian matrix.
pub fn sqrtm_psd(m: &DMatrix<C64>) -> DMatrix<C64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

pub fn uhlmann_fidelity(rho: &DMatrix<C64>, sigma: &DMatrix<C64>) -> f64 {
    let sr = sqrtm_psd(rho);
    let inner = &sr * sigma * &sr;
    let h = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigenvalues();
    // eigenvalues at round-off level would contribute their square roots, ~1e-8
    let floor = 1e-13 * eig.iter().cloned().fold(0.0, f64::max);
    let tr: f64 = eig.iter().filter(|&&l| l > floor).map(|l| l.sqrt()).sum();
    tr * tr
}

/// X-form density matrix over `{|00⟩, |01⟩, |10⟩, |11⟩}`.
///
/// Returns the matrix and whether `d` had to be clipped to `√(p01 p10)` to keep it positive.
pub fn density_matrix(p: &JointProbabilities, d: f64, phase: f64) -> (DMatrix<C64>, bool) {
    let bound = (p.p01 * p.p10).max(0.0).sqrt();
    let clipped = d.abs() > bound;
    let d = d.clamp(-bound, bound);
    let mut m = DMatrix::<C64>::zeros(4, 4);
    m[(0, 0)] = C64::new(p.p00, 0.0);
    m[(1, 1)] = C64::new(p.p01, 0.0);
    m[(2, 2)] = C64::new(p.p10, 0.0);
    m[(3, 3)] = C64::new(p.p11, 0.0);
    m[(2, 1)] = C64::from_polar(d, phase);
    m[(1, 2)] = C64::from_polar(d, -phase);
    (m, clipped)
}

/// Wootters concurrence of a two-qubit density matrix.
pub fn wootters_concurrence(rho: &DMatrix<C64>) -> f64 {
    // σ_y ⊗ σ_y in the computational basis
    let mut yy = DMatrix::<C64>::zeros(4, 4);
    yy[(0, 3)] = C64::new(-1.0, 0.0);
    yy[(1, 2)] = C64::new(1.0, 0.0);
    yy[(2, 1)] = C64::new(1.0, 0.0);
    yy[(3, 0)] = C64::new(-1.0, 0.0);
    let flipped = &yy * rho.map(|z| z.conj()) * &yy;
    let sr = sqrtm_psd(rho);
    let inner = &sr * flipped * &sr;
    let h = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
    let mut l: Vec<f64> = h.symmetric_eigenvalues().iter().map(|x| x.max(0.0).sqrt()).collect();
    l.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Backtraced {
    pub probabilities: JointProbabilities,
    pub concurrence: f64,
}

/// Rescale the statistics by the downstream efficiency of each arm.
pub fn backtrace(p: &JointProbabilities, v: f64, eta_a: f64, eta_b: f64) -> Result<Backtraced> {
    if !(eta_a > 0.0 && eta_a <= 1.0 && eta_b > 0.0 && eta_b <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "back-trace efficiencies must lie in (0, 1]: {eta_a}, {eta_b}"
        )));
    }
    let p01 = p.p01 / eta_b;
    let p10 = p.p10 / eta_a;
    let p11 = p.p11 / (eta_a * eta_b);
    let p00 = 1.0 - p01 - p10 - p11;
    if p01 > 1.0 || p10 > 1.0 || p11 > 1.0 || p00 < -1e-12 {
        return Err(Error::Inconsistent(format!(
            "back-traced probabilities exceed one (p01={p01:.4}, p10={p10:.4}, p11={p11:.4})"
        )));
    }
    let q = JointProbabilities::new(p00.max(0.0), p01, p10, p11);
    let c = concurrence(&q, &JointProbabilities::default(), Estimate::exact(v));
    Ok(Backtraced { probabilities: q, concurrence: c.value })
}

/// Symmetric efficiency η for which the back-traced concurrence is `ratio` times the measured one.
pub fn calibrate_backtrace_efficiency(p: &JointProbabilities, v: f64, ratio: f64) -> Result<f64> {
    let c0 = concurrence(p, &JointProbabilities::default(), Estimate::exact(v)).value;
    if c0 <= 0.0 {
        return Err(Error::InsufficientData("zero concurrence cannot be rescaled".into()));
    }
    let f = |eta: f64| backtrace(p, v, eta, eta).map(|b| b.concurrence / c0 - ratio);
    let mut hi = 1.0;
    let mut lo = hi;
    // shrink until the back-trace overshoots or becomes inconsistent
    loop {
        let next = lo * 0.5;
        match f(next) {
            Ok(x) if x < 0.0 => lo = next,
            _ => {
                lo = next;
                break;
            }
        }
        if lo < 1e-9 {
            return Err(Error::InsufficientData("no efficiency reaches the requested ratio".into()));
        }
    }
    if f(hi)? > 0.0 {
        return Err(Error::InvalidArgument(format!("ratio {ratio} below one")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match f(mid) {
            Ok(x) if x < 0.0 => hi = mid,
            _ => lo = mid,
        }
    }
    if f(hi)?.abs() > 1e-9 * ratio {
        return Err(Error::InsufficientData("no consistent efficiency reaches the requested ratio".into()));
    }
    Ok(hi)
}

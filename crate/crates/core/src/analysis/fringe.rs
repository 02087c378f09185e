use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub theta: f64,
    pub counts_out1: u64,
    pub counts_out2: u64,
    /// Heralds with clicks at both outputs.
    pub counts_both: u64,
    pub heralds: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FringeScan {
    pub points: Vec<FringePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub visibility: Estimate,
    /// `φ₀` in `N(θ) = A(1 + V sin(θ + φ₀))`.
    pub phase_offset: f64,
    /// `A`, per herald.
    pub mean_rate: f64,
    pub chi2: f64,
    pub dof: usize,
}

impl FringeScan {
    pub fn empty(phases: &[f64]) -> Self {
        Self {
            points: phases
                .iter()
                .map(|&theta| FringePoint { theta, counts_out1: 0, counts_out2: 0, counts_both: 0, heralds: 0 })
                .collect(),
        }
    }

    /// Add one herald at phase index `i` with readout pattern `2·out1 + out2`.
    pub fn record(&mut self, i: usize, pattern: usize) {
        let p = &mut self.points[i];
        p.heralds += 1;
        p.counts_out1 += (pattern >> 1 & 1) as u64;
        p.counts_out2 += (pattern & 1) as u64;
        p.counts_both += (pattern == 3) as u64;
    }

    pub fn heralds(&self) -> u64 {
        self.points.iter().map(|p| p.heralds).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta_rad,counts_out1,counts_out2,heralds\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{},{}\n", p.theta, p.counts_out1, p.counts_out2, p.heralds));
        }
        s
    }

    fn columns(&self, out: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let pts = self.points.iter().filter(|p| p.heralds > 0);
        let theta = pts.clone().map(|p| p.theta).collect();
        let counts = pts
            .clone()
            .map(|p| if out == 1 { p.counts_out1 } else { p.counts_out2 } as f64)
            .collect();
        let exposure = pts.map(|p| p.heralds as f64).collect();
        (theta, counts, exposure)
    }
}

/// Fit the fringe seen at output 1.
pub fn fit_fringe(scan: &FringeScan) -> Result<FringeFit> {
    let (t, n, h) = scan.columns(1);
    fit_fringe_counts(&t, &n, &h)
}

pub fn fit_fringe_output_2(scan: &FringeScan) -> Result<FringeFit> {
    let (t, n, h) = scan.columns(2);
    fit_fringe_counts(&t, &n, &h)
}

/// Weighted least-squares fit of `counts_k / exposure_k = A(1 + V sin(θ_k + φ₀))` with Poisson weights.
pub fn fit_fringe_counts(theta: &[f64], counts: &[f64], exposure: &[f64]) -> Result<FringeFit> {
    if theta.len() != counts.len() || theta.len() != exposure.len() {
        return Err(Error::InvalidArgument("fringe columns differ in length".into()));
    }
    if counts.iter().any(|&c| c < 0.0 || !c.is_finite()) {
        return Err(Error::InvalidArgument("fringe counts must be non-negative".into()));
    }
    if exposure.iter().any(|&e| e <= 0.0) {
        return Err(Error::InvalidArgument("fringe exposure must be positive".into()));
    }
    let mut distinct: Vec<f64> = theta.iter().map(|t| t.rem_euclid(std::f64::consts::TAU)).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if distinct.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "fringe fit needs at least 4 distinct phases, got {}",
            distinct.len()
        )));
    }
    let rates: Vec<f64> = counts.iter().zip(exposure).map(|(c, e)| c / e).collect();
    let mut variance: Vec<f64> = counts.iter().zip(exposure).map(|(c, e)| c.max(1.0) / (e * e)).collect();
    let mut beta = Vector3::zeros();
    let mut cov = Matrix3::zeros();
    for _ in 0..4 {
        let mut xtwx = Matrix3::zeros();
        let mut xtwy = Vector3::zeros();
        for k in 0..theta.len() {
            let x = Vector3::new(1.0, theta[k].sin(), theta[k].cos());
            let w = 1.0 / variance[k];
            xtwx += w * x * x.transpose();
            xtwy += w * rates[k] * x;
        }
        cov = xtwx
            .try_inverse()
            .ok_or_else(|| Error::InsufficientData("degenerate fringe scan".into()))?;
        beta = cov * xtwy;
        // reweight with the Poisson variance of the fitted model
        for k in 0..theta.len() {
            let mu = beta[0] + beta[1] * theta[k].sin() + beta[2] * theta[k].cos();
            variance[k] = (mu * exposure[k]).max(0.5) / (exposure[k] * exposure[k]);
        }
    }
    let (a, b, c) = (beta[0], beta[1], beta[2]);
    let chi2 = (0..theta.len())
        .map(|k| {
            let mu = a + b * theta[k].sin() + c * theta[k].cos();
            (rates[k] - mu).powi(2) / variance[k]
        })
        .sum();
    if a <= 0.0 {
        return Ok(FringeFit {
            visibility: Estimate::new(0.0, 0.0),
            phase_offset: 0.0,
            mean_rate: a.max(0.0),
            chi2,
            dof: theta.len() - 3,
        });
    }
    let r = b.hypot(c);
    let v = r / a;
    let error = if r > 0.0 {
        let g = Vector3::new(-v / a, b / (a * r), c / (a * r));
        (g.transpose() * cov * g)[0].sqrt()
    } else {
        (0.5 * (cov[(1, 1)] + cov[(2, 2)])).sqrt() / a
    };
    Ok(FringeFit {
        visibility: Estimate::new(v.min(1.0), error),
        phase_offset: c.atan2(b),
        mean_rate: a,
        chi2,
        dof: theta.len() - 3,
    })
}

//! Small numerical helpers shared by the engines and the estimators.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erf;

/// A value with its one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }

    /// Distance from `target` in units of the error.
    pub fn pull(&self, target: f64) -> f64 {
        (self.value - target) / self.error
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Probability mass of a Gaussian (center `mean`, rms `sigma`) inside `[lo, hi]`.
pub fn gaussian_mass(mean: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    normal_cdf((hi - mean) / sigma) - normal_cdf((lo - mean) / sigma)
}

/// Upper-tail probability of a χ² statistic.
pub fn chi2_p_value(chi2: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    1.0 - dist.cdf(chi2)
}

/// Inverse-variance weighted mean of the estimates and the χ² of the set against it.
///
/// Entries with zero error are skipped.
pub fn weighted_mean_chi2(values: &[Estimate]) -> (Estimate, f64, usize) {
    let usable: Vec<_> = values.iter().filter(|e| e.error > 0.0 && e.value.is_finite()).collect();
    let wsum: f64 = usable.iter().map(|e| 1.0 / (e.error * e.error)).sum();
    if usable.is_empty() || wsum == 0.0 {
        return (Estimate::default(), 0.0, 0);
    }
    let mean = usable.iter().map(|e| e.value / (e.error * e.error)).sum::<f64>() / wsum;
    let chi2 = usable.iter().map(|e| ((e.value - mean) / e.error).powi(2)).sum();
    (Estimate::new(mean, wsum.recip().sqrt()), chi2, usable.len().saturating_sub(1))
}

/// Ordinary least-squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    LineFit { slope, intercept, r_squared }
}

/// Real trigonometric polynomial `c₀ + Σ_k (a_k cos kθ + b_k sin kθ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigSeries {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigSeries {
    /// Exact coefficients of a polynomial of degree ≤ `degree` from `2·degree + 1` equispaced samples.
    pub fn from_fn(degree: usize, f: impl Fn(f64) -> f64) -> Self {
        let n = 2 * degree + 1;
        let samples: Vec<(f64, f64)> = (0..n)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                (th, f(th))
            })
            .collect();
        let constant = samples.iter().map(|s| s.1).sum::<f64>() / n as f64;
        let coef = |k: usize, trig: fn(f64) -> f64| {
            2.0 / n as f64 * samples.iter().map(|(th, v)| v * trig(k as f64 * th)).sum::<f64>()
        };
        let cos = (1..=degree).map(|k| coef(k, f64::cos)).collect();
        let sin = (1..=degree).map(|k| coef(k, f64::sin)).collect();
        Self { constant, cos, sin }
    }

    pub fn degree(&self) -> usize {
        self.cos.len()
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let mut v = self.constant;
        for k in 0..self.cos.len() {
            let x = (k + 1) as f64 * theta;
            v += self.cos[k] * x.cos() + self.sin[k] * x.sin();
        }
        v
    }

    /// Scale harmonic `k` (1-based) by `factor(k)`.
    pub fn scale_harmonics(&self, factor: impl Fn(usize) -> f64) -> Self {
        Self {
            constant: self.constant,
            cos: self.cos.iter().enumerate().map(|(k, c)| c * factor(k + 1)).collect(),
            sin: self.sin.iter().enumerate().map(|(k, s)| s * factor(k + 1)).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &Self, w: f64) {
        let deg = self.degree().max(other.degree());
        self.cos.resize(deg, 0.0);
        self.sin.resize(deg, 0.0);
        self.constant += w * other.constant;
        for k in 0..other.degree() {
            self.cos[k] += w * other.cos[k];
            self.sin[k] += w * other.sin[k];
        }
    }

    pub fn zero(degree: usize) -> Self {
        Self { constant: 0.0, cos: vec![0.0; degree], sin: vec![0.0; degree] }
    }

    /// Global (min, max) over θ, by a dense grid refined with golden-section search.
    pub fn extrema(&self) -> (f64, f64) {
        if self.degree() == 0 {
            return (self.constant, self.constant);
        }
        const GRID: usize = 1440;
        let step = 2.0 * std::f64::consts::PI / GRID as f64;
        let vals: Vec<f64> = (0..GRID).map(|j| self.eval(j as f64 * step)).collect();
        let refine = |sign: f64| {
            let (best, _) = vals
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if sign * v > bv { (i, sign * v) } else { (bi, bv) });
            let center = best as f64 * step;
            let g = |x: f64| sign * self.eval(x);
            sign * golden_max(g, center - step, center + step)
        };
        (refine(-1.0), refine(1.0))
    }

    /// `(max − min)/(max + min)` over θ.
    pub fn visibility(&self) -> f64 {
        let (lo, hi) = self.extrema();
        if hi + lo > 0.0 {
            (hi - lo) / (hi + lo)
        } else {
            0.0
        }
    }
}

/// Maximize a unimodal function on `[a, b]`; returns the maximum value.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd).max(f(0.5 * (a + b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_series_recovers_coefficients() {
        let f = |t: f64| 1.0 + 0.3 * t.cos() - 0.2 * t.sin() + 0.05 * (2.0 * t).cos();
        let s = TrigSeries::from_fn(2, f);
        assert!((s.constant - 1.0).abs() < 1e-14);
        assert!((s.cos[0] - 0.3).abs() < 1e-14 && (s.sin[0] + 0.2).abs() < 1e-14);
        assert!((s.cos[1] - 0.05).abs() < 1e-14 && s.sin[1].abs() < 1e-14);
        for t in [0.1, 1.7, 4.0] {
            assert!((s.eval(t) - f(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn visibility_of_pure_cosine() {
        let s = TrigSeries::from_fn(1, |t| 2.0 * (1.0 + 0.84 * (t + 0.3).sin()));
        assert!((s.visibility() - 0.84).abs() < 1e-12);
    }

    #[test]
    fn line_fit_exact() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let l = fit_line(&x, &y);
        assert!((l.slope - 2.0).abs() < 1e-14 && (l.intercept - 1.0).abs() < 1e-14);
        assert!((l.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn chi2_against_mean() {
        let v = [Estimate::new(1.0, 0.1), Estimate::new(1.0, 0.2)];
        let (m, chi2, dof) = weighted_mean_chi2(&v);
        assert!((m.value - 1.0).abs() < 1e-15 && chi2 == 0.0 && dof == 1);
        assert!((chi2_p_value(3.841_458_820_694_124, 1) - 0.05).abs() < 1e-9);
    }

    #[test]
    fn gaussian_mass_90_percent() {
        let m = gaussian_mass(0.0, 200.0 / 1.644_853_626_951_472_2, -200.0, 200.0);
        assert!((m - 0.9).abs() < 1e-9);
    }
}

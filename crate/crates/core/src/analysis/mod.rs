//! Estimators of the heralded two-memory state from detection records.

mod coincidence;
pub mod estimators;
mod fringe;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::config::TomographyConfig;
use crate::error::{Error, Result};
use crate::stats::{weighted_mean_chi2, Estimate};

pub use coincidence::{aggregate, classify_heralds, count_coincidences, ClassifiedHerald, CoincidenceSettings, CoincidenceStats};
pub use estimators::{Backtraced, ConcurrenceEstimate, JointProbabilities};
pub use fringe::{fit_fringe, fit_fringe_counts, fit_fringe_output_2, FringeFit, FringePoint, FringeScan};

/// Upper error assigned to an outcome never observed: the 84 % one-sided Poisson limit.
pub const ZERO_COUNT_ERROR: f64 = 1.841;

/// `p_ij = n_ij / heralds` with binomial errors, optionally after subtracting control-window counts.
pub fn estimate_probabilities(
    stats: &CoincidenceStats,
    subtract_accidentals: bool,
) -> Result<(JointProbabilities, JointProbabilities)> {
    let h = stats.herald_count as f64;
    if stats.herald_count == 0 {
        return Err(Error::InsufficientData("no heralds with direct readout".into()));
    }
    let n = stats.counts().map(|c| c as f64);
    let acc = match (subtract_accidentals, stats.accidentals) {
        (true, Some(a)) => a.map(|c| c as f64),
        (true, None) => return Err(Error::InvalidArgument("no control window was counted".into())),
        _ => [0.0; 4],
    };
    let err = |c: f64, a: f64| {
        let p = c / h;
        let pa = a / h;
        if c == 0.0 {
            ZERO_COUNT_ERROR / h
        } else {
            ((p * (1.0 - p) + pa * (1.0 - pa)) / h).sqrt()
        }
    };
    let p01 = ((n[1] - acc[1]) / h).max(0.0);
    let p10 = ((n[2] - acc[2]) / h).max(0.0);
    let p11 = ((n[3] - acc[3]) / h).max(0.0);
    let p = JointProbabilities::new(1.0 - p01 - p10 - p11, p01, p10, p11);
    let e = JointProbabilities::new(err(n[0], acc[0]), err(n[1], acc[1]), err(n[2], acc[2]), err(n[3], acc[3]));
    Ok((p, e))
}

/// Inverse-variance combination of the fringes seen at both outputs.
pub fn scan_visibility(scan: &FringeScan) -> Result<(Estimate, f64, Vec<FringeFit>)> {
    let fits: Vec<FringeFit> = [fit_fringe(scan), fit_fringe_output_2(scan)].into_iter().collect::<Result<_>>()?;
    let vis: Vec<Estimate> = fits.iter().map(|f| f.visibility).collect();
    let (mean, _, _) = weighted_mean_chi2(&vis);
    let v = if mean.error > 0.0 { mean } else { vis[0] };
    Ok((Estimate::new(v.value.clamp(0.0, 1.0), v.error), fits[0].phase_offset, fits))
}

/// Reconstruction of the heralded state with uncertainties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tomography {
    pub config_digest: Option<String>,
    pub heralds: u64,
    pub probabilities: JointProbabilities,
    pub probability_errors: JointProbabilities,
    pub visibility: Estimate,
    pub fringe_fits: Vec<FringeFit>,
    pub phase_offset: f64,
    pub d: f64,
    pub concurrence: Estimate,
    pub concurrence_unclipped: f64,
    pub h2c: Option<Estimate>,
    pub effective_fidelity: Option<Estimate>,
    pub effective_fidelity_matrix: Option<f64>,
    pub backtraced: Option<Backtraced>,
    /// 4×4 over `{00, 01, 10, 11}`, as `[re, im]`.
    pub density_matrix: Vec<Vec<[f64; 2]>>,
    pub density_matrix_clipped: bool,
    pub error_method: ErrorMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMethod {
    Propagation,
    Bootstrap { resamples: usize, seed: u64 },
}

impl Tomography {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tomography serializes")
    }
}

/// Estimators from probabilities and visibility, with first-order errors.
pub fn tomography_from_estimates(
    p: JointProbabilities,
    errors: JointProbabilities,
    visibility: Estimate,
    phase_offset: f64,
    settings: &TomographyConfig,
) -> Tomography {
    let c = estimators::concurrence(&p, &errors, visibility);
    let h2c = estimators::h2c(&p, &errors).ok();
    let back = estimators::backtrace(
        &p,
        visibility.value,
        settings.backtrace_efficiency_a,
        settings.backtrace_efficiency_b,
    )
    .ok();
    let (fid_p, fid_e) = match back {
        Some(b) => (
            b.probabilities,
            JointProbabilities::new(
                0.0,
                errors.p01 / settings.backtrace_efficiency_b,
                errors.p10 / settings.backtrace_efficiency_a,
                errors.p11 / (settings.backtrace_efficiency_a * settings.backtrace_efficiency_b),
            ),
        ),
        None => (p, errors),
    };
    let effective_fidelity = estimators::effective_fidelity(&fid_p, &fid_e, visibility).ok();
    let effective_fidelity_matrix = estimators::effective_fidelity_matrix(&fid_p, visibility.value).ok();
    let (rho, clipped) = estimators::density_matrix(&p, c.d, phase_offset);
    let density_matrix = (0..4)
        .map(|i| (0..4).map(|j| [rho[(i, j)].re, rho[(i, j)].im]).collect())
        .collect();
    Tomography {
        config_digest: None,
        heralds: 0,
        probabilities: p,
        probability_errors: errors,
        visibility,
        fringe_fits: Vec::new(),
        phase_offset,
        d: c.d,
        concurrence: Estimate::new(c.value, c.error),
        concurrence_unclipped: c.unclipped,
        h2c,
        effective_fidelity,
        effective_fidelity_matrix,
        backtraced: back,
        density_matrix,
        density_matrix_clipped: clipped,
        error_method: ErrorMethod::Propagation,
    }
}

/// Full reconstruction from counted coincidences.
pub fn tomography(stats: &CoincidenceStats, settings: &TomographyConfig, subtract_accidentals: bool) -> Result<Tomography> {
    let (p, e) = estimate_probabilities(stats, subtract_accidentals)?;
    let (v, phase, fits) = scan_visibility(&stats.fringe)?;
    let mut t = tomography_from_estimates(p, e, v, phase, settings);
    t.heralds = stats.total_heralds;
    t.fringe_fits = fits;
    Ok(t)
}

/// Replace the propagated errors of C, h²_c and F_eff by the spread over resampled heralds.
pub fn bootstrap(
    stats: &CoincidenceStats,
    settings: &TomographyConfig,
    subtract_accidentals: bool,
    resamples: usize,
    seed: u64,
) -> Result<Tomography> {
    let mut base = tomography(stats, settings, subtract_accidentals)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws: [Vec<f64>; 4] = Default::default();
    for _ in 0..resamples {
        let mut s = stats.clone();
        let direct = multinomial(stats.herald_count, &stats.counts(), &mut rng)?;
        [s.n00, s.n01, s.n10, s.n11] = direct;
        for (pt, orig) in s.fringe.points.iter_mut().zip(&stats.fringe.points) {
            let only1 = orig.counts_out1 - orig.counts_both;
            let only2 = orig.counts_out2 - orig.counts_both;
            let none = orig.heralds - only1 - only2 - orig.counts_both;
            let [_, o2, o1, both] = multinomial(orig.heralds, &[none, only2, only1, orig.counts_both], &mut rng)?;
            pt.counts_out1 = o1 + both;
            pt.counts_out2 = o2 + both;
            pt.counts_both = both;
        }
        let Ok(t) = tomography(&s, settings, subtract_accidentals) else { continue };
        draws[0].push(t.concurrence.value);
        if let Some(h) = t.h2c {
            draws[1].push(h.value);
        }
        if let Some(f) = t.effective_fidelity {
            draws[2].push(f.value);
        }
        draws[3].push(t.visibility.value);
    }
    let sd = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    if draws[0].len() < 2 {
        return Err(Error::InsufficientData("too few successful bootstrap resamples".into()));
    }
    base.concurrence.error = sd(&draws[0]);
    if let Some(h) = base.h2c.as_mut() {
        h.error = sd(&draws[1]);
    }
    if let Some(f) = base.effective_fidelity.as_mut() {
        f.error = sd(&draws[2]);
    }
    base.visibility.error = sd(&draws[3]);
    base.error_method = ErrorMethod::Bootstrap { resamples, seed };
    Ok(base)
}

fn multinomial(n: u64, counts: &[u64; 4], rng: &mut ChaCha8Rng) -> Result<[u64; 4]> {
    let mut out = [0u64; 4];
    let mut left = n;
    let mut mass: u64 = counts.iter().sum();
    for i in 0..4 {
        if left == 0 || mass == 0 {
            break;
        }
        let p = (counts[i] as f64 / mass as f64).min(1.0);
        let k = if i == 3 {
            left
        } else {
            Binomial::new(left, p).map_err(|e| Error::InvalidArgument(e.to_string()))?.sample(rng)
        };
        out[i] = k;
        left -= k;
        mass -= counts[i];
    }
    Ok(out)
}

//! Temporal multiplexing: heralding rate and concurrence versus the number of
//! temporal modes allowed in each communication trial.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::analysis::{aggregate, classify_heralds, tomography, CoincidenceSettings};
use crate::config::{TimingConfig, TomographyConfig};
use crate::error::{Error, Result};
use crate::sim::{seconds_to_ps, EventStream};
use crate::stats::{chi2_p_value, fit_line, weighted_mean_chi2, Estimate, LineFit};

/// Which heralds of a trial count towards the rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptancePolicy {
    /// The earliest herald of each trial.
    #[default]
    FirstPerTrial,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeEntry {
    pub n_modes: usize,
    pub heralding_rate: f64,
    pub rate_error: f64,
    pub concurrence: Option<Estimate>,
    pub heralds_used: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub policy: AcceptancePolicy,
    pub entries: Vec<ModeEntry>,
}

impl ModeReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_modes,rate_hz,rate_err,concurrence,concurrence_err\n");
        for e in &self.entries {
            let (c, ce) = e.concurrence.map_or((f64::NAN, f64::NAN), |c| (c.value, c.error));
            s.push_str(&format!("{},{},{},{},{}\n", e.n_modes, e.heralding_rate, e.rate_error, c, ce));
        }
        s
    }

    /// Straight-line fit of the rate against the number of modes.
    pub fn rate_fit(&self) -> LineFit {
        let x: Vec<f64> = self.entries.iter().map(|e| e.n_modes as f64).collect();
        let y: Vec<f64> = self.entries.iter().map(|e| e.heralding_rate).collect();
        fit_line(&x, &y)
    }

    /// Weighted mean of the concurrence trace, its χ² against that mean, and the χ² p-value.
    pub fn concurrence_consistency(&self) -> (Estimate, f64, f64) {
        let c: Vec<Estimate> = self.entries.iter().filter_map(|e| e.concurrence).collect();
        let (mean, chi2, dof) = weighted_mean_chi2(&c);
        (mean, chi2, chi2_p_value(chi2, dof))
    }
}

/// Retag every record with the trial and mode it falls in, trials starting at `t = 0`.
pub fn assign_modes(stream: &EventStream, timing: &TimingConfig) -> Result<EventStream> {
    let (t_com, md) = (timing.communication_time, timing.mode_duration);
    if !(t_com > 0.0 && md > 0.0) {
        return Err(Error::InvalidArgument("communication time and mode duration must be positive".into()));
    }
    if md > t_com {
        return Err(Error::InvalidArgument(format!(
            "mode duration {md} s exceeds the communication time {t_com} s"
        )));
    }
    let (trial_ps, mode_ps) = (seconds_to_ps(t_com), seconds_to_ps(md));
    let mut out = stream.clone();
    for r in &mut out.records {
        let trial = r.time_ps / trial_ps;
        r.trial_index = u32::try_from(trial)
            .map_err(|_| Error::InvalidArgument("trial index exceeds 32 bits".into()))?;
        r.mode_index = u16::try_from((r.time_ps % trial_ps) / mode_ps)
            .map_err(|_| Error::InvalidArgument("mode index exceeds 16 bits".into()))?;
    }
    out.header.trial_length_ps = trial_ps;
    out.header.mode_duration_ps = mode_ps;
    out.header.modes_per_trial = timing.modes_per_trial() as u32;
    Ok(out)
}

/// Heralding rate and concurrence for every allowed mode count `1..=N_max`.
pub fn rate_vs_modes(
    stream: &EventStream,
    timing: &TimingConfig,
    tomography_settings: &TomographyConfig,
    policy: AcceptancePolicy,
) -> Result<ModeReport> {
    let tagged = assign_modes(stream, timing)?;
    let settings = CoincidenceSettings::from_timing(&tagged, timing);
    let heralds = classify_heralds(&tagged, &settings)?;
    if heralds.is_empty() {
        return Err(Error::InsufficientData("stream contains no heralds".into()));
    }
    let (trial_ps, mode_ps) = (tagged.header.trial_length_ps, tagged.header.mode_duration_ps);
    let tags: Vec<(u64, u64)> = heralds.iter().map(|h| (h.time_ps / trial_ps, (h.time_ps % trial_ps) / mode_ps)).collect();
    let mut first_mode: HashMap<u64, u64> = HashMap::new();
    for &(trial, mode) in &tags {
        first_mode.entry(trial).and_modify(|m| *m = (*m).min(mode)).or_insert(mode);
    }
    let mut seen = HashMap::new();
    let is_first: Vec<bool> = tags
        .iter()
        .map(|&(trial, mode)| mode == first_mode[&trial] && seen.insert(trial, ()).is_none())
        .collect();
    let n_max = timing.modes_per_trial();
    let duration = tagged.header.duration();
    let entries = (1..=n_max)
        .map(|n| {
            let accepted: Vec<_> = heralds
                .iter()
                .zip(&tags)
                .zip(&is_first)
                .filter(|((_, &(_, mode)), &first)| {
                    (mode as usize) < n && (policy == AcceptancePolicy::All || first)
                })
                .map(|((h, _), _)| *h)
                .collect();
            let count = accepted.len() as u64;
            let stats = aggregate(&tagged, &settings, &accepted);
            let concurrence = tomography(&stats, tomography_settings, false).ok().map(|t| t.concurrence);
            ModeEntry {
                n_modes: n,
                heralding_rate: count as f64 / duration,
                rate_error: (count as f64).sqrt() / duration,
                concurrence,
                heralds_used: count,
            }
        })
        .collect();
    Ok(ModeReport { policy, entries })
}

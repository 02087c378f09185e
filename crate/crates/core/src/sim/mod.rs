//! Monte Carlo generator of time-tagged detection events.
//!
//! Per-mode outcome probabilities come from the exact Fock-space model; the
//! generator only adds the temporal structure: lock/measure alternation,
//! communication trials, storage delay, echo jitter, phase drift and dead time.

pub mod phase;
pub mod stream;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::{HeraldPort, ValidatedConfig};
use crate::error::{Error, Result};
use crate::link::{self, ReadoutModel, ReadoutTables};

pub use phase::{phase_trajectory, sampled_phase_trajectory, LinkPhases, PhaseTrajectory, WienerPhase};
pub use stream::{read_stream, write_stream, Channel, EventRecord, EventStream, StreamHeader, FORMAT_VERSION};

pub fn seconds_to_ps(s: f64) -> u64 {
    (s * 1e12).round() as u64
}

/// What the readout stage measures during one measure stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutSetting {
    /// Each memory on its own detector.
    Direct,
    /// Memories interfered at the analysis phase with this index.
    Fringe(usize),
}

/// Even cycles read out directly; odd cycles step through the analysis phases.
pub fn readout_setting(cycle: u64, n_phases: usize) -> ReadoutSetting {
    if n_phases == 0 || cycle % 2 == 0 {
        ReadoutSetting::Direct
    } else {
        ReadoutSetting::Fringe(((cycle / 2) % n_phases as u64) as usize)
    }
}

struct Branch {
    probability: f64,
    channels: &'static [Channel],
    tables: Option<ReadoutTables>,
}

#[derive(Clone, Copy)]
struct Echo {
    offset: f64,
    width: f64,
}

/// Precomputed per-configuration quantities shared by all cycles.
pub struct Simulator {
    config: ValidatedConfig,
    branches: Vec<Branch>,
    herald_probability: f64,
    dark_1: f64,
    dark_2: f64,
    event_probability: f64,
    echo: [Echo; 2],
    half_window: f64,
    delay_ps: u64,
    trial_ps: u64,
    mode_ps: u64,
    modes_per_trial: u64,
    cycle_ps: u64,
    measure_ps: u64,
    dead_ps: [u64; 4],
}

impl Simulator {
    pub fn new(config: &ValidatedConfig) -> Result<Self> {
        let pre = link::build_pre_herald_state(config)?;
        let hb = link::herald_branches(
            &pre,
            &config.herald_detector_plus,
            &config.herald_detector_minus,
            config.link.idler_mode_overlap,
        )?;
        let model = ReadoutModel::from_config(config, false);
        let make = |b: link::HeraldBranch, channels: &'static [Channel]| -> Result<Branch> {
            let tables = b.state.as_ref().map(|s| link::readout_tables(s, &model)).transpose()?;
            Ok(Branch { probability: b.probability, channels, tables })
        };
        let branches = vec![
            make(hb.plus_only, &[Channel::HeraldPlus])?,
            make(hb.minus_only, &[Channel::HeraldMinus])?,
            make(hb.both, &[Channel::HeraldPlus, Channel::HeraldMinus])?,
        ];
        let herald_probability: f64 = branches.iter().map(|b| b.probability).sum();
        let dark_1 = config.readout_detector_1.dark_click_probability_per_window;
        let dark_2 = config.readout_detector_2.dark_click_probability_per_window;
        let dark_any = 1.0 - (1.0 - dark_1) * (1.0 - dark_2);
        let event_probability = (herald_probability + (1.0 - herald_probability) * dark_any).min(1.0);
        let (oa, ob) = link::echo_offsets(config);
        let t = &config.timing;
        let modes_per_trial = t.modes_per_trial() as u64;
        if modes_per_trial > u16::MAX as u64 + 1 {
            return Err(Error::InvalidArgument(format!("{modes_per_trial} modes per trial exceed the stream format")));
        }
        Ok(Self {
            config: config.clone(),
            branches,
            herald_probability,
            dark_1,
            dark_2,
            event_probability,
            echo: [
                Echo { offset: oa, width: config.memory_a.echo_rms_width },
                Echo { offset: ob, width: config.memory_b.echo_rms_width },
            ],
            half_window: 0.5 * t.coincidence_window,
            delay_ps: seconds_to_ps(link::readout_delay(config)),
            trial_ps: seconds_to_ps(t.trial_length()),
            mode_ps: seconds_to_ps(t.mode_duration),
            modes_per_trial,
            cycle_ps: seconds_to_ps(t.cycle_period()),
            measure_ps: seconds_to_ps(t.measure_period),
            dead_ps: [
                seconds_to_ps(config.herald_detector_plus.dead_time),
                seconds_to_ps(config.herald_detector_minus.dead_time),
                seconds_to_ps(config.readout_detector_1.dead_time),
                seconds_to_ps(config.readout_detector_2.dead_time),
            ],
        })
    }

    /// Click probability of either herald detector in one temporal mode.
    pub fn herald_probability(&self) -> f64 {
        self.herald_probability
    }

    pub fn header(&self, seed: u64, duration: f64) -> StreamHeader {
        let t = &self.config.timing;
        StreamHeader {
            version: FORMAT_VERSION,
            config_digest: self.config.digest_bytes(),
            seed,
            duration_ps: seconds_to_ps(duration),
            lock_period_ps: self.cycle_ps - self.measure_ps,
            measure_period_ps: self.measure_ps,
            trial_length_ps: self.trial_ps,
            mode_duration_ps: self.mode_ps,
            modes_per_trial: self.modes_per_trial as u32,
            readout_delay_ps: self.delay_ps,
            coincidence_window_ps: seconds_to_ps(t.coincidence_window),
            herald_port: self.config.link.herald_port,
            fringe_phases: self.config.tomography.fringe_phases.clone(),
        }
    }

    pub fn run(&self, seed: u64, duration: f64) -> Result<EventStream> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidArgument(format!("duration must be positive, got {duration}")));
        }
        let header = self.header(seed, duration);
        let n_cycles = header.duration_ps.div_ceil(self.cycle_ps);
        let per_cycle: Vec<Vec<EventRecord>> = (0..n_cycles)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c);
                self.cycle_events(c, header.duration_ps, &mut rng)
            })
            .collect::<Result<_>>()?;
        let mut records: Vec<EventRecord> = per_cycle.into_iter().flatten().collect();
        records.par_sort_by_key(|r| (r.time_ps, r.channel));
        let records = self.apply_dead_time(records);
        Ok(EventStream { header, records })
    }

    fn cycle_events(&self, c: u64, duration_ps: u64, rng: &mut ChaCha8Rng) -> Result<Vec<EventRecord>> {
        let mut out = Vec::new();
        let start = c * self.cycle_ps;
        let end = (start + self.measure_ps).min(duration_ps);
        // the readout of the last trial must also land inside the measure stage
        let guard = self.delay_ps + seconds_to_ps(self.half_window);
        let first_trial = start.div_ceil(self.trial_ps);
        let last_trial = end.saturating_sub(guard) / self.trial_ps;
        if last_trial <= first_trial || self.event_probability <= 0.0 {
            return Ok(out);
        }
        let n_slots = (last_trial - first_trial) * self.modes_per_trial;
        let setting = readout_setting(c, self.config.tomography.fringe_phases.len());
        let mut phases = LinkPhases::from_config(&self.config);
        phases.relock(rng);
        let mut phase_time = start;
        let geometric = Geometric::new(self.event_probability)
            .map_err(|e| Error::InvalidArgument(format!("event probability: {e}")))?;
        let mut slot = 0u64;
        loop {
            slot = slot.saturating_add(geometric.sample(rng));
            if slot >= n_slots {
                break;
            }
            let trial = first_trial + slot / self.modes_per_trial;
            let mode = slot % self.modes_per_trial;
            let trial_index = u32::try_from(trial)
                .map_err(|_| Error::InvalidArgument("run too long for 32-bit trial indices".into()))?;
            let herald_ps = trial * self.trial_ps + mode * self.mode_ps + self.mode_ps / 2;
            let record = |time_ps: u64, channel: Channel| EventRecord {
                time_ps,
                channel,
                trial_index,
                mode_index: mode as u16,
            };
            let mut u = rng.random::<f64>() * self.event_probability;
            let mut heralded = None;
            for b in &self.branches {
                if u < b.probability {
                    heralded = Some(b);
                    break;
                }
                u -= b.probability;
            }
            match heralded {
                Some(b) => {
                    for &ch in b.channels {
                        out.push(record(herald_ps, ch));
                    }
                    let tables = b.tables.as_ref().expect("populated branch has a state");
                    let probs = match setting {
                        ReadoutSetting::Direct => tables.direct,
                        ReadoutSetting::Fringe(i) => {
                            phases.advance((herald_ps - phase_time) as f64 * 1e-12, rng);
                            phase_time = herald_ps;
                            let theta = self.config.tomography.fringe_phases[i] + phases.total();
                            tables.fringe_at(theta)
                        }
                    };
                    let pattern = sample_index(&probs, rng);
                    for (clicked, channel, direct_arm) in
                        [(pattern & 2 != 0, Channel::Readout1, 0), (pattern & 1 != 0, Channel::Readout2, 1)]
                    {
                        if clicked {
                            let arm = match setting {
                                ReadoutSetting::Direct => direct_arm,
                                ReadoutSetting::Fringe(_) => rng.random_range(0..2),
                            };
                            out.push(record(self.echo_time(herald_ps, self.echo[arm], rng), channel));
                        }
                    }
                }
                None => {
                    let (d1, d2) = (self.dark_1, self.dark_2);
                    let pattern = sample_index(&[0.0, (1.0 - d1) * d2, d1 * (1.0 - d2), d1 * d2], rng);
                    for (clicked, channel) in [(pattern & 2 != 0, Channel::Readout1), (pattern & 1 != 0, Channel::Readout2)] {
                        if clicked {
                            let x = (rng.random::<f64>() * 2.0 - 1.0) * self.half_window;
                            out.push(record(self.offset_time(herald_ps, x), channel));
                        }
                    }
                }
            }
            slot += 1;
        }
        Ok(out)
    }

    /// Echo arrival inside the coincidence window, drawn from the truncated echo envelope.
    fn echo_time(&self, herald_ps: u64, echo: Echo, rng: &mut impl Rng) -> u64 {
        let h = self.half_window;
        let x = if echo.width > 0.0 {
            let n = Normal::new(echo.offset, echo.width).expect("positive width");
            let (lo, hi) = (n.cdf(-h), n.cdf(h));
            n.inverse_cdf(lo + rng.random::<f64>() * (hi - lo)).clamp(-h, h)
        } else {
            echo.offset.clamp(-h, h)
        };
        self.offset_time(herald_ps, x)
    }

    fn offset_time(&self, herald_ps: u64, offset_s: f64) -> u64 {
        let t = herald_ps as i128 + self.delay_ps as i128 + (offset_s * 1e12).round() as i128;
        t.max(0) as u64
    }

    fn apply_dead_time(&self, records: Vec<EventRecord>) -> Vec<EventRecord> {
        if self.dead_ps.iter().all(|&d| d == 0) {
            return records;
        }
        let mut last: [Option<u64>; 4] = [None; 4];
        records
            .into_iter()
            .filter(|r| {
                let ch = r.channel as usize;
                let keep = last[ch].is_none_or(|t| r.time_ps - t >= self.dead_ps[ch]);
                if keep {
                    last[ch] = Some(r.time_ps);
                }
                keep
            })
            .collect()
    }
}

fn sample_index(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Generate the event stream of `duration` seconds of wall time.
pub fn simulate(config: &ValidatedConfig, seed: u64, duration: f64) -> Result<EventStream> {
    Simulator::new(config)?.run(seed, duration)
}

/// The herald channel selected by the configuration.
pub fn herald_channel(port: HeraldPort) -> Channel {
    Channel::herald(port)
}

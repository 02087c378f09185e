use serde::{Deserialize, Serialize};

use crate::config::TimingConfig;
use crate::error::{Error, Result};
use crate::sim::{readout_setting, seconds_to_ps, Channel, EventStream, ReadoutSetting};

use super::fringe::FringeScan;

/// Where to look for readout clicks relative to each herald.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoincidenceSettings {
    pub window_ps: u64,
    pub delay_ps: u64,
    /// Extra delay of a control window used to estimate accidentals.
    pub accidental_shift_ps: Option<u64>,
}

impl CoincidenceSettings {
    pub fn from_stream(stream: &EventStream) -> Self {
        Self {
            window_ps: stream.header.coincidence_window_ps,
            delay_ps: stream.header.readout_delay_ps,
            accidental_shift_ps: None,
        }
    }

    /// Window from `timing`, storage delay from the stream header.
    pub fn from_timing(stream: &EventStream, timing: &TimingConfig) -> Self {
        Self { window_ps: seconds_to_ps(timing.coincidence_window), ..Self::from_stream(stream) }
    }

    /// Control window shifted by the trial length, or by one window if that is shorter.
    pub fn with_accidentals(mut self, stream: &EventStream) -> Self {
        self.accidental_shift_ps = Some(stream.header.trial_length_ps.max(self.window_ps));
        self
    }
}

/// Herald-conditioned readout counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceStats {
    /// Heralds taken with direct readout; the denominator of every `n_ij`.
    pub herald_count: u64,
    pub n00: u64,
    pub n01: u64,
    pub n10: u64,
    pub n11: u64,
    /// Direct-readout patterns seen in the shifted control window.
    pub accidentals: Option<[u64; 4]>,
    /// Heralds of every readout setting.
    pub total_heralds: u64,
    /// Measuring time, lock stages excluded.
    pub integration_time: f64,
    pub duration: f64,
    pub fringe: FringeScan,
}

impl CoincidenceStats {
    pub fn counts(&self) -> [u64; 4] {
        [self.n00, self.n01, self.n10, self.n11]
    }
}

struct Clicks<'a> {
    times: [Vec<u64>; 2],
    settings: &'a CoincidenceSettings,
}

impl Clicks<'_> {
    fn any_in(&self, ch: usize, lo: i128, hi: i128) -> bool {
        let t = &self.times[ch];
        let lo = lo.max(0) as u64;
        if hi < 0 {
            return false;
        }
        let i = t.partition_point(|&x| x < lo);
        i < t.len() && (t[i] as i128) <= hi
    }

    /// Readout pattern `2·c1 + c2` in the window after a herald at `t`, optionally shifted.
    fn pattern(&self, t: u64, shift: u64) -> usize {
        let center = t as i128 + self.settings.delay_ps as i128 + shift as i128;
        let half = (self.settings.window_ps / 2) as i128;
        let (lo, hi) = (center - half, center + half);
        (self.any_in(0, lo, hi) as usize) << 1 | self.any_in(1, lo, hi) as usize
    }
}

/// One herald with the readout pattern `2·c1 + c2` found in its window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifiedHerald {
    pub time_ps: u64,
    pub setting: ReadoutSetting,
    pub pattern: u8,
    pub accidental: Option<u8>,
}

/// Readout pattern after every herald of the configured port, in time order.
pub fn classify_heralds(stream: &EventStream, settings: &CoincidenceSettings) -> Result<Vec<ClassifiedHerald>> {
    stream.check_order()?;
    let h = &stream.header;
    if h.cycle_period_ps() == 0 {
        return Err(Error::InvalidArgument("stream header has a zero cycle period".into()));
    }
    let herald = Channel::herald(h.herald_port);
    let mut times = [Vec::new(), Vec::new()];
    let mut heralds = Vec::new();
    for r in &stream.records {
        match r.channel {
            Channel::Readout1 => times[0].push(r.time_ps),
            Channel::Readout2 => times[1].push(r.time_ps),
            c if c == herald => heralds.push(r.time_ps),
            _ => {}
        }
    }
    let clicks = Clicks { times, settings };
    let n_phases = h.fringe_phases.len();
    Ok(heralds
        .into_iter()
        .map(|t| {
            let setting = readout_setting(t / h.cycle_period_ps(), n_phases);
            let accidental = match (setting, settings.accidental_shift_ps) {
                (ReadoutSetting::Direct, Some(shift)) => Some(clicks.pattern(t, shift) as u8),
                _ => None,
            };
            ClassifiedHerald { time_ps: t, setting, pattern: clicks.pattern(t, 0) as u8, accidental }
        })
        .collect())
}

/// Aggregate classified heralds into coincidence statistics.
pub fn aggregate<'a>(
    stream: &EventStream,
    settings: &CoincidenceSettings,
    heralds: impl IntoIterator<Item = &'a ClassifiedHerald>,
) -> CoincidenceStats {
    let h = &stream.header;
    let mut direct = [0u64; 4];
    let mut accidental = [0u64; 4];
    let mut direct_heralds = 0u64;
    let mut total = 0u64;
    let mut fringe = FringeScan::empty(&h.fringe_phases);
    for c in heralds {
        total += 1;
        match c.setting {
            ReadoutSetting::Direct => {
                direct_heralds += 1;
                direct[c.pattern as usize] += 1;
                if let Some(a) = c.accidental {
                    accidental[a as usize] += 1;
                }
            }
            ReadoutSetting::Fringe(i) => fringe.record(i, c.pattern as usize),
        }
    }
    let cycle = h.cycle_period_ps().max(1);
    let (full_cycles, rest) = (h.duration_ps / cycle, h.duration_ps % cycle);
    let measure_ps = full_cycles * h.measure_period_ps + rest.min(h.measure_period_ps);
    CoincidenceStats {
        herald_count: direct_heralds,
        n00: direct[0],
        n01: direct[1],
        n10: direct[2],
        n11: direct[3],
        accidentals: settings.accidental_shift_ps.map(|_| accidental),
        total_heralds: total,
        integration_time: measure_ps as f64 * 1e-12,
        duration: h.duration(),
        fringe,
    }
}

/// Classify the readout clicks that follow each herald.
pub fn count_coincidences(stream: &EventStream, settings: &CoincidenceSettings) -> Result<CoincidenceStats> {
    let heralds = classify_heralds(stream, settings)?;
    Ok(aggregate(stream, settings, &heralds))
}

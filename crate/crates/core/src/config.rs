//! Link configuration: sources, channels, memories, detectors and timing.
//!
//! Configuration files are TOML with one section per component. Losses may
//! be given either as a linear `transmission` or as `transmission_db`; after
//! [`validate`] every channel carries a linear transmission and every memory
//! carries its derived comb period.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, Violation};

/// Convert a loss in dB to a linear transmission.
pub fn db_to_transmission(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Convert a linear transmission to a loss in dB.
pub fn transmission_to_db(transmission: f64) -> f64 {
    -10.0 * transmission.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SourceStatistics {
    /// Thermal pair-number distribution of a single SPDC mode.
    #[default]
    Thermal,
    /// Poissonian pair-number distribution, exposed for sensitivity checks.
    Poissonian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HeraldPort {
    #[default]
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    pub mean_pair_probability_per_mode: f64,
    #[serde(default = "default_bandwidth")]
    pub biphoton_bandwidth: f64,
    #[serde(default = "default_signal_wavelength")]
    pub signal_wavelength: f64,
    #[serde(default = "default_idler_wavelength")]
    pub idler_wavelength: f64,
}

fn default_bandwidth() -> f64 {
    1.8e6
}
fn default_signal_wavelength() -> f64 {
    606.0
}
fn default_idler_wavelength() -> f64 {
    1436.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transmission: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transmission_db: Option<f64>,
    #[serde(default)]
    pub static_phase: f64,
    /// Random-walk coefficient of the channel phase, rad²/s.
    #[serde(default)]
    pub phase_diffusion: f64,
    #[serde(default)]
    pub propagation_delay: f64,
}

impl ChannelParams {
    pub fn lossless() -> Self {
        Self {
            transmission: Some(1.0),
            transmission_db: None,
            static_phase: 0.0,
            phase_diffusion: 0.0,
            propagation_delay: 0.0,
        }
    }

    /// Linear transmission. Valid after [`validate`].
    pub fn transmission(&self) -> f64 {
        match (self.transmission, self.transmission_db) {
            (Some(t), _) => t,
            (None, Some(db)) => db_to_transmission(db),
            (None, None) => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryParams {
    /// AFC storage time τ, seconds.
    pub storage_time: f64,
    /// Comb period Δ = 1/τ, Hz. Derived by [`validate`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comb_period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency_at_tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency_zero: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_constant: Option<f64>,
    /// `[storage_time, efficiency]` pairs, linearly interpolated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency_table: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub echo_center_offset: f64,
    pub echo_rms_width: f64,
}

impl MemoryParams {
    /// Combined absorption and retrieval efficiency at the configured storage time.
    pub fn efficiency(&self) -> f64 {
        self.efficiency_at(self.storage_time).unwrap_or(0.0)
    }

    fn efficiency_at(&self, tau: f64) -> Option<f64> {
        if let Some(table) = &self.efficiency_table {
            return interpolate(table, tau);
        }
        if let Some(e) = self.efficiency_at_tau {
            return Some(e);
        }
        match (self.efficiency_zero, self.decay_constant) {
            (Some(e0), Some(t)) => Some(e0 * (-tau / t).exp()),
            _ => None,
        }
    }

    /// Change the storage time, keeping the efficiency model.
    pub fn with_storage_time(&self, tau: f64) -> Self {
        Self { storage_time: tau, comb_period: None, ..self.clone() }
    }
}

fn interpolate(table: &[[f64; 2]], x: f64) -> Option<f64> {
    let first = table.first()?;
    let last = table.last()?;
    let eps = 1e-12 * x.abs().max(1e-30);
    if x < first[0] - eps || x > last[0] + eps {
        return None;
    }
    if table.len() == 1 {
        return Some(first[1]);
    }
    for w in table.windows(2) {
        let ([x0, y0], [x1, y1]) = (w[0], w[1]);
        if x <= x1 + eps {
            let f = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
            return Some(y0 + f * (y1 - y0));
        }
    }
    Some(last[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    pub efficiency: f64,
    #[serde(default)]
    pub dark_click_probability_per_window: f64,
    #[serde(default)]
    pub dead_time: f64,
}

impl DetectorParams {
    pub fn ideal() -> Self {
        Self { efficiency: 1.0, dark_click_probability_per_window: 0.0, dead_time: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingConfig {
    #[serde(default = "default_400ns")]
    pub mode_duration: f64,
    #[serde(default = "default_400ns")]
    pub coincidence_window: f64,
    #[serde(default = "default_duty")]
    pub duty_cycle: f64,
    #[serde(default = "default_measure")]
    pub measure_period: f64,
    /// Derived from `measure_period` and `duty_cycle` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lock_period: Option<f64>,
    #[serde(default)]
    pub communication_time: f64,
    /// RMS relative phase left by each lock stage, radians.
    #[serde(default = "default_residual")]
    pub lock_residual: f64,
}

fn default_400ns() -> f64 {
    400e-9
}
fn default_duty() -> f64 {
    0.43
}
fn default_measure() -> f64 {
    10e-3
}
fn default_residual() -> f64 {
    0.05
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            mode_duration: default_400ns(),
            coincidence_window: default_400ns(),
            duty_cycle: default_duty(),
            measure_period: default_measure(),
            lock_period: None,
            communication_time: 0.0,
            lock_residual: default_residual(),
        }
    }
}

impl TimingConfig {
    pub fn lock_period(&self) -> f64 {
        self.lock_period
            .unwrap_or(self.measure_period * (1.0 / self.duty_cycle - 1.0))
    }

    pub fn cycle_period(&self) -> f64 {
        self.measure_period + self.lock_period()
    }

    /// Length of one communication trial; a single mode when `t_com` is shorter.
    pub fn trial_length(&self) -> f64 {
        self.communication_time.max(self.mode_duration)
    }

    pub fn modes_per_trial(&self) -> usize {
        ((self.trial_length() / self.mode_duration) * (1.0 + 1e-12)).floor() as usize
    }

    /// Temporal modes offered per second of measuring time.
    pub fn mode_attempt_rate(&self) -> f64 {
        self.modes_per_trial() as f64 / self.trial_length()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkOptions {
    #[serde(default = "default_overlap")]
    pub idler_mode_overlap: f64,
    #[serde(default)]
    pub herald_port: HeraldPort,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default)]
    pub source_statistics: SourceStatistics,
}

fn default_overlap() -> f64 {
    1.0
}
fn default_truncation() -> usize {
    2
}

impl Default for LinkOptions {
    fn default() -> Self {
        Self {
            idler_mode_overlap: default_overlap(),
            herald_port: HeraldPort::Plus,
            truncation: default_truncation(),
            source_statistics: SourceStatistics::Thermal,
        }
    }
}

/// How measurement cycles are split between direct detection and the fringe scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyConfig {
    /// Analysis phases θ of the signal interferometer. Empty means direct detection only.
    #[serde(default = "default_phases")]
    pub fringe_phases: Vec<f64>,
    /// Signal-path efficiency between each crystal and its readout, used for back-tracing.
    #[serde(default = "default_one")]
    pub backtrace_efficiency_a: f64,
    #[serde(default = "default_one")]
    pub backtrace_efficiency_b: f64,
}

fn default_phases() -> Vec<f64> {
    (0..8).map(|k| k as f64 * std::f64::consts::PI / 4.0).collect()
}
fn default_one() -> f64 {
    1.0
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            fringe_phases: default_phases(),
            backtrace_efficiency_a: 1.0,
            backtrace_efficiency_b: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub source_a: SourceParams,
    pub source_b: SourceParams,
    pub idler_channel_a: ChannelParams,
    pub idler_channel_b: ChannelParams,
    pub signal_channel_a: ChannelParams,
    pub signal_channel_b: ChannelParams,
    pub memory_a: MemoryParams,
    pub memory_b: MemoryParams,
    pub herald_detector_plus: DetectorParams,
    pub herald_detector_minus: DetectorParams,
    pub readout_detector_1: DetectorParams,
    pub readout_detector_2: DetectorParams,
    #[serde(default)]
    pub timing: TimingConfig,
    #[serde(default)]
    pub link: LinkOptions,
    #[serde(default)]
    pub tomography: TomographyConfig,
}

impl LinkConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    /// Parse a TOML document after applying `key.path=value` overrides.
    pub fn from_toml_str_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::ConfigParse(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml_str_with_overrides(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// A lossless, dark-count-free symmetric link with the given pair probability.
    pub fn ideal(pair_probability: f64) -> Self {
        let source = SourceParams {
            mean_pair_probability_per_mode: pair_probability,
            biphoton_bandwidth: default_bandwidth(),
            signal_wavelength: default_signal_wavelength(),
            idler_wavelength: default_idler_wavelength(),
        };
        let memory = MemoryParams {
            storage_time: 2e-6,
            comb_period: None,
            efficiency_at_tau: Some(1.0),
            efficiency_zero: None,
            decay_constant: None,
            efficiency_table: None,
            echo_center_offset: 0.0,
            echo_rms_width: 20e-9,
        };
        LinkConfig {
            source_a: source.clone(),
            source_b: source,
            idler_channel_a: ChannelParams::lossless(),
            idler_channel_b: ChannelParams::lossless(),
            signal_channel_a: ChannelParams::lossless(),
            signal_channel_b: ChannelParams::lossless(),
            memory_a: memory.clone(),
            memory_b: memory,
            herald_detector_plus: DetectorParams::ideal(),
            herald_detector_minus: DetectorParams::ideal(),
            readout_detector_1: DetectorParams::ideal(),
            readout_detector_2: DetectorParams::ideal(),
            timing: TimingConfig { lock_residual: 0.0, ..TimingConfig::default() },
            link: LinkOptions::default(),
            tomography: TomographyConfig::default(),
        }
    }
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::ConfigParse(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let value = parse_override_value(raw.trim());
    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| {
        Error::ConfigParse(format!("override `{assignment}` has an empty key"))
    })?;
    let mut node = table;
    for part in parts {
        node = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::ConfigParse(format!("override path `{key}` crosses a value")))?;
    }
    // Alternative spellings of the same quantity are mutually exclusive.
    let exclusive: &[&str] = match leaf {
        "transmission" => &["transmission_db"],
        "transmission_db" => &["transmission"],
        "efficiency_at_tau" | "efficiency_zero" | "decay_constant" | "efficiency_table" => {
            &["efficiency_at_tau", "efficiency_zero", "decay_constant", "efficiency_table"]
        }
        "storage_time" => &["comb_period"],
        "duty_cycle" | "measure_period" => &["lock_period"],
        _ => &[],
    };
    for k in exclusive {
        node.remove(*k);
    }
    node.insert(leaf.to_string(), value);
    Ok(())
}

fn parse_override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// A configuration that satisfies every invariant, in normalized form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedConfig(LinkConfig);

impl ValidatedConfig {
    pub fn config(&self) -> &LinkConfig {
        &self.0
    }

    pub fn into_inner(self) -> LinkConfig {
        self.0
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(self.digest_bytes())
    }

    pub fn digest_bytes(&self) -> [u8; 32] {
        let bytes = serde_json::to_vec(&self.0).expect("config serializes to JSON");
        Sha256::digest(&bytes).into()
    }
}

impl std::ops::Deref for ValidatedConfig {
    type Target = LinkConfig;
    fn deref(&self) -> &LinkConfig {
        &self.0
    }
}

fn check_range(v: &mut Vec<Violation>, path: &str, name: &str, x: f64, lo: f64, hi: f64) {
    if !(x >= lo && x <= hi) {
        v.push(Violation::new(path, format!("{name} out of range [{lo}, {hi}]: {x}")));
    }
}

fn check_positive(v: &mut Vec<Violation>, path: &str, name: &str, x: f64) {
    if !(x > 0.0 && x.is_finite()) {
        v.push(Violation::new(path, format!("{name} must be positive: {x}")));
    }
}

fn check_non_negative(v: &mut Vec<Violation>, path: &str, name: &str, x: f64) {
    if !(x >= 0.0 && x.is_finite()) {
        v.push(Violation::new(path, format!("{name} must be non-negative: {x}")));
    }
}

/// Check every invariant and return the normalized configuration, or all violations.
pub fn validate(config: LinkConfig) -> Result<ValidatedConfig> {
    let mut c = config;
    let mut v = Vec::new();

    for (name, s) in [("source_a", &c.source_a), ("source_b", &c.source_b)] {
        let p = s.mean_pair_probability_per_mode;
        if !(0.0..1.0).contains(&p) {
            v.push(Violation::new(
                format!("{name}.mean_pair_probability_per_mode"),
                format!("mean_pair_probability_per_mode out of range [0, 1): {p}"),
            ));
        }
        check_positive(&mut v, &format!("{name}.biphoton_bandwidth"), "biphoton_bandwidth", s.biphoton_bandwidth);
    }

    for (name, ch) in [
        ("idler_channel_a", &mut c.idler_channel_a),
        ("idler_channel_b", &mut c.idler_channel_b),
        ("signal_channel_a", &mut c.signal_channel_a),
        ("signal_channel_b", &mut c.signal_channel_b),
    ] {
        match (ch.transmission, ch.transmission_db) {
            (Some(_), Some(_)) => v.push(Violation::new(
                format!("{name}.transmission"),
                "give either transmission or transmission_db, not both",
            )),
            (None, Some(db)) => {
                check_non_negative(&mut v, &format!("{name}.transmission_db"), "transmission_db", db);
                ch.transmission = Some(db_to_transmission(db));
                ch.transmission_db = None;
            }
            (None, None) => ch.transmission = Some(1.0),
            (Some(_), None) => {}
        }
        check_range(&mut v, &format!("{name}.transmission"), "transmission", ch.transmission(), 0.0, 1.0);
        check_non_negative(&mut v, &format!("{name}.phase_diffusion"), "phase_diffusion", ch.phase_diffusion);
        check_non_negative(&mut v, &format!("{name}.propagation_delay"), "propagation_delay", ch.propagation_delay);
        if !ch.static_phase.is_finite() {
            v.push(Violation::new(format!("{name}.static_phase"), "static_phase must be finite"));
        }
    }

    for (name, m) in [("memory_a", &mut c.memory_a), ("memory_b", &mut c.memory_b)] {
        check_positive(&mut v, &format!("{name}.storage_time"), "storage_time", m.storage_time);
        if m.storage_time > 0.0 {
            let derived = 1.0 / m.storage_time;
            if let Some(delta) = m.comb_period {
                if ((delta - derived) / derived).abs() > 1e-12 {
                    v.push(Violation::new(
                        format!("{name}.comb_period"),
                        format!("comb_period must equal 1/storage_time ({derived}): {delta}"),
                    ));
                }
            }
            m.comb_period = Some(derived);
        }
        let forms = [
            m.efficiency_table.is_some(),
            m.efficiency_at_tau.is_some(),
            m.efficiency_zero.is_some() || m.decay_constant.is_some(),
        ];
        match forms.iter().filter(|&&f| f).count() {
            0 => v.push(Violation::new(
                format!("{name}.efficiency_at_tau"),
                "no efficiency given (efficiency_at_tau, efficiency_zero+decay_constant or efficiency_table)",
            )),
            1 => {}
            _ => v.push(Violation::new(
                format!("{name}.efficiency_at_tau"),
                "give exactly one efficiency model",
            )),
        }
        if let Some(table) = &m.efficiency_table {
            if table.is_empty() {
                v.push(Violation::new(format!("{name}.efficiency_table"), "efficiency_table is empty"));
            }
            if table.windows(2).any(|w| w[1][0] <= w[0][0]) {
                v.push(Violation::new(
                    format!("{name}.efficiency_table"),
                    "storage times in efficiency_table must be strictly increasing",
                ));
            }
            for row in table {
                check_range(&mut v, &format!("{name}.efficiency_table"), "efficiency", row[1], 0.0, 1.0);
            }
        }
        if let Some(e) = m.efficiency_at_tau {
            check_range(&mut v, &format!("{name}.efficiency_at_tau"), "efficiency_at_tau", e, 0.0, 1.0);
        }
        if m.efficiency_zero.is_some() != m.decay_constant.is_some() {
            v.push(Violation::new(
                format!("{name}.decay_constant"),
                "efficiency_zero and decay_constant must be given together",
            ));
        }
        if let Some(e0) = m.efficiency_zero {
            check_range(&mut v, &format!("{name}.efficiency_zero"), "efficiency_zero", e0, 0.0, 1.0);
        }
        if let Some(t) = m.decay_constant {
            check_positive(&mut v, &format!("{name}.decay_constant"), "decay_constant", t);
        }
        if forms.iter().filter(|&&f| f).count() == 1 && m.efficiency_at(m.storage_time).is_none() {
            v.push(Violation::new(
                format!("{name}.efficiency_table"),
                format!("storage_time {} outside efficiency_table range", m.storage_time),
            ));
        }
        if !m.echo_center_offset.is_finite() {
            v.push(Violation::new(format!("{name}.echo_center_offset"), "echo_center_offset must be finite"));
        }
        check_positive(&mut v, &format!("{name}.echo_rms_width"), "echo_rms_width", m.echo_rms_width);
    }

    for (name, d) in [
        ("herald_detector_plus", &c.herald_detector_plus),
        ("herald_detector_minus", &c.herald_detector_minus),
        ("readout_detector_1", &c.readout_detector_1),
        ("readout_detector_2", &c.readout_detector_2),
    ] {
        check_range(&mut v, &format!("{name}.efficiency"), "efficiency", d.efficiency, 0.0, 1.0);
        check_range(
            &mut v,
            &format!("{name}.dark_click_probability_per_window"),
            "dark_click_probability_per_window",
            d.dark_click_probability_per_window,
            0.0,
            1.0,
        );
        check_non_negative(&mut v, &format!("{name}.dead_time"), "dead_time", d.dead_time);
    }

    let t = &mut c.timing;
    check_positive(&mut v, "timing.mode_duration", "mode_duration", t.mode_duration);
    check_positive(&mut v, "timing.coincidence_window", "coincidence_window", t.coincidence_window);
    if !(t.duty_cycle > 0.0 && t.duty_cycle <= 1.0) {
        v.push(Violation::new("timing.duty_cycle", format!("duty_cycle out of range (0, 1]: {}", t.duty_cycle)));
    }
    check_positive(&mut v, "timing.measure_period", "measure_period", t.measure_period);
    check_non_negative(&mut v, "timing.communication_time", "communication_time", t.communication_time);
    check_non_negative(&mut v, "timing.lock_residual", "lock_residual", t.lock_residual);
    if t.duty_cycle > 0.0 && t.duty_cycle <= 1.0 && t.measure_period > 0.0 {
        let derived = t.measure_period * (1.0 / t.duty_cycle - 1.0);
        if let Some(lp) = t.lock_period {
            let scale = derived.max(t.measure_period);
            if (lp - derived).abs() > 1e-9 * scale {
                v.push(Violation::new(
                    "timing.lock_period",
                    format!("lock_period {lp} inconsistent with duty_cycle and measure_period (expected {derived})"),
                ));
            }
        }
        t.lock_period = Some(derived);
        if t.mode_duration > 0.0 && t.trial_length() > t.measure_period {
            v.push(Violation::new("timing.communication_time", "communication trial longer than measure_period"));
        }
    }

    let o = &c.link;
    check_range(&mut v, "link.idler_mode_overlap", "idler_mode_overlap", o.idler_mode_overlap, 0.0, 1.0);
    if o.truncation < 1 || o.truncation > 4 {
        v.push(Violation::new("link.truncation", format!("truncation out of range [1, 4]: {}", o.truncation)));
    }

    let tm = &c.tomography;
    for (name, e) in [
        ("tomography.backtrace_efficiency_a", tm.backtrace_efficiency_a),
        ("tomography.backtrace_efficiency_b", tm.backtrace_efficiency_b),
    ] {
        if !(e > 0.0 && e <= 1.0) {
            v.push(Violation::new(name, format!("backtrace efficiency out of range (0, 1]: {e}")));
        }
    }
    if tm.fringe_phases.iter().any(|p| !p.is_finite()) {
        v.push(Violation::new("tomography.fringe_phases", "fringe phases must be finite"));
    }

    if v.is_empty() {
        Ok(ValidatedConfig(c))
    } else {
        Err(Error::Config(v))
    }
}

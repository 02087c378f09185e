use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use afc_link::analysis::{self, count_coincidences, CoincidenceSettings, Tomography};
use afc_link::config::{db_to_transmission, LinkConfig, TomographyConfig, ValidatedConfig};
use afc_link::link::{predict_stats, PredictedStats};
use afc_link::multimode::{rate_vs_modes, AcceptancePolicy};
use afc_link::sim::{read_stream, seconds_to_ps, simulate, write_stream, Channel, EventStream};
use afc_link::{validate, Error};

use crate::manifest::{now, RunManifest};
use crate::{check, Axis, Cli, Command, ConfigArgs, Failure, Policy, EXIT_CONFIG};

pub fn load_config(args: &ConfigArgs) -> Result<ValidatedConfig, Failure> {
    Ok(validate(LinkConfig::load(&args.config, &args.overrides)?)?)
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::data(format!("cannot create {}: {e}", dir.display())))
}

#[derive(Serialize)]
struct PredictionFile<'a> {
    config_digest: String,
    prediction: &'a PredictedStats,
}

pub fn run(cli: Cli, args: Vec<String>) -> Result<(), Failure> {
    if let Command::Check { out } = &cli.command {
        return check::run(out);
    }
    execute(cli, args, false)
}

/// Run a command, writing its outputs and manifest.
pub fn execute(cli: Cli, args: Vec<String>, quiet: bool) -> Result<(), Failure> {
    let started = now();
    let say = |s: String| {
        if !quiet {
            println!("{s}");
        }
    };
    match cli.command {
        Command::Predict { config, out } => {
            let cfg = load_config(&config)?;
            let p = predict_stats(&cfg)?;
            create_dir(&out)?;
            let file = write(&out, "predict.json", json(&PredictionFile { config_digest: cfg.digest(), prediction: &p }))?;
            say(format!(
                "V = {:.4}  C = {:.4e}  h2c = {}  F_eff = {}  herald rate = {:.1} Hz",
                p.visibility,
                p.concurrence,
                p.h2c.map_or("n/a".into(), |h| format!("{h:.4}")),
                p.effective_fidelity.map_or("n/a".into(), |f| format!("{f:.4}")),
                p.herald_rate
            ));
            let mut m = RunManifest::new("predict", args, started);
            m.config_digest = Some(cfg.digest());
            m.finish(&out, &[file])?;
        }
        Command::Simulate { config, seed, duration, csv, out } => {
            positive_duration(duration)?;
            let cfg = load_config(&config)?;
            let stream = simulate(&cfg, seed, duration)?;
            create_dir(&out)?;
            let bin = out.join("events.bin");
            write_stream(&stream, &bin)?;
            let mut files = vec![bin];
            if csv {
                files.push(write(&out, "events.csv", stream.to_csv())?);
            }
            let heralds = stream.count(Channel::herald(cfg.link.herald_port));
            say(format!(
                "{} events, {heralds} heralds ({:.1} Hz)",
                stream.records.len(),
                heralds as f64 / duration
            ));
            let mut m = RunManifest::new("simulate", args, started);
            m.config_digest = Some(cfg.digest());
            m.seed = Some(seed);
            m.finish(&out, &files)?;
        }
        Command::Analyze { stream, config, overrides, window, accidentals, bootstrap, seed, out } => {
            let s = read_stream(&stream)?;
            let cfg = match &config {
                Some(path) => Some(load_config(&ConfigArgs { config: path.clone(), overrides })?),
                None => None,
            };
            let mut settings = CoincidenceSettings::from_stream(&s);
            if let Some(c) = &cfg {
                settings = CoincidenceSettings::from_timing(&s, &c.timing);
                if c.digest_bytes() != s.header.config_digest {
                    eprintln!("warning: configuration digest differs from the one recorded in the stream");
                }
            }
            if let Some(w) = window {
                settings.window_ps = seconds_to_ps(w);
            }
            if accidentals {
                settings = settings.with_accidentals(&s);
            }
            let tomo_cfg = cfg.as_ref().map(|c| c.tomography.clone()).unwrap_or_default();
            let (files, t) = analyze(&s, &settings, &tomo_cfg, accidentals, bootstrap, seed, &out)?;
            match &t {
                Some(t) => say(format!(
                    "V = {:.4} ± {:.4}  C = {:.4e} ± {:.1e}  heralds = {}",
                    t.visibility.value, t.visibility.error, t.concurrence.value, t.concurrence.error, t.heralds
                )),
                None => say("not enough data for a reconstruction; wrote counts only".into()),
            }
            let mut m = RunManifest::new("analyze", args, started);
            m.config_digest = Some(hex_digest(&s.header.config_digest));
            m.seed = bootstrap.map(|_| seed);
            m.finish(&out, &files)?;
        }
        Command::Sweep { config, axis, values, duration, seed, out } => {
            if let Some(d) = duration {
                positive_duration(d)?;
            }
            let base = LinkConfig::load(&config.config, &config.overrides)?;
            validate(base.clone())?;
            let rows = sweep(&base, axis, &values, duration, seed);
            create_dir(&out)?;
            let file = write(&out, "sweep.csv", sweep_csv(axis, &rows))?;
            for r in &rows {
                if let Some(e) = &r.error {
                    eprintln!("point {}: {e}", r.value);
                }
            }
            say(format!("{} points written to {}", rows.len(), file.display()));
            let mut m = RunManifest::new("sweep", args, started);
            m.config_digest = Some(validate(base)?.digest());
            m.seed = duration.map(|_| seed);
            m.finish(&out, &[file])?;
        }
        Command::Multimode { stream, config, policy, out } => {
            let cfg = load_config(&config)?;
            let s = read_stream(&stream)?;
            let policy = match policy {
                Policy::First => AcceptancePolicy::FirstPerTrial,
                Policy::All => AcceptancePolicy::All,
            };
            let report = rate_vs_modes(&s, &cfg.timing, &cfg.tomography, policy)?;
            let fit = report.rate_fit();
            let (mean, chi2, p) = report.concurrence_consistency();
            create_dir(&out)?;
            let csv = write(&out, "modes.csv", report.to_csv())?;
            let summary = serde_json::json!({
                "policy": report.policy,
                "n_max": report.entries.len(),
                "rate_slope_hz_per_mode": fit.slope,
                "rate_intercept_hz": fit.intercept,
                "rate_r_squared": fit.r_squared,
                "concurrence_mean": mean,
                "concurrence_chi2": chi2,
                "concurrence_p_value": p,
            });
            let js = write(&out, "modes_fit.json", json(&summary))?;
            say(format!(
                "{} modes, slope = {:.2} Hz/mode, R² = {:.5}",
                report.entries.len(),
                fit.slope,
                fit.r_squared
            ));
            let mut m = RunManifest::new("multimode", args, started);
            m.config_digest = Some(cfg.digest());
            m.finish(&out, &[csv, js])?;
        }
        Command::Check { .. } => unreachable!("handled by run"),
    }
    Ok(())
}

fn positive_duration(d: f64) -> Result<(), Failure> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(Failure { code: EXIT_CONFIG, message: format!("duration must be positive, got {d}") })
    }
}

fn hex_digest(d: &[u8; 32]) -> String {
    hex::encode(d)
}

fn analyze(
    s: &EventStream,
    settings: &CoincidenceSettings,
    tomo_cfg: &TomographyConfig,
    accidentals: bool,
    bootstrap: Option<usize>,
    seed: u64,
    out: &Path,
) -> Result<(Vec<PathBuf>, Option<Tomography>), Failure> {
    let stats = count_coincidences(s, settings)?;
    create_dir(out)?;
    let mut files = vec![
        write(out, "coincidences.json", json(&stats))?,
        write(out, "fringe.csv", stats.fringe.to_csv())?,
    ];
    let result = match bootstrap {
        Some(n) => analysis::bootstrap(&stats, tomo_cfg, accidentals, n, seed),
        None => analysis::tomography(&stats, tomo_cfg, accidentals),
    };
    let t = match result {
        Ok(mut t) => {
            t.config_digest = Some(hex_digest(&s.header.config_digest));
            files.push(write(out, "tomography.json", t.to_json() + "\n")?);
            Some(t)
        }
        Err(Error::InsufficientData(_)) => None,
        Err(e) => return Err(e.into()),
    };
    Ok((files, t))
}

#[derive(Debug, Clone, Default)]
pub struct SweepRow {
    pub value: f64,
    pub predicted: Option<PredictedStats>,
    pub rate: Option<(f64, f64)>,
    pub tomography: Option<Tomography>,
    pub error: Option<String>,
}

pub fn sweep_point(base: &LinkConfig, axis: Axis, value: f64) -> LinkConfig {
    let mut c = base.clone();
    match axis {
        Axis::IdlerLossDb => {
            for ch in [&mut c.idler_channel_a, &mut c.idler_channel_b] {
                ch.transmission = Some(ch.transmission() * db_to_transmission(value));
                ch.transmission_db = None;
            }
        }
        Axis::StorageTime => {
            c.memory_a = c.memory_a.with_storage_time(value);
            c.memory_b = c.memory_b.with_storage_time(value);
        }
    }
    c
}

/// Points run concurrently; point `i` simulates with seed `seed + i`.
pub fn sweep(base: &LinkConfig, axis: Axis, values: &[f64], duration: Option<f64>, seed: u64) -> Vec<SweepRow> {
    values
        .par_iter()
        .enumerate()
        .map(|(i, &value)| {
            let mut row = SweepRow { value, ..SweepRow::default() };
            let result = (|| -> Result<(), Error> {
                let cfg = validate(sweep_point(base, axis, value))?;
                row.predicted = Some(predict_stats(&cfg)?);
                if let Some(d) = duration {
                    let s = simulate(&cfg, seed.wrapping_add(i as u64), d)?;
                    let heralds = s.count(Channel::herald(cfg.link.herald_port)) as f64;
                    row.rate = Some((heralds / d, heralds.sqrt() / d));
                    let stats = count_coincidences(&s, &CoincidenceSettings::from_stream(&s))?;
                    row.tomography = Some(analysis::tomography(&stats, &cfg.tomography, false)?);
                }
                Ok(())
            })();
            row.error = result.err().map(|e| e.to_string());
            row
        })
        .collect()
}

pub fn sweep_csv(axis: Axis, rows: &[SweepRow]) -> String {
    let name = match axis {
        Axis::IdlerLossDb => "idler_loss_db",
        Axis::StorageTime => "storage_time_s",
    };
    let mut s = format!(
        "{name},predicted_rate_hz,predicted_concurrence,predicted_visibility,predicted_h2c,\
         rate_hz,rate_err_hz,concurrence,concurrence_err,visibility,visibility_err,h2c,h2c_err,status\n"
    );
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for r in rows {
        let p = r.predicted.as_ref();
        let t = r.tomography.as_ref();
        let h2c = t.and_then(|t| t.h2c);
        let cells = [
            r.value.to_string(),
            opt(p.map(|p| p.herald_rate)),
            opt(p.map(|p| p.concurrence)),
            opt(p.map(|p| p.visibility)),
            opt(p.and_then(|p| p.h2c)),
            opt(r.rate.map(|x| x.0)),
            opt(r.rate.map(|x| x.1)),
            opt(t.map(|t| t.concurrence.value)),
            opt(t.map(|t| t.concurrence.error)),
            opt(t.map(|t| t.visibility.value)),
            opt(t.map(|t| t.visibility.error)),
            opt(h2c.map(|h| h.value)),
            opt(h2c.map(|h| h.error)),
            r.error.as_ref().map_or("ok".to_string(), |e| format!("\"{}\"", e.replace('"', "'"))),
        ];
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

use std::path::{Path, PathBuf};

use clap::Parser;

use crate::manifest::{file_digest, RunManifest};
use crate::{commands, Cli, Failure, EXIT_CHECK};

/// Relative tolerance for numeric fields that differ in their last digits.
pub const CHECK_TOLERANCE: f64 = 1e-9;

/// Re-run the command recorded in `dir` and compare its outputs with the stored ones.
pub fn run(dir: &Path) -> Result<(), Failure> {
    let manifest = RunManifest::load(dir).map_err(|e| Failure::data(format!("cannot read manifest in {}: {e}", dir.display())))?;
    let dir = std::fs::canonicalize(dir)?;
    let scratch = std::env::temp_dir().join(format!("afclink-check-{}", std::process::id()));
    std::fs::create_dir_all(&scratch)?;
    let args = redirect_out(&manifest.args, &scratch);
    if !manifest.working_directory.is_empty() {
        std::env::set_current_dir(&manifest.working_directory)?;
    }
    let cli = Cli::try_parse_from(std::iter::once("afclink".to_string()).chain(args.iter().cloned()))
        .map_err(|e| Failure::data(format!("manifest arguments do not parse: {e}")))?;
    let result = commands::execute(cli, args, true).and_then(|()| compare(&manifest, &dir, &scratch));
    let _ = std::fs::remove_dir_all(&scratch);
    let mismatches = result?;
    if mismatches.is_empty() {
        println!("check passed: {} outputs reproduced", manifest.outputs.len());
        Ok(())
    } else {
        Err(Failure { code: EXIT_CHECK, message: format!("outputs differ: {}", mismatches.join(", ")) })
    }
}

fn redirect_out(args: &[String], to: &Path) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len() + 2);
    let mut replaced = false;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
            out.extend(["--out".to_string(), to.display().to_string()]);
            replaced = true;
        } else if a.starts_with("--out=") {
            out.push(format!("--out={}", to.display()));
            replaced = true;
        } else {
            out.push(a.clone());
        }
    }
    if !replaced {
        out.extend(["--out".to_string(), to.display().to_string()]);
    }
    out
}

fn compare(manifest: &RunManifest, stored: &Path, fresh: &Path) -> Result<Vec<String>, Failure> {
    let mut bad = Vec::new();
    for o in &manifest.outputs {
        let (a, b): (PathBuf, PathBuf) = (stored.join(&o.path), fresh.join(&o.path));
        if file_digest(&b)? == o.sha256 && file_digest(&a)? == o.sha256 {
            continue;
        }
        let (ta, tb) = (std::fs::read(&a)?, std::fs::read(&b)?);
        let same = match (std::str::from_utf8(&ta), std::str::from_utf8(&tb)) {
            (Ok(x), Ok(y)) => numerically_equal(x, y),
            _ => false,
        };
        if !same {
            bad.push(o.path.clone());
        }
    }
    Ok(bad)
}

/// Token-wise comparison where numbers may differ by [`CHECK_TOLERANCE`].
pub fn numerically_equal(a: &str, b: &str) -> bool {
    let split = |s: &str| -> Vec<String> {
        s.split(|c: char| c.is_whitespace() || ",:[]{}\"".contains(c))
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect()
    };
    let (ta, tb) = (split(a), split(b));
    ta.len() == tb.len()
        && ta.iter().zip(&tb).all(|(x, y)| match (x.parse::<f64>(), y.parse::<f64>()) {
            (Ok(u), Ok(v)) => u == v || (u - v).abs() <= CHECK_TOLERANCE * u.abs().max(v.abs()),
            _ => x == y,
        })
}

//! Shared fixtures for the benchmarks.

use std::path::Path;

use afc_link::config::{LinkConfig, ValidatedConfig};

/// A shipped configuration, with `key=value` overrides, from the repository's `configs/` directory.
pub fn shipped(name: &str, overrides: &[String]) -> ValidatedConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    afc_link::validate(LinkConfig::load(&path, overrides).expect("shipped configuration loads")).expect("shipped configuration is valid")
}

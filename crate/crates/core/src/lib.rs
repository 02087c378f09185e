//! Model, simulator and estimators for a link that heralds entanglement between
//! two atomic-frequency-comb memories with a single photon detected in the middle.
//!
//! The crate has two independent engines. [`link`] predicts every figure of
//! merit exactly from a truncated Fock-space model built on [`fock`];
//! [`sim`] generates time-tagged detection events with the link's temporal
//! structure. [`analysis`] and [`multimode`] turn event streams into
//! estimators, so the two engines can be checked against each other.

pub mod analysis;
pub mod config;
pub mod error;
pub mod fock;
pub mod link;
pub mod multimode;
pub mod sim;
pub mod stats;

pub use analysis::{CoincidenceStats, FringeScan, Tomography};
pub use config::{validate, HeraldPort, LinkConfig, ValidatedConfig};
pub use error::{Error, Result};
pub use fock::BosonicState;
pub use link::{PredictedStats, VisibilityBudget};
pub use multimode::{AcceptancePolicy, ModeReport};
pub use sim::{EventRecord, EventStream};

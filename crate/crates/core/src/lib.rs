//! Analysis of two-party, two-setting, two-outcome correlation boxes.
//!
//! The crate checks the normalization and no-signaling structure of a box,
//! evaluates CHSH, CH and the 64 Hardy-type inequalities, computes quantum
//! boxes for two-qubit pure states, searches numerically for the quantum
//! extrema, and simulates finite-statistics experiments.

pub mod behavior;
pub mod bell;
pub mod error;
pub mod examples;
pub mod locality;
pub mod montecarlo;
pub mod quantum;
pub mod report;

pub use behavior::{Behavior, Outcome, Setting};
pub use bell::HardyQuadruple;
pub use error::{Error, Result};
pub use locality::FreeSetId;

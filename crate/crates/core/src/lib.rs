//! Simulator and analytic calculator for the memoryless coherent-state
//! quantum digital signature protocol with a symmetrizing multiport.
//!
//! - [`optics`]: coherent amplitudes, beam splitters, the multiport, and USD /
//!   minimum-error measurement statistics.
//! - [`protocol`]: honest key generation, distribution and messaging rules.
//! - [`adversaries`]: repudiating-sender and forging-recipient strategies.
//! - [`bounds`]: closed-form security bounds and parameter constraints.
//! - [`montecarlo`]: reproducible parallel trials, estimates, exact oracles.
//! - [`cli`]: the `qds` command-line front end.

pub mod adversaries;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod montecarlo;
pub mod optics;
pub mod protocol;

pub use error::{QdsError, Result};

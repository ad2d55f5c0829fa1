//! Experiment runner for the metamux toolkit: capacity sweeps, BER
//! waterfalls, spectrum reports and spectrum-sharing runs driven by a JSON
//! configuration, with CSV and JSON outputs.

pub mod ber;
pub mod capacity_sweep;
pub mod config;
pub mod error;
pub mod output;
pub mod sharing;
pub mod spectrum_report;

pub use ber::{run_ber_sweep, BerRecord, BerSweep, Decoder};
pub use capacity_sweep::{compute_capacity_sweep, run_capacity_sweep, CapacitySweep};
pub use config::{parse_grid, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use sharing::{run_sharing_experiment, sharing_penalty, ShareSummary};
pub use spectrum_report::{run_spectrum_report, SpectrumRun};

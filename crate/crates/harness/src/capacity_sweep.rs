//! Capacity curves and required Eb/N0 over a list of overlap factors.

use metamux::capacity::{capacity_ebn0, required_ebn0_for, stream_gains, CapacityMode};
use metamux::waveform::{bounded_psd_bandwidth, fpcb_bandwidth, magnitude_spectrum, make_pulse};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BandwidthMeasure, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::output::{ensure_dir, num, CsvWriter};

pub const CAPACITY_CSV: &str = "capacity.csv";
pub const REQUIRED_CSV: &str = "required_ebn0.csv";
pub const CAPACITY_HEADER: &str = "k,ebn0_db,mode,c_bits_per_symbol,eta_bits_s_hz,waveform";
pub const REQUIRED_HEADER: &str = "k,mode,target_bits_per_symbol,required_ebn0_db,waveform";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityRow {
    pub k: usize,
    pub ebn0_db: f64,
    pub mode: CapacityMode,
    pub c_bits_per_symbol: f64,
    pub eta_bits_s_hz: f64,
    pub waveform: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequiredRow {
    pub k: usize,
    pub mode: CapacityMode,
    pub target_bits_per_symbol: f64,
    pub required_ebn0_db: f64,
    pub waveform: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CapacitySweep {
    pub rows: Vec<CapacityRow>,
    pub required: Vec<RequiredRow>,
}

/// Occupied bandwidth used for the spectral-efficiency column. A bounded
/// PSD level not reached inside the processing band falls back to the
/// processing bandwidth `K / T`.
fn occupied_bandwidth(cfg: &ExperimentConfig, k: usize) -> Result<f64> {
    let pulse = make_pulse(cfg.waveform, k)?.with_symbol_time(cfg.symbol_time)?;
    let spec = magnitude_spectrum(&pulse, cfg.capacity.pad_factor)?;
    Ok(match cfg.capacity.bandwidth {
        BandwidthMeasure::Bpsd35 => bounded_psd_bandwidth(&spec, 35.0)?
            .hz()
            .unwrap_or(pulse.sample_rate()),
        BandwidthMeasure::Fpcb99 => fpcb_bandwidth(&spec, 0.99)?,
    })
}

fn sweep_one(cfg: &ExperimentConfig, k: usize) -> Result<CapacitySweep> {
    let eta = cfg.alphabet()?.bits_per_symbol() as f64;
    let pulse = make_pulse(cfg.waveform, k)?;
    let gains = stream_gains(&pulse)?;
    let b = occupied_bandwidth(cfg, k)?;
    let name = cfg.waveform.short_name();
    let ts_over_t = 1.0 / k as f64;
    let mut out = CapacitySweep::default();
    for &db in &cfg.ebn0_db {
        for &mode in &cfg.capacity.modes {
            let r = capacity_ebn0(&gains, eta, ts_over_t, db, mode)?;
            out.rows.push(CapacityRow {
                k,
                ebn0_db: db,
                mode,
                c_bits_per_symbol: r.total_bits_per_symbol,
                eta_bits_s_hz: r.unfactored() / (b * cfg.symbol_time),
                waveform: name.clone(),
            });
        }
    }
    let target = cfg.capacity.target_bits_per_stream * k as f64;
    for &mode in &cfg.capacity.modes {
        out.required.push(RequiredRow {
            k,
            mode,
            target_bits_per_symbol: target,
            required_ebn0_db: required_ebn0_for(&gains, eta, ts_over_t, target, mode)?,
            waveform: name.clone(),
        });
    }
    Ok(out)
}

/// Compute the sweep without touching the file system.
pub fn compute_capacity_sweep(cfg: &ExperimentConfig) -> Result<CapacitySweep> {
    cfg.validate()?;
    if cfg.ebn0_db.iter().any(|v| v.is_infinite()) {
        return Err(HarnessError::config(
            "ebn0_db",
            "capacity grids must be finite",
        ));
    }
    let parts: Vec<CapacitySweep> = cfg
        .capacity
        .k_values
        .par_iter()
        .map(|&k| sweep_one(cfg, k))
        .collect::<Result<_>>()?;
    let mut all = CapacitySweep::default();
    for p in parts {
        all.rows.extend(p.rows);
        all.required.extend(p.required);
    }
    Ok(all)
}

/// Run the sweep and write `capacity.csv` and `required_ebn0.csv`.
pub fn run_capacity_sweep(cfg: &ExperimentConfig) -> Result<CapacitySweep> {
    let sweep = compute_capacity_sweep(cfg)?;
    let dir = &cfg.output.dir;
    ensure_dir(dir)?;
    let mut w = CsvWriter::create(&dir.join(CAPACITY_CSV), CAPACITY_HEADER)?;
    for r in &sweep.rows {
        w.line(&format!(
            "{},{},{},{},{},{}",
            r.k,
            num(r.ebn0_db),
            r.mode,
            num(r.c_bits_per_symbol),
            num(r.eta_bits_s_hz),
            r.waveform
        ))?;
    }
    let mut w = CsvWriter::create(&dir.join(REQUIRED_CSV), REQUIRED_HEADER)?;
    for r in &sweep.required {
        w.line(&format!(
            "{},{},{},{},{}",
            r.k,
            r.mode,
            num(r.target_bits_per_symbol),
            num(r.required_ebn0_db),
            r.waveform
        ))?;
    }
    Ok(sweep)
}

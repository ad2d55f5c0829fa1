//! Pulse spectrum and occupied-bandwidth report.

use std::io::Write;

use metamux::mux::Frame;
use metamux::rng::{derive_seed, random_bits};
use metamux::waveform::{
    bandwidth_report, magnitude_spectrum, welch_psd, BandwidthReport, SpectrumEstimate,
};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{ensure_dir, num, write_json, write_with};

pub const SPECTRUM_CSV: &str = "spectrum.csv";
pub const SIGNAL_SPECTRUM_CSV: &str = "signal_spectrum.csv";
pub const PULSE_CSV: &str = "pulse.csv";
pub const BANDWIDTH_JSON: &str = "bandwidth.json";

/// Seed path of the random data behind the signal spectrum.
const SIGNAL_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumFiles {
    pub report: BandwidthReport,
    pub pad_factor: usize,
    pub grid_points: usize,
    /// Welch segment length when a signal spectrum was requested.
    pub signal_segment_len: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRun {
    pub files: SpectrumFiles,
    pub pulse_spectrum: SpectrumEstimate,
    pub signal_spectrum: Option<SpectrumEstimate>,
}

fn write_spectrum(
    path: &std::path::Path,
    spec: &SpectrumEstimate,
    cfg: &ExperimentConfig,
    source: &str,
) -> Result<()> {
    write_with(path, |out| {
        writeln!(out, "# waveform={}", cfg.waveform.short_name())?;
        writeln!(out, "# source={source}")?;
        writeln!(out, "# k={}", cfg.k)?;
        writeln!(out, "# symbol_time_s={}", num(cfg.symbol_time))?;
        writeln!(out, "# processing_bandwidth_hz={}", num(cfg.sample_rate()))?;
        writeln!(out, "# resolution_hz={}", num(spec.resolution()))?;
        writeln!(out, "# grid_points={}", spec.freqs().len())?;
        spec.write_csv(&mut *out)
    })
}

/// Write the pulse taps, its zero-padded spectrum and the bandwidth
/// report; optionally a Welch estimate of a random overlapped signal.
pub fn run_spectrum_report(cfg: &ExperimentConfig) -> Result<SpectrumRun> {
    cfg.validate()?;
    let pulse = cfg.pulse()?;
    let pad = cfg.spectrum.pad_factor;
    let spec = magnitude_spectrum(&pulse, pad)?;
    let report = bandwidth_report(&pulse, pad)?;
    let dir = &cfg.output.dir;
    ensure_dir(dir)?;

    write_with(&dir.join(PULSE_CSV), |out| pulse.write_csv(out))?;
    write_spectrum(&dir.join(SPECTRUM_CSV), &spec, cfg, "deterministic_dft")?;

    let signal_spectrum = match &cfg.spectrum.signal {
        Some(w) => {
            let alphabet = cfg.alphabet()?;
            let bits = random_bits(
                w.symbols * alphabet.bits_per_symbol(),
                derive_seed(cfg.seed, &[SIGNAL_STREAM]),
            );
            let frame = Frame::from_bits(bits, &pulse, &alphabet)?;
            let s = welch_psd(&frame.samples, cfg.sample_rate(), w.segment_len, w.overlap)?;
            write_spectrum(&dir.join(SIGNAL_SPECTRUM_CSV), &s, cfg, "welch")?;
            Some(s)
        }
        None => None,
    };

    let files = SpectrumFiles {
        report,
        pad_factor: pad,
        grid_points: spec.freqs().len(),
        signal_segment_len: cfg.spectrum.signal.as_ref().map(|w| w.segment_len),
    };
    write_json(&dir.join(BANDWIDTH_JSON), &files)?;
    Ok(SpectrumRun {
        files,
        pulse_spectrum: spec,
        signal_spectrum,
    })
}

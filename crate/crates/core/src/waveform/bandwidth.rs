use serde::{Deserialize, Serialize};

use super::{magnitude_spectrum, PulseShape, SpectrumEstimate};
use crate::error::{invalid, Error, Result};

/// Outermost share of the one-sided grid treated as the band edge. A level
/// still exceeded there is not resolved by the grid.
pub const EDGE_GUARD_FRACTION: f64 = 0.01;

/// Outcome of a bounded-PSD measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Occupancy {
    Resolved {
        hz: f64,
    },
    /// The spectrum is still above the level at the edge of the grid.
    ExceedsGrid {
        grid_span_hz: f64,
    },
}

impl Occupancy {
    pub fn hz(&self) -> Option<f64> {
        match *self {
            Occupancy::Resolved { hz } => Some(hz),
            Occupancy::ExceedsGrid { .. } => None,
        }
    }
}

/// Bounded power spectral density bandwidth: twice the outermost frequency
/// whose density exceeds the 0 Hz level minus `attenuation_db`.
pub fn bounded_psd_bandwidth(spec: &SpectrumEstimate, attenuation_db: f64) -> Result<Occupancy> {
    if !(attenuation_db > 0.0 && attenuation_db.is_finite()) {
        return Err(invalid("attenuation_db", "must be positive"));
    }
    let density = spec.density();
    let center = density[spec.center_index()];
    if center <= 0.0 {
        return Err(Error::NoCrossing);
    }
    let threshold = center * 10f64.powf(-attenuation_db / 10.0);
    let outer = spec
        .freqs()
        .iter()
        .zip(density)
        .filter(|&(_, &d)| d > threshold)
        .map(|(f, _)| f.abs())
        .fold(0.0, f64::max);

    let half_span = spec.half_span();
    if outer > half_span * (1.0 - EDGE_GUARD_FRACTION) {
        return Ok(Occupancy::ExceedsGrid {
            grid_span_hz: 2.0 * half_span,
        });
    }
    Ok(Occupancy::Resolved { hz: 2.0 * outer })
}

/// Fractional power containment bandwidth: the narrowest band symmetric
/// about 0 Hz holding at least `fraction` of the grid power.
pub fn fpcb_bandwidth(spec: &SpectrumEstimate, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(invalid("fraction", "must lie in (0, 1)"));
    }
    let d = spec.density();
    let c = spec.center_index();
    let total: f64 = d.iter().sum();
    let goal = fraction * total;
    let mut acc = d[c];
    if acc >= goal {
        return Ok(0.0);
    }
    for j in 1..=c {
        acc += d[c - j] + d[c + j];
        if acc >= goal {
            return Ok(2.0 * spec.freqs()[c + j]);
        }
    }
    Err(Error::FractionUnreachable { fraction })
}

/// Bandwidth summary of a pulse at the attenuation levels and power
/// fractions used for the waveform table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthReport {
    pub pulse: String,
    pub samples_per_symbol: usize,
    pub symbol_time_s: f64,
    pub processing_bandwidth_hz: f64,
    pub resolution_hz: f64,
    pub bounded_psd_35db: Occupancy,
    pub bounded_psd_50db: Occupancy,
    pub fpcb_99_hz: f64,
}

pub fn bandwidth_report(pulse: &PulseShape, pad_factor: usize) -> Result<BandwidthReport> {
    let spec = magnitude_spectrum(pulse, pad_factor)?;
    Ok(BandwidthReport {
        pulse: pulse.kind().short_name(),
        samples_per_symbol: pulse.samples_per_symbol(),
        symbol_time_s: pulse.symbol_time(),
        processing_bandwidth_hz: pulse.sample_rate(),
        resolution_hz: spec.resolution(),
        bounded_psd_35db: bounded_psd_bandwidth(&spec, 35.0)?,
        bounded_psd_50db: bounded_psd_bandwidth(&spec, 50.0)?,
        fpcb_99_hz: fpcb_bandwidth(&spec, 0.99)?,
    })
}

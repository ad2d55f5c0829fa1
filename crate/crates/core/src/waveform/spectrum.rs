use std::f64::consts::PI;
use std::io::Write;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::PulseShape;
use crate::error::{invalid, Error, Result};
use crate::Cpx;

/// Smallest zero-padding factor accepted for deterministic pulse spectra.
pub const MIN_PAD_FACTOR: usize = 64;

/// Floor used when converting zero density to dB.
const DB_FLOOR: f64 = -400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    DeterministicDft,
    Welch,
}

/// Two-sided power density on a grid symmetric about 0 Hz, scaled so the
/// largest bin is 1 (0 dB).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    freqs: Vec<f64>,
    density: Vec<f64>,
    resolution: f64,
    source: SpectrumSource,
}

impl SpectrumEstimate {
    /// Build from an FFT-ordered power vector of even or odd length `n`
    /// with bin spacing `resolution`. The Nyquist bin of an even-length
    /// transform is dropped so that the grid is symmetric.
    fn from_fft_power(power: &[f64], resolution: f64, source: SpectrumSource) -> Self {
        let n = power.len();
        let half = (n - 1) / 2;
        let mut freqs = Vec::with_capacity(2 * half + 1);
        let mut density = Vec::with_capacity(2 * half + 1);
        for j in -(half as isize)..=(half as isize) {
            let idx = j.rem_euclid(n as isize) as usize;
            freqs.push(j as f64 * resolution);
            density.push(power[idx]);
        }
        let peak = density.iter().cloned().fold(0.0, f64::max);
        if peak > 0.0 {
            density.iter_mut().for_each(|d| *d /= peak);
        }
        SpectrumEstimate {
            freqs,
            density,
            resolution,
            source,
        }
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// Linear density relative to the peak bin.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn density_db(&self) -> Vec<f64> {
        self.density
            .iter()
            .map(|&d| if d > 0.0 { 10.0 * d.log10() } else { DB_FLOOR })
            .collect()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn source(&self) -> SpectrumSource {
        self.source
    }

    /// Index of the 0 Hz bin.
    pub fn center_index(&self) -> usize {
        self.freqs.len() / 2
    }

    /// Largest |f| on the grid.
    pub fn half_span(&self) -> f64 {
        *self.freqs.last().unwrap_or(&0.0)
    }

    /// Frequency of the strongest bin.
    pub fn peak_frequency(&self) -> f64 {
        let (i, _) = self
            .density
            .iter()
            .enumerate()
            .fold(
                (0, f64::MIN),
                |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc },
            );
        self.freqs[i]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "freq_hz,density_db")?;
        for (f, d) in self.freqs.iter().zip(self.density_db()) {
            writeln!(out, "{f:e},{d:.6}")?;
        }
        Ok(())
    }
}

/// |DFT|^2 of the zero-padded taps. The grid spans the processing band
/// `K / T` with `K * pad_factor` points.
pub fn magnitude_spectrum(pulse: &PulseShape, pad_factor: usize) -> Result<SpectrumEstimate> {
    if pad_factor < MIN_PAD_FACTOR {
        return Err(Error::PadTooSmall {
            pad: pad_factor,
            min: MIN_PAD_FACTOR,
        });
    }
    let n = pulse.samples_per_symbol() * pad_factor;
    let mut buf = vec![Cpx::new(0.0, 0.0); n];
    for (b, &t) in buf.iter_mut().zip(pulse.taps()) {
        b.re = t;
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
    let resolution = pulse.sample_rate() / n as f64;
    Ok(SpectrumEstimate::from_fft_power(
        &power,
        resolution,
        SpectrumSource::DeterministicDft,
    ))
}

/// Averaged periodogram with a periodic Hann window. No detrending: the
/// 0 Hz bin carries the reference level for the bounded-PSD measure.
pub fn welch_psd(
    samples: &[Cpx],
    sample_rate: f64,
    segment_len: usize,
    overlap_fraction: f64,
) -> Result<SpectrumEstimate> {
    if samples.is_empty() {
        return Err(invalid("samples", "empty input"));
    }
    if segment_len < 2 {
        return Err(invalid("segment_len", "must be at least 2"));
    }
    if samples.len() < 2 * segment_len {
        return Err(invalid(
            "segment_len",
            format!(
                "segment of {segment_len} needs at least {} samples, got {}",
                2 * segment_len,
                samples.len()
            ),
        ));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(invalid("overlap_fraction", "must lie in [0, 1)"));
    }
    if !(sample_rate > 0.0) {
        return Err(invalid("sample_rate", "must be positive"));
    }

    let window: Vec<f64> = (0..segment_len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / segment_len as f64).cos())
        .collect();
    let step = ((segment_len as f64 * (1.0 - overlap_fraction)).round() as usize).max(1);
    let fft = FftPlanner::new().plan_fft_forward(segment_len);

    let mut acc = vec![0.0; segment_len];
    let mut buf = vec![Cpx::new(0.0, 0.0); segment_len];
    let mut scratch = vec![Cpx::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut start = 0;
    while start + segment_len <= samples.len() {
        for ((b, &x), &w) in buf.iter_mut().zip(&samples[start..]).zip(&window) {
            *b = x * w;
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        start += step;
    }
    Ok(SpectrumEstimate::from_fft_power(
        &acc,
        sample_rate / segment_len as f64,
        SpectrumSource::Welch,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{make_pulse, PulseKind};

    #[test]
    fn grid_is_symmetric_and_increasing() {
        let p = make_pulse(PulseKind::Hamming, 8).unwrap();
        let s = magnitude_spectrum(&p, 64).unwrap();
        let f = s.freqs();
        assert!(f.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(f[s.center_index()], 0.0);
        assert!((f[0] + f[f.len() - 1]).abs() < 1e-12);
        let peak = s.density_db().into_iter().fold(f64::MIN, f64::max);
        assert!(peak.abs() < 1e-12);
    }

    #[test]
    fn resolution_is_rate_over_points() {
        let p = make_pulse(PulseKind::Rectangular, 16)
            .unwrap()
            .with_symbol_time(2.0)
            .unwrap();
        let s = magnitude_spectrum(&p, 256).unwrap();
        assert!((s.resolution() - 8.0 / (16.0 * 256.0)).abs() < 1e-15);
    }

    #[test]
    fn delta_pulse_is_flat() {
        let p = make_pulse(PulseKind::Rectangular, 1).unwrap();
        let s = magnitude_spectrum(&p, 64).unwrap();
        assert!(s.density_db().iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn rectangle_first_null_at_symbol_rate() {
        let p = make_pulse(PulseKind::Rectangular, 16).unwrap();
        let s = magnitude_spectrum(&p, 256).unwrap();
        let c = s.center_index();
        // first local minimum to the right of 0 Hz
        let d = s.density();
        let mut i = c + 1;
        while d[i + 1] < d[i] {
            i += 1;
        }
        assert!((s.freqs()[i] - 1.0).abs() <= s.resolution());
    }

    #[test]
    fn small_pad_is_rejected() {
        let p = make_pulse(PulseKind::Rectangular, 4).unwrap();
        assert!(matches!(
            magnitude_spectrum(&p, 8),
            Err(Error::PadTooSmall { .. })
        ));
    }

    #[test]
    fn welch_locates_tone() {
        let fs = 1000.0;
        let f0 = 123.0;
        let x: Vec<Cpx> = (0..16384)
            .map(|n| Cpx::from_polar(1.0, 2.0 * PI * f0 * n as f64 / fs))
            .collect();
        let s = welch_psd(&x, fs, 1024, 0.5).unwrap();
        assert!((s.peak_frequency() - f0).abs() <= s.resolution());
    }

    #[test]
    fn welch_rejects_short_input() {
        let x = vec![Cpx::new(1.0, 0.0); 100];
        assert!(welch_psd(&x, 1.0, 64, 0.5).is_err());
        assert!(welch_psd(&[], 1.0, 64, 0.5).is_err());
        assert!(welch_psd(&x, 1.0, 50, 0.5).is_ok());
    }
}

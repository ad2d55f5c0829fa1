use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::seeded;
use crate::Cpx;

/// Noise level that puts a signal at a given Eb/N0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCalibration {
    pub ebn0_db: f64,
    /// `K * eta`: bits carried per symbol time.
    pub bits_per_symbol_total: f64,
    /// Mean `|s_t|^2` of the clean samples.
    pub sample_energy: f64,
    /// Total variance of the complex noise per sample.
    pub noise_variance: f64,
}

pub fn mean_power(samples: &[Cpx]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64
}

/// `sigma^2 = E_s K / (K eta 10^(ebn0/10))`, i.e. a per-sample SNR of
/// `eta * Eb/N0`. `+inf` dB gives zero noise.
pub fn calibrate_noise(
    samples: &[Cpx],
    eta: f64,
    k: usize,
    ebn0_db: f64,
) -> Result<NoiseCalibration> {
    if samples.is_empty() {
        return Err(invalid("samples", "cannot calibrate on an empty signal"));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(invalid("eta", "must be positive"));
    }
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    if ebn0_db.is_nan() || ebn0_db == f64::NEG_INFINITY {
        return Err(invalid("ebn0_db", "must be a number above -inf"));
    }
    let es = mean_power(samples);
    if !(es > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let bits = k as f64 * eta;
    let noise_variance = es * k as f64 / (bits * 10f64.powf(ebn0_db / 10.0));
    Ok(NoiseCalibration {
        ebn0_db,
        bits_per_symbol_total: bits,
        sample_energy: es,
        noise_variance,
    })
}

/// Add circular complex Gaussian noise of total variance `sigma_sq`.
pub fn awgn(samples: &[Cpx], sigma_sq: f64, seed: u64) -> Result<Vec<Cpx>> {
    if !(sigma_sq >= 0.0 && sigma_sq.is_finite()) {
        return Err(invalid("sigma_sq", "must be non-negative and finite"));
    }
    if sigma_sq == 0.0 {
        return Ok(samples.to_vec());
    }
    let sd = (sigma_sq / 2.0).sqrt();
    let mut rng = seeded(seed);
    Ok(samples
        .iter()
        .map(|&s| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            s + Cpx::new(re, im) * sd
        })
        .collect())
}

/// Eb/N0 (dB) realized by `noisy` relative to `clean`.
pub fn measure_ebn0(clean: &[Cpx], noisy: &[Cpx], eta: f64) -> Result<f64> {
    if clean.len() != noisy.len() {
        return Err(Error::LengthMismatch {
            expected: clean.len(),
            actual: noisy.len(),
        });
    }
    let es = mean_power(clean);
    if !(es > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let n: f64 = clean
        .iter()
        .zip(noisy)
        .map(|(c, y)| (y - c).norm_sqr())
        .sum::<f64>()
        / clean.len() as f64;
    Ok(10.0 * (es / (eta * n)).log10())
}

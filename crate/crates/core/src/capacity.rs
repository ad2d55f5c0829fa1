//! Parallel-channel capacity of the overlapped system.
//!
//! The convolution channel diagonalizes into subchannels with gains
//! `lambda_i`. Capacity is `1/2 sum log2(1 + P_i lambda_i^2 / N)` bits per
//! symbol, either with waterfilled powers or with the power split equally
//! across streams, and is scaled by a finite-length factor when the frame
//! holds `L_t` symbols.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mux::{build_channel_matrix, singular_spectrum, SingularSpectrum};
use crate::waveform::PulseShape;

/// Subchannels with `lambda_i <= lambda_1 * ACTIVE_THRESHOLD` get no power.
pub const ACTIVE_THRESHOLD: f64 = 1e-12;

/// Width of the final bisection bracket in dB.
const BISECTION_TOL_DB: f64 = 1e-9;
const BRACKET_STEP_DB: f64 = 20.0;
const BRACKET_LIMIT_DB: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMode {
    Waterfill,
    EqualPower,
}

impl fmt::Display for CapacityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CapacityMode::Waterfill => "waterfill",
            CapacityMode::EqualPower => "equal_power",
        })
    }
}

impl FromStr for CapacityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "waterfill" => Ok(CapacityMode::Waterfill),
            "equal_power" | "equal" => Ok(CapacityMode::EqualPower),
            other => Err(invalid("mode", format!("unknown capacity mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    /// Water level.
    pub mu: f64,
    pub powers: Vec<f64>,
    pub total_power: f64,
    pub noise_power: f64,
}

impl PowerAllocation {
    /// `P / n` on every subchannel.
    pub fn equal(n: usize, total_power: f64, noise_power: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::NoActiveSubchannel);
        }
        check_powers(total_power, noise_power)?;
        Ok(PowerAllocation {
            mu: f64::NAN,
            powers: vec![total_power / n as f64; n],
            total_power,
            noise_power,
        })
    }

    pub fn active(&self) -> usize {
        self.powers.iter().filter(|&&p| p > 0.0).count()
    }
}

fn check_powers(total_power: f64, noise_power: f64) -> Result<()> {
    if !(noise_power > 0.0 && noise_power.is_finite()) {
        return Err(invalid("noise_power", "must be positive and finite"));
    }
    if !(total_power >= 0.0 && total_power.is_finite()) {
        return Err(invalid("total_power", "must be non-negative and finite"));
    }
    Ok(())
}

/// Closed-form waterfilling. Inverse gains `N / lambda_i^2` are sorted and
/// the active set grown until the water level falls below the next floor.
pub fn waterfill(lambda_sq: &[f64], noise_power: f64, total_power: f64) -> Result<PowerAllocation> {
    check_powers(total_power, noise_power)?;
    if lambda_sq.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(invalid("lambda_sq", "must be finite and non-negative"));
    }
    let top = lambda_sq.iter().cloned().fold(0.0, f64::max);
    if top <= 0.0 {
        return Err(Error::NoActiveSubchannel);
    }
    let cut = top * ACTIVE_THRESHOLD * ACTIVE_THRESHOLD;
    let mut order: Vec<usize> = (0..lambda_sq.len())
        .filter(|&i| lambda_sq[i] > cut)
        .collect();
    let floor = |i: usize| noise_power / lambda_sq[i];
    order.sort_by(|&a, &b| floor(a).total_cmp(&floor(b)));

    let mut sum = 0.0;
    let mut mu = floor(order[0]);
    let mut active = 0;
    for (n, &i) in order.iter().enumerate() {
        sum += floor(i);
        let level = (total_power + sum) / (n + 1) as f64;
        if n + 1 < order.len() && level > floor(order[n + 1]) {
            continue;
        }
        mu = level;
        active = n + 1;
        break;
    }

    let mut powers = vec![0.0; lambda_sq.len()];
    for &i in &order[..active] {
        powers[i] = (mu - floor(i)).max(0.0);
    }
    Ok(PowerAllocation {
        mu,
        powers,
        total_power,
        noise_power,
    })
}

/// `(L_t/K) / (L_t/K + (K-1)/K)`; `None` means an unbounded frame.
pub fn finite_length_factor(frame_len: Option<usize>, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    match frame_len {
        None => Ok(1.0),
        Some(0) => Err(invalid("frame_len", "must be at least 1")),
        Some(lt) => {
            let r = lt as f64 / k as f64;
            Ok(r / (r + (k as f64 - 1.0) / k as f64))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub mode: CapacityMode,
    /// `log2(1 + P_i lambda_i^2 / N)` per subchannel.
    pub per_subchannel_bits: Vec<f64>,
    /// Bits per symbol, finite-length factor applied.
    pub total_bits_per_symbol: f64,
    pub finite_length_factor: f64,
    pub spectral_efficiency_bits_s_hz: Option<f64>,
    pub ebn0_db: Option<f64>,
}

impl CapacityReport {
    fn from_terms(mode: CapacityMode, terms: Vec<f64>, factor: f64) -> Self {
        let unfactored = 0.5 * terms.iter().sum::<f64>();
        CapacityReport {
            mode,
            per_subchannel_bits: terms,
            total_bits_per_symbol: factor * unfactored,
            finite_length_factor: factor,
            spectral_efficiency_bits_s_hz: None,
            ebn0_db: None,
        }
    }

    /// `1/2 sum` of the per-subchannel terms, without the length factor.
    pub fn unfactored(&self) -> f64 {
        0.5 * self.per_subchannel_bits.iter().sum::<f64>()
    }

    /// Attach the spectral efficiency for occupied band `b_hz` and symbol
    /// time `t`.
    pub fn with_spectral_efficiency(mut self, b_hz: f64, t: f64) -> Result<Self> {
        self.spectral_efficiency_bits_s_hz = Some(spectral_efficiency(&self, b_hz, t)?);
        Ok(self)
    }
}

fn terms(lambda: &[f64], powers: &[f64], noise_power: f64) -> Vec<f64> {
    lambda
        .iter()
        .zip(powers)
        .map(|(l, p)| (p * l * l / noise_power).ln_1p() / std::f64::consts::LN_2)
        .collect()
}

/// Capacity of a given allocation over `lambda`.
pub fn capacity(
    lambda: &SingularSpectrum,
    alloc: &PowerAllocation,
    frame_len: Option<usize>,
    k: usize,
) -> Result<CapacityReport> {
    if alloc.powers.len() != lambda.len() {
        return Err(Error::LengthMismatch {
            expected: lambda.len(),
            actual: alloc.powers.len(),
        });
    }
    let mode = if alloc.mu.is_nan() {
        CapacityMode::EqualPower
    } else {
        CapacityMode::Waterfill
    };
    let factor = finite_length_factor(frame_len, k)?;
    Ok(CapacityReport::from_terms(
        mode,
        terms(lambda.values(), &alloc.powers, alloc.noise_power),
        factor,
    ))
}

/// Capacity at a given Eb/N0 with `eta` bits per stream symbol and
/// `ts_over_t = 1/K`. Equal power gives `1/2 sum log2(1 + eta (Ts/T)
/// (Eb/N0) lambda_i^2)`; waterfilling uses `P = K eta Eb` and `N = K N0`.
pub fn capacity_ebn0(
    lambda: &SingularSpectrum,
    eta: f64,
    ts_over_t: f64,
    ebn0_db: f64,
    mode: CapacityMode,
) -> Result<CapacityReport> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(invalid("eta", "must be positive"));
    }
    let k = 1.0 / ts_over_t;
    if !(ts_over_t > 0.0 && ts_over_t <= 1.0) || (k - k.round()).abs() > 1e-9 * k {
        return Err(invalid("ts_over_t", "must equal 1/K for an integer K >= 1"));
    }
    if ebn0_db.is_nan() || ebn0_db == f64::INFINITY {
        return Err(invalid("ebn0_db", "must be finite or -inf"));
    }
    let x = 10f64.powf(ebn0_db / 10.0);
    let values = lambda.values();
    let t = match mode {
        CapacityMode::EqualPower => {
            let snr = eta * ts_over_t * x;
            values
                .iter()
                .map(|l| (snr * l * l).ln_1p() / std::f64::consts::LN_2)
                .collect()
        }
        CapacityMode::Waterfill => {
            let alloc = waterfill(&lambda.squared(), k, k * eta * x)?;
            terms(values, &alloc.powers, alloc.noise_power)
        }
    };
    let mut report = CapacityReport::from_terms(mode, t, 1.0);
    report.ebn0_db = Some(ebn0_db);
    Ok(report)
}

/// `C / (B T)` using the unfactored capacity.
pub fn spectral_efficiency(report: &CapacityReport, b_hz: f64, t: f64) -> Result<f64> {
    if !(b_hz > 0.0 && b_hz.is_finite()) {
        return Err(invalid("b_hz", "occupied bandwidth must be positive"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", "symbol time must be positive"));
    }
    Ok(report.unfactored() / (b_hz * t))
}

/// Subchannel gains of `K` overlapped streams: the singular values of the
/// square-frame (`L_t = K`) channel matrix.
pub fn stream_gains(pulse: &PulseShape) -> Result<SingularSpectrum> {
    singular_spectrum(&build_channel_matrix(pulse, pulse.samples_per_symbol())?)
}

/// Eb/N0 (dB) at which `pulse` with `K` streams reaches `target_bits`.
pub fn required_ebn0(
    pulse: &PulseShape,
    eta: f64,
    target_bits: f64,
    mode: CapacityMode,
) -> Result<f64> {
    let gains = stream_gains(pulse)?;
    required_ebn0_for(
        &gains,
        eta,
        1.0 / pulse.samples_per_symbol() as f64,
        target_bits,
        mode,
    )
}

/// Bisection on [`capacity_ebn0`]. A non-positive target has no finite
/// answer and is rejected.
pub fn required_ebn0_for(
    lambda: &SingularSpectrum,
    eta: f64,
    ts_over_t: f64,
    target_bits: f64,
    mode: CapacityMode,
) -> Result<f64> {
    if !(target_bits > 0.0 && target_bits.is_finite()) {
        return Err(invalid(
            "target_bits",
            "must be positive; zero capacity is only reached at -inf dB",
        ));
    }
    let c = |db: f64| -> Result<f64> {
        Ok(capacity_ebn0(lambda, eta, ts_over_t, db, mode)?.total_bits_per_symbol)
    };
    let (mut lo, mut hi) = (-BRACKET_STEP_DB, 2.0 * BRACKET_STEP_DB);
    while c(lo)? >= target_bits {
        lo -= BRACKET_STEP_DB;
        if lo < -BRACKET_LIMIT_DB {
            return Err(Error::Unbracketed {
                target: target_bits,
                low_db: lo,
                high_db: hi,
            });
        }
    }
    while c(hi)? < target_bits {
        hi += BRACKET_STEP_DB;
        if hi > BRACKET_LIMIT_DB {
            return Err(Error::Unbracketed {
                target: target_bits,
                low_db: lo,
                high_db: hi,
            });
        }
    }
    while hi - lo > BISECTION_TOL_DB {
        let mid = 0.5 * (lo + hi);
        if c(mid)? < target_bits {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mux::{map_bits, Alphabet};
use crate::Cpx;

pub const DEFAULT_ORDER: usize = 256;
pub const DEFAULT_ROLLOFF: f64 = 0.25;
pub const DEFAULT_SPAN_SYMBOLS: usize = 10;

/// Decisions whose residual exceeds this share of half the minimum
/// distance on either axis count as marginal.
pub const MARGINAL_RESIDUAL: f64 = 0.75;
/// Largest tolerated share of marginal decisions.
pub const MAX_MARGINAL_FRACTION: f64 = 0.1;

/// A root-raised-cosine QAM signal sharing the processing band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfererParams {
    pub order: usize,
    pub symbol_rate_hz: f64,
    pub offset_hz: f64,
    #[serde(default = "default_rolloff")]
    pub rolloff: f64,
    /// One-sided pulse span in symbols.
    #[serde(default = "default_span")]
    pub span_symbols: usize,
    /// Power relative to the unit-power meta signal; `"-inf"` disables it.
    #[serde(with = "db_or_off")]
    pub power_db: f64,
}

fn default_rolloff() -> f64 {
    DEFAULT_ROLLOFF
}

fn default_span() -> usize {
    DEFAULT_SPAN_SYMBOLS
}

impl InterfererParams {
    /// Desk layout: the QAM sits beside the meta band, occupying 0.4 fs
    /// centred at +0.23 fs.
    pub fn desk(sample_rate: f64) -> Self {
        InterfererParams {
            order: DEFAULT_ORDER,
            symbol_rate_hz: 0.32 * sample_rate,
            offset_hz: 0.23 * sample_rate,
            rolloff: DEFAULT_ROLLOFF,
            span_symbols: DEFAULT_SPAN_SYMBOLS,
            power_db: 0.0,
        }
    }

    /// 75% occupancy of the processing band (750 kHz of 1 MHz when
    /// `sample_rate` is 1 MHz). The band covers the meta signal.
    pub fn wide(sample_rate: f64) -> Self {
        InterfererParams {
            order: DEFAULT_ORDER,
            symbol_rate_hz: 0.6 * sample_rate,
            offset_hz: 0.125 * sample_rate,
            rolloff: DEFAULT_ROLLOFF,
            span_symbols: DEFAULT_SPAN_SYMBOLS,
            power_db: 0.0,
        }
    }

    pub fn symbol_period(&self) -> f64 {
        1.0 / self.symbol_rate_hz
    }

    /// `(low, high)` edges of the occupied band, `offset -/+ R (1 + beta) / 2`.
    pub fn occupied_band(&self) -> (f64, f64) {
        let half = 0.5 * self.symbol_rate_hz * (1.0 + self.rolloff);
        (self.offset_hz - half, self.offset_hz + half)
    }

    /// Amplitude applied by [`superpose`].
    pub fn gain(&self) -> f64 {
        db_to_gain(self.power_db)
    }

    pub fn alphabet(&self) -> Result<Alphabet> {
        Alphabet::square_qam(self.order)
    }

    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        self.alphabet()?;
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(invalid("sample_rate", "must be positive"));
        }
        if !(self.symbol_rate_hz > 0.0 && self.symbol_rate_hz.is_finite()) {
            return Err(invalid("symbol_rate_hz", "must be positive"));
        }
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return Err(invalid("rolloff", "must lie in (0, 1]"));
        }
        if self.span_symbols == 0 {
            return Err(invalid("span_symbols", "must be at least 1"));
        }
        if !self.offset_hz.is_finite() {
            return Err(invalid("offset_hz", "must be finite"));
        }
        if self.power_db.is_nan() || self.power_db == f64::INFINITY {
            return Err(invalid("power_db", "must be finite or -inf"));
        }
        let (lo, hi) = self.occupied_band();
        let nyq = 0.5 * sample_rate;
        let slack = 1e-9 * sample_rate;
        if lo < -nyq - slack || hi > nyq + slack {
            return Err(Error::BandOutsideProcessing {
                low_hz: lo,
                high_hz: hi,
                nyquist_hz: nyq,
            });
        }
        Ok(())
    }

    /// Time of symbol `n`: the first pulse starts at the frame start.
    pub fn symbol_time(&self, n: usize) -> f64 {
        (self.span_symbols + n) as f64 * self.symbol_period()
    }

    /// How many whole pulses fit in `n_samples` at `sample_rate`.
    pub fn symbols_that_fit(&self, sample_rate: f64, n_samples: usize) -> usize {
        if n_samples == 0 {
            return 0;
        }
        let duration = (n_samples - 1) as f64 / sample_rate;
        let tq = self.symbol_period();
        let free = duration - 2.0 * self.span_symbols as f64 * tq;
        if free < 0.0 {
            0
        } else {
            (free / tq + 1e-9).floor() as usize + 1
        }
    }
}

pub fn db_to_gain(db: f64) -> f64 {
    if db == f64::NEG_INFINITY {
        0.0
    } else {
        10f64.powf(db / 20.0)
    }
}

/// Serialize `-inf` as the string `"-inf"`; JSON has no infinities.
mod db_or_off {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Raw::Text(t) => Err(de::Error::custom(format!(
                "expected a number or \"-inf\", got \"{t}\""
            ))),
        }
    }
}

/// Root-raised-cosine pulse at `x = t / T_q`, scaled so that its energy
/// is `T_q` (unit mean power for unit-energy symbols).
pub fn rrc(x: f64, rolloff: f64) -> f64 {
    let b = rolloff;
    if x.abs() < 1e-12 {
        return 1.0 - b + 4.0 * b / PI;
    }
    let q = 4.0 * b * x;
    if (1.0 - q * q).abs() < 1e-10 {
        let a = PI / (4.0 * b);
        return b / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    ((PI * x * (1.0 - b)).sin() + q * (PI * x * (1.0 + b)).cos()) / (PI * x * (1.0 - q * q))
}

/// Sample indices covered by the pulse of a symbol at time `t`.
fn support(t: f64, span: f64, sample_rate: f64, n_samples: usize) -> std::ops::Range<usize> {
    let lo = ((t - span) * sample_rate).ceil().max(0.0) as usize;
    let hi = (((t + span) * sample_rate).floor() as usize + 1).min(n_samples);
    lo..hi.max(lo)
}

fn carrier(offset_hz: f64, sample_rate: f64, m: usize) -> Cpx {
    Cpx::from_polar(1.0, 2.0 * PI * offset_hz * m as f64 / sample_rate)
}

/// Unit-power QAM interferer of `n_samples` samples at `sample_rate`.
/// The pulse is evaluated directly at the sample instants, so no
/// resampling stage is needed. Symbols are laid out from the frame start;
/// `bits` must not hold more symbols than fit.
pub fn make_qam_interferer(
    params: &InterfererParams,
    bits: &[u8],
    sample_rate: f64,
    n_samples: usize,
) -> Result<Vec<Cpx>> {
    params.validate(sample_rate)?;
    let symbols = map_bits(bits, &params.alphabet()?)?;
    let fit = params.symbols_that_fit(sample_rate, n_samples);
    if symbols.len() > fit {
        return Err(invalid(
            "bits",
            format!(
                "{} symbols given but only {fit} fit in the frame",
                symbols.len()
            ),
        ));
    }
    let tq = params.symbol_period();
    let span = params.span_symbols as f64 * tq;
    let mut out = vec![Cpx::new(0.0, 0.0); n_samples];
    for (n, &a) in symbols.iter().enumerate() {
        let t = params.symbol_time(n);
        for m in support(t, span, sample_rate, n_samples) {
            out[m] += a * rrc((m as f64 / sample_rate - t) / tq, params.rolloff);
        }
    }
    for (m, o) in out.iter_mut().enumerate() {
        *o *= carrier(params.offset_hz, sample_rate, m);
    }
    Ok(out)
}

/// Hard QAM decisions and their reliability.
#[derive(Debug, Clone, PartialEq)]
pub struct QamDecisions {
    /// Matched-filter outputs, one per symbol.
    pub soft: Vec<Cpx>,
    pub indices: Vec<usize>,
    pub bits: Vec<u8>,
    /// Share of decisions close to a decision boundary.
    pub marginal_fraction: f64,
}

impl QamDecisions {
    /// Error out when too many decisions are marginal.
    pub fn check_reliable(&self) -> Result<()> {
        if self.marginal_fraction > MAX_MARGINAL_FRACTION {
            return Err(Error::UnreliableSlicing {
                marginal_fraction: self.marginal_fraction,
            });
        }
        Ok(())
    }
}

/// Coherent demodulation of a unit-amplitude interferer: mix to baseband,
/// matched-filter with the RRC pulse at each symbol centre and slice.
/// The matched filter is also the band filter: anything outside the RRC
/// band is rejected by it.
pub fn demodulate_qam(
    samples: &[Cpx],
    params: &InterfererParams,
    sample_rate: f64,
    n_symbols: usize,
) -> Result<QamDecisions> {
    params.validate(sample_rate)?;
    let fit = params.symbols_that_fit(sample_rate, samples.len());
    if n_symbols > fit {
        return Err(invalid(
            "n_symbols",
            format!("{n_symbols} requested but only {fit} fit in the frame"),
        ));
    }
    let alphabet = params.alphabet()?;
    let tq = params.symbol_period();
    let span = params.span_symbols as f64 * tq;
    let scale = 1.0 / (sample_rate * tq);
    let soft: Vec<Cpx> = (0..n_symbols)
        .map(|n| {
            let t = params.symbol_time(n);
            support(t, span, sample_rate, samples.len())
                .map(|m| {
                    samples[m]
                        * carrier(params.offset_hz, sample_rate, m).conj()
                        * rrc((m as f64 / sample_rate - t) / tq, params.rolloff)
                })
                .sum::<Cpx>()
                * scale
        })
        .collect();
    let indices: Vec<usize> = soft.iter().map(|&r| alphabet.nearest(r)).collect();
    let limit = MARGINAL_RESIDUAL * alphabet.min_distance() / 2.0;
    let marginal = soft
        .iter()
        .zip(&indices)
        .filter(|(r, &i)| {
            let e = *r - alphabet.point(i);
            e.re.abs() > limit || e.im.abs() > limit
        })
        .count();
    Ok(QamDecisions {
        bits: alphabet.indices_to_bits(&indices),
        soft,
        indices,
        marginal_fraction: if n_symbols == 0 {
            0.0
        } else {
            marginal as f64 / n_symbols as f64
        },
    })
}

/// `meta + g * interferer`, `g = 10^(power_db / 20)`; the shorter input
/// is zero-padded.
pub fn superpose(meta: &[Cpx], interferer: &[Cpx], power_db: f64) -> Vec<Cpx> {
    let g = db_to_gain(power_db);
    let n = meta.len().max(interferer.len());
    let zero = Cpx::new(0.0, 0.0);
    (0..n)
        .map(|i| {
            let a = meta.get(i).copied().unwrap_or(zero);
            let b = interferer.get(i).copied().unwrap_or(zero);
            a + b * g
        })
        .collect()
}

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default Gaussian bandwidth-time product.
pub const DEFAULT_GAUSSIAN_BT: f64 = 0.3;

/// Pulse family and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseKind {
    Rectangular,
    /// Taylor window with the given peak sidelobe level (positive dB).
    /// `nbar` may be omitted for 35 dB and 50 dB.
    Taylor {
        sidelobe_db: f64,
        nbar: Option<usize>,
    },
    Gaussian {
        bt: f64,
    },
    Hamming,
    /// Caller-supplied taps, used verbatim (no normalization).
    Custom,
}

impl PulseKind {
    pub fn taylor(sidelobe_db: f64) -> Self {
        PulseKind::Taylor {
            sidelobe_db,
            nbar: None,
        }
    }

    pub fn gaussian() -> Self {
        PulseKind::Gaussian {
            bt: DEFAULT_GAUSSIAN_BT,
        }
    }

    /// Short name used on the command line and in CSV output.
    pub fn short_name(&self) -> String {
        match self {
            PulseKind::Rectangular => "rect".into(),
            PulseKind::Taylor { sidelobe_db, .. } => format!("taylor{}", sidelobe_db.round()),
            PulseKind::Gaussian { .. } => "gaussian".into(),
            PulseKind::Hamming => "hamming".into(),
            PulseKind::Custom => "custom".into(),
        }
    }
}

impl fmt::Display for PulseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.short_name())
    }
}

impl FromStr for PulseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rect" | "rectangular" => Ok(PulseKind::Rectangular),
            "taylor35" => Ok(PulseKind::taylor(35.0)),
            "taylor50" => Ok(PulseKind::taylor(50.0)),
            "gaussian" => Ok(PulseKind::gaussian()),
            "hamming" => Ok(PulseKind::Hamming),
            other => Err(invalid("waveform", format!("unknown pulse kind `{other}`"))),
        }
    }
}

/// Sampled impulse response of one symbol: `K` taps spanning one symbol
/// time `T`, so the sample interval is `T / K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    taps: Vec<f64>,
    symbol_time: f64,
    kind: PulseKind,
}

impl PulseShape {
    /// Wrap arbitrary taps. They are not normalized.
    pub fn from_taps(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(invalid("taps", "pulse needs at least one tap"));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(invalid("taps", "taps must be finite"));
        }
        Ok(PulseShape {
            taps,
            symbol_time: 1.0,
            kind: PulseKind::Custom,
        })
    }

    pub fn with_symbol_time(mut self, symbol_time: f64) -> Result<Self> {
        if !(symbol_time > 0.0 && symbol_time.is_finite()) {
            return Err(invalid("symbol_time", "must be positive and finite"));
        }
        self.symbol_time = symbol_time;
        Ok(self)
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Overlap factor `K`.
    pub fn samples_per_symbol(&self) -> usize {
        self.taps.len()
    }

    pub fn symbol_time(&self) -> f64 {
        self.symbol_time
    }

    pub fn sample_rate(&self) -> f64 {
        self.taps.len() as f64 / self.symbol_time
    }

    pub fn kind(&self) -> PulseKind {
        self.kind
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,value")?;
        for (i, t) in self.taps.iter().enumerate() {
            writeln!(out, "{i},{t:e}")?;
        }
        Ok(())
    }
}

/// Build a unit-energy pulse of `k` taps.
pub fn make_pulse(kind: PulseKind, k: usize) -> Result<PulseShape> {
    if k == 0 {
        return Err(invalid("k", "overlap factor must be at least 1"));
    }
    let (raw, resolved) = match kind {
        PulseKind::Rectangular => (vec![1.0; k], kind),
        PulseKind::Hamming => (hamming(k), kind),
        PulseKind::Gaussian { bt } => {
            if !(bt > 0.0 && bt.is_finite()) {
                return Err(invalid("bt", "bandwidth-time product must be positive"));
            }
            (gaussian(k, bt), kind)
        }
        PulseKind::Taylor { sidelobe_db, nbar } => {
            if !(sidelobe_db > 0.0 && sidelobe_db.is_finite()) {
                return Err(invalid("sidelobe_db", "must be a positive level in dB"));
            }
            let nbar = match nbar {
                Some(n) if n >= 1 => n,
                Some(_) => return Err(invalid("nbar", "must be at least 1")),
                None => default_nbar(sidelobe_db).ok_or_else(|| {
                    invalid(
                        "nbar",
                        format!("no default nbar for a {sidelobe_db} dB Taylor pulse; give one"),
                    )
                })?,
            };
            (
                taylor(k, sidelobe_db, nbar),
                PulseKind::Taylor {
                    sidelobe_db,
                    nbar: Some(nbar),
                },
            )
        }
        PulseKind::Custom => {
            return Err(invalid(
                "kind",
                "custom pulses are built with PulseShape::from_taps",
            ))
        }
    };
    let norm = raw.iter().map(|t| t * t).sum::<f64>().sqrt();
    Ok(PulseShape {
        taps: raw.into_iter().map(|t| t / norm).collect(),
        symbol_time: 1.0,
        kind: resolved,
    })
}

fn default_nbar(sidelobe_db: f64) -> Option<usize> {
    if (sidelobe_db - 35.0).abs() < 1e-9 {
        Some(4)
    } else if (sidelobe_db - 50.0).abs() < 1e-9 {
        // nbar = 4 leaves far sidelobes above -50 dB.
        Some(8)
    } else {
        None
    }
}

fn hamming(k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    let m = (k - 1) as f64;
    (0..k)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / m).cos())
        .collect()
}

fn gaussian(k: usize, bt: f64) -> Vec<f64> {
    // Time in units of T, centered on the symbol.
    let sigma = (2.0f64.ln()).sqrt() / (2.0 * PI * bt);
    let mid = (k as f64 - 1.0) / 2.0;
    (0..k)
        .map(|n| {
            let t = (n as f64 - mid) / k as f64;
            (-t * t / (2.0 * sigma * sigma)).exp()
        })
        .collect()
}

/// Symmetric Taylor window from its cosine series coefficients.
fn taylor(k: usize, sidelobe_db: f64, nbar: usize) -> Vec<f64> {
    let b = 10f64.powf(sidelobe_db / 20.0);
    let a = b.acosh() / PI;
    let a2 = a * a;
    let sp2 = (nbar * nbar) as f64 / (a2 + (nbar as f64 - 0.5).powi(2));

    let coeffs: Vec<f64> = (1..nbar)
        .map(|m| {
            let mf = m as f64;
            let numer: f64 = (1..nbar)
                .map(|n| 1.0 - mf * mf / sp2 / (a2 + (n as f64 - 0.5).powi(2)))
                .product();
            let denom: f64 = (1..nbar)
                .filter(|&n| n != m)
                .map(|n| 1.0 - mf * mf / (n * n) as f64)
                .product();
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            sign * numer / (2.0 * denom)
        })
        .collect();

    let mid = (k as f64 - 1.0) / 2.0;
    (0..k)
        .map(|n| {
            let x = (n as f64 - mid) / k as f64;
            1.0 + 2.0
                * coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, f)| f * (2.0 * PI * (i + 1) as f64 * x).cos())
                    .sum::<f64>()
        })
        .collect()
}

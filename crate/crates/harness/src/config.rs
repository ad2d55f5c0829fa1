//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use metamux::capacity::CapacityMode;
use metamux::channel::InterfererParams;
use metamux::decoder::SmcConfig;
use metamux::mux::{Alphabet, AlphabetKind};
use metamux::waveform::{make_pulse, PulseKind, PulseShape, MIN_PAD_FACTOR};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Overlap factors swept by default in capacity runs.
pub const DEFAULT_K_VALUES: [usize; 16] = [
    2, 4, 8, 10, 20, 30, 50, 60, 100, 200, 300, 450, 600, 900, 1200, 1800,
];
pub const MIN_BIT_BUDGET: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every stochastic stream is derived from it.
    pub seed: u64,
    #[serde(default = "default_waveform", with = "waveform_field")]
    pub waveform: PulseKind,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_symbol_time")]
    pub symbol_time: f64,
    #[serde(default = "default_alphabet")]
    pub alphabet: AlphabetKind,
    #[serde(default = "default_grid", with = "grid_field")]
    pub ebn0_db: Vec<f64>,
    /// Symbols per frame; `10 K` when absent.
    #[serde(default)]
    pub frame_len: Option<usize>,
    /// Bit budget per grid point.
    #[serde(default = "default_bits")]
    pub bits: u64,
    /// Stop a grid point early once this many bit errors are seen;
    /// `null` always spends the full budget.
    #[serde(default = "default_min_errors")]
    pub min_errors: Option<u64>,
    /// Frames decoded between early-stop checks.
    #[serde(default = "default_batch")]
    pub batch_frames: usize,
    #[serde(default)]
    pub decoder: DecoderChoice,
    #[serde(default)]
    pub smc: SmcConfig,
    #[serde(default)]
    pub capacity: CapacitySettings,
    #[serde(default)]
    pub spectrum: SpectrumSettings,
    #[serde(default)]
    pub interferer: Option<InterfererConfig>,
    #[serde(default)]
    pub output: OutputSettings,
}

fn default_waveform() -> PulseKind {
    PulseKind::taylor(35.0)
}
fn default_k() -> usize {
    8
}
fn default_symbol_time() -> f64 {
    1.0
}
fn default_alphabet() -> AlphabetKind {
    AlphabetKind::ComplexBpsk
}
fn default_grid() -> Vec<f64> {
    vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0]
}
fn default_bits() -> u64 {
    100_000
}
fn default_min_errors() -> Option<u64> {
    Some(100)
}
fn default_batch() -> usize {
    16
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderChoice {
    /// Viterbi when the trellis has at most [`AUTO_VITERBI_STATES`] states.
    #[default]
    Auto,
    Viterbi,
    Smc,
}

pub const AUTO_VITERBI_STATES: u128 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthMeasure {
    /// 35 dB bounded-PSD bandwidth of the pulse.
    #[default]
    Bpsd35,
    /// 99% fractional power containment bandwidth.
    Fpcb99,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySettings {
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    #[serde(default = "default_modes")]
    pub modes: Vec<CapacityMode>,
    /// Required Eb/N0 is solved for `target_bits_per_stream * K` bits.
    #[serde(default = "default_target")]
    pub target_bits_per_stream: f64,
    #[serde(default)]
    pub bandwidth: BandwidthMeasure,
    #[serde(default = "default_pad")]
    pub pad_factor: usize,
}

fn default_k_values() -> Vec<usize> {
    DEFAULT_K_VALUES.to_vec()
}
fn default_modes() -> Vec<CapacityMode> {
    vec![CapacityMode::EqualPower, CapacityMode::Waterfill]
}
fn default_target() -> f64 {
    2.0
}
fn default_pad() -> usize {
    256
}

impl Default for CapacitySettings {
    fn default() -> Self {
        CapacitySettings {
            k_values: default_k_values(),
            modes: default_modes(),
            target_bits_per_stream: default_target(),
            bandwidth: BandwidthMeasure::default(),
            pad_factor: default_pad(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSettings {
    #[serde(default = "default_pad")]
    pub pad_factor: usize,
    /// Also estimate the spectrum of a random multiplexed signal.
    #[serde(default)]
    pub signal: Option<WelchSettings>,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        SpectrumSettings {
            pad_factor: default_pad(),
            signal: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WelchSettings {
    #[serde(default = "default_signal_symbols")]
    pub symbols: usize,
    #[serde(default = "default_segment")]
    pub segment_len: usize,
    #[serde(default = "default_overlap")]
    pub overlap: f64,
}

fn default_signal_symbols() -> usize {
    1 << 16
}
fn default_segment() -> usize {
    4096
}
fn default_overlap() -> f64 {
    0.5
}

impl Default for WelchSettings {
    fn default() -> Self {
        WelchSettings {
            symbols: default_signal_symbols(),
            segment_len: default_segment(),
            overlap: default_overlap(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfererPreset {
    /// Beside the meta band: 0.4 fs wide, centred at +0.23 fs.
    #[default]
    Desk,
    /// 75% of the processing band, covering the meta band.
    Wide,
}

/// Interferer as a preset plus optional overrides. Frequencies are in Hz
/// at the meta sample rate `K / T`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfererConfig {
    #[serde(default)]
    pub preset: InterfererPreset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol_rate_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rolloff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_symbols: Option<usize>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "opt_level_field"
    )]
    pub power_db: Option<f64>,
}

impl InterfererConfig {
    pub fn resolve(&self, sample_rate: f64) -> InterfererParams {
        let mut p = match self.preset {
            InterfererPreset::Desk => InterfererParams::desk(sample_rate),
            InterfererPreset::Wide => InterfererParams::wide(sample_rate),
        };
        if let Some(v) = self.order {
            p.order = v;
        }
        if let Some(v) = self.symbol_rate_hz {
            p.symbol_rate_hz = v;
        }
        if let Some(v) = self.offset_hz {
            p.offset_hz = v;
        }
        if let Some(v) = self.rolloff {
            p.rolloff = v;
        }
        if let Some(v) = self.span_symbols {
            p.span_symbols = v;
        }
        if let Some(v) = self.power_db {
            p.power_db = v;
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: PathBuf,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings {
            dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// All defaults with the given seed.
    pub fn with_seed(seed: u64) -> Self {
        serde_json::from_value(serde_json::json!({ "seed": seed })).expect("defaults parse")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| HarnessError::config("<json>", format!("{e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len.unwrap_or(10 * self.k)
    }

    pub fn pulse(&self) -> Result<PulseShape> {
        Ok(make_pulse(self.waveform, self.k)?.with_symbol_time(self.symbol_time)?)
    }

    pub fn alphabet(&self) -> Result<Alphabet> {
        Ok(Alphabet::from_kind(self.alphabet)?)
    }

    pub fn sample_rate(&self) -> f64 {
        self.k as f64 / self.symbol_time
    }

    pub fn interferer_params(&self) -> Option<InterfererParams> {
        self.interferer
            .as_ref()
            .map(|i| i.resolve(self.sample_rate()))
    }

    /// Check every field; the error names the offending key.
    pub fn validate(&self) -> Result<()> {
        let bad = |f: &str, r: &str| Err(HarnessError::config(f, r));
        if self.k == 0 {
            return bad("k", "must be at least 1");
        }
        if !(self.symbol_time > 0.0 && self.symbol_time.is_finite()) {
            return bad("symbol_time", "must be positive and finite");
        }
        if self.waveform == PulseKind::Custom {
            return bad("waveform", "custom pulses cannot be configured by name");
        }
        make_pulse(self.waveform, self.k)
            .map_err(|e| HarnessError::config("waveform", e.to_string()))?;
        Alphabet::from_kind(self.alphabet)
            .map_err(|e| HarnessError::config("alphabet", e.to_string()))?;
        check_grid("ebn0_db", &self.ebn0_db)?;
        if self.frame_len == Some(0) {
            return bad("frame_len", "must be at least 1");
        }
        if self.bits < MIN_BIT_BUDGET {
            return bad("bits", "bit budget must be at least 10000");
        }
        if self.min_errors == Some(0) {
            return bad("min_errors", "must be at least 1, or null to disable");
        }
        if self.batch_frames == 0 {
            return bad("batch_frames", "must be at least 1");
        }
        self.smc
            .validate()
            .map_err(|e| HarnessError::config("smc", e.to_string()))?;

        let c = &self.capacity;
        if c.k_values.is_empty() || c.k_values.contains(&0) {
            return bad("capacity.k_values", "must be a nonempty list of positive K");
        }
        if c.k_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("capacity.k_values", "must be strictly increasing");
        }
        if c.modes.is_empty() {
            return bad("capacity.modes", "must name at least one mode");
        }
        if !(c.target_bits_per_stream > 0.0 && c.target_bits_per_stream.is_finite()) {
            return bad("capacity.target_bits_per_stream", "must be positive");
        }
        if c.pad_factor < MIN_PAD_FACTOR {
            return bad("capacity.pad_factor", "must be at least 64");
        }
        if self.spectrum.pad_factor < MIN_PAD_FACTOR {
            return bad("spectrum.pad_factor", "must be at least 64");
        }
        if let Some(w) = &self.spectrum.signal {
            if w.segment_len < 2 {
                return bad("spectrum.signal.segment_len", "must be at least 2");
            }
            if w.symbols + self.k - 1 < 2 * w.segment_len {
                return bad(
                    "spectrum.signal.symbols",
                    "signal must span at least two segments",
                );
            }
            if !(0.0..1.0).contains(&w.overlap) {
                return bad("spectrum.signal.overlap", "must lie in [0, 1)");
            }
        }
        if let Some(p) = self.interferer_params() {
            p.validate(self.sample_rate())
                .map_err(|e| HarnessError::config("interferer", e.to_string()))?;
        }
        if self.output.dir.as_os_str().is_empty() {
            return bad("output.dir", "must not be empty");
        }
        Ok(())
    }
}

fn check_grid(field: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(HarnessError::config(field, "grid must not be empty"));
    }
    if grid.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
        return Err(HarnessError::config(
            field,
            "entries must be numbers or \"inf\"",
        ));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::config(
            field,
            "grid must be strictly increasing",
        ));
    }
    Ok(())
}

/// Parse `start:step:stop` (inclusive) or a single value.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        match s.trim() {
            "inf" => Ok(f64::INFINITY),
            t => t
                .parse::<f64>()
                .map_err(|_| HarnessError::config("--ebn0", format!("`{t}` is not a number"))),
        }
    };
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [v] => vec![num(v)?],
        [a, s, b] => {
            let (a, s, b) = (num(a)?, num(s)?, num(b)?);
            if !(s > 0.0 && s.is_finite() && a.is_finite() && b.is_finite()) || b < a {
                return Err(HarnessError::config(
                    "--ebn0",
                    "need finite start <= stop and a positive step",
                ));
            }
            let n = ((b - a) / s + 1e-9).floor() as usize;
            (0..=n).map(|i| a + i as f64 * s).collect()
        }
        _ => {
            return Err(HarnessError::config(
                "--ebn0",
                "expected `start:step:stop` or a single value",
            ))
        }
    };
    check_grid("--ebn0", &grid)?;
    Ok(grid)
}

/// Numbers, or the strings `"inf"` / `"-inf"`.
#[derive(Deserialize)]
#[serde(untagged)]
enum Level {
    Num(f64),
    Text(String),
}

impl Level {
    fn value<E: serde::de::Error>(self) -> std::result::Result<f64, E> {
        match self {
            Level::Num(v) => Ok(v),
            Level::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Level::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Level::Text(t) => Err(E::custom(format!(
                "expected a number, \"inf\" or \"-inf\", got \"{t}\""
            ))),
        }
    }
}

fn level_to_json(v: f64) -> serde_json::Value {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        v.into()
    }
}

mod grid_field {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{level_to_json, Level};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let vals: Vec<serde_json::Value> = v.iter().map(|&x| level_to_json(x)).collect();
        vals.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Level>::deserialize(d)?
            .into_iter()
            .map(Level::value)
            .collect()
    }
}

mod opt_level_field {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{level_to_json, Level};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(level_to_json).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<Level>::deserialize(d)?
            .map(Level::value)
            .transpose()
    }
}

/// Accepts either the object form of a pulse kind or a short name such
/// as `"taylor35"`.
mod waveform_field {
    use metamux::waveform::PulseKind;
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &PulseKind, s: S) -> Result<S::Ok, S::Error> {
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PulseKind, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Full(PulseKind),
        }
        match Raw::deserialize(d)? {
            Raw::Name(n) => n.parse().map_err(de::Error::custom),
            Raw::Full(k) => Ok(k),
        }
    }
}

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{encode, map_bits, Alphabet, AlphabetKind};
use crate::error::{Error, Result};
use crate::waveform::{make_pulse, PulseKind, PulseShape};
use crate::Cpx;

/// One transmitted block: bits, their symbols and the noiseless
/// overlapped samples (`L_r = L_t + K - 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub bits: Vec<u8>,
    pub symbols: Vec<Cpx>,
    pub samples: Vec<Cpx>,
    pub pulse: PulseShape,
    pub alphabet: Alphabet,
}

impl Frame {
    pub fn from_bits(bits: Vec<u8>, pulse: &PulseShape, alphabet: &Alphabet) -> Result<Frame> {
        let symbols = map_bits(&bits, alphabet)?;
        let samples = encode(&symbols, pulse)?;
        Ok(Frame {
            bits,
            symbols,
            samples,
            pulse: pulse.clone(),
            alphabet: alphabet.clone(),
        })
    }

    pub fn frame_len(&self) -> usize {
        self.symbols.len()
    }

    pub fn received_len(&self) -> usize {
        self.samples.len()
    }

    pub fn sidecar(&self) -> FrameSidecar {
        FrameSidecar::new(&self.pulse, self.alphabet.kind(), self.frame_len())
    }
}

/// JSON metadata stored next to a binary sample record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSidecar {
    pub k: usize,
    pub symbol_time: f64,
    pub pulse: PulseKind,
    /// Only present for custom pulses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taps: Option<Vec<f64>>,
    pub alphabet: AlphabetKind,
    pub l_t: usize,
    pub l_r: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ebn0_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl FrameSidecar {
    pub fn new(pulse: &PulseShape, alphabet: AlphabetKind, l_t: usize) -> Self {
        let k = pulse.samples_per_symbol();
        FrameSidecar {
            k,
            symbol_time: pulse.symbol_time(),
            pulse: pulse.kind(),
            taps: (pulse.kind() == PulseKind::Custom).then(|| pulse.taps().to_vec()),
            alphabet,
            l_t,
            l_r: l_t + k - 1,
            noise_variance: None,
            ebn0_db: None,
            seed: None,
        }
    }

    /// Rebuild the pulse described by this sidecar.
    pub fn pulse_shape(&self) -> Result<PulseShape> {
        let p = match (&self.pulse, &self.taps) {
            (PulseKind::Custom, Some(t)) => PulseShape::from_taps(t.clone())?,
            (PulseKind::Custom, None) => {
                return Err(Error::Format("custom pulse without taps".into()))
            }
            (kind, _) => make_pulse(*kind, self.k)?,
        };
        if p.samples_per_symbol() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                actual: p.samples_per_symbol(),
            });
        }
        p.with_symbol_time(self.symbol_time)
    }
}

/// Write complex samples as consecutive little-endian `f64` (re, im) pairs.
pub fn write_samples<W: Write>(samples: &[Cpx], mut out: W) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(samples.len() * 16);
    for s in samples {
        buf.extend_from_slice(&s.re.to_le_bytes());
        buf.extend_from_slice(&s.im.to_le_bytes());
    }
    out.write_all(&buf)
}

pub fn read_samples<R: Read>(mut input: R) -> Result<Vec<Cpx>> {
    let mut buf = Vec::new();
    input
        .read_to_end(&mut buf)
        .map_err(|e| Error::Format(e.to_string()))?;
    if buf.len() % 16 != 0 {
        return Err(Error::Format(format!(
            "{} bytes is not a whole number of complex samples",
            buf.len()
        )));
    }
    Ok(buf
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Cpx::new(re, im)
        })
        .collect())
}

/// Path of the JSON sidecar belonging to a sample record.
pub fn sidecar_path(record: &Path) -> PathBuf {
    let mut name = record.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Write `record` and `record.json`.
pub fn save_record(record: &Path, samples: &[Cpx], sidecar: &FrameSidecar) -> std::io::Result<()> {
    if samples.len() != sidecar.l_r {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            format!(
                "{} samples but sidecar says l_r = {}",
                samples.len(),
                sidecar.l_r
            ),
        ));
    }
    write_samples(samples, std::io::BufWriter::new(fs::File::create(record)?))?;
    let json = serde_json::to_string_pretty(sidecar).map_err(std::io::Error::other)?;
    fs::write(sidecar_path(record), json + "\n")
}

pub fn load_record(record: &Path) -> Result<(Vec<Cpx>, FrameSidecar)> {
    let io = |e: std::io::Error| Error::Format(format!("{}: {e}", record.display()));
    let samples = read_samples(fs::File::open(record).map_err(io)?)?;
    let text = fs::read_to_string(sidecar_path(record)).map_err(io)?;
    let sidecar: FrameSidecar =
        serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    if samples.len() != sidecar.l_r || sidecar.l_r + 1 != sidecar.l_t + sidecar.k {
        return Err(Error::LengthMismatch {
            expected: sidecar.l_r,
            actual: samples.len(),
        });
    }
    Ok((samples, sidecar))
}

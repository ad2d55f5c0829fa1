//! Bit-error-rate waterfall: encode, calibrate, impair, decode, count.

use std::fmt;
use std::time::Instant;

use metamux::channel::{awgn, calibrate_noise};
use metamux::decoder::{smc_decode, viterbi_decode, DecodeResult, SmcConfig, DEFAULT_STATE_LIMIT};
use metamux::mux::{Alphabet, Frame};
use metamux::rng::{derive_seed, random_bits};
use metamux::waveform::PulseShape;
use metamux::Cpx;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DecoderChoice, ExperimentConfig, AUTO_VITERBI_STATES};
use crate::error::Result;
use crate::output::{ensure_dir, num, write_json, CsvWriter};

pub const BER_CSV: &str = "ber.csv";
pub const BER_TIMING_CSV: &str = "ber_timing.csv";
pub const BER_DIAGNOSTICS_JSON: &str = "ber_diagnostics.json";
pub const BER_HEADER: &str = "ebn0_db,k,waveform,decoder,bits_sent,bit_errors,ber,frames,seed";
pub const TIMING_HEADER: &str = "ebn0_db,decoder,frames,runtime_s";

/// Per-frame seed streams under `[grid_point, frame, stream]`.
pub(crate) const STREAM_BITS: u64 = 0;
pub(crate) const STREAM_NOISE: u64 = 1;
pub(crate) const STREAM_DECODER: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    Viterbi,
    Smc,
}

impl fmt::Display for Decoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decoder::Viterbi => "viterbi",
            Decoder::Smc => "smc",
        })
    }
}

/// Trellis size `|A|^(K-1)`, saturating.
pub fn trellis_states(alphabet_len: usize, k: usize) -> u128 {
    (alphabet_len as u128)
        .checked_pow((k - 1) as u32)
        .unwrap_or(u128::MAX)
}

pub fn resolve_decoder(cfg: &ExperimentConfig) -> Result<Decoder> {
    let states = trellis_states(cfg.alphabet()?.len(), cfg.k);
    match cfg.decoder {
        DecoderChoice::Smc => Ok(Decoder::Smc),
        DecoderChoice::Auto if states > AUTO_VITERBI_STATES => Ok(Decoder::Smc),
        DecoderChoice::Auto => Ok(Decoder::Viterbi),
        DecoderChoice::Viterbi if states > DEFAULT_STATE_LIMIT as u128 => {
            Err(metamux::Error::StateSpaceTooLarge {
                states,
                limit: DEFAULT_STATE_LIMIT,
            }
            .into())
        }
        DecoderChoice::Viterbi => Ok(Decoder::Viterbi),
    }
}

/// One BER grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRecord {
    pub ebn0_db: f64,
    pub k: usize,
    pub waveform: String,
    pub decoder: String,
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub frames: u64,
    /// Wall time; kept out of the CSV so that reruns are byte-identical.
    #[serde(skip)]
    pub runtime_s: f64,
    pub seed: u64,
}

impl BerRecord {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            num(self.ebn0_db),
            self.k,
            self.waveform,
            self.decoder,
            self.bits_sent,
            self.bit_errors,
            num(self.ber),
            self.frames,
            self.seed
        )
    }
}

/// Decoder diagnostics aggregated over the frames of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointDiagnostics {
    pub ebn0_db: f64,
    pub decoder: String,
    pub frames: u64,
    pub trellis_states: Option<usize>,
    pub resamples: usize,
    pub min_neff: Option<f64>,
    pub underflow_resets: usize,
}

impl PointDiagnostics {
    pub(crate) fn new(ebn0_db: f64, decoder: &str) -> Self {
        PointDiagnostics {
            ebn0_db,
            decoder: decoder.to_string(),
            frames: 0,
            trellis_states: None,
            resamples: 0,
            min_neff: None,
            underflow_resets: 0,
        }
    }

    pub(crate) fn absorb(&mut self, r: &DecodeResult) {
        let d = &r.diagnostics;
        self.frames += 1;
        self.trellis_states = self.trellis_states.or(d.states);
        self.resamples += d.resamples;
        self.underflow_resets += d.underflow_resets;
        self.min_neff = match (self.min_neff, d.min_neff) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerSweep {
    pub decoder: Decoder,
    pub records: Vec<BerRecord>,
    pub diagnostics: Vec<PointDiagnostics>,
}

/// Fixed per-run quantities shared by every frame.
pub(crate) struct Link {
    pub pulse: PulseShape,
    pub alphabet: Alphabet,
    pub eta: f64,
    pub bits_per_frame: usize,
    pub seed: u64,
}

impl Link {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let alphabet = cfg.alphabet()?;
        Ok(Link {
            pulse: cfg.pulse()?,
            eta: alphabet.bits_per_symbol() as f64,
            bits_per_frame: cfg.frame_len() * alphabet.bits_per_symbol(),
            alphabet,
            seed: cfg.seed,
        })
    }

    pub fn k(&self) -> usize {
        self.pulse.samples_per_symbol()
    }

    pub fn frames_for(&self, bits: u64) -> u64 {
        bits.div_ceil(self.bits_per_frame as u64)
    }

    pub fn stream_seed(&self, point: usize, frame: u64, stream: u64) -> u64 {
        derive_seed(self.seed, &[point as u64, frame, stream])
    }

    pub fn frame(&self, point: usize, frame: u64) -> Result<Frame> {
        let bits = random_bits(
            self.bits_per_frame,
            self.stream_seed(point, frame, STREAM_BITS),
        );
        Ok(Frame::from_bits(bits, &self.pulse, &self.alphabet)?)
    }

    /// Noise variance calibrated on the clean frame, and the noisy copy of
    /// `signal` (which may differ from the frame when other signals share
    /// the band).
    pub fn impair(
        &self,
        frame: &Frame,
        signal: &[Cpx],
        ebn0_db: f64,
        point: usize,
        index: u64,
    ) -> Result<(f64, Vec<Cpx>)> {
        let cal = calibrate_noise(&frame.samples, self.eta, self.k(), ebn0_db)?;
        let y = awgn(
            signal,
            cal.noise_variance,
            self.stream_seed(point, index, STREAM_NOISE),
        )?;
        Ok((cal.noise_variance, y))
    }

    pub fn decode(
        &self,
        decoder: Decoder,
        y: &[Cpx],
        noise_variance: f64,
        smc: &SmcConfig,
        seed: u64,
    ) -> Result<DecodeResult> {
        Ok(match decoder {
            Decoder::Viterbi => viterbi_decode(y, &self.pulse, &self.alphabet)?,
            Decoder::Smc => smc_decode(y, &self.pulse, &self.alphabet, noise_variance, smc, seed)?,
        })
    }
}

pub(crate) fn bit_errors(sent: &[u8], got: &[u8]) -> u64 {
    let common = sent.iter().zip(got).filter(|(a, b)| a != b).count();
    (common + sent.len().abs_diff(got.len())) as u64
}

/// Frames `[start, end)` of a grid point, decoded in parallel and
/// returned in frame order.
pub(crate) fn batch<T, F>(start: u64, end: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (start..end).into_par_iter().map(f).collect()
}

/// Run the sweep, writing `ber.csv` one record per grid point as soon as
/// the point finishes, plus timing and diagnostics files.
pub fn run_ber_sweep(cfg: &ExperimentConfig) -> Result<BerSweep> {
    cfg.validate()?;
    let decoder = resolve_decoder(cfg)?;
    let link = Link::new(cfg)?;
    let dir = &cfg.output.dir;
    ensure_dir(dir)?;
    let mut csv = CsvWriter::create(&dir.join(BER_CSV), BER_HEADER)?;
    let mut timing = CsvWriter::create(&dir.join(BER_TIMING_CSV), TIMING_HEADER)?;
    let total_frames = link.frames_for(cfg.bits);
    let name = decoder.to_string();

    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for (point, &db) in cfg.ebn0_db.iter().enumerate() {
        let started = Instant::now();
        let mut diag = PointDiagnostics::new(db, &name);
        let (mut errors, mut frames) = (0u64, 0u64);
        while frames < total_frames {
            let end = (frames + cfg.batch_frames as u64).min(total_frames);
            let results = batch(frames, end, |f| {
                let frame = link.frame(point, f)?;
                let (var, y) = link.impair(&frame, &frame.samples, db, point, f)?;
                let seed = link.stream_seed(point, f, STREAM_DECODER);
                let r = link.decode(decoder, &y, var, &cfg.smc, seed)?;
                Ok((bit_errors(&frame.bits, &r.bits), r))
            })?;
            for (e, r) in &results {
                errors += e;
                diag.absorb(r);
            }
            frames = end;
            if cfg.min_errors.is_some_and(|m| errors >= m) {
                break;
            }
        }
        let bits_sent = frames * link.bits_per_frame as u64;
        let rec = BerRecord {
            ebn0_db: db,
            k: link.k(),
            waveform: cfg.waveform.short_name(),
            decoder: name.clone(),
            bits_sent,
            bit_errors: errors,
            ber: errors as f64 / bits_sent as f64,
            frames,
            runtime_s: started.elapsed().as_secs_f64(),
            seed: cfg.seed,
        };
        csv.line(&rec.csv_line())?;
        timing.line(&format!(
            "{},{},{},{:.3}",
            num(db),
            name,
            frames,
            rec.runtime_s
        ))?;
        records.push(rec);
        diagnostics.push(diag);
    }
    write_json(&dir.join(BER_DIAGNOSTICS_JSON), &diagnostics)?;
    Ok(BerSweep {
        decoder,
        records,
        diagnostics,
    })
}

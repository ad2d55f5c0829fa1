use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use metamux::channel::{awgn, calibrate_noise};
use metamux::decoder::{smc_decode, viterbi_decode};
use metamux::mux::{load_record, save_record, Alphabet, Frame};
use metamux::rng::{derive_seed, random_bits};
use metamux::waveform::PulseKind;
use metamux_harness::ber::{resolve_decoder, Decoder};
use metamux_harness::config::{DecoderChoice, ExperimentConfig};
use metamux_harness::error::{HarnessError, Result};
use metamux_harness::output::{bits_to_hex, ensure_dir, hex_to_bits, write_json, write_with};
use metamux_harness::{
    parse_grid, run_ber_sweep, run_capacity_sweep, run_sharing_experiment, run_spectrum_report,
};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "metamux",
    version,
    about = "Overlapped multiplexing experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity curves and required Eb/N0 over K.
    Capacity(Common),
    /// BER waterfall over the Eb/N0 grid.
    Ber(Common),
    /// Pulse spectrum and bandwidth report.
    Spectrum(Common),
    /// Spectrum-sharing run with a QAM interferer.
    Share(Common),
    /// Write one random frame as a binary record with JSON sidecar.
    Encode(Common),
    /// Decode a binary record written by `encode`.
    Decode(DecodeArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; required unless the config supplies one.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overlap factor.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    waveform: Option<Waveform>,
    /// Eb/N0 grid in dB: `start:step:stop` or a single value.
    #[arg(long, allow_hyphen_values = true)]
    ebn0: Option<String>,
    /// Bit budget per grid point.
    #[arg(long)]
    bits: Option<u64>,
    /// Particles for the particle decoder.
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long, value_enum)]
    decoder: Option<DecoderArg>,
}

#[derive(Args, Clone)]
struct DecodeArgs {
    /// Binary sample record; its sidecar is `<input>.json`.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum Waveform {
    Rect,
    Taylor35,
    Taylor50,
    Gaussian,
    Hamming,
}

impl From<Waveform> for PulseKind {
    fn from(w: Waveform) -> Self {
        match w {
            Waveform::Rect => PulseKind::Rectangular,
            Waveform::Taylor35 => PulseKind::taylor(35.0),
            Waveform::Taylor50 => PulseKind::taylor(50.0),
            Waveform::Gaussian => PulseKind::gaussian(),
            Waveform::Hamming => PulseKind::Hamming,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    Auto,
    Viterbi,
    Smc,
}

impl From<DecoderArg> for DecoderChoice {
    fn from(d: DecoderArg) -> Self {
        match d {
            DecoderArg::Auto => DecoderChoice::Auto,
            DecoderArg::Viterbi => DecoderChoice::Viterbi,
            DecoderArg::Smc => DecoderChoice::Smc,
        }
    }
}

/// Load the config (or defaults) and apply command-line overrides.
fn resolve(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match (&c.config, c.seed) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(seed)) => ExperimentConfig::with_seed(seed),
        (None, None) => {
            return Err(HarnessError::config(
                "seed",
                "pass --seed or a --config file with a seed",
            ))
        }
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output.dir = o.clone();
    }
    if let Some(k) = c.k {
        cfg.k = k;
    }
    if let Some(w) = c.waveform {
        cfg.waveform = w.into();
    }
    if let Some(g) = &c.ebn0 {
        cfg.ebn0_db = parse_grid(g)?;
    }
    if let Some(b) = c.bits {
        cfg.bits = b;
    }
    if let Some(m) = c.particles {
        cfg.smc.particles = m;
    }
    if let Some(d) = c.decoder {
        cfg.decoder = d.into();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn capacity(c: &Common) -> Result<()> {
    let cfg = resolve(c)?;
    let sweep = run_capacity_sweep(&cfg)?;
    for r in &sweep.required {
        println!(
            "K={:<5} {:<11} C={:<7} bits/symbol at Eb/N0 = {:.2} dB",
            r.k, r.mode, r.target_bits_per_symbol, r.required_ebn0_db
        );
    }
    println!("wrote {}", cfg.output.dir.display());
    Ok(())
}

fn ber(c: &Common) -> Result<()> {
    let cfg = resolve(c)?;
    let sweep = run_ber_sweep(&cfg)?;
    for r in &sweep.records {
        println!(
            "Eb/N0 {:>6} dB  {}  BER {:.3e} ({} / {} bits, {} frames, {:.1} s)",
            r.ebn0_db, r.decoder, r.ber, r.bit_errors, r.bits_sent, r.frames, r.runtime_s
        );
    }
    Ok(())
}

fn spectrum(c: &Common) -> Result<()> {
    let cfg = resolve(c)?;
    let run = run_spectrum_report(&cfg)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&run.files.report).expect("serializable")
    );
    Ok(())
}

fn share(c: &Common) -> Result<()> {
    let cfg = resolve(c)?;
    let s = run_sharing_experiment(&cfg)?;
    for p in &s.points {
        println!(
            "Eb/N0 {:>6} dB  baseline {:.3e}  joint {:.3e}  naive {:.3e}  slicing failures {}",
            p.baseline.ber.ebn0_db,
            p.baseline.ber.ber,
            p.joint.ber.ber,
            p.naive.ber.ber,
            p.joint.slicing_failures
        );
    }
    match &s.penalty {
        Some(p) => println!(
            "joint penalty {:.2} dB at BER {:.2e}{}",
            p.penalty_db,
            p.reference_ber,
            if p.upper_bound { " (upper bound)" } else { "" }
        ),
        None => println!("joint penalty not resolved on this grid"),
    }
    Ok(())
}

const FRAME_FILE: &str = "frame.bin";
const BITS_FILE: &str = "bits.hex";
const DECODED_FILE: &str = "decoded.hex";

fn encode(c: &Common) -> Result<()> {
    let cfg = resolve(c)?;
    let pulse = cfg.pulse()?;
    let alphabet = cfg.alphabet()?;
    let n_bits = cfg.frame_len() * alphabet.bits_per_symbol();
    let bits = random_bits(n_bits, derive_seed(cfg.seed, &[0, 0, 0]));
    let frame = Frame::from_bits(bits, &pulse, &alphabet)?;
    let mut sidecar = frame.sidecar();
    sidecar.seed = Some(cfg.seed);
    // a single-point Eb/N0 grid adds noise; a longer grid leaves the record clean
    let samples = match cfg.ebn0_db.as_slice() {
        [db] => {
            let eta = alphabet.bits_per_symbol() as f64;
            let cal = calibrate_noise(&frame.samples, eta, cfg.k, *db)?;
            sidecar.noise_variance = Some(cal.noise_variance);
            sidecar.ebn0_db = Some(*db);
            awgn(
                &frame.samples,
                cal.noise_variance,
                derive_seed(cfg.seed, &[0, 0, 1]),
            )?
        }
        _ => frame.samples.clone(),
    };
    let dir = &cfg.output.dir;
    ensure_dir(dir)?;
    let record = dir.join(FRAME_FILE);
    save_record(&record, &samples, &sidecar).map_err(|e| HarnessError::io(&record, e))?;
    write_with(&dir.join(BITS_FILE), |out| {
        use std::io::Write;
        writeln!(out, "{}", bits_to_hex(&frame.bits))
    })?;
    println!(
        "wrote {} ({} samples, {} bits)",
        record.display(),
        samples.len(),
        frame.bits.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct DecodeReport {
    decoder: Decoder,
    bits: usize,
    noise_variance: f64,
    /// Bit errors against `bits.hex` next to the record, when present.
    bit_errors: Option<u64>,
    runtime_s: f64,
    diagnostics: metamux::decoder::Diagnostics,
}

fn decode(a: &DecodeArgs) -> Result<()> {
    let (samples, sidecar) = load_record(&a.input)?;
    let pulse = sidecar.pulse_shape()?;
    let alphabet = Alphabet::from_kind(sidecar.alphabet)?;
    // the record fixes K, pulse and alphabet; the config supplies the
    // decoder settings
    let mut common = a.common.clone();
    if common.config.is_none() && common.seed.is_none() {
        common.seed = Some(sidecar.seed.unwrap_or(0));
    }
    common.k = None;
    let mut cfg = resolve(&common)?;
    cfg.k = sidecar.k;
    cfg.alphabet = sidecar.alphabet;
    if a.common.out.is_none() {
        cfg.output.dir = a.input.parent().unwrap_or(Path::new(".")).to_path_buf();
    }
    let decoder = resolve_decoder(&cfg)?;
    let noise_variance = sidecar.noise_variance.unwrap_or(0.0);
    let started = Instant::now();
    let r = match decoder {
        Decoder::Viterbi => viterbi_decode(&samples, &pulse, &alphabet)?,
        Decoder::Smc => smc_decode(
            &samples,
            &pulse,
            &alphabet,
            noise_variance,
            &cfg.smc,
            derive_seed(cfg.seed, &[0, 0, 2]),
        )?,
    };
    let runtime_s = started.elapsed().as_secs_f64();
    let reference = a.input.with_file_name(BITS_FILE);
    let bit_errors = std::fs::read_to_string(&reference)
        .ok()
        .and_then(|t| hex_to_bits(&t, r.bits.len()))
        .map(|sent| sent.iter().zip(&r.bits).filter(|(x, y)| x != y).count() as u64);
    let dir = &cfg.output.dir;
    ensure_dir(dir)?;
    write_with(&dir.join(DECODED_FILE), |out| {
        use std::io::Write;
        writeln!(out, "{}", bits_to_hex(&r.bits))
    })?;
    let report = DecodeReport {
        decoder,
        bits: r.bits.len(),
        noise_variance,
        bit_errors,
        runtime_s,
        diagnostics: r.diagnostics,
    };
    write_json(&dir.join("decode_report.json"), &report)?;
    match bit_errors {
        Some(e) => println!(
            "decoded {} bits with {decoder}, {e} bit errors",
            report.bits
        ),
        None => println!("decoded {} bits with {decoder}", report.bits),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Capacity(c) => capacity(c),
        Command::Ber(c) => ber(c),
        Command::Spectrum(c) => spectrum(c),
        Command::Share(c) => share(c),
        Command::Encode(c) => encode(c),
        Command::Decode(a) => decode(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

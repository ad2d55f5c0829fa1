//! Spectrum-sharing run: the overlapped signal with a QAM interferer in
//! the same processing band, decoded jointly and naively, against the
//! interference-free baseline on the same frames and noise.

use std::time::Instant;

use metamux::channel::{make_qam_interferer, superpose, InterfererParams};
use metamux::decoder::{joint_decode, smc_decode};
use metamux::rng::random_bits;
use metamux::Error as CoreError;
use serde::Serialize;

use crate::ber::{batch, bit_errors, BerRecord, Link, PointDiagnostics, STREAM_DECODER};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::output::{ensure_dir, num, write_json, CsvWriter};

pub const SHARE_CSV: &str = "share.csv";
pub const SHARE_TIMING_CSV: &str = "share_timing.csv";
pub const SHARE_SUMMARY_JSON: &str = "share_summary.json";
pub const SHARE_HEADER: &str =
    "ebn0_db,k,waveform,decoder,bits_sent,bit_errors,ber,frames,seed,slicing_failures,qam_bit_errors";

/// Seed stream of the interferer's bits.
const STREAM_QAM: u64 = 3;
/// Baseline BER below which the penalty is measured.
pub const PENALTY_REFERENCE_BER: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShareRecord {
    #[serde(flatten)]
    pub ber: BerRecord,
    /// Frames where the QAM slicer was unreliable and the joint decoder
    /// fell back to decoding without the interferer estimate.
    pub slicing_failures: u64,
    pub qam_bit_errors: u64,
}

/// Baseline, joint and naive results at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharePoint {
    pub baseline: ShareRecord,
    pub joint: ShareRecord,
    pub naive: ShareRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Penalty {
    /// Lowest grid point where the baseline BER is below the reference.
    pub reference_ebn0_db: f64,
    /// Baseline BER there, floored at one error in the bits sent.
    pub reference_ber: f64,
    /// Eb/N0 where the joint curve reaches the reference BER,
    /// interpolated in log BER.
    pub joint_ebn0_db: f64,
    pub penalty_db: f64,
    /// The joint curve was already at the reference at the first grid
    /// point, so the penalty is an upper bound.
    pub upper_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShareSummary {
    pub interferer: InterfererParams,
    pub particles: usize,
    pub points: Vec<SharePoint>,
    /// `None` when the baseline never falls below the reference or the
    /// joint curve never reaches it on the grid.
    pub penalty: Option<Penalty>,
    pub diagnostics: Vec<PointDiagnostics>,
}

fn floored(ber: f64, bits: u64) -> f64 {
    ber.max(1.0 / bits as f64)
}

/// Eb/N0 penalty of the joint decoder relative to the baseline.
pub fn sharing_penalty(points: &[SharePoint]) -> Option<Penalty> {
    let reference = points
        .iter()
        .position(|p| p.baseline.ber.ber < PENALTY_REFERENCE_BER)?;
    let base = &points[reference].baseline.ber;
    let level = floored(base.ber, base.bits_sent);
    let joint: Vec<(f64, f64)> = points
        .iter()
        .map(|p| {
            (
                p.joint.ber.ebn0_db,
                floored(p.joint.ber.ber, p.joint.ber.bits_sent),
            )
        })
        .collect();
    let hit = joint.iter().position(|&(_, b)| b <= level)?;
    let (x, upper_bound) = if hit == 0 {
        (joint[0].0, true)
    } else {
        let (x0, b0) = joint[hit - 1];
        let (x1, b1) = joint[hit];
        let (l0, l1, lt) = (b0.log10(), b1.log10(), level.log10());
        let x = if l1 == l0 {
            x1
        } else {
            x0 + (x1 - x0) * (lt - l0) / (l1 - l0)
        };
        (x, false)
    };
    Some(Penalty {
        reference_ebn0_db: base.ebn0_db,
        reference_ber: level,
        joint_ebn0_db: x,
        penalty_db: x - base.ebn0_db,
        upper_bound,
    })
}

struct FrameResult {
    base_errors: u64,
    joint_errors: u64,
    naive_errors: u64,
    slicing_failed: bool,
    qam_errors: u64,
    diag: [metamux::decoder::DecodeResult; 3],
}

/// Run the sharing experiment. Each frame is decoded three ways from the
/// same bits, noise and decoder seed: without interferer (baseline), with
/// interferer by the joint decoder, and with interferer ignoring it
/// (naive). All decoders use the particle decoder.
pub fn run_sharing_experiment(cfg: &ExperimentConfig) -> Result<ShareSummary> {
    cfg.validate()?;
    let params = cfg.interferer_params().ok_or_else(|| {
        HarnessError::config("interferer", "the share command needs an interferer")
    })?;
    let link = Link::new(cfg)?;
    let fs = cfg.sample_rate();
    let n_samples = cfg.frame_len() + cfg.k - 1;
    let qam_bits = params.symbols_that_fit(fs, n_samples) * params.alphabet()?.bits_per_symbol();
    let dir = &cfg.output.dir;
    ensure_dir(dir)?;
    let mut csv = CsvWriter::create(&dir.join(SHARE_CSV), SHARE_HEADER)?;
    let mut timing = CsvWriter::create(&dir.join(SHARE_TIMING_CSV), "ebn0_db,frames,runtime_s")?;
    let total_frames = link.frames_for(cfg.bits);

    let mut points = Vec::new();
    let mut diagnostics = Vec::new();
    for (point, &db) in cfg.ebn0_db.iter().enumerate() {
        let started = Instant::now();
        let mut diag = [
            PointDiagnostics::new(db, "baseline"),
            PointDiagnostics::new(db, "joint"),
            PointDiagnostics::new(db, "naive"),
        ];
        let mut errs = [0u64; 3];
        let (mut failures, mut qam_errors, mut frames) = (0u64, 0u64, 0u64);
        while frames < total_frames {
            let end = (frames + cfg.batch_frames as u64).min(total_frames);
            let results = batch(frames, end, |f| {
                let frame = link.frame(point, f)?;
                let qbits = random_bits(qam_bits, link.stream_seed(point, f, STREAM_QAM));
                let q = make_qam_interferer(&params, &qbits, fs, n_samples)?;
                let mixed = superpose(&frame.samples, &q, params.power_db);
                let (var, clean_rx) = link.impair(&frame, &frame.samples, db, point, f)?;
                let (_, mixed_rx) = link.impair(&frame, &mixed, db, point, f)?;
                let seed = link.stream_seed(point, f, STREAM_DECODER);
                let (pulse, alphabet) = (&link.pulse, &link.alphabet);

                let base = smc_decode(&clean_rx, pulse, alphabet, var, &cfg.smc, seed)?;
                let naive = smc_decode(&mixed_rx, pulse, alphabet, var, &cfg.smc, seed)?;
                let (joint, slicing_failed, qam_errors) =
                    match joint_decode(&mixed_rx, pulse, alphabet, &params, var, &cfg.smc, seed) {
                        Ok(j) => (j.meta, false, bit_errors(&qbits, &j.qam.bits)),
                        Err(CoreError::UnreliableSlicing { .. }) => (naive.clone(), true, 0),
                        Err(e) => return Err(e.into()),
                    };
                Ok(FrameResult {
                    base_errors: bit_errors(&frame.bits, &base.bits),
                    joint_errors: bit_errors(&frame.bits, &joint.bits),
                    naive_errors: bit_errors(&frame.bits, &naive.bits),
                    slicing_failed,
                    qam_errors,
                    diag: [base, joint, naive],
                })
            })?;
            for r in &results {
                errs[0] += r.base_errors;
                errs[1] += r.joint_errors;
                errs[2] += r.naive_errors;
                failures += r.slicing_failed as u64;
                qam_errors += r.qam_errors;
                for (d, res) in diag.iter_mut().zip(&r.diag) {
                    d.absorb(res);
                }
            }
            frames = end;
            if cfg.min_errors.is_some_and(|m| errs.iter().all(|&e| e >= m)) {
                break;
            }
        }
        let runtime_s = started.elapsed().as_secs_f64();
        let bits_sent = frames * link.bits_per_frame as u64;
        let record = |name: &str, e: u64, slicing_failures: u64, qam: u64| ShareRecord {
            ber: BerRecord {
                ebn0_db: db,
                k: cfg.k,
                waveform: cfg.waveform.short_name(),
                decoder: name.to_string(),
                bits_sent,
                bit_errors: e,
                ber: e as f64 / bits_sent as f64,
                frames,
                runtime_s,
                seed: cfg.seed,
            },
            slicing_failures,
            qam_bit_errors: qam,
        };
        let p = SharePoint {
            baseline: record("baseline", errs[0], 0, 0),
            joint: record("joint", errs[1], failures, qam_errors),
            naive: record("naive", errs[2], 0, 0),
        };
        for r in [&p.baseline, &p.joint, &p.naive] {
            csv.line(&format!(
                "{},{},{}",
                r.ber.csv_line(),
                r.slicing_failures,
                r.qam_bit_errors
            ))?;
        }
        timing.line(&format!("{},{},{:.3}", num(db), frames, runtime_s))?;
        points.push(p);
        diagnostics.extend(diag);
    }

    let summary = ShareSummary {
        interferer: params,
        particles: cfg.smc.particles,
        penalty: sharing_penalty(&points),
        points,
        diagnostics,
    };
    write_json(&dir.join(SHARE_SUMMARY_JSON), &summary)?;
    Ok(summary)
}

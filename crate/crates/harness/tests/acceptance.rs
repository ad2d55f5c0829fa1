//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so that the lines always reach the console.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use metamux::capacity::{
    capacity, capacity_ebn0, stream_gains, waterfill, CapacityMode, PowerAllocation,
};
use metamux::channel::{awgn, calibrate_noise};
use metamux::decoder::{smc_decode, viterbi_decode, SmcConfig};
use metamux::mux::{
    build_channel_matrix, encode, singular_spectrum_with, Alphabet, ChannelMatrix, Frame,
    SingularSpectrum, SvdMethod,
};
use metamux::rng::{derive_seed, random_bits, seeded};
use metamux::waveform::{bandwidth_report, make_pulse, Occupancy, PulseKind, PulseShape};
use metamux::Cpx;
use metamux_harness::config::{
    DecoderChoice, ExperimentConfig, InterfererConfig, InterfererPreset, WelchSettings,
};
use metamux_harness::{
    compute_capacity_sweep, run_ber_sweep, run_capacity_sweep, run_sharing_experiment,
    run_spectrum_report,
};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn scratch() -> tempfile::TempDir {
    tempfile::tempdir().expect("temporary directory")
}

fn cfg(seed: u64, dir: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::with_seed(seed);
    c.output.dir = dir.to_path_buf();
    c
}

fn c1_shannon() -> Outcome {
    let one = SingularSpectrum::new(vec![1.0]).unwrap();
    let gains = stream_gains(&make_pulse(PulseKind::Rectangular, 1).unwrap()).unwrap();
    let mut worst: f64 = 0.0;
    for snr in [0.1, 1.0, 10.0, 100.0] {
        let want = 0.5 * f64::log2(1.0 + snr);
        let wf = waterfill(&[1.0], 1.0, snr).unwrap();
        let eq = PowerAllocation::equal(1, snr, 1.0).unwrap();
        for alloc in [wf, eq] {
            let c = capacity(&one, &alloc, None, 1)
                .unwrap()
                .total_bits_per_symbol;
            worst = worst.max((c - want).abs());
        }
        // eta (Ts/T) Eb/N0 = P/N with eta = 2, K = 1
        let db = 10.0 * (snr / 2.0).log10();
        for mode in [CapacityMode::EqualPower, CapacityMode::Waterfill] {
            let c = capacity_ebn0(&gains, 2.0, 1.0, db, mode).unwrap();
            worst = worst.max((c.total_bits_per_symbol - want).abs());
        }
    }
    Outcome::new(worst < 1e-12, format!("max deviation {worst:.1e}"))
}

fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = c * x - s * y;
                    row[q] = s * x + c * y;
                }
                let (rp, rq) = (a[p].clone(), a[q].clone());
                for k in 0..n {
                    a[p][k] = c * rp[k] - s * rq[k];
                    a[q][k] = s * rp[k] + c * rq[k];
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev
}

fn gram(h: &ChannelMatrix) -> Vec<Vec<f64>> {
    (0..h.cols())
        .map(|i| {
            (0..h.cols())
                .map(|j| (0..h.rows()).map(|r| h.entry(r, i) * h.entry(r, j)).sum())
                .collect()
        })
        .collect()
}

fn c2_singular_values() -> Outcome {
    let p = PulseShape::from_taps(vec![1.0, 1.0]).unwrap();
    let h = build_channel_matrix(&p, 2).unwrap();
    let want = [3f64.sqrt(), 1.0];
    let mut dev2: f64 = 0.0;
    for method in [SvdMethod::Dense, SvdMethod::Gram] {
        let s = singular_spectrum_with(&h, method).unwrap();
        for (a, b) in s.values().iter().zip(want) {
            dev2 = dev2.max((a - b).abs());
        }
    }
    let p = make_pulse(PulseKind::Rectangular, 4).unwrap();
    let h = build_channel_matrix(&p, 16).unwrap();
    let oracle: Vec<f64> = jacobi_eigenvalues(gram(&h))
        .into_iter()
        .map(f64::sqrt)
        .collect();
    let mut rel: f64 = 0.0;
    for method in [SvdMethod::Dense, SvdMethod::Gram] {
        let s = singular_spectrum_with(&h, method).unwrap();
        for (a, b) in s.values().iter().zip(&oracle) {
            rel = rel.max(((a - b) / b).abs());
        }
    }
    Outcome::new(
        dev2 < 1e-10 && rel < 1e-9,
        format!("K=2 deviation {dev2:.1e}; K=4 rectangle relative deviation {rel:.1e}"),
    )
}

fn c3_waterfill() -> Outcome {
    let a = waterfill(&[3.0, 1.0], 1.0, 2.0).unwrap();
    let exact = (a.mu - 5.0 / 3.0).abs() <= 1e-15
        && (a.powers[0] - 4.0 / 3.0).abs() <= 1e-15
        && (a.powers[1] - 2.0 / 3.0).abs() <= 1e-15;
    let lambda = SingularSpectrum::new(vec![3f64.sqrt(), 1.0]).unwrap();
    let c = capacity(&lambda, &a, None, 2)
        .unwrap()
        .total_bits_per_symbol;
    let c_ok = (c - 0.5 * (25.0f64 / 3.0).log2()).abs() < 1e-12;
    let eq = PowerAllocation::equal(2, 2.0, 1.0).unwrap();
    let ci = capacity(&lambda, &eq, None, 2)
        .unwrap()
        .total_bits_per_symbol;
    let ci_ok = (ci - 1.5).abs() < 1e-12;

    let mut rng = seeded(3);
    let mut dominated = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=12);
        let l: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
        let noise = rng.random_range(0.1..10.0);
        let power = rng.random_range(0.01..100.0);
        let s = SingularSpectrum::new(l).unwrap();
        let wf = capacity(&s, &waterfill(&s.squared(), noise, power).unwrap(), None, n).unwrap();
        let eq = capacity(
            &s,
            &PowerAllocation::equal(n, power, noise).unwrap(),
            None,
            n,
        )
        .unwrap();
        if wf.total_bits_per_symbol >= eq.total_bits_per_symbol - 1e-12 {
            dominated += 1;
        }
    }
    Outcome::new(
        exact && c_ok && ci_ok && dominated == 100,
        format!(
            "mu={:.17}, P*=[{:.17}, {:.17}], C={c:.15}, C_I={ci:.15}, C>=C_I on {dominated}/100",
            a.mu, a.powers[0], a.powers[1]
        ),
    )
}

fn c4_encoder() -> Outcome {
    let mut rng = seeded(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.random_range(1..=16);
        let lt = rng.random_range(1..=64);
        let taps: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = PulseShape::from_taps(taps).unwrap();
        let x: Vec<Cpx> = (0..lt)
            .map(|_| Cpx::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let y = encode(&x, &p).unwrap();
        let h = build_channel_matrix(&p, lt).unwrap();
        for (r, yr) in y.iter().enumerate() {
            let hx: Cpx = (0..lt).map(|c| x[c] * h.entry(r, c)).sum();
            worst = worst.max((yr - hx).norm());
        }
    }
    Outcome::new(worst < 1e-12, format!("max |encode(x) - Hx| {worst:.1e}"))
}

fn noisy(p: &PulseShape, lt: usize, db: f64, seed: u64) -> (Vec<Cpx>, f64) {
    let a = Alphabet::complex_bpsk();
    let f = Frame::from_bits(random_bits(2 * lt, derive_seed(seed, &[0])), p, &a).unwrap();
    let var = calibrate_noise(&f.samples, 2.0, p.samples_per_symbol(), db)
        .unwrap()
        .noise_variance;
    (awgn(&f.samples, var, derive_seed(seed, &[1])).unwrap(), var)
}

fn c5_viterbi() -> Outcome {
    let p = make_pulse(PulseKind::Rectangular, 3).unwrap();
    let a = Alphabet::complex_bpsk();
    let mut agree = 0;
    for seed in 0..50 {
        let (y, _) = noisy(&p, 6, 12.0, seed);
        let v = viterbi_decode(&y, &p, &a).unwrap();
        let mut best = (f64::INFINITY, Vec::new());
        for code in 0..4usize.pow(6) {
            let idx: Vec<usize> = (0..6).map(|i| (code >> (2 * i)) & 3).collect();
            let x: Vec<Cpx> = idx.iter().map(|&i| a.point(i)).collect();
            let s = encode(&x, &p).unwrap();
            let d: f64 = y.iter().zip(&s).map(|(u, v)| (u - v).norm_sqr()).sum();
            if d < best.0 {
                best = (d, idx);
            }
        }
        agree += (v.symbols == best.1) as usize;
    }
    Outcome::new(
        agree == 50,
        format!("{agree}/50 frames equal exhaustive ML"),
    )
}

fn c6_smc() -> Outcome {
    let p = make_pulse(PulseKind::Rectangular, 3).unwrap();
    let a = Alphabet::complex_bpsk();
    let cfg = SmcConfig::with_particles(2000);
    let (mut same, mut total) = (0, 0);
    for seed in 0..20 {
        let (y, var) = noisy(&p, 200, 12.0, 100 + seed);
        let v = viterbi_decode(&y, &p, &a).unwrap();
        let s = smc_decode(&y, &p, &a, var, &cfg, seed).unwrap();
        same += v
            .symbols
            .iter()
            .zip(&s.symbols)
            .filter(|(x, y)| x == y)
            .count();
        total += v.symbols.len();
    }
    let rate = same as f64 / total as f64;
    let mut exact = Vec::new();
    for k in [2, 4, 8, 16] {
        let p = make_pulse(PulseKind::Rectangular, k).unwrap();
        let f = Frame::from_bits(random_bits(20 * k, k as u64), &p, &a).unwrap();
        let r = smc_decode(&f.samples, &p, &a, 0.0, &SmcConfig::with_particles(256), 1).unwrap();
        exact.push(r.bits == f.bits);
    }
    Outcome::new(
        rate >= 0.99 && exact.iter().all(|&e| e),
        format!(
            "agreement {:.4}; noiseless exact for K=2,4,8,16: {exact:?}",
            rate
        ),
    )
}

fn within(x: f64, want: f64, tol: f64) -> bool {
    (x / want - 1.0).abs() <= tol
}

fn c7_bandwidth() -> Outcome {
    let k = 50;
    let rep = |kind| bandwidth_report(&make_pulse(kind, k).unwrap(), 256).unwrap();
    let rect = rep(PulseKind::Rectangular);
    let t35 = rep(PulseKind::taylor(35.0));
    let t50 = rep(PulseKind::taylor(50.0));
    let b = |o: Occupancy| o.hz().unwrap_or(f64::NAN);
    let rows = [
        ("rect BPSD35", b(rect.bounded_psd_35db), 49.30, 0.02),
        ("rect FPCB99", rect.fpcb_99_hz, 18.28, 0.02),
        ("taylor35 BPSD35", b(t35.bounded_psd_35db), 3.16, 0.10),
        ("taylor35 FPCB99", t35.fpcb_99_hz, 2.35, 0.10),
        ("taylor50 BPSD50", b(t50.bounded_psd_50db), 3.90, 0.10),
        ("taylor50 FPCB99", t50.fpcb_99_hz, 2.74, 0.10),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, got, want, tol) in rows {
        pass &= within(got, want, tol);
        detail.push(format!("{name} {got:.2}/T"));
    }
    // the 50 dB rectangle level through the report writer at K = 200
    let dir = scratch();
    let mut c = cfg(7, dir.path());
    c.k = 200;
    c.waveform = PulseKind::Rectangular;
    let run = run_spectrum_report(&c).unwrap();
    let json = std::fs::read_to_string(dir.path().join("bandwidth.json")).unwrap();
    let marker = matches!(
        run.files.report.bounded_psd_50db,
        Occupancy::ExceedsGrid { grid_span_hz } if (grid_span_hz - 200.0).abs() < 1.0
    ) && json.contains("exceeds_grid");
    pass &= marker;
    detail.push(format!("rect BPSD50 exceeds 200/T grid: {marker}"));
    Outcome::new(pass, detail.join(", "))
}

fn c8_capacity_shape() -> Outcome {
    let dir = scratch();
    let mut c = cfg(8, dir.path());
    c.waveform = PulseKind::Rectangular;
    c.ebn0_db = vec![10.0];
    c.capacity.k_values = vec![1, 2, 4, 8];
    c.capacity.modes = vec![CapacityMode::EqualPower];
    let rect = compute_capacity_sweep(&c).unwrap();
    let ci: Vec<f64> = rect.rows.iter().map(|r| r.c_bits_per_symbol).collect();
    let rising = ci.windows(2).all(|w| w[0] < w[1]);

    c.ebn0_db = vec![20.0];
    c.capacity.k_values = vec![100];
    let at = |c: &ExperimentConfig| compute_capacity_sweep(c).unwrap().rows[0].c_bits_per_symbol;
    let r100 = at(&c);
    c.waveform = PulseKind::taylor(35.0);
    let t100 = at(&c);
    Outcome::new(
        rising && r100 > t100,
        format!(
            "rect C_I at 10 dB for K=1,2,4,8: {:?}; K=100 at 20 dB rect {r100:.2} > taylor35 {t100:.2}",
            ci.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>()
        ),
    )
}

fn c9_ber() -> Outcome {
    let dir = scratch();
    let mut c = cfg(9, dir.path());
    c.k = 8;
    c.waveform = PulseKind::taylor(35.0);
    c.decoder = DecoderChoice::Smc;
    c.smc = SmcConfig::with_particles(2048);
    c.ebn0_db = vec![10.0, 14.0, 18.0, f64::INFINITY];
    c.bits = 100_000;
    c.min_errors = None;
    let sweep = run_ber_sweep(&c).unwrap();
    let ber: Vec<f64> = sweep.records.iter().map(|r| r.ber).collect();
    let enough = sweep.records.iter().all(|r| r.bits_sent >= 100_000);
    let decreasing = ber[0] > ber[1] && ber[1] > ber[2];
    let noiseless = sweep.records[3].bit_errors == 0;
    Outcome::new(
        enough && decreasing && noiseless,
        format!(
            "taylor35 BER at 10/14/18 dB: {:.3e} / {:.3e} / {:.3e} over {} bits each; noiseless errors {}",
            ber[0], ber[1], ber[2], sweep.records[0].bits_sent, sweep.records[3].bit_errors
        ),
    )
}

fn c10_sharing() -> Outcome {
    let dir = scratch();
    let mut c = cfg(10, dir.path());
    c.k = 100;
    c.waveform = PulseKind::taylor(35.0);
    c.smc = SmcConfig::with_particles(512);
    c.ebn0_db = vec![36.0, 38.0, 40.0, 42.0];
    c.bits = 100_000;
    c.min_errors = None;
    c.interferer = Some(InterfererConfig {
        preset: InterfererPreset::Desk,
        power_db: Some(0.0),
        ..Default::default()
    });
    let s = run_sharing_experiment(&c).unwrap();
    let dominance = s.points.iter().all(|p| p.joint.ber.ber <= p.naive.ber.ber);
    let curves: Vec<String> = s
        .points
        .iter()
        .map(|p| {
            format!(
                "{} dB base {:.2e} joint {:.2e} naive {:.2e} slicing failures {}",
                p.baseline.ber.ebn0_db,
                p.baseline.ber.ber,
                p.joint.ber.ber,
                p.naive.ber.ber,
                p.joint.slicing_failures
            )
        })
        .collect();
    let (penalty_ok, penalty) = match &s.penalty {
        Some(p) => (
            p.penalty_db <= 4.0,
            format!(
                "penalty {:.2} dB at baseline BER {:.1e} ({} dB){}",
                p.penalty_db,
                p.reference_ber,
                p.reference_ebn0_db,
                if p.upper_bound { ", upper bound" } else { "" }
            ),
        ),
        None => (false, "penalty not resolved on the grid".to_string()),
    };
    Outcome::new(
        dominance && penalty_ok,
        format!("{penalty}; {}", curves.join("; ")),
    )
}

fn c11_exploratory() -> String {
    let dir = scratch();
    let mut c = cfg(11, dir.path());
    c.k = 128;
    c.waveform = PulseKind::taylor(35.0);
    c.decoder = DecoderChoice::Smc;
    c.smc = SmcConfig::with_particles(512);
    c.ebn0_db = vec![36.0, 42.0, 48.0];
    c.bits = 20_480;
    c.min_errors = None;
    match run_ber_sweep(&c) {
        Ok(s) => s
            .records
            .iter()
            .map(|r| format!("{} dB: BER {:.2e} ({} bits)", r.ebn0_db, r.ber, r.bits_sent))
            .collect::<Vec<_>>()
            .join(", "),
        Err(e) => format!("run failed: {e}"),
    }
}

/// Every file in `dir` except the wall-clock timing files.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.file_name().unwrap().to_string_lossy().contains("timing"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn c12_determinism() -> Outcome {
    let run_all = |threads: usize| {
        let dir = scratch();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let mut c = cfg(12, dir.path());
            c.k = 6;
            c.ebn0_db = vec![2.0, 6.0, 10.0];
            c.capacity.k_values = vec![2, 4, 8, 16, 32];
            c.bits = 10_000;
            c.spectrum.signal = Some(WelchSettings {
                symbols: 1 << 14,
                segment_len: 1024,
                overlap: 0.5,
            });
            run_capacity_sweep(&c).unwrap();
            run_spectrum_report(&c).unwrap();
            c.decoder = DecoderChoice::Viterbi;
            run_ber_sweep(&c).unwrap();
            std::fs::rename(
                dir.path().join("ber.csv"),
                dir.path().join("ber_viterbi.csv"),
            )
            .unwrap();
            c.decoder = DecoderChoice::Smc;
            c.smc = SmcConfig::with_particles(64);
            run_ber_sweep(&c).unwrap();
            c.k = 100;
            c.ebn0_db = vec![30.0];
            c.interferer = Some(InterfererConfig::default());
            run_sharing_experiment(&c).unwrap();
        });
        let snap = snapshot(dir.path());
        (snap, dir)
    };
    let (a, _da) = run_all(1);
    let (b, _db) = run_all(4);
    let (c, _dc) = run_all(1);
    let same = a == b && a == c;
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    Outcome::new(
        same && names.len() >= 9,
        format!(
            "{} files byte-identical across 1, 4 and 1 threads: {same}",
            names.len()
        ),
    )
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    // honour `cargo test -- <filter>` style invocations that name other tests
    let args: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return ExitCode::SUCCESS;
    }
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }

    let criteria: [Criterion; 11] = [
        (1, "Shannon reduction", Duration::from_secs(1), c1_shannon),
        (
            2,
            "analytic singular values",
            Duration::from_secs(1),
            c2_singular_values,
        ),
        (3, "waterfilling", Duration::from_secs(1), c3_waterfill),
        (
            4,
            "encoder/matrix equivalence",
            Duration::from_secs(5),
            c4_encoder,
        ),
        (5, "Viterbi optimality", Duration::from_secs(10), c5_viterbi),
        (6, "SMC fidelity", Duration::from_secs(60), c6_smc),
        (7, "bandwidth table", Duration::from_secs(10), c7_bandwidth),
        (
            8,
            "capacity-vs-K shape",
            Duration::from_secs(5),
            c8_capacity_shape,
        ),
        (9, "BER behaviour", Duration::from_secs(300), c9_ber),
        (
            10,
            "spectrum sharing",
            Duration::from_secs(600),
            c10_sharing,
        ),
        (12, "determinism", Duration::from_secs(60), c12_determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, limit, run) in criteria {
        let t = Instant::now();
        let out = run();
        let elapsed = t.elapsed();
        let in_time = elapsed <= limit;
        let pass = out.pass && in_time;
        println!(
            "criterion {id:>2} {name}: {} [{:.2} s of {} s] {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            out.detail
        );
        if !pass {
            failed.push(id);
        }
        if id == 10 {
            let t = Instant::now();
            let detail = c11_exploratory();
            println!(
                "criterion 11 desk-scale substitute: REPORTED (non-gating) [{:.2} s] K=128 taylor35 SMC M=512: {detail}",
                t.elapsed().as_secs_f64()
            );
        }
    }
    if failed.is_empty() {
        println!("acceptance: all gating criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}

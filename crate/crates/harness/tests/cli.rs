use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use metamux_harness::config::ExperimentConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_metamux"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shipped_configs_parse_validate_and_round_trip() {
    for name in ["example.json", "sharing.json"] {
        let c = ExperimentConfig::load(&config_path(name)).unwrap();
        c.validate().unwrap();
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
    }
    let c = ExperimentConfig::load(&config_path("example.json")).unwrap();
    assert_eq!(c.ebn0_db[3], f64::INFINITY);
    assert_eq!(c.capacity.k_values.len(), 16);
    assert!(ExperimentConfig::load(&config_path("sharing.json"))
        .unwrap()
        .interferer_params()
        .is_some());
}

#[test]
fn example_config_drives_a_ber_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ber");
    let o = run(&[
        "ber",
        "--config",
        s(&config_path("example.json")),
        "--out",
        s(&out),
        "--bits",
        "10000",
        "--particles",
        "64",
        "--ebn0",
        "inf",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("ber.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "ebn0_db,k,waveform,decoder,bits_sent,bit_errors,ber,frames,seed"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "inf");
    assert_eq!(row[3], "smc");
    assert_eq!(row[5], "0");
    assert!(out.join("ber_diagnostics.json").exists());
    assert!(out.join("ber_timing.csv").exists());
}

#[test]
fn capacity_sweep_covers_every_k_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&[
            "capacity",
            "--seed",
            "1",
            "--out",
            s(out),
            "--ebn0",
            "0:10:40",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let req = std::fs::read_to_string(a.join("required_ebn0.csv")).unwrap();
    let equal_rows = req.lines().filter(|l| l.contains(",equal_power,")).count();
    assert_eq!(equal_rows, 16);
    let cap = std::fs::read_to_string(a.join("capacity.csv")).unwrap();
    assert!(cap.starts_with("k,ebn0_db,mode,c_bits_per_symbol,eta_bits_s_hz,waveform\n"));
    assert_eq!(cap.lines().count(), 1 + 16 * 5 * 2);
    for f in ["capacity.csv", "required_ebn0.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap()
        );
    }
}

#[test]
fn spectrum_report_echoes_grid_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "spectrum",
        "--seed",
        "2",
        "--k",
        "200",
        "--waveform",
        "rect",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(csv.contains("# k=200\n"));
    assert!(csv.contains("# processing_bandwidth_hz=200\n"));
    assert!(csv.contains("freq_hz,density_db\n"));
    let json = std::fs::read_to_string(dir.path().join("bandwidth.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["report"]["bounded_psd_50db"]["status"], "exceeds_grid");
    assert_eq!(v["report"]["bounded_psd_35db"]["status"], "resolved");
}

#[test]
fn encode_then_decode_recovers_the_frame() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "encode",
        "--seed",
        "3",
        "--k",
        "4",
        "--waveform",
        "hamming",
        "--ebn0",
        "inf",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let record = dir.path().join("frame.bin");
    assert!(dir.path().join("frame.bin.json").exists());
    for decoder in ["viterbi", "smc"] {
        let o = run(&[
            "decode",
            "--input",
            s(&record),
            "--decoder",
            decoder,
            "--particles",
            "128",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let report = std::fs::read_to_string(dir.path().join("decode_report.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&report).unwrap();
        assert_eq!(v["bit_errors"], 0, "{decoder}");
        assert_eq!(v["decoder"], decoder);
        assert_eq!(
            std::fs::read_to_string(dir.path().join("decoded.hex")).unwrap(),
            std::fs::read_to_string(dir.path().join("bits.hex")).unwrap()
        );
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["ber", "--k", "4"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));

    let o = run(&[
        "ber",
        "--seed",
        "1",
        "--bits",
        "999",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("`bits`"));

    let o = run(&["ber", "--seed", "1", "--ebn0", "9:1:3"]);
    assert_eq!(code(&o), 2);

    let o = run(&["ber", "--seed", "1", "--waveform", "sinc"]);
    assert_eq!(code(&o), 2);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"seed": 1, "particles": 9}"#).unwrap();
    let o = run(&["ber", "--config", s(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("particles"));

    let o = run(&["share", "--seed", "1", "--out", s(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("interferer"));

    let o = run(&["ber", "--seed", "1", "--decoder", "viterbi", "--k", "40"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn numerical_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("huge_target.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 1, "ebn0_db": [0], "capacity": {"k_values": [2], "target_bits_per_stream": 1e6}}"#,
    )
    .unwrap();
    let o = run(&["capacity", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_files_exit_with_one() {
    let o = run(&["ber", "--config", "/nonexistent/config.json"]);
    assert_eq!(code(&o), 1);
}

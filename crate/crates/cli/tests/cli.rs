//! End-to-end tests of the mixnorm binary: exit codes, file outputs,
//! determinism, and round trips against the library.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mixnorm_core::io::read_series_from_path;
use mixnorm_core::rates::mixnorm_series;
use mixnorm_core::spectral::Wavevector;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mixnorm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mixnorm-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_baker_writes_expected_records() {
    let dir = tmp_dir("baker");
    let out = dir.join("b.ndjson");
    let output = run(&[
        "simulate",
        "--system",
        "baker",
        "--steps",
        "20",
        "--init",
        "cos1",
        "--out",
        path_str(&out),
    ]);
    assert!(output.status.success(), "{output:?}");
    let series = read_series_from_path(&out).unwrap();
    assert_eq!(series.len(), 21);
    let last = &series.samples()[20].1;
    assert_eq!(last.len(), 1);
    assert_eq!(last.amplitude(&Wavevector::d1(1 << 20)).re, 1.0);
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tmp_dir("determinism");
    let out1 = dir.join("s1.ndjson");
    let out2 = dir.join("s2.ndjson");
    for out in [&out1, &out2] {
        let output = run(&[
            "simulate",
            "--system",
            "sine-flow",
            "--periods",
            "3",
            "--N",
            "32",
            "--D",
            "1e-5",
            "--seed",
            "7",
            "--out",
            path_str(out),
        ]);
        assert!(output.status.success(), "{output:?}");
    }
    let bytes1 = fs::read(&out1).unwrap();
    let bytes2 = fs::read(&out2).unwrap();
    assert_eq!(bytes1, bytes2);
    let series = read_series_from_path(&out1).unwrap();
    assert_eq!(series.len(), 4);
    let phases = series
        .meta()
        .params
        .get("phases")
        .unwrap()
        .as_array()
        .unwrap();
    assert_eq!(phases.len(), 3);
}

#[test]
fn missing_out_flag_is_a_usage_error() {
    let output = run(&["simulate", "--system", "baker", "--steps", "5"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn malformed_input_line_is_a_parse_error() {
    let dir = tmp_dir("parse");
    let bad = dir.join("bad.ndjson");
    fs::write(
        &bad,
        "{\"dims\":1,\"symmetry\":\"one_sided\",\"system\":\"x\",\"params\":{}}\n{broken\n",
    )
    .unwrap();
    let output = run(&[
        "analyze",
        "norms",
        "--in",
        path_str(&bad),
        "--out",
        path_str(&dir.join("n.csv")),
    ]);
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn norms_round_trip_matches_in_process_values() {
    let dir = tmp_dir("roundtrip");
    let out = dir.join("ab.ndjson");
    let csv_path = dir.join("norms.csv");
    assert!(run(&[
        "simulate",
        "--system",
        "altered-baker",
        "--a",
        "0.8",
        "--b",
        "0.6",
        "--steps",
        "40",
        "--out",
        path_str(&out),
    ])
    .status
    .success());
    assert!(run(&[
        "analyze",
        "norms",
        "--q",
        "0.5,1,2",
        "--in",
        path_str(&out),
        "--out",
        path_str(&csv_path),
    ])
    .status
    .success());

    let series = read_series_from_path(&out).unwrap();
    let expect: Vec<_> = [0.5, 1.0, 2.0]
        .iter()
        .map(|q| mixnorm_series(&series, *q))
        .collect();
    let csv = fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,q0.5,q1,q2"));
    for (i, line) in lines.enumerate() {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(cols[0], i as f64);
        for (j, e) in expect.iter().enumerate() {
            let want = e.values()[i];
            assert!(
                (cols[j + 1] - want).abs() <= 1e-15 * want.abs().max(1e-300),
                "row {i} col {j}: {} vs {want}",
                cols[j + 1]
            );
        }
    }
}

#[test]
fn classify_reports_recurrent_regime() {
    let dir = tmp_dir("classify");
    let out = dir.join("ab.ndjson");
    let report_path = dir.join("report.json");
    assert!(run(&[
        "simulate",
        "--system",
        "altered-baker",
        "--a",
        "0.8",
        "--b",
        "0.6",
        "--steps",
        "100",
        "--out",
        path_str(&out),
    ])
    .status
    .success());
    let output = run(&[
        "analyze",
        "classify",
        "--q",
        "2",
        "--in",
        path_str(&out),
        "--out",
        path_str(&report_path),
    ]);
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["verdict"], "recurrent");
}

#[test]
fn duality_envelope_stays_under_the_mixnorm() {
    let dir = tmp_dir("envelope");
    let out = dir.join("ab.ndjson");
    assert!(run(&[
        "simulate",
        "--system",
        "altered-baker",
        "--a",
        "0.8",
        "--b",
        "0.6",
        "--steps",
        "30",
        "--out",
        path_str(&out),
    ])
    .status
    .success());
    let prefix = dir.join("w");
    let output = run(&[
        "witness",
        "duality",
        "--t0",
        "0,5,10",
        "--q",
        "1",
        "--in",
        path_str(&out),
        "--out-prefix",
        path_str(&prefix),
    ]);
    assert!(output.status.success(), "{output:?}");
    let csv = fs::read_to_string(dir.join("w.envelope.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("t,mixnorm,corr_t0_0,corr_t0_5,corr_t0_10")
    );
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let (t, mixnorm) = (cols[0], cols[1]);
        for (j, corr) in cols[2..].iter().enumerate() {
            assert!(
                *corr <= mixnorm * (1.0 + 1e-12),
                "t = {t}, curve {j}: {corr} above {mixnorm}"
            );
        }
        // each curve touches the envelope at its own anchor
        if t == 0.0 {
            assert!((cols[2] - mixnorm).abs() <= 1e-10 * mixnorm);
        }
        if t == 5.0 {
            assert!((cols[3] - mixnorm).abs() <= 1e-10 * mixnorm);
        }
        if t == 10.0 {
            assert!((cols[4] - mixnorm).abs() <= 1e-10 * mixnorm);
        }
    }
}

#[test]
fn transient_witness_cli_and_its_guard() {
    let dir = tmp_dir("transient");
    let out = dir.join("b.ndjson");
    assert!(run(&[
        "simulate",
        "--system",
        "baker",
        "--steps",
        "100",
        "--out",
        path_str(&out),
    ])
    .status
    .success());
    // h = mixnorm violates h = o(mixnorm): constraint failure
    let guard = run(&[
        "witness",
        "transient",
        "--q",
        "1",
        "--h",
        "mixnorm",
        "--delta",
        "0.25",
        "--in",
        path_str(&out),
        "--out-prefix",
        path_str(&dir.join("guard")),
    ]);
    assert_eq!(guard.status.code(), Some(4));

    let prefix = dir.join("tw");
    let output = run(&[
        "witness",
        "transient",
        "--q",
        "1",
        "--h",
        "pow:-1*geom",
        "--delta",
        "0.25",
        "--in",
        path_str(&out),
        "--out-prefix",
        path_str(&prefix),
    ]);
    assert!(output.status.success(), "{output:?}");
    let csv = fs::read_to_string(dir.join("tw_transient.verify.csv")).unwrap();
    assert!(csv.lines().count() > 100);
    assert!(!csv.contains("false"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tmp_dir("config");
    let cfg = dir.join("cfg.json");
    let out = dir.join("c.ndjson");
    fs::write(
        &cfg,
        format!(
            "{{\"system\":\"baker\",\"steps\":5,\"out\":{:?}}}",
            path_str(&out)
        ),
    )
    .unwrap();
    // config alone
    assert!(run(&["simulate", "--config", path_str(&cfg)])
        .status
        .success());
    assert_eq!(read_series_from_path(&out).unwrap().len(), 6);
    // flag overrides the config's steps
    assert!(
        run(&["simulate", "--config", path_str(&cfg), "--steps", "7",])
            .status
            .success()
    );
    assert_eq!(read_series_from_path(&out).unwrap().len(), 8);
}

#[test]
fn signstate_cli_writes_witness_files() {
    let dir = tmp_dir("signstate");
    let out = dir.join("ab.ndjson");
    assert!(run(&[
        "simulate",
        "--system",
        "altered-baker",
        "--a",
        "0.8",
        "--b",
        "0.6",
        "--steps",
        "50",
        "--out",
        path_str(&out),
    ])
    .status
    .success());
    let output = run(&[
        "witness",
        "signstate",
        "--q",
        "2",
        "--modes",
        "1",
        "--c",
        "0.3",
        "--in",
        path_str(&out),
        "--out-prefix",
        path_str(&dir.join("ss")),
    ]);
    assert!(output.status.success(), "{output:?}");
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("ss_signstate.witness.json")).unwrap())
            .unwrap();
    assert_eq!(meta["mode"], "sign_state");
    assert_eq!(meta["selected_times"].as_array().unwrap().len(), 51);
}

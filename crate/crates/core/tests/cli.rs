use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coprime-tdm"))
        .args(args)
        .env_remove("COPRIME_TDM_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn records(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .collect::<Result<_, _>>()
        .unwrap()
}

#[test]
fn pattern_csv_combined_column() {
    let out = run(&[
        "pattern", "--m", "4", "--n", "3", "--signal", "1", "--format", "csv",
    ]);
    assert!(out.status.success());
    let rows = records(&stdout(&out));
    let combined: Vec<&str> = rows.iter().map(|r| &r[1]).collect();
    let expected = "100110101100100100100100";
    assert_eq!(combined.concat(), expected);
}

#[test]
fn non_coprime_pair_exits_with_invalid_status() {
    let out = run(&["pattern", "--m", "4", "--n", "6"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn two_sampler_pattern_json_is_on_half_grid() {
    let out = run(&[
        "pattern",
        "--m",
        "4",
        "--n",
        "3",
        "--scheme",
        "extended-tdm-2sampler",
        "--signal",
        "2",
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let items = v.as_array().unwrap();
    for item in items {
        assert_eq!(item["grid"]["q"], 2);
        assert_eq!(item["grid"]["span_ticks"], 48);
    }
    let combined = items.last().unwrap()["instants"].as_array().unwrap();
    // N-branch shifted by 3/2 d lands on odd half-ticks.
    assert!(combined.iter().any(|t| t.as_u64().unwrap() % 2 == 1));
}

#[test]
fn weights_table_matches_closed_form() {
    for (m, n) in [("4", "3"), ("5", "3"), ("2", "3")] {
        let out = run(&["weights", "--m", m, "--n", n]);
        assert!(out.status.success(), "({m},{n}) failed");
        let rows = records(&stdout(&out));
        let span = 2 * m.parse::<usize>().unwrap() * n.parse::<usize>().unwrap();
        assert_eq!(rows.len(), span);
        assert!(rows.iter().all(|r| &r[4] == "true"));
    }
    let out = run(&["weights", "--m", "4", "--n", "3"]);
    let rows = records(&stdout(&out));
    assert_eq!(&rows[4][1], "3");
    assert_eq!(&rows[4][2], "2");
    assert_eq!(&rows[16][1], "0");
    assert_eq!(&rows[16][2], "1");
}

#[test]
fn weights_out_dir_writes_relations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().to_str().unwrap();
    let out = run(&["weights", "--m", "4", "--n", "3", "--out", path]);
    assert!(out.status.success());
    let rel: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("relations.json")).unwrap())
            .unwrap();
    assert_eq!(rel["sum_z1"], 100);
    assert_eq!(rel["extra_lags"], serde_json::json!([-20, -16, 16, 20]));
    assert!(dir.path().join("weights.csv").exists());
}

#[test]
fn white_noise_estimate_recovers_unit_variance() {
    let out = run(&[
        "estimate",
        "--m",
        "4",
        "--n",
        "3",
        "--periods",
        "2000",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());
    let rows = records(&stdout(&out));
    let r0: f64 = rows[0][1].parse().unwrap();
    assert!((r0 - 1.0).abs() < 0.05, "r(0) = {r0}");
    assert_eq!(&rows[0][3], "1");
    for r in &rows[1..] {
        if !r[1].is_empty() {
            assert!(r[1].parse::<f64>().unwrap().abs() < 0.1);
        }
    }
}

#[test]
fn estimate_writes_spectrum_with_out() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.json");
    fs::write(
        &config,
        r#"{"pair":{"m":4,"n":3},"scheme":"extended","signal":2,
            "model":{"kind":"ar1","pole":0.5,"variance":1.0},
            "periods":200,"seed":1,"num_freqs":32}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "estimate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let psd = fs::read_to_string(out_dir.join("psd.csv")).unwrap();
    assert_eq!(records(&psd).len(), 32);
    assert!(out_dir.join("estimate.csv").exists());
}

#[test]
fn schedule_has_two_switches() {
    let out = run(&[
        "schedule",
        "--m",
        "4",
        "--n",
        "3",
        "--scheme",
        "extended-tdm-2sampler",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let switches = v.as_array().unwrap();
    assert_eq!(switches.len(), 2);
    for s in switches {
        assert!(!s["events"].as_array().unwrap().is_empty());
    }

    let wave = run(&[
        "schedule",
        "--m",
        "4",
        "--n",
        "3",
        "--scheme",
        "extended-tdm-2sampler",
        "--format",
        "waveform",
    ]);
    let text = stdout(&wave);
    assert!(text.starts_with("tick\t"));
    assert!(text.contains('*'));
}

#[test]
fn exsca_overlap_is_reported() {
    let args = [
        "--m", "4", "--n", "3", "--scheme", "exsca", "--ex", "2", "--s11", "0", "--s12", "1",
        "--span", "48", "--signal", "2",
    ];
    let out = run(&[&["pattern"][..], &args[..]].concat());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("coincide at ticks [4, 28]"));

    let out = run(&[&["schedule"][..], &args[..]].concat());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn config_with_unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    fs::write(&config, r#"{"pair":{"m":4,"n":3},"colour":"red"}"#).unwrap();
    let out = run(&["pattern", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut snapshots = Vec::new();
    for run_id in ["a", "b"] {
        let out_dir = dir.path().join(run_id);
        let path = out_dir.to_str().unwrap();
        for cmd in ["pattern", "estimate"] {
            let out = run(&[
                cmd,
                "--m",
                "5",
                "--n",
                "3",
                "--signal",
                "2",
                "--periods",
                "50",
                "--seed",
                "9",
                "--num-freqs",
                "16",
                "--out",
                path,
            ]);
            assert!(
                out.status.success(),
                "{}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
        snapshots.push(read_all(&out_dir));
    }
    assert_eq!(snapshots[0].len(), 4);
    assert_eq!(snapshots[0], snapshots[1]);
}

#[test]
fn verify_passes() {
    let out = run(&["verify"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("all 6 checks passed"));
}

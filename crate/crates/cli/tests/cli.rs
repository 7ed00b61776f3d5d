use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use cspath_core::{ho_kernel, CoherentLabel, C64};
use serde_json::Value;

fn cspath(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_cspath"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    {
        let mut pipe = child.stdin.take().unwrap();
        if let Some(text) = stdin {
            pipe.write_all(text.as_bytes()).unwrap();
        }
    }
    child.wait_with_output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn records(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn complex(v: &Value) -> C64 {
    C64::new(v["re"].as_f64().unwrap(), v["im"].as_f64().unwrap())
}

fn config(omega: f64, drive: &str, a: (f64, f64), b: (f64, f64), tau: f64, extra: &str) -> String {
    format!(
        r#"{{"model": {{"omega": {omega}, "drive": {drive}}},
            "query": {{"a": {{"re": {}, "im": {}}}, "b": {{"re": {}, "im": {}}}, "tau": {tau}}}{extra}}}"#,
        a.0, a.1, b.0, b.1
    )
}

const ZERO: &str = r#"{"kind": "constant", "value": {"re": 0.0, "im": 0.0}}"#;
const ACCEPTANCE_DRIVE: &str = r#"{"kind": "constant", "value": {"re": 0.3, "im": 0.0}}"#;

#[test]
fn free_kernel_is_the_oscillator_kernel() {
    let text = config(1.3, ZERO, (0.4, -0.2), (1.1, 0.3), 0.9, "");
    let out = cspath(&["kernel"], Some(&text));
    assert_eq!(out.status.code(), Some(0));
    let rec = &records(&out)[0];
    assert_eq!(rec["status"], "ok");
    let a = CoherentLabel::from_parts(0.4, -0.2).unwrap();
    let b = CoherentLabel::from_parts(1.1, 0.3).unwrap();
    let want = ho_kernel(b, a, 1.3, 0.9).value();
    assert!((complex(&rec["outputs"]["kernel"]) - want).norm() < 1e-14);
}

#[test]
fn static_constant_drive_from_vacuum() {
    let c = 0.7;
    let tau = 1.6;
    let drive = format!(r#"{{"kind": "constant", "value": {{"re": {c}, "im": 0.0}}}}"#);
    let out = cspath(&["kernel"], Some(&config(0.0, &drive, (0.0, 0.0), (0.0, 0.0), tau, "")));
    let k = complex(&records(&out)[0]["outputs"]["kernel"]);
    let want = (-c * c * tau * tau / 2.0f64).exp();
    assert!((k - want).norm() < 1e-14, "{k}");
}

#[test]
fn missing_tau_is_a_config_error() {
    let text = r#"{"model": {"omega": 1.0, "drive": {"kind": "constant", "value": {"re": 0.1, "im": 0.0}}},
                   "query": {"a": {"re": 0.0, "im": 0.0}, "b": {"re": 0.0, "im": 0.0}}}"#;
    let out = cspath(&["kernel"], Some(text));
    assert_eq!(out.status.code(), Some(2));
    let rec = &records(&out)[0];
    assert_eq!(rec["status"], "error");
    assert!(rec["message"].as_str().unwrap().contains("tau"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tau"));
}

#[test]
fn malformed_json_and_bad_flags() {
    let out = cspath(&["kernel"], Some("{ not json"));
    assert_eq!(out.status.code(), Some(2));
    let out = cspath(&["kernel", "--format", "csv"], Some(&config(1.0, ZERO, (0.0, 0.0), (0.0, 0.0), 1.0, "")));
    assert_eq!(out.status.code(), Some(2));
    let out = cspath(&["frobnicate"], None);
    assert_eq!(out.status.code(), Some(2));
    let out = cspath(&["kernel", "--config", "/nonexistent/cfg.json"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_acceptance_configuration() {
    let text = config(1.0, ACCEPTANCE_DRIVE, (1.0, 0.5), (-0.7, 0.2), 2.0, "");
    let out = cspath(&["verify", "--seed", "11"], Some(&text));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rec = &records(&out)[0];
    assert_eq!(rec["config"]["options"]["seed"], 11);
    for check in rec["outputs"]["checks"].as_array().unwrap() {
        assert_eq!(check["pass"], true, "{check}");
    }
}

#[test]
fn verify_free_model_is_at_rounding_level() {
    let text = config(0.8, ZERO, (1.2, -0.4), (0.3, 0.9), 1.5, r#", "options": {"path_samples": 20}"#);
    let out = cspath(&["verify"], Some(&text));
    assert_eq!(out.status.code(), Some(0));
    let o = &records(&out)[0]["outputs"];
    assert!(o["path_independence_max_relative_deviation"].as_f64().unwrap() < 1e-12);
    assert!(o["unitarity_defect"].as_f64().unwrap() < 1e-14);
    assert!(o["composition_max_relative_deviation"].as_f64().unwrap() < 1e-14);
}

#[test]
fn unattainable_threshold_is_a_tolerance_violation() {
    let extra = r#", "options": {"path_samples": 5, "thresholds": {"fock": 1e-30}}"#;
    let text = config(1.0, ACCEPTANCE_DRIVE, (1.0, 0.5), (-0.7, 0.2), 2.0, extra);
    let out = cspath(&["verify"], Some(&text));
    assert_eq!(out.status.code(), Some(1));
    let rec = &records(&out)[0];
    assert_eq!(rec["status"], "tolerance_violation");
    assert!(rec["message"].as_str().unwrap().contains("fock_oracle"));
}

#[test]
fn record_echoes_resolved_config() {
    let text = config(1.0, ACCEPTANCE_DRIVE, (1.0, 0.5), (-0.7, 0.2), 2.0, "");
    let out = cspath(&["kernel", "--tol", "1e-9"], Some(&text));
    let echo = &records(&out)[0]["config"];
    assert_eq!(echo["options"]["tol"].as_f64(), Some(1e-9));
    assert_eq!(echo["options"]["n_grid"], 4096);
    assert!(echo["options"]["fock_dim"].as_u64().unwrap() > 0);
    // the echo alone reproduces the run
    let again = cspath(&["kernel"], Some(&echo.to_string()));
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn output_is_deterministic() {
    let sweep = r#", "sweep": {"omega": [0.0, 1.0], "tau": [0.5, 1.5], "a": [{"re": 0.1, "im": 0.2}, {"re": -1.0, "im": 0.0}]}"#;
    let text = config(1.0, ACCEPTANCE_DRIVE, (1.0, 0.5), (-0.7, 0.2), 2.0, sweep);
    let first = cspath(&["sweep", "--seed", "3"], Some(&text));
    let second = cspath(&["sweep", "--seed", "3"], Some(&text));
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(records(&first).len(), 8);

    let verify = config(1.0, ACCEPTANCE_DRIVE, (1.0, 0.5), (-0.7, 0.2), 2.0, r#", "options": {"path_samples": 10}"#);
    assert_eq!(cspath(&["verify"], Some(&verify)).stdout, cspath(&["verify"], Some(&verify)).stdout);
}

#[test]
fn one_point_sweep_equals_kernel() {
    let base = config(0.6, ACCEPTANCE_DRIVE, (1.0, 0.5), (-0.7, 0.2), 2.0, "");
    let swept = config(0.6, ACCEPTANCE_DRIVE, (1.0, 0.5), (-0.7, 0.2), 2.0, r#", "sweep": {"tau": [2.0]}"#);
    let kernel = cspath(&["kernel"], Some(&base));
    let sweep = cspath(&["sweep"], Some(&swept));
    assert_eq!(sweep.status.code(), Some(0));
    assert_eq!(kernel.stdout, sweep.stdout);
}

#[test]
fn tau_sweep_modulus_of_free_diagonal_kernel() {
    let (omega, a) = (1.3, C64::new(0.8, -0.6));
    let taus = [0.0, 0.3, 1.0, 2.2, 4.0];
    let sweep = format!(r#", "sweep": {{"tau": {taus:?}}}"#);
    let text = config(omega, ZERO, (a.re, a.im), (a.re, a.im), 1.0, &sweep);
    let out = cspath(&["sweep", "--format", "csv"], Some(&text));
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header = reader.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), taus.len());
    for (row, tau) in rows.iter().zip(taus) {
        assert_eq!(row[col("tau")].parse::<f64>().unwrap(), tau);
        let abs: f64 = row[col("abs_kernel")].parse().unwrap();
        let want = (a.norm_sqr() * ((omega * tau).cos() - 1.0)).exp();
        assert!((abs - want).abs() < 1e-14, "tau = {tau}: {abs} vs {want}");
        assert_eq!(&row[col("status")], "ok");
    }
}

#[test]
fn sweep_abort_flushes_partial_output_with_marker() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("f.csv"), "t,re_f,im_f\n0,0.2,0\n1,0.3,0.1\n2,0.1,0\n").unwrap();
    let drive = r#"{"kind": "tabulated", "csv": "f.csv"}"#;
    let sweep = r#", "sweep": {"tau": [0.5, 1.5, 3.0, 1.0]}"#;
    let path = write_config(tmp.path(), "cfg.json", &config(1.0, drive, (0.2, 0.0), (0.1, 0.1), 1.0, sweep));

    let out = cspath(&["sweep", "--config", &path], None);
    assert_eq!(out.status.code(), Some(2));
    let recs = records(&out);
    assert_eq!(recs.len(), 4);
    assert_eq!(recs[0]["status"], "ok");
    assert_eq!(recs[1]["status"], "ok");
    assert_eq!(recs[2]["status"], "error");
    assert_eq!(recs[3]["command"], "sweep");
    assert_eq!(recs[3]["outputs"]["failed_index"], 2);

    let out = cspath(&["sweep", "--config", &path, "--format", "csv"], None);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[3].contains(",error,"));
}

#[test]
fn tabulated_constant_drive_matches_preset() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("f.csv"), "t,re_f,im_f\n0,0.3,-0.1\n1.2,0.3,-0.1\n3,0.3,-0.1\n").unwrap();
    let tabulated = r#"{"kind": "tabulated", "csv": "f.csv"}"#;
    let preset = r#"{"kind": "constant", "value": {"re": 0.3, "im": -0.1}}"#;
    let path = write_config(tmp.path(), "tab.json", &config(0.9, tabulated, (0.5, 0.5), (-0.2, 0.7), 2.5, ""));
    let tab = cspath(&["kernel", "--config", &path], None);
    let pre = cspath(&["kernel"], Some(&config(0.9, preset, (0.5, 0.5), (-0.2, 0.7), 2.5, "")));
    let (tab, pre) = (&records(&tab)[0], &records(&pre)[0]);
    assert_eq!(tab["outputs"]["integral_method"], "ode_quadrature");
    let diff = complex(&tab["outputs"]["log_kernel"]) - complex(&pre["outputs"]["log_kernel"]);
    assert!(diff.norm() < 1e-9, "{diff}");
    // the CSV contents are inlined in the echo
    assert_eq!(tab["config"]["model"]["drive"]["t"].as_array().unwrap().len(), 3);
}

#[test]
fn converge_tables() {
    let text = config(0.0, ZERO, (0.5, -0.3), (0.2, 0.4), 2.0, "");
    let out = cspath(&["converge", "--format", "csv"], Some(&text));
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(reader.headers().unwrap(), vec!["study", "step", "error"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let lattice: Vec<&csv::StringRecord> = rows.iter().filter(|r| &r[0] == "lattice").collect();
    assert_eq!(lattice.len(), 9);
    assert!(lattice.iter().all(|r| r[2].parse::<f64>().unwrap() <= 1e-14));

    let text = config(1.0, ACCEPTANCE_DRIVE, (1.0, 0.5), (-0.7, 0.2), 2.0, "");
    let out = cspath(&["converge"], Some(&text));
    assert_eq!(out.status.code(), Some(0));
    let o = &records(&out)[0]["outputs"];
    assert!((o["lattice_order"].as_f64().unwrap() - 1.0).abs() <= 0.2);
    assert!((o["fock_order"].as_f64().unwrap() - 4.0).abs() <= 0.5);
}

#[test]
fn out_flag_writes_file() {
    let tmp = tempfile::tempdir().unwrap();
    let target = tmp.path().join("result.jsonl");
    let text = config(1.0, ZERO, (0.0, 0.0), (0.0, 0.0), 1.0, "");
    let out = cspath(&["kernel", "--out", target.to_str().unwrap()], Some(&text));
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&target).unwrap();
    assert!(written.starts_with(r#"{"command":"kernel""#));
}

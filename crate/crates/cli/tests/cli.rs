use serde_json::Value;
use std::process::{Command, Output};

fn ptasep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptasep")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(o: &Output) -> Vec<csv::StringRecord> {
    let text = stdout(o);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|x| x.unwrap()).collect()
}

#[test]
fn bethe_emits_one_row_per_root() {
    let o = ptasep(&["bethe", "--L", "2", "--N", "1", "--z", "0.25"]);
    assert!(o.status.success());
    let rows = rows(&o);
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let res: f64 = r[4].parse().unwrap();
        assert!(res < 1e-10);
    }
}

#[test]
fn bethe_residuals_small_for_larger_ring() {
    let o = ptasep(&["bethe", "--L", "12", "--N", "5", "--z", "0.6,-0.2"]);
    assert!(o.status.success());
    let rows = rows(&o);
    assert_eq!(rows.len(), 12);
    assert_eq!(rows.iter().filter(|r| &r[0] == "R").count(), 5);
    assert!(rows.iter().all(|r| r[4].parse::<f64>().unwrap() < 1e-10));
}

#[test]
fn bethe_outer_z_is_a_regime_error() {
    let o = ptasep(&["bethe", "--L", "2", "--N", "1", "--z", "1.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("regime |z|>=1"));
}

#[test]
fn prob_compare_on_two_sites() {
    let o = ptasep(&["prob", "--ic", "step", "--L", "2", "--N", "1", "--point", "1,1,1", "--compare", "--samples", "20000"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let exact = 1.0 - (-1.0f64).exp();
    for e in ["fredholm", "toeplitz", "ctmc"] {
        let p = v["engines"][e]["probability"].as_f64().unwrap();
        assert!((p - exact).abs() < 1e-6, "{e}: {p}");
    }
    let mc = &v["engines"]["mc"];
    let z = (mc["probability"].as_f64().unwrap() - exact).abs() / mc["std_err"].as_f64().unwrap();
    assert!(z < 4.0);
    assert_eq!(v["deviations"].as_array().unwrap().len(), 6);
    let prov = &v["provenance"];
    assert_eq!(prov["seed"], 0);
    assert!(prov["M"].as_u64().unwrap() >= 16);
    assert!(prov["radii"].is_array());
}

#[test]
fn prob_json_uses_seventeen_digits() {
    let o = ptasep(&["prob", "--L", "2", "--N", "1", "--point", "1,0.5,1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let v: Value = serde_json::from_str(&text).unwrap();
    let p = v["result"]["probability"].as_f64().unwrap();
    assert!((p - (1.0 - (-0.5f64).exp())).abs() < 1e-6);
    let pos = text.find("\"probability\":").unwrap() + 14;
    let mantissa = text[pos..].split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
}

#[test]
fn ctmc_on_oversized_ring_is_a_size_error() {
    let o = ptasep(&["prob", "--ic", "flat", "--N", "10", "--d", "2", "--point", "10,0.5,1", "--engine", "ctmc"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn compare_skips_infeasible_engines() {
    let o = ptasep(&[
        "prob", "--ic", "flat", "--N", "10", "--d", "2", "--point", "10,0.5,1", "--compare", "--samples", "2000",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["skipped"]["ctmc"]["reason"].as_str().unwrap().contains("too large"));
    let f = v["engines"]["fredholm"]["probability"].as_f64().unwrap();
    assert!((f - (1.0 - (-0.5f64).exp())).abs() < 1e-8);
}

#[test]
fn uniform_ic_matches_across_engines() {
    let o = ptasep(&["prob", "--ic", "uniform", "--L", "4", "--N", "2", "--point", "2,0.7,0", "--compare", "--samples", "2000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let f = v["engines"]["fredholm"]["probability"].as_f64().unwrap();
    let t = v["engines"]["toeplitz"]["probability"].as_f64().unwrap();
    let c = v["engines"]["ctmc"]["probability"].as_f64().unwrap();
    assert!((f - t).abs() < 1e-6 && (f - c).abs() < 1e-6, "{f} {t} {c}");
}

#[test]
fn limit_step_scan_is_monotone() {
    let o = ptasep(&["limit", "--kind", "step", "--point", "0.5,1", "--x=-2:2:5"]);
    assert!(o.status.success());
    let rows = rows(&o);
    assert_eq!(rows.len(), 5);
    let vals: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[0] < w[1]), "{vals:?}");
    assert!(rows.iter().all(|r| &r[8] == ""));
}

#[test]
fn stepflat_needs_positive_mu() {
    let o = ptasep(&["limit", "--kind", "stepflat", "--mu", "0", "--point", "0.5,1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn uniform_limit_reports_derivative_step() {
    let o = ptasep(&["limit", "--kind", "uniform", "--point", "0.3,0.8,0"]);
    assert!(o.status.success());
    let rows = rows(&o);
    assert_eq!(rows[0][8].parse::<f64>().unwrap(), 1e-4);
}

#[test]
fn identity_batch_passes() {
    let o = ptasep(&["identity"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 201);
    let s: Value = serde_json::from_str(lines[200]).unwrap();
    assert!(s["summary"]["max_rel_err"].as_f64().unwrap() < 1e-7);
}

#[test]
fn identity_with_zero_h_reports_preconditions() {
    let o = ptasep(&["identity", "--count", "10", "--zero-h"]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    let s: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(s["summary"]["precondition_failures"], 10);
}

#[test]
fn identity_threshold_violation_exits_four() {
    let o = ptasep(&["identity", "--count", "20", "--threshold", "1e-30"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn runs_are_deterministic() {
    let args = ["prob", "--L", "4", "--N", "2", "--point", "1,0.5,1", "--engine", "mc", "--samples", "5000", "--seed", "7"];
    assert_eq!(stdout(&ptasep(&args)), stdout(&ptasep(&args)));
}

#[test]
fn config_file_overrides_flags() {
    let dir = std::env::temp_dir().join(format!("ptasep-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("c.json");
    let out = dir.join("out.csv");
    std::fs::write(&cfg, format!(r#"{{"L": 5, "N": 2, "output": {:?}}}"#, out.to_str().unwrap())).unwrap();
    let o = ptasep(&["--config", cfg.to_str().unwrap(), "bethe", "--L", "3", "--N", "1", "--z", "0.5"]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 6);
    std::fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    let o = ptasep(&["--config", cfg.to_str().unwrap(), "bethe", "--L", "3", "--N", "1", "--z", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_usage_exits_two() {
    assert_eq!(ptasep(&["prob", "--L", "2"]).status.code(), Some(2));
    assert_eq!(ptasep(&["prob", "--L", "2", "--N", "1", "--point", "1,1"]).status.code(), Some(2));
    assert_eq!(ptasep(&["frobnicate"]).status.code(), Some(2));
}

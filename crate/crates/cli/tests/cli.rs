use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn rotgrad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotgrad"))
        .args(args)
        .env_remove("ROTGRAD_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn schema() -> Value {
    read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../report.schema.json"))
}

fn assert_valid(report: &Value) {
    let validator = jsonschema::validator_for(&schema()).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

fn out(dir: &tempfile::TempDir) -> &str {
    dir.path().to_str().unwrap()
}

#[test]
fn unknown_rep_is_a_usage_error() {
    let o = rotgrad(&["fit", "--rep", "bogus"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("6d") && err.contains("10d"), "{err}");
}

#[test]
fn unknown_method_and_loss_are_usage_errors() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&rotgrad(&["fit", "--method", "sgd", "--out-dir", out(&d)])), 2);
    assert_eq!(code(&rotgrad(&["fit", "--loss", "l1", "--out-dir", out(&d)])), 2);
    assert_eq!(code(&rotgrad(&["train", "--method", "sgd", "--out-dir", out(&d)])), 2);
    assert_eq!(code(&rotgrad(&["fit", "--lambda", "3", "--out-dir", out(&d)])), 2);
    assert_eq!(code(&rotgrad(&["train", "--loss", "flow", "--tau-init", "0.1", "--out-dir", out(&d)])), 2);
}

#[test]
fn zero_iterations_report_the_initial_state() {
    let d = tempfile::tempdir().unwrap();
    let o = rotgrad(&["fit", "--rep", "quat", "--iters", "0", "--out-dir", out(&d)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let run = d.path().join("fit-quat-rpmg-l2-s0");
    let report = read_json(&run.join("report.json"));
    assert_eq!(report["evals"].as_array().unwrap().len(), 1);
    assert_eq!(report["final"]["iteration"], 0);
    let csv = std::fs::read_to_string(run.join("trace.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "iteration,mean_deg,median_deg,acc5,acc3,mean_norm");
    assert_eq!(lines.len(), 2);
    assert_valid(&report);
}

#[test]
fn fit_writes_report_trace_and_manifest() {
    let d = tempfile::tempdir().unwrap();
    let o = rotgrad(&["fit", "--rep", "9d", "--method", "rpmg", "--loss", "l2", "--seed", "0", "--out-dir", out(&d)]);
    assert_eq!(code(&o), 0);
    let run = d.path().join("fit-9d-rpmg-l2-s0");
    let report = read_json(&run.join("report.json"));
    assert_valid(&report);
    assert_eq!(report["evals"].as_array().unwrap().len(), 2001);
    let final_rad = report["final_error_rad"].as_f64().unwrap();
    assert!((final_rad.to_degrees() - report["final"]["mean_deg"].as_f64().unwrap()).abs() < 1e-9);
    assert!(stdout(&o).contains(&format!("{final_rad:.3e}")));

    let manifest = read_json(&run.join("manifest.json"));
    assert_eq!(manifest["config"], report["config"]);
    assert_eq!(manifest["command"], "fit");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert!(manifest["started_at"].as_str().unwrap() <= manifest["finished_at"].as_str().unwrap());
    assert_eq!(PathBuf::from(manifest["outputs"]["trace"].as_str().unwrap()), run.join("trace.csv"));
}

#[test]
fn config_hash_depends_only_on_the_config() {
    let hash = |seed: &str| {
        let d = tempfile::tempdir().unwrap();
        assert_eq!(code(&rotgrad(&["fit", "--iters", "3", "--seed", seed, "--out-dir", out(&d)])), 0);
        let m = read_json(&d.path().join(format!("fit-9d-rpmg-l2-s{seed}/manifest.json")));
        m["config_hash"].as_str().unwrap().to_owned()
    };
    assert_eq!(hash("4"), hash("4"));
    assert_ne!(hash("4"), hash("5"));
}

#[test]
fn out_dir_defaults_to_the_environment() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_rotgrad"))
        .args(["fit", "--iters", "2"])
        .env("ROTGRAD_OUT_DIR", d.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(d.path().join("fit-9d-rpmg-l2-s0/report.json").exists());
}

#[test]
fn numeric_failure_exits_3() {
    let d = tempfile::tempdir().unwrap();
    let o = rotgrad(&["fit", "--rep", "quat", "--method", "mg", "--lr", "1e308", "--iters", "50", "--out-dir", out(&d)]);
    assert_eq!(code(&o), 3, "{}", stdout(&o));
    let report = read_json(&d.path().join("fit-quat-mg-l2-s0/report.json"));
    assert!(report["diagnostics"]["aborted"].is_string());
    assert_valid(&report);
}

#[test]
fn training_is_deterministic() {
    let run = || {
        let d = tempfile::tempdir().unwrap();
        let o = rotgrad(&["train", "--rep", "6d", "--iters", "30", "--eval-every", "10", "--seed", "3", "--out-dir", out(&d)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(d.path().join("train-6d-rpmg-l2-s3/report.json")).unwrap()
    };
    let a = run();
    assert_eq!(a, run());
    assert_valid(&serde_json::from_str(&a).unwrap());
}

#[test]
fn sweep_writes_one_report_per_cell_and_a_comparison() {
    let d = tempfile::tempdir().unwrap();
    let o = rotgrad(&[
        "train", "--rep", "quat", "--methods", "vanilla,mg,pmg,rpmg", "--seeds", "0,1", "--iters", "20",
        "--eval-every", "10", "--jobs", "3", "--out-dir", out(&d),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cmp = read_json(&d.path().join("comparison.json"));
    let methods = cmp["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 4);
    for m in methods {
        let name = m["method"].as_str().unwrap();
        assert_eq!(m["seeds"], serde_json::json!([0, 1]));
        for (i, seed) in [0, 1].into_iter().enumerate() {
            let report = read_json(&d.path().join(format!("train-quat-{name}-l2-s{seed}/report.json")));
            assert_eq!(m["median_deg_per_seed"][i], report["final"]["median_deg"]);
        }
    }
    let csv = std::fs::read_to_string(d.path().join("comparison.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);

    // Parallel cells see the same seeds as sequential ones.
    let s = tempfile::tempdir().unwrap();
    let o = rotgrad(&[
        "train", "--rep", "quat", "--method", "pmg", "--seed", "1", "--iters", "20", "--eval-every", "10", "--out-dir",
        out(&s),
    ]);
    assert_eq!(code(&o), 0);
    let name = "train-quat-pmg-l2-s1/report.json";
    assert_eq!(read_json(&s.path().join(name)), read_json(&d.path().join(name)));
}

#[test]
fn sphere_runs_validate() {
    let d = tempfile::tempdir().unwrap();
    let o = rotgrad(&["train", "--sphere", "--methods", "l2-norm,rpmg", "--iters", "20", "--eval-every", "10", "--out-dir", out(&d)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&d.path().join("train-s2-rpmg-s0/report.json"));
    assert_eq!(report["kind"], "train-s2");
    assert_valid(&report);
}

#[test]
fn check_filter_runs_a_subset() {
    let o = rotgrad(&["check", "--filter", "projection-optimality-quat", "--samples", "20"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert_eq!(lines.len(), 1, "{text}");
    assert!(lines[0].starts_with("PASS projection-optimality-quat"));
    assert_eq!(code(&rotgrad(&["check", "--filter", "no-such-check"])), 2);
}

#[test]
fn full_check_suite_passes() {
    let d = tempfile::tempdir().unwrap();
    let json = d.path().join("checks.json");
    let o = rotgrad(&["check", "--json", json.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let results = read_json(&json);
    assert!(results.as_array().unwrap().len() > 20);
    assert!(results.as_array().unwrap().iter().all(|r| r["passed"] == true));
}

#[test]
fn schema_version_matches_the_library() {
    assert_eq!(
        schema()["properties"]["schema_version"]["const"],
        rotgrad_harness::report::REPORT_SCHEMA_VERSION
    );
}

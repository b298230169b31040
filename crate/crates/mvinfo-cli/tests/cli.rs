//! End-to-end checks of the binary: exit codes, pipeline plumbing and
//! byte-level report determinism.

use std::path::Path;
use std::process::{Command, Output};

fn mvinfo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvinfo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path) -> String {
    let out_dir = dir.join("out");
    let body = format!(
        r#"{{
        "base": "simclr", "reg": "none",
        "lambda1": 1.0, "lambda2": 1.0, "tau": 0.5, "sigma": 0.1,
        "rho": 0.05, "ema_decay": 0.99, "bt_off_diag": 0.005,
        "data": {{"mode": "continuous", "dim_shared": 2, "dim_private": 2,
                 "dim_view": 8, "n_samples": 96, "noise_std": 0.1,
                 "classes_shared": 2, "classes_nonshared": 2, "seed": 3}},
        "epochs": 1, "batch_size": 32, "lr": 0.002, "optimizer": "adam",
        "encoder_sizes": [8, 8, 4], "seeds": [1, 2, 3],
        "out_dir": {out:?}
    }}"#,
        out = out_dir.to_str().unwrap()
    );
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

/// JSON report with the volatile metadata field removed.
fn stripped(path: &Path) -> String {
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("meta").expect("report has a meta field");
    serde_json::to_string(&v).unwrap()
}

#[test]
fn verify_suite_passes_and_unknown_suite_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("dpi.json");
    let out = mvinfo(&[
        "verify", "--suite", "dpi", "--trials", "50", "--seed", "7",
        "--out", report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(report.exists());

    let bogus = dir.path().join("nope.json");
    let out = mvinfo(&["verify", "--suite", "nope", "--out", bogus.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!bogus.exists(), "failed run must not write a report");
}

#[test]
fn missing_required_flag_exits_2() {
    let out = mvinfo(&["verify"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--suite"));
}

#[test]
fn pipeline_writes_checkpoints_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let data = dir.path().join("d.mvb");
    let data = data.to_str().unwrap();

    let out = mvinfo(&["gen", "--config", &config, "--out", data]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = mvinfo(&["train", "--config", &config, "--data", data]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["enc1.json", "enc2.json", "history.csv", "run.json"] {
        assert!(dir.path().join("out").join(f).exists(), "missing {f}");
    }

    let probe_out = dir.path().join("probe.json");
    let ck = dir.path().join("out/enc1.json");
    let out = mvinfo(&[
        "probe", "--config", &config, "--checkpoint", ck.to_str().unwrap(),
        "--data", data, "--task", "shared", "--out", probe_out.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("shared"));
}

#[test]
fn repeated_runs_give_identical_reports_modulo_meta() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let data = dir.path().join("d.mvb");
    mvinfo(&["gen", "--config", &config, "--out", data.to_str().unwrap()]);
    mvinfo(&["train", "--config", &config, "--data", data.to_str().unwrap()]);
    let ck = dir.path().join("out/enc1.json");

    let mut reports = Vec::new();
    for name in ["p1.json", "p2.json"] {
        let p = dir.path().join(name);
        let out = mvinfo(&[
            "probe", "--config", &config, "--checkpoint", ck.to_str().unwrap(),
            "--data", data.to_str().unwrap(), "--task", "nonshared",
            "--out", p.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        reports.push(stripped(&p));
    }
    assert_eq!(reports[0], reports[1]);

    // regenerated data and retraining are deterministic too
    let r1 = dir.path().join("v1.json");
    let r2 = dir.path().join("v2.json");
    for r in [&r1, &r2] {
        let out = mvinfo(&[
            "verify", "--suite", "minimality", "--trials", "10", "--seed", "5",
            "--out", r.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(stripped(&r1), stripped(&r2));
}

#[test]
fn estimate_mi_prints_a_sane_estimate() {
    let out = mvinfo(&[
        "estimate-mi", "--estimator", "infonce", "--rho-corr", "0.8",
        "--dim", "1", "--n", "4096", "--batch", "128", "--steps", "150",
        "--seed", "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let value: f64 = stdout
        .split_whitespace()
        .nth(2)
        .expect("estimate in output")
        .parse()
        .expect("numeric estimate");
    assert!(value > 0.2 && value < 128f64.ln(), "estimate {value}");

    let out = mvinfo(&["estimate-mi", "--estimator", "bogus", "--rho-corr", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn tnm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tnm"))
        .args(args)
        .output()
        .expect("spawn tnm")
}

fn ok_json(args: &[&str]) -> Value {
    let out = tnm(args);
    assert!(
        out.status.success(),
        "tnm {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_default_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let summary = ok_json(&["generate", "--out", s(dir.path())]);
    assert_eq!(summary["samples"], 3000);
    assert_eq!(summary["dt_sample"].as_f64(), Some(0.1));
    let rows = lines(&dir.path().join("trajectory.csv"));
    assert_eq!(rows[0], "t,x,y,z");
    assert_eq!(rows.len(), 3001);
    assert_eq!(lines(&dir.path().join("pairs.csv")).len(), 2994);
}

#[test]
fn generate_minimum_length() {
    let dir = tempfile::tempdir().unwrap();
    ok_json(&["generate", "--n-samples", "8", "--out", s(dir.path())]);
    assert_eq!(lines(&dir.path().join("trajectory.csv")).len(), 9);
}

#[test]
fn rossler_stays_above_plane() {
    let dir = tempfile::tempdir().unwrap();
    ok_json(&["generate", "--flow", "rossler", "--out", s(dir.path())]);
    for row in lines(&dir.path().join("trajectory.csv")).iter().skip(1) {
        let z: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(z.is_finite() && z >= 0.0, "{row}");
    }
}

#[test]
fn zero_epochs_gives_header_only_loss_file() {
    let dir = tempfile::tempdir().unwrap();
    let summary = ok_json(&["train", "--epochs", "0", "--out", s(dir.path())]);
    assert_eq!(summary["epochs"], 0);
    assert!(summary["final_val_loss"].is_null());
    assert_eq!(
        lines(&dir.path().join("losses.csv")),
        vec!["epoch,train_loss,val_loss"]
    );
    assert!(dir.path().join("model.json").exists());
}

#[test]
fn training_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let summary = ok_json(&[
            "train",
            "--bond-dim",
            "3",
            "--epochs",
            "2",
            "--seed",
            "5",
            "--out",
            s(dir.path()),
        ]);
        assert_eq!(summary["epochs"], 2);
    }
    for f in ["model.json", "losses.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
    assert_eq!(lines(&a.path().join("losses.csv")).len(), 3);
}

#[test]
fn evaluate_and_forecast() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    ok_json(&["train", "--bond-dim", "3", "--epochs", "3", "--out", out]);
    let model = dir.path().join("model.json");

    let eval = ok_json(&[
        "evaluate",
        "--model",
        s(&model),
        "--split",
        "test",
        "--out",
        out,
    ]);
    let frac = eval["fraction_below_1"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&frac));
    assert!(eval["rmse"].as_f64().unwrap() >= 0.0);
    assert_eq!(lines(&dir.path().join("eval_test.csv")).len(), 301);

    let loose = ok_json(&[
        "forecast",
        "--model",
        s(&model),
        "--threshold",
        "2.1",
        "--out",
        out,
    ]);
    let rows = lines(&dir.path().join("forecast.csv"));
    assert_eq!(
        rows[0],
        "step,true_x,true_y,true_z,pred_x,pred_y,pred_z,delta,crmse"
    );
    assert_eq!(rows.len(), 101);
    let tight = ok_json(&[
        "forecast",
        "--model",
        s(&model),
        "--threshold",
        "1.9",
        "--out",
        out,
    ]);
    let (hl, ht) = (
        loose["horizon_steps"].as_u64().unwrap(),
        tight["horizon_steps"].as_u64().unwrap(),
    );
    assert!(ht <= hl && hl <= 100);
    let lt = tight["horizon_lyapunov"].as_f64().unwrap();
    assert!((lt - ht as f64 * 0.1 * 0.9056).abs() < 1e-12);

    let empty = ok_json(&[
        "forecast",
        "--model",
        s(&model),
        "--forecast-steps",
        "0",
        "--out",
        out,
    ]);
    assert_eq!(empty["horizon_steps"], 0);
    assert_eq!(lines(&dir.path().join("forecast.csv")).len(), 1);
}

#[test]
fn sweep_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let summary = ok_json(&[
        "sweep",
        "--bond-dims",
        "2,3",
        "--seeds",
        "0,1",
        "--epochs",
        "1",
        "--n-samples",
        "400",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(summary["rows"], 8);
    assert_eq!(summary["failed"], 0);
    let rows = lines(Path::new(summary["sweep_csv"].as_str().unwrap()));
    assert_eq!(rows[0], "D,mode,seed,train_loss,val_loss,status");
    assert_eq!(rows.len(), 9);
}

#[test]
fn errors_exit_nonzero_with_json_body() {
    let dir = tempfile::tempdir().unwrap();
    let out = tnm(&["train", "--n-samples", "7", "--out", s(dir.path())]);
    assert!(!out.status.success());
    let body: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert!(body["error"].as_str().is_some_and(|e| !e.is_empty()));
    assert_eq!(body["kind"], "insufficient_data");

    let missing = tnm(&[
        "forecast",
        "--model",
        s(&dir.path().join("nope.json")),
        "--out",
        s(dir.path()),
    ]);
    assert!(!missing.status.success());
    let body: Value = serde_json::from_slice(&missing.stderr).unwrap();
    assert_eq!(body["kind"], "io");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"format_version": 1, "learning_rte": 0.1}"#).unwrap();
    let out = tnm(&["train", "--config", s(&cfg), "--out", s(dir.path())]);
    assert!(!out.status.success());
    let body: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(body["kind"], "deserialize");
}

#[test]
fn config_file_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"format_version": 1, "flow": {"n_samples": 200}, "model": {"D": 2, "mode": "homogeneous"}, "train": {"epochs": 1}}"#,
    )
    .unwrap();
    let summary = ok_json(&["train", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(summary["param_count"], 2 * 27 + 16 + 3 * 8);
    assert_eq!(summary["epochs"], 1);
}

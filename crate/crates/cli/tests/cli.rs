//! End-to-end checks of the command-line surface.

use std::path::Path;
use std::process::Command;

fn enku() -> Command {
    Command::new(env!("CARGO_BIN_EXE_enku"))
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

#[test]
fn sample_update_w2_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("model.json");
    write(
        &spec,
        r#"{
            "kind": "joint",
            "z_spec": {"kind": "gaussian", "mean": [0.0, 0.0], "cov": [[10.0, -2.5], [-2.5, 1.0]]},
            "y_spec": {"kind": "gaussian", "mean": [0.0, 0.0], "cov": [[1.0, 1.5], [1.5, 5.0]]},
            "coupling": [[1.0, 0.0], [0.0, 1.0]]
        }"#,
    );
    let ensemble = dir.path().join("ensemble.csv");
    let status = enku()
        .args(["sample", "--spec"])
        .arg(&spec)
        .args(["--n", "256", "--seed", "7", "--out"])
        .arg(&ensemble)
        .status()
        .unwrap();
    assert!(status.success());
    let header = std::fs::read_to_string(&ensemble).unwrap();
    assert!(header.starts_with("x1,x2,y1,y2\n"));

    // Determinism: same seed, same bytes.
    let ensemble2 = dir.path().join("ensemble2.csv");
    enku()
        .args(["sample", "--spec"])
        .arg(&spec)
        .args(["--n", "256", "--seed", "7", "--out"])
        .arg(&ensemble2)
        .status()
        .unwrap();
    assert_eq!(
        std::fs::read(&ensemble).unwrap(),
        std::fs::read(&ensemble2).unwrap()
    );

    for method in ["enku", "ld", "lot"] {
        let out = dir.path().join(format!("analysis_{method}.csv"));
        let status = enku()
            .args(["update", "--method", method, "--ensemble"])
            .arg(&ensemble)
            .args(["--y-star", "0.4,-0.2", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success(), "update {method} failed");
        assert!(std::fs::read_to_string(&out).unwrap().starts_with("x1,x2\n"));
    }

    // eakf-svd with H = I, Gamma = I.
    let h = dir.path().join("h.csv");
    write(&h, "1,0\n0,1\n");
    let gamma = dir.path().join("gamma.csv");
    write(&gamma, "1,0\n0,1\n");
    let eakf_out = dir.path().join("analysis_eakf.csv");
    let status = enku()
        .args(["update", "--method", "eakf-svd", "--ensemble"])
        .arg(&ensemble)
        .args(["--y-star", "0.4,-0.2", "--h"])
        .arg(&h)
        .arg("--gamma")
        .arg(&gamma)
        .arg("--out")
        .arg(&eakf_out)
        .status()
        .unwrap();
    assert!(status.success());

    // W2 of a cloud against itself is zero.
    let analysis = dir.path().join("analysis_enku.csv");
    let output = enku().arg("w2").arg("--a").arg(&analysis).arg("--b").arg(&analysis).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("distance: 0"), "got {text}");
}

#[test]
fn diagnose_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples.csv");
    write(&samples, "x1,x2\n1,0\n-1,0\n0,1\n0,-1\n");
    let output = enku()
        .arg("diagnose")
        .arg("--samples")
        .arg(&samples)
        .args(["--cyclic-order", "4"])
        .arg("--pair")
        .arg(&samples)
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["numerical_rank"], 2);
    // The four-point cross is exactly 4-fold symmetric.
    assert!(report["cyc_statistic"].as_f64().unwrap() < 1e-12);
    assert_eq!(report["translation_residual"].as_f64().unwrap(), 0.0);
}

#[test]
fn preset_then_run_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp1.json");
    let status = enku()
        .args(["preset", "--name", "exp1", "--out"])
        .arg(&cfg_path)
        .status()
        .unwrap();
    assert!(status.success());

    // Shrink the preset so the smoke run is fast.
    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&cfg_path).unwrap()).unwrap();
    cfg["n_grid"] = serde_json::json!([16, 32]);
    cfg["replicates"] = serde_json::json!(3);
    write(&cfg_path, &serde_json::to_string(&cfg).unwrap());

    let out_dir = dir.path().join("results");
    let status = enku()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .arg("--out-dir")
        .arg(&out_dir)
        .args(["--workers", "2"])
        .status()
        .unwrap();
    assert!(status.success());
    for file in ["results.json", "results_long.csv", "plot_data.csv", "run_info.json"] {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }
    let long = std::fs::read_to_string(out_dir.join("results_long.csv")).unwrap();
    assert_eq!(long.lines().count(), 1 + 3 * 2 * 3); // header + methods x sizes x reps
}

#[test]
fn parse_errors_name_the_cell() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    write(&bad, "x1,y1\n1.0,2.0\n3.0,NaN\n");
    let output = enku()
        .args(["update", "--method", "enku", "--ensemble"])
        .arg(&bad)
        .args(["--y-star", "0.0", "--out"])
        .arg(dir.path().join("out.csv"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let text = String::from_utf8(output.stderr).unwrap();
    assert!(text.contains("row 3"), "stderr: {text}");
    assert!(text.contains("column 2"), "stderr: {text}");
}

#[test]
fn unknown_method_and_preset_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let output = enku()
        .args(["preset", "--name", "nope", "--out"])
        .arg(dir.path().join("x.json"))
        .output()
        .unwrap();
    assert!(!output.status.success());
}

//! End-to-end checks of the `acam` binary: file formats, exit codes, seeded
//! reproducibility, and the per-command result shapes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_acam"))
}

fn data(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(file)
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn acam");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn search_scores_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let array_path = dir.path().join("array.csv");
    let query_path = dir.path().join("query.csv");
    fs::write(&array_path, "2,3,-0.3,2.0\n0:1,0:1,0:1\n0:1,1.49:2,1.5:2\n").unwrap();
    fs::write(&query_path, "0.5,0.5,1.7\n").unwrap();

    let out = run_ok(
        bin()
            .args(["search", "--array"])
            .arg(&array_path)
            .arg("--query")
            .arg(&query_path),
    );
    let v: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stdout).lines().next().unwrap()).unwrap();
    assert_eq!(v["scores"], serde_json::json!([2.0, 2.0]));
    assert_eq!(v["best_row"], 0);

    // serialize -> reload -> identical scores
    let reloaded = acam::AcamArray::read_csv(&array_path).unwrap();
    let copy_path = dir.path().join("array_copy.csv");
    reloaded.write_csv(&copy_path).unwrap();
    let out2 = run_ok(
        bin()
            .args(["search", "--array"])
            .arg(&copy_path)
            .arg("--query")
            .arg(&query_path),
    );
    assert_eq!(out.stdout, out2.stdout);
}

#[test]
fn search_dimension_mismatch_exits_2_naming_expected_width() {
    let dir = tempfile::tempdir().unwrap();
    let array_path = dir.path().join("array.csv");
    let query_path = dir.path().join("query.csv");
    fs::write(&array_path, "1,3,-0.3,2.0\n0:1,0:1,0:1\n").unwrap();
    fs::write(&query_path, "0.5,0.5\n").unwrap();
    let out = bin()
        .args(["search", "--array"])
        .arg(&array_path)
        .arg("--query")
        .arg(&query_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("expected 3"), "stderr: {err}");
}

#[test]
fn kernel_bundled_sample_fits_and_reproduces_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        run_ok(
            bin()
                .args(["--seed", "9", "--out"])
                .arg(out_dir)
                .args(["kernel", "--train"])
                .arg(data("sin5x_train.csv"))
                .arg("--test")
                .arg(data("sin5x_test.csv"))
                .args(["--noise-std", "0.15"]),
        );
    }
    for file in [
        "kernel_predictions.csv",
        "kernel_summary.json",
        "kernel_model.json",
    ] {
        assert_eq!(
            fs::read(out_a.join(file)).unwrap(),
            fs::read(out_b.join(file)).unwrap(),
            "{file} not byte-identical across identically seeded runs"
        );
    }

    // default settings keep the error inside the accepted band
    let out_c = dir.path().join("c");
    run_ok(
        bin()
            .args(["--out"])
            .arg(&out_c)
            .args(["kernel", "--train"])
            .arg(data("sin5x_train.csv"))
            .arg("--test")
            .arg(data("sin5x_test.csv")),
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_c.join("kernel_summary.json")).unwrap())
            .unwrap();
    let mse = summary["mse"].as_f64().unwrap();
    assert!(mse < 0.05, "bundled-sample mse {mse}");
    assert!(out_c.join("kernel_predictions.config.json").exists());
}

#[test]
fn kernel_narrow_gamma_overfits_relative_to_default() {
    let dir = tempfile::tempdir().unwrap();
    let mse = |gamma: &str, out: &str| -> f64 {
        let out_dir = dir.path().join(out);
        run_ok(
            bin()
                .args(["--out"])
                .arg(&out_dir)
                .args(["kernel", "--train"])
                .arg(data("sin5x_train.csv"))
                .arg("--test")
                .arg(data("sin5x_test.csv"))
                .args(["--gamma", gamma]),
        );
        let s: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("kernel_summary.json")).unwrap())
                .unwrap();
        s["mse"].as_f64().unwrap()
    };
    let narrow = mse("0.02", "narrow");
    let tuned = mse("0.1", "tuned");
    assert!(
        tuned < narrow,
        "gamma 0.1 ({tuned}) should beat gamma 0.02 ({narrow})"
    );
}

#[test]
fn density_rows_monotone_and_config_matches_builtin_calibration() {
    let dir = tempfile::tempdir().unwrap();
    let out_default = dir.path().join("default");
    run_ok(bin().args(["--out"]).arg(&out_default).arg("density"));
    let csv = fs::read_to_string(out_default.join("density.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    let margins: Vec<f64> = rows
        .iter()
        .map(|r| r.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    for pair in margins.windows(2) {
        assert!(
            pair[0] > pair[1],
            "margins not strictly decreasing: {margins:?}"
        );
    }
    assert!((700.0..=1300.0).contains(&margins[2]));
    assert!((70.0..=130.0).contains(&margins[3]));

    let out_cfg = dir.path().join("from_config");
    run_ok(
        bin()
            .args(["--out"])
            .arg(&out_cfg)
            .args(["--config"])
            .arg(data("calibration.conf"))
            .arg("density"),
    );
    assert_eq!(
        fs::read_to_string(out_cfg.join("density.csv")).unwrap(),
        csv,
        "shipped calibration file drifted from the built-in calibration"
    );
}

#[test]
fn fewshot_synthetic_separable_reaches_full_accuracy_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let run_once = |name: &str| -> (String, PathBuf) {
        let out_dir = dir.path().join(name);
        run_ok(bin().args(["--seed", "5", "--out"]).arg(&out_dir).args([
            "fewshot",
            "--synth",
            "--classes",
            "8",
            "--per-class",
            "6",
            "--cluster-std",
            "0.046",
            "--n-way",
            "5",
            "--k-shot",
            "1",
            "--episodes",
            "100",
            "--window-sizes",
            "0.4",
            "--noise-stds",
            "0,0.1",
        ]));
        (
            fs::read_to_string(out_dir.join("fewshot_accuracy.csv")).unwrap(),
            out_dir,
        )
    };
    let (csv_a, out_dir) = run_once("a");
    let (csv_b, _) = run_once("b");
    assert_eq!(csv_a, csv_b, "seeded sweep not reproducible");
    for row in csv_a.lines().skip(1) {
        let acc: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(acc, 1.0, "separable synthetic accuracy below 1: {row}");
    }
    let sidecar: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(out_dir.join("fewshot_accuracy.config.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(sidecar["seed"], 5);
    assert_eq!(sidecar["episodes"], 100);
}

#[test]
fn fewshot_bundled_embeddings_with_cosine_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run_ok(
        bin()
            .args(["--seed", "5", "--out"])
            .arg(&out_dir)
            .args(["fewshot", "--embeddings"])
            .arg(data("embeddings_demo.csv"))
            .args([
                "--n-way",
                "5",
                "--k-shot",
                "5",
                "--episodes",
                "50",
                "--cosine-baseline",
            ]),
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.contains("cosine baseline accuracy 1"),
        "stdout: {text}"
    );
    assert!(text.contains("accuracy 1"), "stdout: {text}");
}

#[test]
fn scaling_pairs_sit_on_the_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    run_ok(
        bin()
            .args(["--seed", "3", "--out"])
            .arg(&out_dir)
            .arg("scaling"),
    );
    let csv = fs::read_to_string(out_dir.join("scaling.csv")).unwrap();
    let out_again = dir.path().join("again");
    run_ok(
        bin()
            .args(["--seed", "3", "--out"])
            .arg(&out_again)
            .arg("scaling"),
    );
    assert_eq!(
        csv,
        fs::read_to_string(out_again.join("scaling.csv")).unwrap(),
        "seeded scaling run not reproducible"
    );
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    for row in rows {
        let diff: f64 = row.split(',').nth(5).unwrap().parse().unwrap();
        assert!(diff <= 1e-9, "pair off the diagonal: {row}");
    }
}

#[test]
fn residual_variances_nondecreasing_in_noise() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    run_ok(bin().args(["--seed", "2", "--out"]).arg(&out_dir).args([
        "residuals",
        "--repeats",
        "4",
    ]));
    let csv = fs::read_to_string(out_dir.join("residuals.csv")).unwrap();
    let out_again = dir.path().join("again");
    run_ok(bin().args(["--seed", "2", "--out"]).arg(&out_again).args([
        "residuals",
        "--repeats",
        "4",
    ]));
    assert_eq!(
        csv,
        fs::read_to_string(out_again.join("residuals.csv")).unwrap(),
        "seeded residual run not reproducible"
    );
    let vars: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|r| r.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(vars.len(), 4);
    for pair in vars.windows(2) {
        assert!(pair[0] <= pair[1], "variance trend broken: {vars:?}");
    }
    assert!(out_dir.join("residuals_hist.csv").exists());
}

#[test]
fn opcount_reports_both_modes() {
    let out = run_ok(bin().args(["opcount", "--m", "64", "--d", "64"]));
    let v = stdout_json(&out);
    assert_eq!(v["exact_software"], 12544);
    assert_eq!(v["acam"], 1);

    let out = run_ok(bin().args(["opcount", "--m", "1", "--d", "1"]));
    let v = stdout_json(&out);
    assert_eq!(v["exact_software"], 7);
}

#[test]
fn unknown_config_key_is_a_line_numbered_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "i_on = 1.0\nwat = 3\n").unwrap();
    let out = bin()
        .args(["--config"])
        .arg(&cfg)
        .arg("density")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "stderr: {err}");
}

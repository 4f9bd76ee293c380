use std::path::PathBuf;
use std::process::{Command, Output};

fn sdrvm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdrvm")).args(args).output().unwrap()
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

const SMALL_SWEEP: [&str; 9] = ["cs-sweep", "--n", "30", "--k-signal", "3", "--mn", "0.5:0.7:0.2", "--trials", "2x1"];

#[test]
fn sweep_file_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name).display().to_string();
        let mut args = SMALL_SWEEP.to_vec();
        args.extend(["--seed", "7", "--out", &path]);
        let out = sdrvm(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        files.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files[0].clone()).unwrap();
    assert!(text.starts_with("sweep_param,method,metric,value,trials,seed\n"));
    assert!(text.contains("0.70,sdrvm-sd,nmse_db,"));
    assert!(!text.contains("seconds"));
}

#[test]
fn seed_changes_output() {
    let mut a = SMALL_SWEEP.to_vec();
    a.extend(["--seed", "1"]);
    let mut b = SMALL_SWEEP.to_vec();
    b.extend(["--seed", "2"]);
    assert_ne!(sdrvm(&a).stdout, sdrvm(&b).stdout);
}

#[test]
fn json_and_timings() {
    let mut args = SMALL_SWEEP.to_vec();
    args.extend(["--format", "json", "--timings", "--methods", "sdrvm"]);
    let out = sdrvm(&args);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert!(rows.iter().any(|r| r["metric"] == "median_iteration_seconds"));
    assert!(rows.iter().all(|r| r["method"] == "sdrvm"));
}

#[test]
fn bad_ranges_and_flags_exit_2() {
    for args in [
        vec!["cs-sweep", "--mn", "1.5:0.9:0.1"],
        vec!["cs-sweep", "--mn", "0.3:0.9:0"],
        vec!["cs-sweep", "--trials", "0x3"],
        vec!["cs-sweep", "--methods", "lasso"],
        vec!["block-sweep", "--structure", "unknown", "--methods", "sdrvm-block"],
        vec!["denoise", "--in", "x.pgm", "--rho", "2"],
        vec!["selfcheck", "--perturb", "nope"],
        vec!["no-such-command"],
    ] {
        let out = sdrvm(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn missing_input_is_a_runtime_failure() {
    let out = sdrvm(&["housing", "--csv", "/nonexistent/boston.csv", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn block_sweep_unknown_structure_runs() {
    let out = sdrvm(&[
        "block-sweep", "--structure", "unknown", "--block-size", "5", "--n", "30", "--active-blocks", "1",
        "--mn", "0.5", "--trials", "1x1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("sdrvm-overlap,nmse_db"));
}

#[test]
fn housing_table() {
    let csv = data("boston.csv");
    let out = sdrvm(&["housing", "--csv", &csv, "--rho", "0.5", "--trials", "2", "--seed", "3", "--methods", "rvm,sdrvm"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0.50,rvm,mean_abs_error,"));
    assert!(text.contains("0.50,sdrvm,mean_abs_error,"));
}

#[test]
fn denoise_median_writes_image_and_psnr() {
    let dir = tempfile::tempdir().unwrap();
    let img = data("camera64.pgm");
    let out_path = dir.path().join("m.pgm").display().to_string();
    let noisy_path = dir.path().join("n.pgm").display().to_string();
    let out = sdrvm(&[
        "denoise", "--in", &img, "--rho", "0.2", "--method", "median", "--out", &out_path, "--ref", &img,
        "--noisy-out", &noisy_path,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PSNR median:"), "{text}");
    let written = sdrvm::experiments::read_pgm(std::path::Path::new(&out_path)).unwrap();
    assert_eq!((written.rows(), written.cols()), (64, 64));
    assert!(std::path::Path::new(&noisy_path).exists());
}

#[test]
fn selfcheck_exit_codes() {
    let ok = sdrvm(&["selfcheck", "--trials", "30", "--seed", "11"]);
    assert_eq!(ok.status.code(), Some(0));
    let again = sdrvm(&["selfcheck", "--trials", "30", "--seed", "11"]);
    assert_eq!(ok.stdout, again.stdout);
    let bad = sdrvm(&["selfcheck", "--trials", "10", "--perturb", "determinant-lemma"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("determinant-lemma"));
}

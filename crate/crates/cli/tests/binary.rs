//! End-to-end runs of the `dpd-rao` binary.

use std::path::Path;
use std::process::{Command, Output};

use dpd_rao::normal::telephone_sample;
use dpd_rao::rao::rao_simple;
use dpd_rao::normal::NormalMeanFamily;
use dpd_rao::ParamVector;
use dpd_rao_cli::{ingest, write_sample};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpd-rao")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exited normally")
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

fn outlier_deleted_file(dir: &Path) -> String {
    let path = dir.join("trimmed.txt");
    write_sample(&telephone_sample().without(0).unwrap(), &path).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn simple_test_report() {
    let text = stdout(&["test", "simple", "--data", "telephone", "--mu0", "0", "--sigma0", "175", "--beta", "0", "--alpha", "0.05"]);
    let v: Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    for key in ["statistic", "df", "p_value", "alpha", "reject", "beta", "estimator"] {
        assert!(keys.contains(&key), "missing {key}");
    }
    assert!((v["statistic"].as_f64().unwrap() - 0.7446).abs() < 1e-3);
    assert_eq!(v["reject"], Value::Bool(false));
    assert_eq!(v["df"], 1);
}

#[test]
fn composite_test_report() {
    let text = stdout(&["test", "composite", "--data", "telephone", "--mu0", "0", "--beta", "0", "--alpha", "0.05"]);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!((v["statistic"].as_f64().unwrap() - 0.2314).abs() < 1e-3);
    assert_eq!(v["reject"], Value::Bool(false));
    assert_eq!(v["estimator"][0].as_f64(), Some(0.0));
}

#[test]
fn printed_numbers_round_trip() {
    let text = stdout(&["test", "simple", "--data", "telephone", "--sigma0", "175", "--beta", "0.3", "--format", "csv"]);
    let row = &csv_rows(&text)[0];
    let fam = NormalMeanFamily::new(175.0).unwrap();
    let direct = rao_simple(&telephone_sample(), &ParamVector::scalar(0.0), 0.3, &fam, 0.05).unwrap();
    assert_eq!(row[0].parse::<f64>().unwrap(), direct.statistic);
    assert_eq!(row[2].parse::<f64>().unwrap(), direct.p_value);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["test", "simple", "--data", "telephone", "--sigma0", "175", "--beta", "-1"]), 2);
    assert_eq!(code(&["test", "simple", "--data", "telephone", "--sigma0", "175", "--alpha", "1.5"]), 2);
    assert_eq!(code(&["test", "simple", "--data", "telephone"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["test", "simple", "--data", "/nonexistent/file", "--sigma0", "1"]), 3);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1 x 3").unwrap();
    let out = run(&["test", "simple", "--data", bad.to_str().unwrap(), "--sigma0", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("token 2"));

    // A sample sitting exactly on the null leaves no scale to estimate.
    let zeros = dir.path().join("zeros.txt");
    std::fs::write(&zeros, "0 0 0\n").unwrap();
    assert_eq!(code(&["test", "composite", "--data", zeros.to_str().unwrap()]), 4);
}

#[test]
fn data_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = outlier_deleted_file(dir.path());
    assert_eq!(ingest(&path).unwrap(), telephone_sample().without(0).unwrap());
    let text = stdout(&["test", "simple", "--data", &path, "--sigma0", "175"]);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!((v["statistic"].as_f64().unwrap() - 6.057).abs() < 1e-2);
    assert_eq!(v["reject"], Value::Bool(true));
}

#[test]
fn simple_sweeps() {
    let full = csv_rows(&stdout(&["sweep", "--data", "telephone", "--sigma0", "175"]));
    assert_eq!(full.len(), 51);
    assert_eq!((full[0][0].as_str(), full[0][3].as_str()), ("0", "false"));
    assert_eq!((full[25][0].as_str(), full[25][3].as_str()), ("0.5", "true"));

    let dir = tempfile::tempdir().unwrap();
    let path = outlier_deleted_file(dir.path());
    let trimmed = csv_rows(&stdout(&["sweep", "simple", "--data", &path, "--sigma0", "175"]));
    assert!(trimmed.iter().all(|r| r[3] == "true"));
}

#[test]
fn composite_sweep_scale_column() {
    let text = stdout(&["sweep", "composite", "--data", "telephone", "--beta-grid", "0:1:0.25"]);
    assert!(text.starts_with("beta,statistic,threshold,reject,sigma_tilde\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 5);
    let st: f64 = rows[0][4].parse().unwrap();
    assert!((st - 313.94).abs() < 0.05, "{st}");
}

#[test]
fn simulate_defaults_shape() {
    let text = stdout(&["simulate", "level", "--reps", "200"]);
    assert!(text.starts_with("scenario,beta,n,epsilon,rate,mc_se,R,seed,failures\n"));
    // Default grids: six tuning parameters by five sample sizes.
    assert_eq!(csv_rows(&text).len(), 30);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "simulate".to_owned(), "power".into(), "--scenario".into(), "composite".into(),
            "--epsilon".into(), "0.1".into(), "--n-list".into(), "10,30".into(),
            "--reps".into(), "500".into(), "--seed".into(), "7".into(), "--out".into(), out.into(),
        ]
    };
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let argv = args(p.to_str().unwrap());
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        assert_eq!(code(&argv), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn simulate_mixture_flag() {
    let text = stdout(&["simulate", "level", "--mixture", "0,1,0.9;-4.5,1,0.1", "--beta-grid", "0", "--n-list", "50", "--reps", "2000"]);
    let rows = csv_rows(&text);
    assert_eq!(rows[0][3], "0.1");
    assert!(rows[0][4].parse::<f64>().unwrap() > 0.5);
    assert_eq!(code(&["simulate", "level", "--mixture", "0,1,0.5"]), 2);
    assert_eq!(code(&["simulate", "level", "--mixture", "0,1,1", "--epsilon", "0.1"]), 2);
}

#[test]
fn contaminated_composite_level_at_moderate_beta() {
    let text = stdout(&[
        "simulate", "level", "--scenario", "composite", "--epsilon", "0.1", "--beta-grid", "0.2",
        "--n-list", "50", "--reps", "20000", "--seed", "11",
    ]);
    let rate: f64 = csv_rows(&text)[0][4].parse().unwrap();
    assert!(rate < 0.12, "level at beta = 0.2 and n = 50 is {rate}");
}

#[test]
fn influence_profiles() {
    let text = stdout(&["influence", "--beta", "0", "--mu0", "1", "--y-grid", "-50:50:5"]);
    for r in csv_rows(&text) {
        let (y, if2): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        let want = 2.0 * (y - 1.0) * (y - 1.0);
        assert!((if2 - want).abs() <= 1e-12 * want.max(1.0), "{y}: {if2} vs {want}");
    }

    let rows = csv_rows(&stdout(&["influence", "--beta", "0.5", "--y-grid", "-10:10:0.05"]));
    let if2: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let (imax, _) = if2.iter().enumerate().fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    assert!(imax > 0 && imax < if2.len() - 1);
    assert!(if2[0] < 1e-6 * if2[imax] && *if2.last().unwrap() < 1e-6 * if2[imax]);

    let rows = csv_rows(&stdout(&["influence", "composite", "--beta", "0.5", "--d", "0", "--y-grid", "-5:5:1"]));
    assert!(rows.iter().all(|r| r[2].parse::<f64>().unwrap() == 0.0));
}

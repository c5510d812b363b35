use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn npk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npk")).args(args).output().expect("spawn npk")
}

fn ok(args: &[&str]) -> Output {
    let out = npk(args);
    assert!(
        out.status.success(),
        "npk {args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn phantom(dir: &TempDir) -> String {
    let p = path(dir, "phantom.csv");
    ok(&["gen", "-o", &p]);
    p
}

fn write_sweep(path: &Path, slope: f64) {
    let text: String = (0..=100)
        .map(|j| {
            let v = 0.05 * j as f64;
            format!("{v:.2},{}\n", v * slope)
        })
        .collect();
    fs::write(path, text).unwrap();
}

#[test]
fn gen_writes_231_rows_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = phantom(&dir);
    let b = path(&dir, "again.csv");
    ok(&["gen", "-o", &b]);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 232);
    assert!(text.starts_with("ph,conductivity_s_per_m,avg_power_w,c_hno3_mmol,c_h3po4_mmol,c_koh_mmol"));
    assert_eq!(text, fs::read_to_string(&b).unwrap());

    let c = path(&dir, "other_seed.csv");
    ok(&["--seed", "9", "gen", "-o", &c]);
    assert_ne!(text, fs::read_to_string(&c).unwrap());
}

#[test]
fn gen_rejects_a_step_that_does_not_divide_the_total() {
    let dir = TempDir::new().unwrap();
    let out = npk(&["gen", "-o", &path(&dir, "x.csv"), "--step", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn config_file_supplies_the_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "npk.conf");
    fs::write(&cfg, "# phantom\nseed = 9\n").unwrap();
    let a = path(&dir, "a.csv");
    let b = path(&dir, "b.csv");
    ok(&["--config", &cfg, "gen", "-o", &a]);
    ok(&["--seed", "9", "gen", "-o", &b]);
    assert_eq!(fs::read_to_string(a).unwrap(), fs::read_to_string(b).unwrap());
}

#[test]
fn unknown_model_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let data = phantom(&dir);
    let out = npk(&["train", "-d", &data, "-m", "svm", "-o", &path(&dir, "m.json")]);
    assert_eq!(out.status.code(), Some(2));
    let out = npk(&["eval", "-d", &data, "--models", "lr,svm", "-o", &path(&dir, "e")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_is_deterministic_and_writes_reports() {
    let dir = TempDir::new().unwrap();
    let data = phantom(&dir);
    let run = |name: &str| {
        let out_dir = path(&dir, name);
        ok(&["eval", "-d", &data, "--models", "linear,mlp", "--epochs", "5", "-o", &out_dir]);
        PathBuf::from(out_dir)
    };
    let a = run("a");
    let b = run("b");
    for f in ["report.csv", "folds.csv", "comparison.svg", "epochs_mlp_raw.svg", "epochs_mlp_pca_fold5.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let report = fs::read_to_string(a.join("report.csv")).unwrap();
    // 2 models x 2 preprocessing modes x train/test, plus a header.
    assert_eq!(report.lines().count(), 9);

    let test_mae = |pre: &str| -> f64 {
        let line = report
            .lines()
            .find(|l| l.starts_with(&format!("linear,{pre},test,")))
            .unwrap();
        line.split(',').nth(3).unwrap().parse().unwrap()
    };
    assert!((test_mae("raw") - test_mae("pca")).abs() < 1e-6);
}

#[test]
fn train_then_predict_with_calibration() {
    let dir = TempDir::new().unwrap();
    let data = phantom(&dir);
    let model = path(&dir, "rf.json");
    ok(&["train", "-d", &data, "-m", "rf", "--trees", "20", "-o", &model]);

    let samples = path(&dir, "soil.csv");
    let mut text = String::from("sample_id,ph,conductivity_s_per_m,avg_power_w,lab_p2o5_kg_ha,lab_k2o_kg_ha\n");
    let lab = [(22.66, 279.0), (22.66, 251.0), (13.39, 157.0), (20.6, 214.0), (21.63, 220.0)];
    for i in 0..10 {
        let (p, k) = lab[i % 5];
        text += &format!("s{i},{},{},{},{p},{k}\n", 6.0 + 0.1 * i as f64, 1.0 + 0.2 * i as f64, 0.03 + 0.01 * i as f64);
    }
    fs::write(&samples, text).unwrap();

    let report = path(&dir, "pred.csv");
    let factors = path(&dir, "cal.txt");
    let args = [
        "predict", "-m", &model, "-s", &samples, "--calibrate-first", "5", "--save-calibration", &factors, "-o",
        &report,
    ];
    let out = ok(&args);
    assert!(String::from_utf8_lossy(&out.stdout).contains("MAPE"));
    let first = fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines.len(), 1 + 5 + 1);
    assert!(lines[1].starts_with("s5,forest,"));
    assert!(lines[6].starts_with("mape_percent,forest,"));

    ok(&args);
    assert_eq!(first, fs::read_to_string(&report).unwrap());

    // Saved factors reproduce the same predictions.
    let again = path(&dir, "again.csv");
    ok(&["predict", "-m", &model, "-s", &samples, "--calibration", &factors, "-o", &again]);
    let again = fs::read_to_string(again).unwrap();
    assert!(again.lines().any(|l| l == lines[1]));
}

#[test]
fn predict_without_factors_explains_what_to_pass() {
    let dir = TempDir::new().unwrap();
    let data = phantom(&dir);
    let model = path(&dir, "lr.json");
    ok(&["train", "-d", &data, "-m", "linear", "-o", &model]);
    let samples = path(&dir, "soil.csv");
    fs::write(&samples, "sample_id,ph,conductivity_s_per_m,avg_power_w\na,6.5,1.2,0.05\n").unwrap();
    let out = npk(&["predict", "-m", &model, "-s", &samples, "-o", &path(&dir, "p.csv")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--calibration"));
}

#[test]
fn featurize_keeps_good_files_and_reports_bad_ones() {
    let dir = TempDir::new().unwrap();
    let sweeps = dir.path().join("sweeps");
    fs::create_dir(&sweeps).unwrap();
    for i in 0..10 {
        write_sweep(&sweeps.join(format!("{i}-0-5-{}.csv", 5.0 + 0.2 * i as f64)), 0.01 * (i + 1) as f64);
    }
    let out_csv = path(&dir, "soil.csv");
    let dataset = path(&dir, "dataset.csv");
    ok(&["featurize", sweeps.to_str().unwrap(), "-o", &out_csv]);
    assert_eq!(fs::read_to_string(&out_csv).unwrap().lines().count(), 11);
    ok(&["featurize", sweeps.to_str().unwrap(), "--dataset", "-o", &dataset]);
    assert_eq!(fs::read_to_string(&dataset).unwrap().lines().count(), 11);

    fs::write(sweeps.join("9-0-5-6.8.csv"), "0.00,0.0\n0.05,oops\n").unwrap();
    let out = npk(&["featurize", sweeps.to_str().unwrap(), "-o", &out_csv]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("9-0-5-6.8.csv"));
    assert_eq!(fs::read_to_string(&out_csv).unwrap().lines().count(), 10);
}

#[test]
fn featurize_uses_the_ph_table_for_unlabeled_sweeps() {
    let dir = TempDir::new().unwrap();
    let sweeps = dir.path().join("sweeps");
    fs::create_dir(&sweeps).unwrap();
    write_sweep(&sweeps.join("field_a.csv"), 0.02);
    let table = path(&dir, "ph.txt");
    fs::write(&table, "field_a = 6.4\n").unwrap();
    let out_csv = path(&dir, "soil.csv");
    assert_eq!(npk(&["featurize", sweeps.to_str().unwrap(), "-o", &out_csv]).status.code(), Some(1));
    ok(&["featurize", sweeps.to_str().unwrap(), "--ph-table", &table, "-o", &out_csv]);
    let text = fs::read_to_string(&out_csv).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("field_a,6.4,"));
}

#[test]
fn featurize_on_an_empty_directory_warns() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("none");
    fs::create_dir(&empty).unwrap();
    let out_csv = path(&dir, "soil.csv");
    let out = ok(&["featurize", empty.to_str().unwrap(), "-o", &out_csv]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert_eq!(fs::read_to_string(&out_csv).unwrap(), "sample_id,ph,conductivity_s_per_m,avg_power_w\n");
}

#[test]
fn convert_potassium_hydroxide_to_kg_per_hectare() {
    let out = ok(&["convert", "10", "--compound", "koh"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("1059.75 kg/ha"), "{text}");

    let out = ok(&["convert", "10", "--compound", "koh", "--depth", "0.3"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("2119.5 kg/ha"));

    let out = ok(&["convert", "100", "--from", "ppm"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("= 225 kg/ha"));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nigmg::simbench::{generate, Effect, Scenario, TestFunction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::Value;

fn nigmg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nigmg"))
        .args(args)
        .env("NIGMG_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = nigmg(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_rows(path: &Path, rows: &[Vec<f64>], header: bool) {
    let mut text = String::new();
    if header {
        let labels: Vec<String> = (0..rows[0].len()).map(|i| format!("t{i}")).collect();
        text.push_str(&labels.join(","));
        text.push('\n');
    }
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

fn one_way_files(dir: &Path, effect: Effect, seed: u64, length: usize) -> (PathBuf, PathBuf) {
    let s = Scenario {
        effect,
        length,
        ..Scenario::default()
    };
    let d = generate(&s, seed).unwrap();
    let rows: Vec<Vec<f64>> = d.signals.iter().map(|s| s.values().to_vec()).collect();
    let data = dir.join("data.csv");
    write_rows(&data, &rows, false);
    let design = dir.join("design.csv");
    let mut text = String::from("group\n");
    for g in &d.groups {
        text.push_str(&format!("g{g}\n"));
    }
    fs::write(&design, text).unwrap();
    (data, design)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn constant_input_is_reproduced() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("c.csv");
    write_rows(&data, &[vec![2.5; 64]], true);
    let params = dir.path().join("p.json");
    fs::write(
        &params,
        r#"{"alpha":0.5,"tau":10000.0,"upsilon":[],"sigma0_sq":0.01,"nu":1000.0,
            "eta_rho":0.5,"gamma_rho":0.5,"eta_kappa":0.3,"gamma_kappa":0.4}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&[
        "denoise",
        "--input",
        data.to_str().unwrap(),
        "--wavelet",
        "haar",
        "--fit",
        "fixed",
        "--params",
        params.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(out.join("posterior_mean.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "location,mean");
    for (i, line) in lines.enumerate() {
        let (loc, v) = line.split_once(',').unwrap();
        assert_eq!(loc, format!("t{i}"));
        assert!((v.parse::<f64>().unwrap() - 2.5).abs() < 1e-3, "{line}");
    }
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["pmap"].as_array().unwrap().len(), 63);
}

#[test]
fn denoise_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let f = nigmg::simbench::unit_test_function(TestFunction::Doppler, 256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let y: Vec<f64> = f.values().iter().map(|v| v + noise.sample(&mut rng)).collect();
    let data = dir.path().join("y.csv");
    write_rows(&data, &[y], false);
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        ok(&[
            "denoise",
            "--input",
            data.to_str().unwrap(),
            "--samples",
            "200",
            "--seed",
            "9",
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        reports.push(fs::read_to_string(out.join("report.json")).unwrap());
        let header = fs::read_to_string(out.join("posterior_mean.csv")).unwrap();
        assert!(header.starts_with("location,mean,lower,upper"));
    }
    assert_eq!(reports[0], reports[1]);
    let value: Value = serde_json::from_str(&reports[0]).unwrap();
    assert_eq!(serde_json::to_string_pretty(&value).unwrap() + "\n", reports[0]);
    for row in value["pmap"].as_array().unwrap() {
        let p = row["baseline"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn fanova_reports_calls_within_fdr() {
    let dir = tempfile::tempdir().unwrap();
    let (data, design) = one_way_files(dir.path(), Effect::default_local(), 4, 256);
    let out = dir.path().join("out");
    ok(&[
        "fanova",
        "--input",
        data.to_str().unwrap(),
        "--design",
        design.to_str().unwrap(),
        "--prior-pjap",
        "0.5",
        "--fdr",
        "0.2",
        "--restarts",
        "1",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    let report = read_json(&out.join("report.json"));
    let factor = &report["factors"][0];
    assert_eq!(factor["levels"], serde_json::json!(["g0", "g1", "g2"]));
    let pjap = factor["pjap"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&pjap));
    assert!(factor["decision"]["fdr"].as_f64().unwrap() <= 0.2);
    assert_eq!(report["fit"]["mode"], "hybrid");
    let kappa = report["hyperparameters"]["eta_kappa"].as_f64().unwrap();
    let want = nigmg::ebayes::calibrate_sparsity(0.5, 0.4, 7).unwrap();
    assert!((kappa - want).abs() < 1e-12);
}

#[test]
fn two_way_design_emits_both_band_variants() {
    let dir = tempfile::tempdir().unwrap();
    let t = 256;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let base = nigmg::simbench::unit_test_function(TestFunction::Heavisine, t).unwrap();
    let mut rows = Vec::new();
    let mut design = String::from("subject,condition\n");
    for a in 0..7 {
        for b in 0..4 {
            for _ in 0..10 {
                let row: Vec<f64> = base
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let bump = if b == 2 && (100..120).contains(&i) { 0.8 } else { 0.0 };
                        v + 0.1 * a as f64 + bump + noise.sample(&mut rng)
                    })
                    .collect();
                rows.push(row);
                design.push_str(&format!("s{a},c{b}\n"));
            }
        }
    }
    let data = dir.path().join("gait.csv");
    write_rows(&data, &rows, false);
    let design_path = dir.path().join("design.csv");
    fs::write(&design_path, design).unwrap();
    let out = dir.path().join("out");
    ok(&[
        "fanova",
        "--input",
        data.to_str().unwrap(),
        "--design",
        design_path.to_str().unwrap(),
        "--contrast",
        "condition:c2-c0",
        "--include-father",
        "--samples",
        "200",
        "--restarts",
        "1",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(out.join("contrast_condition_c2-c0.csv").exists());
    assert!(out.join("contrast_condition_c2-c0_father.csv").exists());
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["factors"].as_array().unwrap().len(), 2);
    assert_eq!(report["pmap"][0]["factors"].as_array().unwrap().len(), 2);
    assert!(report["factors"][1]["pjap"].as_f64().unwrap() > 0.5);
}

#[test]
fn bad_inputs_exit_with_data_or_usage_codes() {
    let dir = tempfile::tempdir().unwrap();
    let odd = dir.path().join("odd.csv");
    write_rows(&odd, &[vec![1.0; 100]], false);
    let out = dir.path().join("o");
    let r = nigmg(&["denoise", "--input", odd.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3));
    let ragged = dir.path().join("ragged.csv");
    fs::write(&ragged, "1,2,3,4\n1,2,3\n").unwrap();
    let r = nigmg(&["denoise", "--input", ragged.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3));
    let r = nigmg(&["denoise", "--input", "/nonexistent.csv", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3));
    let r = nigmg(&["denoise", "--bogus"]);
    assert_eq!(r.status.code(), Some(2));
    let r = nigmg(&["calibrate", "--target", "1.5", "--levels", "3"]);
    assert_eq!(r.status.code(), Some(3));

    let (data, _) = one_way_files(dir.path(), Effect::None, 1, 64);
    let single = dir.path().join("single.csv");
    fs::write(&single, "g\n".to_string() + &"a\n".repeat(9)).unwrap();
    let r = nigmg(&[
        "fanova",
        "--input",
        data.to_str().unwrap(),
        "--design",
        single.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(3));
    let r = nigmg(&["simulate", "--methods", "magic", "--out", out.join("x.csv").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn simulate_smoke_run_is_fast_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    fs::write(
        &scenario,
        r#"{"baseline":"blocks","effect":{"global":"bumps"},"groups":3,"replicates":3,"length":64,"rsnr":1.0}"#,
    )
    .unwrap();
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(format!("{run}.csv"));
        let start = std::time::Instant::now();
        ok(&[
            "simulate",
            "--scenario",
            scenario.to_str().unwrap(),
            "--replicates",
            "2",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(start.elapsed().as_secs_f64() < 10.0);
        csvs.push(fs::read_to_string(&out).unwrap());
        let auc = fs::read_to_string(dir.path().join(format!("{run}.auc.csv"))).unwrap();
        for line in auc.lines().skip(1) {
            let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0].lines().count(), 1 + 2 * 2 * 3);
}

#[test]
fn calibrate_root_only_tree() {
    let out = ok(&["calibrate", "--target", "0.3", "--levels", "0", "--gamma-kappa", "0.7"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["eta_kappa"].as_f64().unwrap() - 0.3).abs() < 1e-9);
    let out = ok(&["calibrate", "--target", "0.5", "--length", "256"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["max_level"], 7);
    assert!((v["prior_pjap"].as_f64().unwrap() - 0.5).abs() < 1e-6);
}

use std::path::Path;
use std::process::{Command, Output};

fn qiopa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qiopa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn fringe_peak_matches_closed_form() {
    for (preset, nbar) in [("LG", 0.004_908_008_564_008_272), ("HG", 1.921_859_912_879_785_7)] {
        let o = qiopa(&["fringe", "--preset", preset]);
        assert_eq!(o.status.code(), Some(0));
        let csv = stdout(&o);
        assert!(csv.lines().any(|l| l == "Phi,dG,g2H,g2V"));
        let peak = data_rows(&csv)
            .iter()
            .map(|r| r[1].parse::<f64>().unwrap().abs())
            .fold(0.0, f64::max);
        // alpha = beta: peak |dG| = nbar * 2 alpha beta = nbar
        assert!((peak - nbar).abs() < 1e-12 * nbar.max(1.0), "{preset}: {peak}");
    }
}

#[test]
fn pole_path_has_flat_fringe() {
    let o = qiopa(&["fringe", "--g", "0.5", "--alpha", "1", "--path", "z:0:0.25:12"]);
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r[1].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn fringe_with_detector_block_adds_mc_columns() {
    let o = qiopa(&["fringe", "--g", "1.13", "--path", "z:0:1.5707963267948966:4", "--pulses", "20000", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert!(csv.lines().any(|l| l == "Phi,dG,g2H,g2V,xi_H,xi_V,dxi,stderr"));
    assert_eq!(data_rows(&csv)[0].len(), 8);
}

#[test]
fn zero_gain_pairs_and_entropy() {
    let o = qiopa(&["pairs", "--g", "0"]);
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows, vec![vec!["0".to_string(), "1.0".into(), "1.0".into()]]);

    let o = qiopa(&["entropy", "--g", "0"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["s1"], 0.0);
    assert_eq!(v["s2"], 0.0);
}

#[test]
fn pairs_report_flags_reported_tail() {
    let o = qiopa(&["pairs", "--preset", "HG", "--threshold", "8", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["tail_reference"]["discrepant"], true);
    assert_eq!(v["tail_reference"]["reported"], 0.14);
    let tail = v["tail"].as_f64().unwrap();
    assert!((tail - 0.27869384034497827782).abs() < 1e-12);
    let mean = v["mean"].as_f64().unwrap();
    assert!((mean - 5.76557973863935716634).abs() < 1e-9);
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.contains("3sinh^2(g)="));
}

#[test]
fn entropy_is_symmetric_at_high_gain() {
    let o = qiopa(&["entropy", "--preset", "HG", "--alpha", "0.28", "--phi", "1.1"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["abs_difference"].as_f64().unwrap() <= 1e-9);
    assert!((v["hs_distance_branches"].as_f64().unwrap() - 2.0).abs() <= 1e-15);
}

#[test]
fn montecarlo_is_deterministic_and_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = qiopa(&[
            "montecarlo",
            "--preset",
            "HG",
            "--path",
            "z:0:0.7853981633974483:4",
            "--pulses",
            "20000",
            "--seed",
            "11",
            "--dark",
            "0.001",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let csv = std::fs::read(&out).unwrap();
        let json = std::fs::read(out.with_extension("json")).unwrap();
        (csv, json)
    };
    let a = run("a.csv");
    let b = run("b.csv");
    assert_eq!(a, b);
    let csv = String::from_utf8(a.0).unwrap();
    assert!(csv.lines().any(|l| l == "sweep,xi_H,xi_V,dxi,stderr"));
    assert_eq!(data_rows(&csv).len(), 4);
    let v: serde_json::Value = serde_json::from_slice(&a.1).unwrap();
    assert_eq!(v["detector"]["seed"], 11);
    assert!(v["totals"]["pulses"].as_u64().unwrap() == 80_000);
}

#[test]
fn ideal_montecarlo_visibility_is_one_third() {
    let o = qiopa(&["montecarlo", "--g", "1.13", "--pulses", "200000", "--seed", "4", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let (vis, se) = (v["visibility"].as_f64().unwrap(), v["visibility_stderr"].as_f64().unwrap());
    assert!((vis - 1.0 / 3.0).abs() <= 3.0 * se, "{vis} +- {se}");
    assert!((v["ideal_visibility"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn calibration_is_echoed_in_json() {
    let o = qiopa(&[
        "montecarlo",
        "--preset",
        "HG",
        "--qe",
        "1",
        "--pulses",
        "50000",
        "--calibrate",
        "0.04",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let c = &v["calibration"];
    assert_eq!(c["target"], 0.04);
    let p = c["p_inject"].as_f64().unwrap();
    // p / (2 + p) = 0.04 at p = 1/12
    assert!((p - 1.0 / 12.0).abs() < 0.03, "{p}");
    assert_eq!(v["detector"]["p_inject"].as_f64().unwrap(), p);
}

#[test]
fn validation_errors_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = qiopa(&["montecarlo", "--g", "1.13", "--qe", "1.5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);

    for args in [
        vec!["pairs", "--g", "1.13", "--cutoff", "10"],
        vec!["pairs", "--g", "-0.2"],
        vec!["fringe", "--g", "0.1", "--alpha", "0.9", "--beta", "0.9"],
        vec!["fringe", "--g", "0.1", "--path", "w:0:1:3"],
        vec!["montecarlo", "--g", "0.1", "--mask", "DT,D1"],
        vec!["montecarlo", "--g", "0.1", "--calibrate", "0.5"],
        vec!["pairs", "--g", "0.1", "--bogus"],
    ] {
        assert_eq!(qiopa(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unwritable_output_exits_4() {
    let o = qiopa(&["pairs", "--g", "0.1", "--out", "/nonexistent-dir/sub/x.csv"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(!Path::new("/nonexistent-dir/sub/x.csv").exists());
}

#[test]
fn config_file_is_read_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "command = pairs\npreset = HG\nthreshold = 12\nformat = json\n").unwrap();
    let o = qiopa(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["threshold"], 12);
    assert!((v["tail"].as_f64().unwrap() - 0.0934).abs() < 1e-4);

    let o = qiopa(&["pairs", "--config", cfg.to_str().unwrap(), "--threshold", "8"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["threshold"], 8);

    std::fs::write(&cfg, "g = 0.1\nunknown_key = 3\n").unwrap();
    assert_eq!(qiopa(&["pairs", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(qiopa(&["pairs", "--config", "/no/such/file"]).status.code(), Some(4));
}

#[test]
fn selftest_passes() {
    let o = qiopa(&["--selftest"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(" 0 failed"));
}

#[test]
fn threads_flag_is_accepted() {
    let a = qiopa(&["montecarlo", "--g", "0.5", "--pulses", "30000", "--seed", "1", "--threads", "1"]);
    let b = qiopa(&["montecarlo", "--g", "0.5", "--pulses", "30000", "--seed", "1", "--threads", "4"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hetmg::model::{build_config, GameConfig};
use hetmg::phaselab::SweepTable;
use hetmg::replica;

fn hetmg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetmg")).args(args).output().unwrap()
}

fn config_file(dir: &Path, name: &str, cfg: &GameConfig) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, cfg.to_json()).unwrap();
    path
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn solve_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GameConfig::two_group(0.4, 0.3, 0.7).unwrap();
    let path = config_file(dir.path(), "c.json", &cfg);
    let out = hetmg(&["solve", "--config", path.to_str().unwrap()]);
    assert!(out.status.success());
    let expected = serde_json::to_value(replica::solve(&cfg).unwrap()).unwrap();
    assert_eq!(json(&out), expected);
}

#[test]
fn nonergodic_input_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = config_file(dir.path(), "low.json", &build_config(&[(1.0, 1.0)], 0.2).unwrap());
    let path = path.to_str().unwrap();
    for sub in ["solve", "compare"] {
        let out = hetmg(&[sub, "--config", path]);
        assert_eq!(out.status.code(), Some(3), "{sub}");
    }
    let out = hetmg(&[
        "maxprofit", "--alpha", "0.2", "--utility", "const", "--lambda1-min", "0.5", "--lambda1-points", "1",
        "--impact1-min", "1.0", "--impact1-points", "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(hetmg(&["solve", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, r#"{"alpha": 0.4, "groups": [{"ratio": 1, "impact": 1, "extra": 2}]}"#).unwrap();
    assert_eq!(hetmg(&["critical", "--config", broken.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(hetmg(&["maxprofit", "--utility", "log"]).status.code(), Some(2));
    assert_eq!(hetmg(&["sweep", "--utilities", "pow:2"]).status.code(), Some(2));
    assert_eq!(hetmg(&["sweep", "--lambda1-max", "1.0"]).status.code(), Some(2));
    assert_eq!(hetmg(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn compare_exit_code_follows_z_scores() {
    let dir = tempfile::tempdir().unwrap();
    let path = config_file(dir.path(), "c.json", &build_config(&[(1.0, 1.0)], 0.8).unwrap());
    let out = hetmg(&[
        "compare", "--config", path.to_str().unwrap(), "--agents", "64", "--transient", "500", "--measure", "500",
    ]);
    let report = json(&out);
    let max_z = report["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["z"].as_f64().map_or(f64::INFINITY, f64::abs))
        .fold(0.0, f64::max);
    let expected = if max_z > 4.0 { 1 } else { 0 };
    assert_eq!(out.status.code(), Some(expected));
}

#[test]
fn simulate_flags_reach_the_engine() {
    let dir = tempfile::tempdir().unwrap();
    let path = config_file(dir.path(), "c.json", &GameConfig::two_group(0.5, 0.5, 0.5).unwrap());
    let path = path.to_str().unwrap();
    let base = ["simulate", "--config", path, "--agents", "40", "--transient", "10", "--measure", "20"];
    let plain = json(&hetmg(&base));
    assert_eq!(plain["n_agents"], 40);
    assert_eq!(plain["n_patterns"], 20);
    assert_eq!(plain["group_sizes"], serde_json::json!([20, 20]));
    let weighted = json(&hetmg(&[&base[..], &["--impact-weighted"]].concat()));
    assert_ne!(plain, weighted);
    let reseeded = json(&hetmg(&[&base[..], &["--seed", "9"]].concat()));
    assert_ne!(plain, reseeded);
}

#[test]
fn sweep_then_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let svg = dir.path().join("rho.svg");
    let out = hetmg(&[
        "sweep", "--alpha", "0.3", "--utilities", "const,pow:0.5", "--out", csv.to_str().unwrap(),
        "--lambda1-points", "5", "--impact1-points", "4",
    ]);
    assert!(out.status.success());
    let table = SweepTable::read_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 20);
    assert!(table.rows.iter().any(|r| r.nonergodic));

    let out = hetmg(&["heatmap", "--in", csv.to_str().unwrap(), "--column", "pi_pow_0.5", "--out", svg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches(r#"class="cell""#).count(), 20);
    assert!(text.contains("url(#hatch)"));

    let out = hetmg(&["heatmap", "--in", csv.to_str().unwrap(), "--column", "foo", "--out", svg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_to_stdout_matches_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let grid = ["--lambda1-points", "3", "--impact1-points", "3", "--utilities", "sat"];
    let out = hetmg(&[&["sweep", "--out", csv.to_str().unwrap()][..], &grid[..]].concat());
    assert!(out.status.success());
    let stdout = hetmg(&[&["sweep"][..], &grid[..]].concat()).stdout;
    assert_eq!(stdout, std::fs::read(&csv).unwrap());
}

#[test]
fn maxprofit_reports_point_and_value() {
    let out = hetmg(&["maxprofit", "--alpha", "0.4", "--utility", "linear", "--lambda1-points", "9", "--impact1-points", "10"]);
    assert!(out.status.success());
    let v = json(&out);
    let (l, i, p) = (v["lambda1"].as_f64().unwrap(), v["impact1"].as_f64().unwrap(), v["profit"].as_f64().unwrap());
    let s = replica::solve(&GameConfig::two_group(l, i, 0.4).unwrap()).unwrap();
    assert!((p + s.sigma2).abs() < 1e-12);
}

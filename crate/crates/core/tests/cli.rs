//! End-to-end runs of the `proctor-dc` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const REALIZATION_ONE: &str =
    "room,Realization 1\n0,113\n1,54\n2,95\n3,89\n4,85\n5,87\n6,76\n7,105\nSUM,704\nDEMAND,633\n";

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proctor-dc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_instance(dir: &Path, text: &str) -> String {
    let path = dir.join("rooms.csv");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn generate_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rooms.csv");
    let p = path.to_str().unwrap();
    let out = bin(&[
        "generate",
        "--n",
        "8",
        "--dist",
        "uniform",
        "--occupancy",
        "0.9",
        "--count",
        "5",
        "--seed",
        "3",
        "--out",
        p,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[0].split(',').count(), 6);
    assert!(lines[9].starts_with("SUM,"));
    assert!(lines[10].starts_with("DEMAND,"));

    let out = bin(&["generate", "--n", "4", "--count", "1", "--out", p]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(&path).unwrap().lines().next().unwrap(),
        "room,Realization 1"
    );

    let blocked = dir.path().join("file");
    fs::write(&blocked, "x").unwrap();
    let nested = blocked.join("rooms.csv");
    let out = bin(&["generate", "--n", "4", "--out", nested.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn solve_realization_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_instance(dir.path(), REALIZATION_ONE);
    let out = bin(&[
        "solve",
        &file,
        "--column",
        "Realization 1",
        "--rate",
        "54",
        "--solver",
        "all",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("LRS 14.12 (1595/113)"), "{text}");
    assert!(text.contains("DPS 15"));
    assert!(text.contains("GAS 16"));

    let out = bin(&["solve", &file, "--rate", "120", "--solver", "greedy"]);
    let greedy = stdout(&out);
    let out = bin(&["solve", &file, "--rate", "120", "--solver", "dp"]);
    let dp = stdout(&out);
    let value = |s: &str| s.split_whitespace().nth(1).unwrap().to_string();
    assert_eq!(value(&greedy), value(&dp));
}

#[test]
fn solve_reports_infeasibility() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_instance(
        dir.path(),
        &REALIZATION_ONE.replace("DEMAND,633", "DEMAND,800"),
    );
    let out = bin(&["solve", &file]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("deficit 96"));
}

#[test]
fn tree_tables_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_instance(dir.path(), REALIZATION_ONE);
    let dot = dir.path().join("tree.dot");
    let out = bin(&[
        "tree",
        &file,
        "--tree",
        "hlT",
        "--sort",
        "gamma",
        "--fraction",
        "0.5",
        "--min-size",
        "2",
        "--dot",
        dot.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("D,633,309,144,165,324,155,169"));
    assert!(fs::read_to_string(&dot).unwrap().contains("D=633 |V|=8"));

    let out = bin(&["tree", &file, "--tree", "blT", "--min-size", "2"]);
    assert!(stdout(&out).contains("D,633,281,127,154,352,171,181"));

    let out = bin(&["tree", &file, "--min-size", "8"]);
    assert_eq!(stdout(&out).lines().last().unwrap(), "D,633");

    let out = bin(&["tree", &file, "--min-size", "2", "--solve"]);
    assert!(stdout(&out).contains("2,14.36,16.00,16.00,1.71,6.67,0.00,0.72,0.00,0.00,0.00,10.27"));
}

#[test]
fn experiment_outputs_and_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("smoke.cfg");
    fs::write(
        &config,
        "n_rooms = 8\nrealizations = 1\nmin_size = 2\ntree_alg = both\nsweep = r\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = bin(&[
        "experiment",
        config.to_str().unwrap(),
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = fs::read_to_string(out_dir.join("hlT_GbE_DPS.csv")).unwrap();
    assert!(table.starts_with("height,r=34,r=44,r=54,r=64,r=74\n"));
    assert!(out_dir.join("comparison.csv").exists());
    assert!(out_dir.join("blT_critical_heights.csv").exists());

    fs::write(&config, "tree_alg = blT\nhead_fraction = 0.5\nbogus = 1\n").unwrap();
    let out = bin(&[
        "experiment",
        config.to_str().unwrap(),
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let out = bin(&[
        "experiment",
        dir.path().join("missing.cfg").to_str().unwrap(),
        "x",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_errors() {
    assert_eq!(bin(&["solve"]).status.code(), Some(2));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

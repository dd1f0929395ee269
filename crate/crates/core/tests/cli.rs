use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vucrl_core::learner::RunRecord;
use vucrl_core::oracle::evaluate_regret;
use vucrl_core::NonstationaryMdp;

const BIN: &str = env!("CARGO_BIN_EXE_vucrl");

const CONFIG: &str = r#"
horizon = 1500
seeds = [11, 12, 13]

[environment]
generator = "abrupt"
n_states = 3
n_actions = 2
n_changes = 2
magnitude = 0.4

[learner]
mode = "variation-restart"
"#;

const SWEEP: &str = r#"
horizon = 800
seeds = [1, 2, 3, 4, 5]
workers = 3

[environment]
generator = "gradual"
n_states = 2
n_actions = 2
budget = 0.2

[learner]
mode = "no-restart"

[sweep]
modes = ["variation-restart", "count-restart"]
budgets = [0.1, 0.5]
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn vucrl(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn summary_rows(dir: &Path, file: &str) -> Vec<Vec<String>> {
    fs::read_to_string(dir.join(file))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}

#[test]
fn run_writes_one_record_per_seed_and_a_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", CONFIG);
    let out = tmp.path().join("out");
    let status = vucrl(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    for seed in [11, 12, 13] {
        assert!(out.join(format!("record_seed{seed}.txt")).exists());
        assert!(out.join(format!("env_seed{seed}.json")).exists());
        assert!(out.join(format!("regret_seed{seed}.txt")).exists());
    }
    let header = fs::read_to_string(out.join("summary.tsv")).unwrap();
    assert!(header.starts_with("seed\tmode\tregret\tbound_name\tbound_value\tsatisfied\tepisodes\tphases"));
    let rows = summary_rows(&out, "summary.tsv");
    assert_eq!(rows.len(), 3);
    for row in &rows {
        assert_eq!(row[1], "variation-restart");
        assert_eq!(row[3], "variation_restart");
        assert!(row[7].parse::<usize>().unwrap() >= 1);
        assert_eq!(row[8], "ok");
    }
}

#[test]
fn summary_regret_matches_the_persisted_files() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", CONFIG);
    let out = tmp.path().join("out");
    let status = vucrl(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "5,6"]);
    assert!(status.status.success());
    let rows = summary_rows(&out, "summary.tsv");
    assert_eq!(rows.len(), 2);
    for row in rows {
        let env = NonstationaryMdp::from_json(&fs::read_to_string(out.join(format!("env_seed{}.json", row[0]))).unwrap())
            .unwrap();
        let record = RunRecord::from_text(&fs::read_to_string(out.join(format!("record_seed{}.txt", row[0]))).unwrap())
            .unwrap();
        let regret = evaluate_regret(&record, &env, false, false).unwrap().regret;
        assert_eq!(row[2].parse::<f64>().unwrap(), regret);
        assert_eq!(row[6].parse::<usize>().unwrap(), record.episodes.len());
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "run.toml", &format!("{CONFIG}\n[output]\ncurve = true\n"));
    let mut listings = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "3")] {
        let out = tmp.path().join(name);
        let status = vucrl(&[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert!(status.status.success());
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        listings.push(files);
    }
    assert_eq!(listings[0].len(), 3 * 4 + 1);
    assert_eq!(listings[0], listings[1]);
}

#[test]
fn sweep_produces_one_row_per_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "sweep.toml", SWEEP);
    let out = tmp.path().join("sweep");
    let status = vucrl(&["sweep", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let rows = summary_rows(&out, "sweep.tsv");
    assert_eq!(rows.len(), 2 * 2 * 5);
    assert!(rows.iter().all(|r| r[11] == "ok" && r[2] == "budget"));
    let modes: std::collections::BTreeSet<_> = rows.iter().map(|r| r[0].clone()).collect();
    assert_eq!(modes.len(), 2);
}

#[test]
fn empty_sweep_dimension_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "bad.toml", &SWEEP.replace("budgets = [0.1, 0.5]", "budgets = []"));
    let status = vucrl(&["sweep", "--config", config.to_str().unwrap(), "--out", tmp.path().join("x").to_str().unwrap()]);
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("budgets"));
}

#[test]
fn bad_config_fails_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "dup.toml", &CONFIG.replace("[11, 12, 13]", "[4, 4]"));
    let status = vucrl(&["run", "--config", config.to_str().unwrap()]);
    assert!(!status.status.success());
    let status = vucrl(&["run", "--config", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert!(!status.status.success());
}

#[test]
fn verify_fast_prints_one_line_per_property() {
    let status = vucrl(&["verify", "--verify-level", "fast"]);
    let stdout = String::from_utf8_lossy(&status.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines.len() >= 7, "{stdout}");
    assert!(lines.iter().all(|l| l.starts_with("PASS ") || l.starts_with("FAIL ")));
    assert!(!stdout.contains("coverage"));
    assert!(stdout.contains("diameter"));
    let any_fail = lines.iter().any(|l| l.starts_with("FAIL "));
    assert_eq!(status.status.success(), !any_fail);
}

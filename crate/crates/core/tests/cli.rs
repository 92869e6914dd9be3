use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn schwarz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schwarz"))
        .args(args)
        .output()
        .expect("failed to launch schwarz")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn reproduce_table1_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = schwarz(&["reproduce", "table1", "-o", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("x_bar=0.5 aitken"));
    for f in [
        "iterations.csv",
        "errors.csv",
        "timings.csv",
        "failures.csv",
        "summary.json",
        "trace_run0000.csv",
    ] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
}

#[test]
fn compare_writes_comparison_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = schwarz(&[
        "compare",
        config("quick.toml").to_str().unwrap(),
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let cmp = fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    assert_eq!(cmp.lines().count(), 5);
    assert!(dir.path().join("comparison_timing.csv").exists());
}

#[test]
fn order_reads_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = schwarz(&[
        "run",
        config("laplace1d.toml").to_str().unwrap(),
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    // x_bar = 0.7, classical rho = 0.5: linear with factor |1 - 0.5/0.7|
    let rows = fs::read_to_string(dir.path().join("iterations.csv")).unwrap();
    let id = rows
        .lines()
        .find(|l| {
            l.contains(",7.000000000000000e-1,") && l.contains(",classical,5.000000000000000e-1,")
        })
        .and_then(|l| l.split(',').next())
        .unwrap()
        .to_string();
    let trace = dir.path().join(format!("trace_{id}.csv"));
    let out = schwarz(&[
        "order",
        trace.to_str().unwrap(),
        "--column",
        "e_abs",
        "--json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let est: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let order = est["order"].as_f64().unwrap();
    let factor = est["factor"].as_f64().unwrap();
    assert!((order - 1.0).abs() < 0.01, "order {order}");
    assert!((factor - (1.0 - 0.5 / 0.7)).abs() < 1e-6, "factor {factor}");
}

#[test]
fn invalid_config_exits_with_code_2_and_lists_problems() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(
        &path,
        "name = \"bad\"\nbackend = \"laplace1d\"\n[criteria]\neps_abs = 0.0\neps_rel = 1e-8\nmaxit = 0\n\
         [sweep]\nx_bar = [1.5]\n[[accelerators]]\nkind = \"anderson\"\nm_and = 0\n",
    )
    .unwrap();
    let out = schwarz(&[
        "run",
        path.to_str().unwrap(),
        "-o",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("invalid configuration"), "{err}");
    assert!(err.matches("\n  - ").count() >= 3, "{err}");

    fs::write(&path, "name = \"x\"\nbackend = \"laplace1d\"\nbogus = 1\n").unwrap();
    let out = schwarz(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bogus"));
}

#[test]
fn aborted_runs_exit_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("quick.toml"))
        .unwrap()
        .replace("ny = 6", "ny = 6\nnewton_maxit = 1\nwarm_start = false");
    let path = dir.path().join("abort.toml");
    fs::write(&path, text).unwrap();
    let out_dir = dir.path().join("out");
    let out = schwarz(&[
        "run",
        path.to_str().unwrap(),
        "-o",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("aborted"));
    let failures = fs::read_to_string(out_dir.join("failures.csv")).unwrap();
    assert_eq!(failures.lines().count(), 5);
    assert!(failures.contains("Newton"));
}

#[test]
fn print_config_round_trips() {
    for name in ["table1", "table3", "ndd-study"] {
        let out = schwarz(&["reproduce", name, "--print-config"]);
        assert!(out.status.success());
        let parsed =
            schwarz_core::experiment::ExperimentConfig::from_toml_str(&stdout(&out)).unwrap();
        assert_eq!(parsed, schwarz_core::experiment::builtin(name).unwrap());
    }
    let out = schwarz(&["reproduce", "table3", "--print-config", "--full-scale"]);
    assert!(stdout(&out).contains("nx = 101"));
}

#[test]
fn unknown_experiment_name_is_rejected() {
    let out = schwarz(&["reproduce", "table9"]);
    assert!(!out.status.success());
}

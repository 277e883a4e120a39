use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ldhoo_bench::experiment::read_records_from;

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = bench(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let traces = dir.path().join("traces");
    for (out, threads) in [(&a, "1"), (&b, "4")] {
        ok(&[
            "bandit",
            "--n",
            "10,60",
            "--trials",
            "3",
            "--seed",
            "5",
            "--no-timing",
            "--threads",
            threads,
            "--trace-dir",
            arg(&traces),
            "--out",
            arg(out),
        ]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(dir.path().join("a.summary.json").exists());

    let records = read_records_from(&a).unwrap();
    assert_eq!(records.len(), 2 * 2 * 3);
    assert_eq!(records[0].seed, 5);
    assert!(records.iter().all(|r| r.wall_time_ns == 0));

    let trace = fs::read_to_string(traces.join("trace_ldhoo_n60_trial2.csv")).unwrap();
    assert_eq!(trace.lines().count(), 61);
    assert!(trace.starts_with("t,h,i,action,reward,cumulative_reward,node_count,elapsed_ns"));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "# short sweep\nalgo = [\"hoo\"]\nn = 25\ntrials = 2\nno_timing = true\n").unwrap();
    let out = ok(&["bandit", "--algo", "ldhoo", "--trials", "7", "--config", arg(&config)]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<_> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.starts_with("bandit-regret,hoo,sine-product,25,unlimited,")));
}

#[test]
fn control_and_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("pendulum.csv");
    let logs = dir.path().join("episodes");
    ok(&[
        "control",
        "--env",
        "pendulum",
        "--iters",
        "10",
        "--trials",
        "2",
        "--depth",
        "5",
        "--episode-length",
        "4",
        "--no-timing",
        "--episode-log",
        arg(&logs),
        "--out",
        arg(&results),
    ]);
    let log = fs::read_to_string(logs.join("episode_pendulum_ldhoo_n10_trial1.csv")).unwrap();
    assert_eq!(log.lines().count(), 5);

    let summary = dir.path().join("summary.csv");
    let long = dir.path().join("long.csv");
    ok(&["summarize", arg(&results), "--out", arg(&summary), "--long", arg(&long)]);
    let text = fs::read_to_string(&summary).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("episode-return,ldhoo,pendulum,10,3,2,"));
    assert_eq!(fs::read_to_string(&long).unwrap().lines().count(), 4);
}

#[test]
fn timing_reports_seconds_per_action() {
    let out = ok(&["timing", "--env", "cartpole-ig", "--n", "10,20", "--trials", "1", "--depth", "5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert_eq!(row[0], "plan-timing");
        assert!(row[7].parse::<f64>().unwrap() > 0.0);
    }
}

#[test]
fn errors_exit_nonzero() {
    for args in [
        &["bandit", "--algo", "poly-hoo"][..],
        &["control", "--env", "acrobot"],
        &["bandit", "--n", "0"],
        &["bandit", "--rho", "1.5", "--n", "5"],
        &["summarize", "/nonexistent/results.csv"],
    ] {
        let out = bench(args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"), "{args:?}");
    }
}

#[test]
fn list_names_registered_variants() {
    let text = String::from_utf8(ok(&["list"]).stdout).unwrap();
    for name in ["ldhoo", "hoo", "cartpole", "cartpole-ig", "pendulum"] {
        assert!(text.contains(name), "missing {name}");
    }
}

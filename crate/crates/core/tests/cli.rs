use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fsgd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsgd"))
        .current_dir(dir)
        .env_remove("FSGD_SEED")
        .env("RUST_LOG", "error")
        .args(args)
        .output()
        .expect("spawn fsgd")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_owned).collect()
}

const SMALL: &[&str] = &["--scenario", "fig3a", "--reps", "3", "--n", "1000", "--per-decade", "2"];

#[test]
fn simulate_writes_results_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["simulate", "--out-dir", "run"];
    args.extend_from_slice(SMALL);
    let o = fsgd(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("slope="));
    let grid = 7; // 1, 3, 10, 32, 100, 316, 1000
    let results = lines(&dir.path().join("run/results.csv"));
    assert_eq!(results[0], "rep,n,mse");
    assert_eq!(results.len(), 1 + 3 * grid);
    let summary = lines(&dir.path().join("run/summary.csv"));
    assert_eq!(summary[0], "n,mse_mean,mse_stderr");
    assert_eq!(summary.len(), 1 + grid + 1);
    assert!(summary.last().unwrap().starts_with("slope="));
}

#[test]
fn reruns_are_byte_identical_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    for (out, threads) in [("a", "1"), ("b", "3")] {
        let mut args = vec!["simulate", "--seed", "7", "--threads", threads, "--out-dir", out];
        args.extend_from_slice(SMALL);
        assert_eq!(code(&fsgd(dir.path(), &args)), 0);
    }
    for f in ["results.csv", "summary.csv"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap()
        );
    }
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.toml"), "seed = 11\n").unwrap();
    let run = |out: &str, extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_fsgd"));
        cmd.current_dir(dir.path()).env_remove("FSGD_SEED");
        if let Some(v) = env {
            cmd.env("FSGD_SEED", v);
        }
        let mut args = vec!["simulate", "--out-dir", out];
        args.extend_from_slice(SMALL);
        args.extend_from_slice(extra);
        assert!(cmd.args(&args).status().unwrap().success());
        fs::read(dir.path().join(out).join("results.csv")).unwrap()
    };
    let flag = run("flag", &["--seed", "11"], Some("5"));
    let config = run("config", &["--config", "cfg.toml"], Some("5"));
    let env = run("env", &[], Some("11"));
    let other = run("other", &[], Some("5"));
    assert_eq!(flag, config);
    assert_eq!(flag, env);
    assert_ne!(flag, other);
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "sceanrio = \"fig3a\"\n").unwrap();
    let o = fsgd(dir.path(), &["simulate", "--config", "bad.toml"]);
    assert_eq!(code(&o), 2);
    fs::write(dir.path().join("cfg.toml"), "scenario = \"fig3a\"\nreps = 2\nn = 100\nper-decade = 1\n").unwrap();
    let o = fsgd(dir.path(), &["simulate", "--config", "cfg.toml", "--reps", "1", "--out-dir", "o"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(lines(&dir.path().join("o/results.csv")).len(), 1 + 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&fsgd(d, &["simulate", "--scenario", "fig9"])), 2);
    assert_eq!(code(&fsgd(d, &["simulate", "--scenario", "fig4a", "--schedule", "fixed"])), 2);
    assert_eq!(code(&fsgd(d, &["simulate", "--scenario", "fig3a", "--estimator", "fsgd", "--schedule", "lepski"])), 2);
    assert_eq!(code(&fsgd(d, &["simulate", "--scenario", "fig3a", "--estimator", "ridge"])), 2);
    assert_eq!(code(&fsgd(d, &["simulate", "--scenario", "fig3a", "--reps", "0"])), 2);
    assert_eq!(code(&fsgd(d, &["fit"])), 2);
    assert_eq!(code(&fsgd(d, &["predict", "--checkpoint", "missing", "--input", "missing"])), 3);

    fs::write(d.join("d.csv"), "x1,y\n0.5,1e300\n0.2,-1e300\n0.9,1e300\n").unwrap();
    let o = fsgd(d, &["fit", "--input", "d.csv", "--out", "m.ckpt", "--schedule", "constant", "--gamma", "1e300", "--J", "50"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn fit_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut csv = String::from("x1,x2,y\n");
    for i in 0..200 {
        let (a, b) = ((i as f64 * 0.618) % 1.0, (i as f64 * 0.414) % 1.0);
        csv.push_str(&format!("{a},{b},{}\n", (6.0 * a).sin() + b * b));
    }
    fs::write(d.join("train.csv"), &csv).unwrap();
    let o = fsgd(d, &["fit", "--input", "train.csv", "--out", "m.ckpt"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ckpt = fs::read_to_string(d.join("m.ckpt")).unwrap();
    assert!(ckpt.starts_with("fsgd-ckpt v1\n"));
    assert!(ckpt.contains("step=200\n"));

    let o = fsgd(d, &["predict", "--checkpoint", "m.ckpt", "--input", "train.csv", "--out", "pred.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let pred = lines(&d.join("pred.csv"));
    assert_eq!(pred[0], "y_hat");
    assert_eq!(pred.len(), 201);
    assert!(pred[1..].iter().all(|v| v.parse::<f64>().unwrap().is_finite()));

    let o = fsgd(d, &["predict", "--checkpoint", "m.ckpt", "--input", "train.csv"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().collect::<Vec<_>>(), pred);

    fs::write(d.join("one.csv"), "x1,y\n0.5,0\n").unwrap();
    let o = fsgd(d, &["predict", "--checkpoint", "m.ckpt", "--input", "one.csv"]);
    assert_eq!(code(&o), 3);

    let o = fsgd(d, &["eval", "--checkpoint", "m.ckpt", "--input", "train.csv"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("rows=200 mse="));
}

#[test]
fn resume_continues_the_stream() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let rows: Vec<String> = (0..40)
        .map(|i| {
            let x = (i as f64 * 0.377) % 1.0;
            format!("{x},{}", x * (1.0 - x))
        })
        .collect();
    fs::write(d.join("all.csv"), format!("x1,y\n{}\n", rows.join("\n"))).unwrap();
    fs::write(d.join("first.csv"), format!("x1,y\n{}\n", rows[..15].join("\n"))).unwrap();
    fs::write(d.join("rest.csv"), format!("x1,y\n{}\n", rows[15..].join("\n"))).unwrap();
    for est in ["fsgd", "lepski"] {
        let run = |args: &[&str]| {
            let mut all = vec!["fit", "--estimator", est];
            all.extend_from_slice(args);
            let o = fsgd(d, &all);
            assert_eq!(code(&o), 0, "{}", stderr(&o));
        };
        run(&["--input", "all.csv", "--out", "whole.ckpt"]);
        run(&["--input", "first.csv", "--out", "half.ckpt"]);
        run(&["--input", "rest.csv", "--resume", "half.ckpt", "--out", "resumed.ckpt"]);
        assert_eq!(
            fs::read(d.join("whole.ckpt")).unwrap(),
            fs::read(d.join("resumed.ckpt")).unwrap(),
            "{est}"
        );
    }
    let o = fsgd(d, &["fit", "--estimator", "sieve", "--input", "rest.csv", "--resume", "half.ckpt", "--out", "s.ckpt"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn fit_edge_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("empty.csv"), "").unwrap();
    assert_eq!(code(&fsgd(d, &["fit", "--input", "empty.csv", "--out", "e.ckpt"])), 2);
    let o = fsgd(d, &["fit", "--input", "empty.csv", "--p", "3", "--out", "e.ckpt"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ckpt = fs::read_to_string(d.join("e.ckpt")).unwrap();
    assert!(ckpt.contains("p=3\n") && ckpt.contains("step=0\n") && ckpt.contains("beta3=\n"));

    fs::write(d.join("single.csv"), "x1,y\n0.25,0.5\n").unwrap();
    let o = fsgd(d, &["fit", "--input", "single.csv", "--out", "s.ckpt"]);
    assert_eq!(code(&o), 0);
    assert!(fs::read_to_string(d.join("s.ckpt")).unwrap().contains("step=1\n"));

    fs::write(d.join("bad.csv"), "x1,y\n0.5,0\n1.5,0\n").unwrap();
    let o = fsgd(d, &["fit", "--input", "bad.csv", "--out", "b.ckpt"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    assert!(!d.join("b.ckpt").exists());
}

#[test]
fn checkpoint_version_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("m.ckpt"), "fsgd-ckpt v9\nbasis=trig\np=1\ninclude_intercept=true\nstep=0\nalpha=0\nbeta1=\n").unwrap();
    fs::write(d.join("x.csv"), "x1\n0.5\n").unwrap();
    let o = fsgd(d, &["predict", "--checkpoint", "m.ckpt", "--input", "x.csv"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("version"));
}

#[test]
fn compare_shares_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = fsgd(
        dir.path(),
        &["compare", "--scenario", "fig3a", "--reps", "2", "--n", "100", "--per-decade", "1", "--out-dir", "c"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = lines(&dir.path().join("c/compare.csv"));
    assert_eq!(rows[0], "estimator,rep,n,mse");
    assert_eq!(rows.len(), 1 + 3 * 2 * 3);
    for est in ["fsgd", "sieve", "lepski"] {
        let grid: Vec<&str> = rows
            .iter()
            .filter(|r| r.starts_with(&format!("{est},0,")))
            .map(|r| r.split(',').nth(2).unwrap())
            .collect();
        assert_eq!(grid, ["1", "10", "100"], "{est}");
        assert!(dir.path().join(format!("c/summary_{est}.csv")).exists());
    }
}

#[test]
fn lepski_log() {
    let dir = tempfile::tempdir().unwrap();
    let o = fsgd(
        dir.path(),
        &["simulate", "--scenario", "fig4a", "--reps", "2", "--n", "50", "--lepski-log", "lep.csv", "--out-dir", "o"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let log = lines(&dir.path().join("lep.csv"));
    assert_eq!(log[0], "rep,step,s");
    assert_eq!(log.len(), 1 + 2 * 50);
    let s: f64 = log[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((0.5..=8.0).contains(&s));
    let o = fsgd(dir.path(), &["simulate", "--scenario", "fig3a", "--lepski-log", "x.csv"]);
    assert_eq!(code(&o), 2);
}

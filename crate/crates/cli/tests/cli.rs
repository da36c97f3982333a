use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn knudsen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_knudsen")).args(args).output().expect("binary runs")
}

fn synth(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec!["synth", "--out", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = knudsen(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn summary(out: &Output) -> serde_json::Value {
    let err = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(err.lines().last().expect("summary line")).expect("summary is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn detect_flags_minus_side_on_flash_crash() {
    let dir = TempDir::new().unwrap();
    let log = synth(dir.path(), "crash.csv", &["--scenario", "flash-crash", "--seed", "1"]);
    let out = knudsen(&["detect", "--input", log.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    assert!(s["minus_intervals"].as_u64().unwrap() > 0, "{s}");
    assert_eq!(s["theta_lambda_source"], "joint_quantile");
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().skip(1).any(|l| l.starts_with("minus,")));
}

#[test]
fn corr_with_ten_blocks_is_insufficient() {
    let dir = TempDir::new().unwrap();
    let log = synth(dir.path(), "full.csv", &["--n-events", "5000"]);
    // keep events up to the 201st transaction: 200 ticks of velocity = 10 blocks of 20
    let text = std::fs::read_to_string(&log).unwrap();
    let mut kept = Vec::new();
    let mut tx = 0;
    for line in text.lines() {
        kept.push(line);
        tx += usize::from(line.split(',').nth(3) == Some("X"));
        if tx == 201 {
            break;
        }
    }
    assert_eq!(tx, 201);
    let short = write(dir.path(), "short.csv", &(kept.join("\n") + "\n"));
    let out = knudsen(&["corr", "--input", &short]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("got 10"), "{err}");
}

#[test]
fn knudsen_defaults_are_k4_s100() {
    let dir = TempDir::new().unwrap();
    let log = synth(dir.path(), "log.csv", &["--n-events", "30000"]);
    let log = log.to_str().unwrap();
    let a = knudsen(&["knudsen", "--input", log]);
    let b = knudsen(&["knudsen", "--input", log, "--k", "4", "--window-s", "100"]);
    assert!(a.status.success());
    let s = summary(&a);
    assert_eq!(s["params"]["k"], 4);
    assert_eq!(s["params"]["s"], 100);
    assert_eq!(a.stdout, b.stdout);
    let first: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&a.stdout).lines().next().unwrap()).unwrap();
    assert_eq!(first["symbol"], "SYNTH");
    assert!(first["config"].as_str().unwrap().len() == 16);
}

#[test]
fn exports_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let a = synth(dir.path(), "a.csv", &["--scenario", "density-sweep", "--seed", "7", "--n-events", "20000"]);
    let b = synth(dir.path(), "b.csv", &["--scenario", "density-sweep", "--seed", "7", "--n-events", "20000"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let log = a.to_str().unwrap();
    for cmd in ["replay", "knudsen", "corr", "mfp", "spectrum", "kappa", "rates"] {
        let x = knudsen(&[cmd, "--input", log]);
        let y = knudsen(&[cmd, "--input", log]);
        assert_eq!(x.status.code(), y.status.code(), "{cmd}");
        assert_eq!(x.stdout, y.stdout, "{cmd}");
        assert_eq!(x.stderr, y.stderr, "{cmd}");
    }
}

#[test]
fn every_figure_subcommand_succeeds_on_a_stationary_log() {
    let dir = TempDir::new().unwrap();
    let log = synth(dir.path(), "log.csv", &["--n-events", "60000"]);
    let log = log.to_str().unwrap();
    for args in [
        vec!["replay"],
        vec!["spectrum", "--gamma", "0,50"],
        vec!["corr"],
        vec!["mfp"],
        vec!["knudsen"],
        vec!["kappa"],
        vec!["rates"],
        vec!["detect"],
        vec!["profile", "--ticks", "100,200"],
    ] {
        let mut full = args.clone();
        full.extend(["--input", log]);
        let out = knudsen(&full);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn stdin_and_file_outputs_agree() {
    let dir = TempDir::new().unwrap();
    let log = synth(dir.path(), "log.csv", &["--n-events", "3000"]);
    let out_file = dir.path().join("replay.csv");
    let to_file = knudsen(&["replay", "--input", log.to_str().unwrap(), "--out", out_file.to_str().unwrap()]);
    assert!(to_file.status.success());
    assert!(to_file.stdout.is_empty());
    let piped = Command::new(env!("CARGO_BIN_EXE_knudsen"))
        .args(["replay"])
        .stdin(std::fs::File::open(&log).unwrap())
        .output()
        .unwrap();
    assert_eq!(piped.stdout, std::fs::read(out_file).unwrap());
}

#[test]
fn malformed_input_exits_2_with_line_number() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.csv", "ts_ms,side,price_ticks,action,volume_units\n1,B,10,A,1\n2,B,ten,A,1\n");
    let out = knudsen(&["replay", "--input", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let unordered = write(dir.path(), "t.csv", "ts_ms,side,price_ticks,action,volume_units\n5,B,10,A,1\n4,S,11,A,1\n");
    assert_eq!(knudsen(&["replay", "--input", &unordered]).status.code(), Some(2));

    let cancel_empty = write(dir.path(), "c.csv", "ts_ms,side,price_ticks,action,volume_units\n5,B,10,C,1\n");
    assert_eq!(knudsen(&["replay", "--input", &cancel_empty]).status.code(), Some(2));

    assert_eq!(knudsen(&["replay", "--input", "/nonexistent/log.csv"]).status.code(), Some(2));
    assert_eq!(knudsen(&["synth", "--scenario", "meltdown"]).status.code(), Some(2));
    assert_eq!(knudsen(&["synth", "--n-events", "10"]).status.code(), Some(2));
}

#[test]
fn explicit_theta_lambda_is_used() {
    let dir = TempDir::new().unwrap();
    let log = synth(dir.path(), "crash.csv", &["--scenario", "flash_crash", "--seed", "2"]);
    let out = knudsen(&["detect", "--input", log.to_str().unwrap(), "--theta-lambda", "-0.044"]);
    assert!(out.status.success());
    let s = summary(&out);
    assert_eq!(s["theta_lambda"], -0.044);
    assert_eq!(s["theta_lambda_source"], "flag");
}

#[test]
fn header_only_log_replays_to_nothing() {
    let dir = TempDir::new().unwrap();
    let empty = write(dir.path(), "e.csv", "ts_ms,side,price_ticks,action,volume_units\n");
    let out = knudsen(&["replay", "--input", &empty]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1);
    assert_eq!(knudsen(&["knudsen", "--input", &empty]).status.code(), Some(3));
}

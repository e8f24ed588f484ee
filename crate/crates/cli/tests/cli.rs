use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
preset = weak

[grid]
points = 241

[times]
snapshots = 0.505, 1.005
series_dt = 0.1
t_end = 2.0
";

fn catbranch(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_catbranch"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn presets_lists_builtins() {
    let out = catbranch(&["presets"], &[]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["weak", "strong", "decoupled"] {
        assert!(text.contains(name));
    }
    assert!(text.contains("K12 = 0.1442"));
}

#[test]
fn simulate_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = catbranch(&["simulate", "--config", &cfg, "--out", out_dir.to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    for f in ["snapshots.csv", "imax.csv", "classical.csv", "branching.csv", "crossings.csv", "summary.txt"] {
        assert!(out_dir.join(f).is_file(), "{f} missing");
    }
    let classical = fs::read_to_string(out_dir.join("classical.csv")).unwrap();
    assert!(classical.starts_with("t,x1_000,x1_001,x1_010,x1_011,x1_100,x1_101,x1_110,x1_111\n"));
    let crossings = fs::read_to_string(out_dir.join("crossings.csv")).unwrap();
    assert!(crossings.starts_with("t_star,label_j,label_k,i_max_at_t,B_at_t\n"));
    assert!(crossings.lines().count() > 1);
    let summary = fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(summary.contains("format = v1"));
    assert!(summary.contains("interference_retention = "));
}

#[test]
fn output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    assert!(catbranch(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap()], &[]).status.success());
    assert!(catbranch(
        &["simulate", "--config", &cfg, "--out", b.to_str().unwrap()],
        &[("CATBRANCH_THREADS", "1")]
    )
    .status
    .success());
    // the summary of a run is itself a valid configuration
    let summary = a.join("summary.txt");
    assert!(catbranch(
        &["simulate", "--config", summary.to_str().unwrap(), "--out", c.to_str().unwrap()],
        &[]
    )
    .status
    .success());
    for f in ["snapshots.csv", "imax.csv", "classical.csv", "branching.csv", "crossings.csv", "summary.txt"] {
        let fa = fs::read(a.join(f)).unwrap();
        assert_eq!(fa, fs::read(b.join(f)).unwrap(), "{f} depends on thread count");
        assert_eq!(fa, fs::read(c.join(f)).unwrap(), "{f} differs after round trip");
    }
}

#[test]
fn classical_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("cl");
    let out = catbranch(&["classical", "--preset", "decoupled", "--out", out_dir.to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let branching = fs::read_to_string(out_dir.join("branching.csv")).unwrap();
    for line in branching.lines().skip(1) {
        let b: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(b, 0.0);
    }
    assert!(!out_dir.join("snapshots.csv").exists());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[cat]\nd = 1, 2\n");
    let out = catbranch(&["simulate", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("network.masses"));

    let cfg = write_config(dir.path(), "preset = weak\n[network]\nmasses = 1.5, -1, 1\n");
    let out = catbranch(&["simulate", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(2));

    let out = catbranch(&["simulate", "--config", "/nonexistent/run.cfg"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "preset = weak\n[grid]\nmin = -2\nmax = 2\npoints = 101\n");
    let out = catbranch(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("t = "), "{}", stderr(&out));
}

#[test]
fn verify_passes_on_weak() {
    let out = catbranch(&["verify", "--preset", "weak"], &[]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("PASS eigen_residual"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn verify_reports_failures_with_exit_1() {
    // packets far narrower than the default oracle grid can follow
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "preset = weak\n[cat]\nsigma = 0.02\n[grid]\nmin = -6\nmax = 6\npoints = 6001\n[times]\nsnapshots = 0.505\n");
    let out = catbranch(&["verify", "--config", &cfg], &[]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(1), "{text}{}", stderr(&out));
    assert!(text.contains("FAIL split_operator_1d"), "{text}");
}

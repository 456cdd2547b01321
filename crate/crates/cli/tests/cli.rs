use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subspace-perturb"))
        .args(args)
        .env_remove("SUBSPACE_PERTURB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["bound", "wedin", "worst-case", "sharpness", "denoise", "cluster", "cca", "reproduce-table", "run"] {
        let o = run(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
        assert!(stdout(&o).contains("Usage"), "{sub}");
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["bound", "--bogus"],
        vec![],
        vec!["nonsense"],
        vec!["reproduce-table", "--id", "4"],
        vec!["bound", "--x", "a.csv", "--z", "b.csv"],
        vec!["denoise", "--r", "2", "--format", "yaml"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn computation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.csv", "1,0\n0,1\n");
    let z = write(dir.path(), "z.csv", "0,0\n0,0\n");
    // Equal singular values: rank 1 is not identifiable.
    let o = run(&["bound", "--x", &x, "--z", &z, "--r", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not identifiable"));

    let missing = dir.path().join("absent.csv");
    let o = run(&["bound", "--x", missing.to_str().unwrap(), "--z", &z, "--r", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.csv"));
}

#[test]
fn bound_reports_all_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.csv", "3,0,0\n0,1,0\n0,0,0\n");
    let z = write(dir.path(), "z.csv", "0,0.1,0\n0.2,0,0\n0,0,0.1\n");
    let o = run(&["bound", "--x", &x, "--z", &z, "--r", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["alpha", "beta", "v_spectral", "v_frobenius", "u_spectral", "u_frobenius", "wedin_spectral"] {
        assert!(v[key].is_number(), "{key}");
    }
    assert_eq!(v["applicable"], serde_json::Value::Bool(true));
    assert!(v["v_spectral"].as_f64().unwrap() <= 1.0);

    let o = run(&["bound", "--x", &x, "--z", &z, "--r", "1", "--format", "csv"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
}

#[test]
fn worst_case_writes_pair_and_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "worst-case",
        "--p1",
        "6",
        "--p2",
        "6",
        "--r",
        "1",
        "--alpha",
        "2",
        "--beta",
        "1",
        "--z12",
        "1",
        "--z21",
        "0.5",
        "--seed",
        "7",
        "--out-dir",
        out,
        "--format",
        "json",
    ];
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ratio = v["ratio"].as_f64().unwrap();
    assert!(ratio >= 1.0 / 10f64.sqrt() - 1e-9 && ratio <= 1.0 + 1e-9, "{ratio}");
    for name in ["x.csv", "z.csv"] {
        let body = fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(body.lines().count(), 6);
        assert!(body.lines().all(|l| l.split(',').count() == 6));
    }
}

#[test]
fn reproduce_table_csv_shape_and_determinism() {
    let args = ["reproduce-table", "--id", "1", "--reps", "3", "--seed", "42", "--format", "csv"];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0));
    let text = stdout(&a);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("p1,p2,r,t,reps,seed,u_sp,v_sp,u_fro,v_fro"), "{header}");
    assert_eq!(lines.count(), 8);
    assert_eq!(stdout(&run(&args)), text);
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["cluster", "--p", "40", "--t", "2", "--n", "5,20", "--reps", "16", "--seed", "3", "--format", "csv"];
    let one = Command::new(env!("CARGO_BIN_EXE_subspace-perturb"))
        .args(args)
        .env("SUBSPACE_PERTURB_THREADS", "1")
        .output()
        .unwrap();
    let four = run(&[&args[..], &["--threads", "4"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn study_subcommands_run() {
    let cases: [&[&str]; 4] = [
        &["denoise", "--p1", "30", "--p2", "8", "--r", "2", "--t", "6", "--reps", "4"],
        &["denoise", "--p1", "30", "--p2", "8", "--r", "2", "--t", "6", "--reps", "4", "--noise", "rademacher"],
        &["cca", "--p1", "8", "--p2", "4", "--r", "1", "--n", "40", "--t", "0.6", "--reps", "4"],
        &["sharpness", "--p1", "6", "--p2", "5", "--r", "2", "--reps", "4"],
    ];
    for args in cases {
        let o = run(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stdout.is_empty());
    }
}

#[test]
fn denoise_file_mode_prints_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let y = write(dir.path(), "y.csv", "4,0,0\n0,1,0\n0,0,0.5\n");
    let o = run(&["denoise", "--y", &y, "--r", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "4,0,0\n0,0,0\n0,0,0\n");
}

#[test]
fn run_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write(dir.path(), "c.conf", "study = cca\nreps = 4\nmaster_seed = 9\np1 = 8\np2 = 4\nr = 1\nn = 40\nt = 0.6\n");
    let o = run(&["run", "--config", &cfg, "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.is_object() || v.is_array());

    let bad = write(dir.path(), "bad.conf", "study = cca\nreps = 4\nmaster_seed = 9\n");
    let o = run(&["run", "--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`p1`"));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hslab::report::{CheckStatus, RunReport};

const EX: &str = r#"{
  "boundaries": {"family": "linear", "A": 1, "B": 3},
  "v": {"family": "const", "c": 1},
  "w": {"family": "power", "beta": -0.5},
  "p": 2
}"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hslab"))
        .args(args)
        .env("HSLAB_THREADS", "2")
        .output()
        .unwrap()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn fairway_command_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ex.json", EX);
    let out = dir.path().join("out");
    let o = run(&["fairway", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&out.join("fairway.csv")), "t,sigma,residual");
    let report = RunReport::from_json(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report.passed);
    // σ(t) = 2t for a = x, b = 3x, v = 1
    for r in report.outputs.fairway.unwrap() {
        let s = r.sigma.unwrap();
        assert!((s - 2.0 * r.t).abs() <= 1e-9 * r.t, "{} {}", r.t, s);
    }
}

#[test]
fn functionals_and_grids_csv_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ex.json", EX);
    let out = dir.path().join("out");
    let o = run(&["functionals", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&out.join("nu.csv")), "k,xi_k,xi_k1,nu_tilde,nu_bar,nu");
    assert_eq!(header(&out.join("mu.csv")), "m,k,j,x_m,x_m1,mu");
    assert!(header(&out.join("alpha.csv")).starts_with("alpha,"));
}

#[test]
fn stdout_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ex.json", EX);
    let o = run(&["grids", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let report = RunReport::from_json(&text).unwrap();
    assert_eq!(report.to_json().unwrap().trim(), text.trim());
    assert!(report.outputs.grids.is_some());
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.json", &EX.replace("\"B\": 3", "\"B\": 1"));
    let o = run(&["fairway", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("a(x) < b(x)"));
    let bad = write_config(dir.path(), "p.json", &EX.replace("\"p\": 2", "\"p\": 0.5"));
    assert_eq!(run(&["fairway", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["fairway", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn budget_error_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.json", &EX.replace("\"p\": 2", "\"p\": 2, \"max_intervals\": 2"));
    let o = run(&["partition", "--config", cfg.to_str().unwrap(), "--resolution", "50"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn failed_check_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ex.json", EX);
    let o = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--resolution", "8"]);
    assert_eq!(o.status.code(), Some(4));
    let report = RunReport::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert!(!report.passed);
    assert!(report.checks.iter().any(|c| c.status == CheckStatus::Fail));
}

#[test]
fn sweep_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let text = EX.replace("\"p\": 2", "\"p\": 2, \"sweep\": {\"ratios\": [2, 3], \"random_points\": 2}");
    let cfg = write_config(dir.path(), "s.json", &text);
    let go = |out: &Path, seed: &str| {
        let o = run(&[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--resolution",
            "60",
            "--seed",
            seed,
        ]);
        assert!(matches!(o.status.code(), Some(0) | Some(4)), "{}", String::from_utf8_lossy(&o.stderr));
    };
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    go(&a, "7");
    go(&b, "7");
    go(&c, "8");
    let read = |d: &Path| fs::read(d.join("sweep.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(b.join("report.json")).unwrap());
    assert_ne!(read(&a), read(&c));
    assert!(header(&a.join("sweep.csv")).starts_with("ratio,alpha,"));
}

#[test]
fn verify_on_zero_operator_is_vacuous() {
    let dir = tempfile::tempdir().unwrap();
    let text = EX.replace("{\"family\": \"const\", \"c\": 1}", "{\"family\": \"zero\"}");
    let cfg = write_config(dir.path(), "z.json", &text);
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--resolution", "40"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = RunReport::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert!(!report.checks.is_empty());
    for c in &report.checks {
        assert_eq!(c.status, CheckStatus::Vacuous, "{}: {}", c.name, c.detail);
    }
}

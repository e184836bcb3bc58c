use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_greens-reflect"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn greens-reflect")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_params(dir: &Path, body: &str) -> String {
    let p = dir.join("params.json");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn constants_json() {
    let o = run(&["constants"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = &v["result"];
    assert!((r["alpha2"]["value"].as_f64().unwrap() + 2.0913747616810863).abs() < 1e-9);
    assert!((r["alpha3"]["value"].as_f64().unwrap() + 2.6929299812541125).abs() < 1e-9);
    assert_eq!(v["command"], "constants");
}

#[test]
fn green_eval_header_and_value() {
    let o = run(&["green", "eval", "--m", "1", "--T", "1", "--t", "0.3", "--s", "-0.2"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert!(lines[0].starts_with("# greens-reflect "));
    assert!(lines[1].starts_with("# command: green eval"));
    assert_eq!(lines[2], "# seed: 0");
    let rows = csv_rows(&s);
    assert_eq!(rows.len(), 1);
    // G(t, s) = G(-t, -s)
    let g = rows[0][2];
    let o2 = run(&["green", "eval", "--m", "1", "--T", "1", "--t", "-0.3", "--s", "0.2"]);
    let g2 = csv_rows(&stdout(&o2))[0][2];
    assert!((g - g2).abs() < 1e-14);
}

#[test]
fn region_closed_form_at_m_zero() {
    let o = run(&["region", "closed-form", "--T", "0.5", "--m-min", "-1", "--m-max", "1", "--samples", "3"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][0], 0.0);
    assert!((rows[1][1] - 8.0).abs() < 1e-9);
    assert!((rows[1][2] + 8.0).abs() < 1e-9);
}

#[test]
fn region_closed_form_rejects_long_period() {
    let o = run(&["region", "closed-form", "--T", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(v["error"]["code"], 2);
}

#[test]
fn green_verify_passes() {
    let o = run(&["green", "verify", "--m", "1", "--T", "1", "--seed", "7", "--grid", "21", "--random", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let out = |i: usize| dirs[i].path().join("out.json");
    // relative output path so the echoed command line is identical
    let run_in = |i: usize, extra: &[&str]| {
        let o = bin()
            .current_dir(dirs[i].path())
            .args(["green", "verify", "--m", "0.7", "--T", "1.3", "--grid", "21", "--random", "30"])
            .args(["--seed", "42", "--out", "out.json"])
            .args(extra)
            .output()
            .unwrap();
        assert!(o.status.success());
        std::fs::read_to_string(out(i)).unwrap()
    };
    let a = run_in(0, &[]);
    let b = run_in(1, &[]);
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let c = run_in(2, &["--threads", "1"]);
    assert_eq!(a.replace(" --threads 1", ""), c.replace(" --threads 1", ""));
}

#[test]
fn unknown_params_key_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_params(dir.path(), r#"{"m": 1, "M": 0, "T": 1, "c": 1, "bogus": 3}"#);
    let o = run(&["solve", "picard", "--problem", "constant-shift", "--params", &p]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(v["error"]["message"].as_str().unwrap().contains("bogus"));
}

#[test]
fn missing_params_file_is_config_error() {
    let o = run(&["solve", "picard", "--problem", "constant-shift", "--params", "/nonexistent/params.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unconverged_solve_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_params(
        dir.path(),
        r#"{"m": 1, "M": 0, "T": 1, "c": 1,
            "solver": {"max_iter": 2, "newton_fallback": false}}"#,
    );
    let o = run(&["solve", "picard", "--problem", "constant-shift", "--params", &p]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn constant_shift_solution() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_params(dir.path(), r#"{"m": 0.5, "M": 0.5, "T": 0.8, "c": 3}"#);
    let o = run(&["solve", "picard", "--problem", "constant-shift", "--params", &p]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    assert!(rows.len() > 100);
    for r in rows {
        assert!((r[1] - 3.0).abs() < 1e-8, "v({}) = {}", r[0], r[1]);
    }
}

#[test]
fn schrodinger_solve_suggests_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_params(
        dir.path(),
        r#"{"T": 0.8, "beta": -0.1, "mu": 0.05, "r": 1, "R": 10}"#,
    );
    let report = dir.path().join("report.json");
    let o = run(&[
        "solve",
        "picard",
        "--problem",
        "schrodinger",
        "--params",
        &p,
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    for r in &rows {
        assert!(r[1] >= 1.0 && r[1] <= 10.0);
    }
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert!(v.to_string().contains("ode_residual"));
}

#[test]
fn kras_check_json() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_params(dir.path(), r#"{"m": 1, "M": 0, "T": 1, "c": 1}"#);
    let o = run(&[
        "kras", "check", "--problem", "constant-shift", "--params", &p, "--r", "0.5", "--R", "2", "--sample-n", "5",
    ]);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = &v["result"];
    assert!(r["samples"].as_u64().unwrap() > 0);
    assert!(r["conclusion"].is_string());
    assert_eq!(r["sign"].as_str().is_some(), true);
}

#[test]
fn lambda_curve_short_periods() {
    let o = run(&["eigen", "lambda-curve", "--t-min", "0.4", "--t-max", "0.6", "--samples", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 3);
    for r in &rows {
        // T < 1: lambda = 2 / T^2
        assert!((r[1] - 2.0 / (r[0] * r[0])).abs() < 1e-9, "{r:?}");
    }
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fvps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fvps"))
        .args(args)
        .env_remove("FVPS_JOBS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn factors_prints_eps_chi_rhs() {
    let o = fvps(&["factors", "--p1", "0", "--p2", "1.7320508"]);
    assert_eq!(code(&o), 0);
    let s = String::from_utf8(o.stdout).unwrap();
    assert!((field(&s, "eps") - 1.06066).abs() < 1e-5);
    assert!((field(&s, "chi") + 0.35355).abs() < 1e-5);
    assert_eq!(field(&s, "rhs"), 0.0);

    let o = fvps(&["factors", "--p1", "1", "--p2", "1"]);
    let s = String::from_utf8(o.stdout).unwrap();
    assert_eq!(field(&s, "eps"), 1.0);
    assert_eq!(field(&s, "chi"), 0.0);
    assert!((field(&s, "rhs") + 0.0625).abs() < 1e-12);
}

#[test]
fn missing_flag_is_usage_error() {
    let o = fvps(&["factors", "--p1", "1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn fig1_preset_reports_negative_variance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    let o = fvps(&["wigner", "--preset", "fig1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.lines().take_while(|l| l.starts_with('#')).any(|l| l == "# lambda=8"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 512 * 512);
    let j = read_json(&dir.path().join("w.json"));
    assert_eq!(j["results"]["moments"]["var_q_negative"], Value::Bool(true));
    assert_eq!(j["command"], "wigner");
    assert!(j["version"].is_string());
}

#[test]
fn wide_packet_variance() {
    let o = fvps(&["wigner", "--lambda", "0.1"]);
    assert_eq!(code(&o), 0);
    let j = stdout_json(&o);
    let var_q = j["results"]["moments"]["var_q"].as_f64().unwrap();
    assert!((var_q / 50.0 - 1.0).abs() < 1e-2, "{var_q}");
}

#[test]
fn non_conjugate_grid_rejected() {
    let o = fvps(&["wigner", "--lambda", "1", "--n", "128", "--p-max", "12", "--q-max", "3"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn evolve_check_passes_and_fails_by_tolerance() {
    let o = fvps(&["evolve", "--lambda", "2", "--t", "5", "--check"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d = stdout_json(&o)["results"]["check_deviation"].as_f64().unwrap();
    assert!(d < 1e-8);
    assert!(String::from_utf8_lossy(&o.stderr).contains("max |spectral"));

    let o = fvps(&["evolve", "--lambda", "2", "--t", "5", "--check", "--tol", "1e-30"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn rotator_low_frequency_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("orbit.csv");
    let o = fvps(&["rotator", "--b", "0.5", "--alpha", "3", "--t-max", "2000", "--dt", "0.1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = read_json(&dir.path().join("orbit.json"));
    let omega = j["results"]["omega"].as_f64().unwrap();
    let lowest = j["results"]["lowest"]["frequency"].as_f64().unwrap();
    assert!(lowest < 0.2 * omega);
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.lines().any(|l| l == "t,r,x,y"));
}

#[test]
fn sampling_error_is_validation() {
    let o = fvps(&["rotator", "--b", "0.5", "--dt", "5"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn hamiltonian_dump_size() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("h.bin");
    let o = fvps(&["rotator", "--n-max", "20", "--alpha", "1", "--t-max", "10", "--dump-hamiltonian", dump.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::metadata(&dump).unwrap().len(), 16 * 42 * 42);
}

#[test]
fn entangle_penalty_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pen.csv");
    let o = fvps(&["entangle", "--sigma", "1", "--models", "nonrel,rel", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(&out).unwrap();
    let mut rows = csv.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next(), Some("sigma,nonrel,rel"));
    let v: Vec<f64> = rows.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!(v[2] < v[1]);

    let o = fvps(&["entangle", "--models", "nonrel,classical"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# sweep\nlambda = 0.1\np_bar=0.5\n").unwrap();
    let o = fvps(&["--config", cfg.to_str().unwrap(), "wigner"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = stdout_json(&o);
    assert_eq!(j["config"]["packet"]["lambda"].as_f64(), Some(0.1));
    assert_eq!(j["config"]["packet"]["p_bar"].as_f64(), Some(0.5));

    let o = fvps(&["--config", cfg.to_str().unwrap(), "wigner", "--lambda", "0.5"]);
    assert_eq!(stdout_json(&o)["config"]["packet"]["lambda"].as_f64(), Some(0.5));

    fs::write(&cfg, "no_such_key=1\n").unwrap();
    assert_eq!(code(&fvps(&["--config", cfg.to_str().unwrap(), "wigner"])), 2);
}

#[test]
fn identical_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, jobs: &str| {
        let out = dir.path().join(name);
        let o = fvps(&["--jobs", jobs, "evolve", "--lambda", "1.5", "--t", "2", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        (fs::read(&out).unwrap(), fs::read(out.with_extension("json")).unwrap())
    };
    let (a, b) = (run("a.csv", "1"), run("b.csv", "1"));
    assert_eq!(a.0, b.0);
    let strip = |v: Vec<u8>| {
        let mut j: Value = serde_json::from_slice(&v).unwrap();
        j["config"]["out"] = Value::Null;
        j
    };
    assert_eq!(strip(a.1), strip(b.1));
}

#[test]
fn zero_jobs_rejected() {
    assert_eq!(code(&fvps(&["--jobs", "0", "factors", "--p1", "0", "--p2", "0"])), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_fvps"))
        .args(["factors", "--p1", "0", "--p2", "0"])
        .env("FVPS_JOBS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BUMP: &str = "[[metric.bumps]]\ncenter = [0.3, 0.3]\nradius = 0.5\namplitude = 0.25\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rigidity-lab"))
}

fn setup(body: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, format!("output_dir = \"out\"\n{body}")).unwrap();
    (dir, cfg)
}

fn run(sub: &str, cfg: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(sub)
        .arg("--config")
        .arg(cfg)
        .args(extra)
        .output()
        .unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn census_writes_table() {
    let (dir, cfg) = setup("[census]\nmax_word_length = 3\n");
    let out = run("census", &cfg, &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("out/census/census.csv")).unwrap();
    assert!(csv.starts_with("word,trace,length\n"));
    assert_eq!(csv.lines().count(), 1 + 12);
}

#[test]
fn empty_census_has_header_only() {
    let (dir, cfg) = setup("[census]\nmax_word_length = 0\n");
    assert_eq!(run("census", &cfg, &[]).status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out/census/census.csv")).unwrap();
    assert_eq!(csv, "word,trace,length\n");
}

#[test]
fn malformed_config_exits_2_naming_key() {
    let (_dir, cfg) = setup("[census]\nmax_wordlength = 3\n");
    let out = run("census", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("max_wordlength"));

    let (_dir, cfg) = setup("[rigidity]\nepsilons = [0.02, 0.0]\n");
    let out = run("rigidity", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rigidity.epsilons"));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = bin()
        .args(["census", "--config", "/nonexistent/exp.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let out = bin().arg("census").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rigidity_unperturbed_is_rigid() {
    let (dir, cfg) = setup(&format!("[census]\nmax_word_length = 2\n{BUMP}"));
    let out = run("rigidity", &cfg, &["--threads", "1"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json(dir.path().join("out/rigidity/report.json"));
    let s = &r["sections"][0];
    assert!(s["exponent_spread"]["value"].as_f64().unwrap() <= 1e-6);
    assert_eq!(s["failures"].as_array().unwrap().len(), 0);
    assert!(dir.path().join("out/rigidity/orbits_eps0.csv").exists());
}

#[test]
fn rigidity_ladder_gives_one_section_per_epsilon() {
    let (dir, cfg) = setup(&format!(
        "[census]\nmax_word_length = 2\n[rigidity]\nepsilons = [0.0, 0.02]\n{BUMP}"
    ));
    assert_eq!(run("rigidity", &cfg, &[]).status.code(), Some(0));
    let r = json(dir.path().join("out/rigidity/report.json"));
    let sections = r["sections"].as_array().unwrap();
    assert_eq!(sections.len(), 2);
    assert!(sections[1]["exponent_spread"]["value"].as_f64().unwrap() > 1e-4);
    assert_eq!(r["trend"]["monotone"], Value::Bool(true));
}

#[test]
fn unrefinable_orbits_are_logged_not_fatal() {
    let body = format!("[census]\nmax_word_length = 1\n[rigidity]\nepsilons = [0.02]\n[tolerances]\nshooting_residual = 1e-30\n{BUMP}");
    let (dir, cfg) = setup(&body);
    let out = run("rigidity", &cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(dir.path().join("out/rigidity/report.json"));
    let failures = r["sections"][0]["failures"].as_array().unwrap();
    assert_eq!(failures.len(), 2);
    assert!(failures[0]["error"]
        .as_str()
        .unwrap()
        .contains("did not converge"));
}

#[test]
fn rigidity_is_deterministic() {
    let (dir, cfg) = setup(&format!(
        "seed = 3\n[census]\nmax_word_length = 2\n[rigidity]\nepsilons = [0.0, 0.02]\n{BUMP}"
    ));
    let read = |name: &str| fs::read(dir.path().join("out/rigidity").join(name)).unwrap();
    assert_eq!(run("rigidity", &cfg, &[]).status.code(), Some(0));
    let (a_csv, a_json) = (read("orbits_eps0.02.csv"), read("report.json"));
    assert_eq!(
        run("rigidity", &cfg, &["--threads", "1"]).status.code(),
        Some(0)
    );
    assert_eq!(a_csv, read("orbits_eps0.02.csv"));
    assert_eq!(a_json, read("report.json"));
}

#[test]
fn entropy_without_samples_exits_3() {
    let (_dir, cfg) = setup("[entropy]\nmc_samples = 0\n");
    let out = run("entropy", &cfg, &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Monte Carlo"));
}

#[test]
fn entropy_creates_output_dir_and_honors_seed_override() {
    let (dir, cfg) =
        setup("[entropy]\nmc_samples = 6\nhorizon = 5.0\nsettle = 5.0\nmax_word_length = 4\n");
    let out_dir = dir.path().join("nested/deeper");
    let out = run(
        "entropy",
        &cfg,
        &["--out", out_dir.to_str().unwrap(), "--seed", "99"],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json(out_dir.join("entropy/report.json"));
    assert_eq!(r["seed"], 99);
    assert!((r["liouville_entropy"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(r["infinite_area"], Value::Bool(true));
    assert!(r["caveat"].is_string());
}

#[test]
fn riccati_constant_profile() {
    let (dir, cfg) = setup("[riccati.profile]\nkind = \"constant\"\nvalue = -1.0\n");
    assert_eq!(run("riccati", &cfg, &[]).status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out/riccati/unstable.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,u_11,residual"));
    for l in lines {
        let u: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert!((u - 1.0).abs() < 1e-12);
    }
}

#[test]
fn riccati_fourier_profile_is_oracle_checked() {
    let (dir, cfg) =
        setup("[riccati.profile]\nkind = \"fourier\"\nmean = -1.0\nsin = [-0.5]\nperiod = 1.0\n");
    assert_eq!(run("riccati", &cfg, &[]).status.code(), Some(0));
    let r = json(dir.path().join("out/riccati/report.json"));
    assert!(r["lyapunov"]["oracle_discrepancy"].as_f64().unwrap() < 1e-4);
    assert!(r["lyapunov"]["chi_plus"].as_f64().unwrap() < 1.0);
}

#[test]
fn riccati_sampled_profile_reads_csv() {
    let (dir, cfg) = setup("[riccati.profile]\nkind = \"sampled\"\npath = \"k.csv\"\n");
    let rows: String = (0..=64)
        .map(|i| {
            let t = i as f64 / 64.0;
            format!("{t},{}\n", -1.0 - 0.5 * (std::f64::consts::TAU * t).sin())
        })
        .collect();
    fs::write(dir.path().join("k.csv"), format!("t,K\n{rows}")).unwrap();
    let out = run("riccati", &cfg, &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json(dir.path().join("out/riccati/report.json"));
    assert!((r["lyapunov"]["chi_plus"].as_f64().unwrap() - 0.9985).abs() < 1e-3);
}

#[test]
fn riccati_matrix_chain() {
    let (dir, cfg) = setup("[riccati]\nbounds = [1.0, 2.0]\n[riccati.profile]\nkind = \"diagonal\"\ncurvatures = [-1.0, -4.0]\n");
    assert_eq!(run("riccati", &cfg, &[]).status.code(), Some(0));
    let r = json(dir.path().join("out/riccati/report.json"));
    let c2 = &r["case2"];
    assert!((c2["mean_trace"].as_f64().unwrap() - 3.0).abs() < 1e-8);
    assert!((c2["rms_trace"].as_f64().unwrap() - 3.0).abs() < 1e-8);
    assert!((c2["trace_square_root"].as_f64().unwrap() - 10f64.sqrt()).abs() < 1e-8);
    assert!((c2["ceiling"].as_f64().unwrap() - 4.0).abs() < 1e-12);
}

#[test]
fn riccati_without_section_is_a_config_error() {
    let (_dir, cfg) = setup("");
    let out = run("riccati", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("riccati"));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn igac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_igac")).args(args).env_remove("IGAC_THREADS").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = igac(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const IGE_CONFIG: &str = r#"
[manifold]
name = "integrable"

[geodesic]
theta = [1.0, 1.0]
thetadot = [0.70710678118654752, 0.70710678118654752]
tau_max = 20.0

[ige]
grid = { start = 1.0, end = 20.0, points = 20 }
"#;

#[test]
fn fisher_prints_row_major_metric() {
    let out = ok(&["fisher", "--family", "gaussian", "--theta", "0.5,2.0"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let g = &v["metric"];
    assert!((g[0][0].as_f64().unwrap() - 0.25).abs() < 1e-9);
    assert!((g[1][1].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!(g[0][1].as_f64().unwrap().abs() < 1e-9);
    assert!(v["error"].is_number());
}

#[test]
fn fisher_monte_carlo_is_seeded() {
    let args = ["--seed", "3", "fisher", "--family", "exponential-spacing", "--theta", "1.5", "--scheme", "mc", "--budget", "20000"];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    let v: Value = serde_json::from_str(&a).unwrap();
    assert!(v["standard_errors"][0][0].as_f64().unwrap() > 0.0);
}

#[test]
fn curvature_of_gaussian_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["--out", dir.path().to_str().unwrap(), "curvature", "--manifold", "gaussian", "--params", "l=2", "--point", "0,-1,1,2"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["scalar"].as_f64().unwrap() + 2.0).abs() < 1e-6);
    assert_eq!(v["ricci"].as_array().unwrap().len(), 16);
    assert_eq!(v["sectional_by_plane"].as_array().unwrap().len(), 6);
    assert!(v["weyl_max_abs"].is_number());
    assert_eq!(fs::read_to_string(dir.path().join("curvature.json")).unwrap(), out);
}

#[test]
fn geodesic_csv_contract() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["--out", d, "geodesic", "--manifold", "gaussian", "--params", "l=1", "--init", "theta=0,1;thetadot=0,0.70710678118654752", "--tau-max", "2", "--samples", "5"]);
    let text = fs::read_to_string(dir.path().join("geodesic.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,theta_1,theta_2,thetadot_1,thetadot_2,norm_drift"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    let last = &rows[4];
    assert_eq!(last[0], 2.0);
    assert!((last[2] - (2.0 * 0.5f64.sqrt()).exp()).abs() < 1e-8);
    assert!(last[5].abs() < 1e-9);
    // 17 significant digits
    assert!(text.lines().nth(1).unwrap().split(',').all(|f| f.split('e').next().unwrap().trim_start_matches('-').len() == 18));
    let manifest = json(&dir.path().join("manifest.json"));
    assert!(manifest["artifacts"].as_array().unwrap().iter().any(|a| a == "geodesic.csv"));
}

#[test]
fn json_format_replaces_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["--out", d, "--format", "json", "geodesic", "--manifold", "integrable", "--init", "theta=1,1;thetadot=1,0", "--tau-max", "1", "--samples", "3"]);
    assert!(!dir.path().join("geodesic.csv").exists());
    let rows = json(&dir.path().join("geodesic.json"));
    assert_eq!(rows.as_array().unwrap().len(), 3);
    assert!((rows[2]["theta_1"].as_f64().unwrap() - 1f64.exp()).abs() < 1e-8);
}

#[test]
fn jacobi_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["--out", d, "jacobi", "--manifold", "gaussian", "--params", "l=1", "--init", "theta=0,1;thetadot=0.57735026918962576,-0.57735026918962576", "--tau-max", "10", "--window", "3,8"]);
    let text = fs::read_to_string(dir.path().join("jacobi.csv")).unwrap();
    assert!(text.starts_with("tau,intensity\n"));
    let fit = json(&dir.path().join("jacobi_fit.json"));
    assert!((fit["exponent"].as_f64().unwrap() - 0.7071).abs() < 0.02 * 0.7071);
    assert_eq!(fit["window"][0].as_f64(), Some(3.0));
}

#[test]
fn ige_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ige.toml");
    fs::write(&cfg, IGE_CONFIG).unwrap();
    let out = dir.path().join("out");
    ok(&["ige", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let text = fs::read_to_string(out.join("ige_series.csv")).unwrap();
    assert!(text.starts_with("tau,weight,V,S\n"));
    assert_eq!(text.lines().count(), 21);
    let c = json(&out.join("ige_classification.json"));
    assert_eq!(c["class"], "LOGARITHMIC");
    for k in ["rate", "r2_linear", "r2_log"] {
        assert!(c[k].is_number(), "{k}");
    }
    assert!(!out.join("report.json").exists());
}

#[test]
fn report_carries_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    // long enough that ln tau is flat (slope < 0.05) over the last 60%
    let base = IGE_CONFIG.replace("tau_max = 20.0", "tau_max = 40.0");
    let text = format!("{base}\n[jacobi]\n\n[curvature]\npoints = 4\n");
    fs::write(&cfg, &text).unwrap();
    let out = dir.path().join("out");
    let stdout = ok(&["--seed", "5", "report", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(stdout.contains("verdict regular"), "{stdout}");
    let r = json(&out.join("report.json"));
    assert_eq!(r["verdict"], "regular");
    let hash: String = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(r["provenance"]["config_hash"], hash.as_str());
    assert_eq!(r["provenance"]["seed"], 5);
    assert_eq!(r["curvature"]["sign"], "zero");
    assert_eq!(fs::read_to_string(out.join("config.toml")).unwrap(), text);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["seed"], 5);
    assert!(m.get("threads").is_none());
}

#[test]
fn validation_errors_exit_2_with_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, IGE_CONFIG.replace("tau_max = 20.0", "tau_max = 10.0")).unwrap();
    let out = igac(&["ige", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ige.grid"));

    let out = igac(&["curvature", "--manifold", "torus", "--point", "1,2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = igac(&["geodesic", "--manifold", "gaussian", "--params", "l=1", "--init", "theta=0,1", "--tau-max", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("steps.toml");
    fs::write(&cfg, IGE_CONFIG.replace("tau_max = 20.0", "tau_max = 20.0\nmax_steps = 2")).unwrap();
    let out = igac(&["ige", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_config_is_io_error() {
    let out = igac(&["report", "--config", "/nonexistent/igac.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn threads_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_igac"))
        .args(["--out", dir.path().to_str().unwrap(), "geodesic", "--manifold", "integrable", "--init", "theta=1,1;thetadot=1,0", "--tau-max", "1"])
        .env("IGAC_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_igac"))
        .args(["geodesic", "--manifold", "integrable", "--init", "theta=1,1;thetadot=1,0", "--tau-max", "1"])
        .env("IGAC_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bundled_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        igac_cli::ExperimentConfig::load(&p).unwrap_or_else(|err| panic!("{}: {err}", p.display()));
        n += 1;
    }
    assert!(n >= 4);
}

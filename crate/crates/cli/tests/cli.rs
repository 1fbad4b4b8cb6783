use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::Path;
use std::process::{Command, Output};

fn translab(out: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_translab"));
    cmd.arg("--quiet").arg("--out").arg(out).args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn stderr_report(o: &Output) -> Value {
    serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).expect("stderr holds a JSON error report")
}

#[test]
fn list_shows_registry() {
    let dir = tempfile::tempdir().unwrap();
    let o = translab(dir.path(), &["list"], &[]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("key\talpha\tregime\tsigned\n"));
    assert!(text.contains("gauss:n=4\t1\tdegenerate\tfalse"));
    assert!(text.contains("sk:k=3,n=5\t3\tnondegenerate\ttrue"));
}

#[test]
fn bowl_writes_documented_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = translab(dir.path(), &["bowl", "--curvature", "mean:n=3", "--rmax", "100"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let p = dir.path();
    assert_eq!(header(&p.join("bowl_profile.csv")), "r,u,v,residual");
    let second = std::fs::read_to_string(p.join("bowl_profile.csv")).unwrap().lines().nth(1).unwrap().to_string();
    for field in second.split(',') {
        let (mantissa, _) = field.split_once('e').expect("scientific notation");
        assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17, "{field}");
    }
    let report = json(&p.join("bowl_report.json"));
    assert_eq!(report["scalars"]["alpha"], 1.0);
    assert_eq!(report["scalars"]["a"], 0.5);
    assert!(p.join("bowl_plot.gp").exists());
    let manifest = json(&p.join("manifest.json"));
    assert_eq!(manifest["command"], "bowl");
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), 3);
    for f in files {
        let bytes = std::fs::read(p.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
}

#[test]
fn invalid_values_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = translab(dir.path(), &["bowl", "--curvature", "mean:n=3", "--rmax", "-1"], &[]);
    assert_eq!(code(&o), 2);
    let report = stderr_report(&o);
    assert_eq!(report["kind"], "config");
    assert!(report["message"].as_str().unwrap().contains("bowl.rmax"));
    assert_eq!(json(&dir.path().join("error.json"))["exit_code"], 2);

    for args in [
        vec!["bowl"],
        vec!["bowl", "--curvature", "nosuch:n=3"],
        vec!["bowl", "--curvature", "mean:n=3", "--fit-window", "5,1"],
        vec!["bowl", "--curvature", "mean:n=3", "--regime", "degenerate"],
        vec!["catenoid", "--curvature", "sk:k=3,n=5", "--handoff", "1.0"],
        vec!["catenoid", "--curvature", "sk:k=3,n=5", "--R", "0"],
    ] {
        let o = translab(dir.path(), &args, &[]);
        assert_eq!(code(&o), 2, "{args:?}");
    }
}

#[test]
fn config_layers_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "curvature = \"mean:n=3\"\n[bowl]\nrmax = -5.0\n").unwrap();
    let out = dir.path().join("out");
    let cfg_arg = cfg.to_str().unwrap();

    // The file value is invalid until a higher layer replaces it.
    let o = translab(&out, &["--config", cfg_arg, "bowl"], &[]);
    assert_eq!(code(&o), 2);
    let o = translab(&out, &["--config", cfg_arg, "bowl"], &[("TRANSLAB_BOWL_RMAX", "50")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = translab(&out, &["--config", cfg_arg, "bowl", "--rmax", "60"], &[("TRANSLAB_BOWL_RMAX", "-1")]);
    assert_eq!(code(&o), 0);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["config"]["bowl"]["rmax"], 60.0);
    assert_eq!(manifest["config"]["curvature"], "mean:n=3");

    std::fs::write(&cfg, "curvature = \"mean:n=3\"\n[bowl]\nr_max = 50.0\n").unwrap();
    let o = translab(&out, &["--config", cfg_arg, "bowl"], &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr_report(&o)["message"].as_str().unwrap().contains("r_max"));

    let o = translab(&out, &["bowl", "--curvature", "mean:n=3"], &[("TRANSLAB_BOWL_RMAXX", "50")]);
    assert_eq!(code(&o), 2);
    let o = translab(&out, &["bowl", "--curvature", "mean:n=3", "--rmax", "50"], &[("TRANSLAB_SEED", "7")]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&out.join("manifest.json"))["config"]["seed"], 7);
}

#[test]
fn catenoid_rejects_unsigned_functions() {
    let dir = tempfile::tempdir().unwrap();
    let o = translab(dir.path(), &["catenoid", "--curvature", "mean:n=3", "--R", "1"], &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr_report(&o)["message"].as_str().unwrap().contains("curvature function is not signed"));
}

#[test]
fn catenoid_writes_documented_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = translab(dir.path(), &["catenoid", "--curvature", "qk:k=3,n=6", "--R", "1"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let p = dir.path();
    assert_eq!(header(&p.join("catenoid_upper.csv")), "s,r,u,theta,kappa,residual");
    assert_eq!(header(&p.join("catenoid_lower.csv")), "s,r,u,theta,kappa,residual");
    assert_eq!(header(&p.join("catenoid_neck.csv")), "u,r,dr,d2r,residual");
    let plot = std::fs::read_to_string(p.join("catenoid_plot.gp")).unwrap();
    assert!(plot.contains("catenoid_upper.csv") && plot.contains("catenoid_lower.csv"));
    let r = json(&p.join("catenoid_result.json"));
    assert_eq!(r["case"], "derivative_origin");
    assert!(r["embeddedness"]["min_gap"].as_f64().unwrap() > 0.0);
    assert!(r["c_plus"].as_f64().is_some());
    assert!((r["b"].as_f64().unwrap() + 2.0).abs() < 1e-12);
}

#[test]
fn verify_suites() {
    let dir = tempfile::tempdir().unwrap();
    let o = translab(dir.path(), &["verify", "--suite", "homogeneity", "--curvature", "gauss:n=4"], &[]);
    assert_eq!(code(&o), 0);
    let r = json(&dir.path().join("verify_report.json"));
    assert_eq!(r["suites"], serde_json::json!(["homogeneity"]));
    assert!(r["homogeneity"]["max_defect"].as_f64().unwrap() <= 1e-10);

    let o = translab(dir.path(), &["verify", "--suite", "ordering", "--curvature", "mean:n=4", "--pairs", "10"], &[]);
    assert_eq!(code(&o), 0);
    let r = json(&dir.path().join("verify_report.json"));
    assert_eq!(r["ordering_plus"]["pairs"].as_array().unwrap().len(), 10);
    assert!(r["ordering_minus"].is_null());

    let o = translab(dir.path(), &["verify", "--suite", "barrier", "--curvature", "mean:n=3"], &[]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr_report(&o)["kind"], "unsupported");
}

#[test]
fn barrier_suite_writes_margins() {
    let dir = tempfile::tempdir().unwrap();
    let o = translab(dir.path(), &["verify", "--suite", "barrier", "--curvature", "qk:k=3,n=7"], &[]);
    // The power barrier is a subsolution, so that check fails.
    assert_eq!(code(&o), 1);
    assert!(stderr_report(&o)["message"].as_str().unwrap().contains("power_supersolution"));
    for name in ["barrier_power.csv", "barrier_cone.csv"] {
        let path = dir.path().join(name);
        assert_eq!(header(&path), "r,w,margin");
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 401);
    }
    let m = json(&dir.path().join("manifest.json"));
    let checks = m["checks"].as_array().unwrap();
    let cone = checks.iter().find(|c| c["name"] == "cone_subsolution").unwrap();
    assert_eq!(cone["passed"], true);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--seed", "11", "verify", "--suite", "ordering", "--curvature", "mean:n=3", "--pairs", "5"];
    assert_eq!(code(&translab(a.path(), &args, &[])), 0);
    assert_eq!(code(&translab(b.path(), &args, &[])), 0);
    let fa = json(&a.path().join("manifest.json"))["files"].clone();
    let fb = json(&b.path().join("manifest.json"))["files"].clone();
    assert_eq!(fa, fb);
    let c = tempfile::tempdir().unwrap();
    let other = ["--seed", "12", "verify", "--suite", "ordering", "--curvature", "mean:n=3", "--pairs", "5"];
    assert_eq!(code(&translab(c.path(), &other, &[])), 0);
    assert_ne!(fa, json(&c.path().join("manifest.json"))["files"]);
}

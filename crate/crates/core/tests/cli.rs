use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fieldforge"));
    c.env_remove("FIELDFORGE_WORKERS");
    c
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg(sub).arg("--config").arg(config).arg("--output").arg(out).args(extra).output().unwrap()
}

/// Output files keyed by name, with wall-clock fields removed.
fn snapshot(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let e = e.unwrap();
        let name = e.file_name().into_string().unwrap();
        if name == "timing.json" {
            continue;
        }
        let mut text = fs::read_to_string(e.path()).unwrap();
        if name == "trace.csv" {
            text = text.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n").collect();
        }
        out.insert(name, text);
    }
    out
}

const STRIPS: &str = r#"{
  "job": "cap",
  "geometry": {"kind": "parallel_strips", "strip_width_m": 1e-3, "strip_thickness_m": 0.2e-3,
               "separation_m": 0.5e-3, "box_width_m": 5e-3, "box_height_m": 3e-3, "target_edge_length_m": 0.1e-3},
  "fem": {"order": 2}
}"#;

const SQUARE: &str = r#"{
  "job": "modes",
  "geometry": {"kind": "rectangle", "width_m": 1.0, "height_m": 1.0, "target_edge_length_m": 0.1},
  "fem": {"order": 2},
  "eigen": {"count": 3}
}"#;

const COAX: &str = r#"{
  "job": "converge",
  "geometry": {"kind": "annulus", "inner_radius_m": 1.0, "outer_radius_m": 2.718281828459045, "target_edge_length_m": 0.5},
  "amr": {"strategy": "dorfler", "parameter": 0.5, "max_dof": 3000, "target": 1e-4}
}"#;

#[test]
fn missing_subcommand_or_config_exits_2() {
    assert_eq!(bin().output().unwrap().status.code(), Some(2));
    let o = bin().arg("cap").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--config"));
    let o = bin().args(["cap", "--config", "/nonexistent/config.json", "--output", "/tmp/x"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_config_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "bad.json", "{\n  \"job\": \"cap\",\n  \"geometry\": 12,\n}\n");
    let o = run("cap", &p, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:3:"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_fields_and_job_mismatch_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "typo.json", r#"{"job": "rmse", "comparision": {}}"#);
    assert_eq!(run("rmse", &p, &dir.path().join("o"), &[]).status.code(), Some(2));
    let p = write_config(dir.path(), "cap.json", STRIPS);
    assert_eq!(run("modes", &p, &dir.path().join("o"), &[]).status.code(), Some(2));
    let p = write_config(dir.path(), "strategy.json", &COAX.replace("dorfler", "random"));
    assert_eq!(run("converge", &p, &dir.path().join("o"), &[]).status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "flat.json",
        r#"{"job": "amdahl", "scaling": {"samples": [{"workers": 4, "seconds": 1.0}, {"workers": 4, "seconds": 1.1}, {"workers": 4, "seconds": 0.9}]}}"#,
    );
    let o = run("amdahl", &p, &dir.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn shipped_configs_run() {
    let dir = tempfile::tempdir().unwrap();
    for (sub, file, artifact) in [
        ("epr", "transmon_epr.json", "epr.json"),
        ("epr", "transmon_diag.json", "epr.json"),
        ("rmse", "transmon_rmse.json", "rmse.csv"),
        ("amdahl", "amdahl_model.json", "amdahl.json"),
        ("mesh", "coax_mesh.json", "mesh.msh"),
        ("cap", "cpw_cap.json", "eps_eff.json"),
        ("modes", "cpw_resonator.json", "resonator.json"),
    ] {
        let out = dir.path().join(file);
        let o = run(sub, &configs_dir().join(file), &out, &[]);
        assert!(o.status.success(), "{file}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join(artifact).exists(), "{file}");
    }
    let epr: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("transmon_epr.json/epr.json")).unwrap()).unwrap();
    assert!((epr["alpha_q_MHz"].as_f64().unwrap() - 319.91).abs() < 0.01);
    let res: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cpw_resonator.json/resonator.json")).unwrap()).unwrap();
    assert!((res["frequency_GHz"].as_f64().unwrap() - 10.0).abs() < 0.05);
}

#[test]
fn rmse_table_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("rmse", &configs_dir().join("transmon_rmse.json"), dir.path(), &[]);
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("rmse.csv")).unwrap();
    assert!(csv.starts_with("parameter,unit,mode,value\n"));
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn outputs_are_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    for (sub, name, json) in [("cap", "cap.json", STRIPS), ("modes", "modes.json", SQUARE), ("converge", "conv.json", COAX)] {
        let p = write_config(dir.path(), name, json);
        let a = dir.path().join(format!("{name}.a"));
        let b = dir.path().join(format!("{name}.b"));
        let c = dir.path().join(format!("{name}.c"));
        assert!(run(sub, &p, &a, &["--workers", "1"]).status.success());
        assert!(run(sub, &p, &b, &["--workers", "1"]).status.success());
        let o = bin().arg(sub).arg("--config").arg(&p).arg("--output").arg(&c).env("FIELDFORGE_WORKERS", "3").output().unwrap();
        assert!(o.status.success());
        let (sa, sb, sc) = (snapshot(&a), snapshot(&b), snapshot(&c));
        assert!(!sa.is_empty());
        assert_eq!(sa, sb, "{sub}: repeated run differs");
        assert_eq!(sa, sc, "{sub}: worker count changes output");
    }
}

#[test]
fn prints_artifact_paths() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("epr", &configs_dir().join("transmon_epr.json"), dir.path(), &[]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.trim().ends_with("epr.json"), "{stdout}");
}

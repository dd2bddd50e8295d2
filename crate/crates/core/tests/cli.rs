use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn infocomm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infocomm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

fn build(dir: &TempDir, body: &str) -> (Output, PathBuf) {
    let cfg = write_config(dir.path(), body);
    let out = dir.path().join("out");
    let o = infocomm(&["build", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let run = fs::read_dir(&out)
        .ok()
        .and_then(|mut it| it.next())
        .map(|e| e.unwrap().path())
        .unwrap_or_default();
    (o, run)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn build_default_config() {
    let dir = TempDir::new().unwrap();
    let (o, run) = build(&dir, "");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(run.file_name().unwrap().to_str().unwrap().starts_with("run_"));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("structure.json")).unwrap()).unwrap();
    assert_eq!(doc["communities"].as_array().unwrap().len(), 5);
    for k in 0..5 {
        assert!(run.join(format!("profiles/demand_{k}.csv")).exists());
        let atoms = fs::read_to_string(run.join(format!("profiles/atoms_{k}.csv"))).unwrap();
        assert_eq!(atoms.lines().count(), 41);
    }
}

#[test]
fn build_rejects_non_divisible_cells() {
    let dir = TempDir::new().unwrap();
    let (o, _) = build(&dir, "[community]\nhalf_length = 0.3\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not an integer"), "{}", stderr(&o));
}

#[test]
fn build_rejects_unknown_keys() {
    let dir = TempDir::new().unwrap();
    let (o, _) = build(&dir, "[grids]\nkd = 400\n");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn build_warns_on_expensive_content() {
    let dir = TempDir::new().unwrap();
    let (o, run) = build(&dir, "[economy]\nc = 0.9\n");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("f(0)g(0)-c <= 0"));
    assert!(fs::read_to_string(run.join("warnings.txt")).unwrap().contains("f(0)g(0)-c <= 0"));
}

#[test]
fn verify_canonical_and_perturbed() {
    let dir = TempDir::new().unwrap();
    let (_, run) = build(&dir, "");
    let structure = run.join("structure.json");
    let o = infocomm(&["verify", structure.to_str().unwrap(), "--epsilon", "1.0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let gaps = fs::read_to_string(run.join("gaps.csv")).unwrap();
    assert_eq!(gaps.lines().count(), 601);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("equilibrium.json")).unwrap()).unwrap();
    assert_eq!(report["is_epsilon_equilibrium"], true);

    // send one edge producer's atom back to its own centre
    let mut doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&structure).unwrap()).unwrap();
    let z = doc["communities"][1]["producers"][0].as_u64().unwrap() as usize;
    let centre = -1.0 + 0.01 * z as f64;
    doc["production"][z][0]["atoms"][0]["location"] = serde_json::json!(centre);
    let perturbed = dir.path().join("perturbed.json");
    fs::write(&perturbed, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = dir.path().join("perturbed_out");
    let o = infocomm(&["verify", perturbed.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(out.join("gaps.csv").exists());
}

#[test]
fn io_and_schema_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(infocomm(&["verify", missing.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(infocomm(&["props", ""]).status.code(), Some(3));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"schema\": 3}").unwrap();
    assert_eq!(infocomm(&["verify", bad.to_str().unwrap()]).status.code(), Some(3));
    let cfg = dir.path().join("missing.toml");
    assert_eq!(infocomm(&["build", "--config", cfg.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn props_pass_on_default_and_fail_on_coarse_grid() {
    let dir = TempDir::new().unwrap();
    let (_, run) = build(&dir, "");
    let o = infocomm(&["props", run.join("structure.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let verdicts: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("verdicts.json")).unwrap()).unwrap();
    assert_eq!(verdicts.as_array().unwrap().len(), 20);

    let coarse = TempDir::new().unwrap();
    let (_, run) = build(&coarse, "[grids]\nk_d = 40\nk_s = 20\n");
    let o = infocomm(&["props", run.join("structure.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let verdicts: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("verdicts.json")).unwrap()).unwrap();
    let failed: Vec<&serde_json::Value> = verdicts.as_array().unwrap().iter().filter(|v| v["pass"] == false).collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|v| v["n_witnesses"].as_u64().unwrap() > 0));
}

#[test]
fn props_zero_margin_flags_midpoint_agents() {
    let dir = TempDir::new().unwrap();
    let (_, run) = build(&dir, "");
    let out = dir.path().join("zero");
    let o = infocomm(&["props", run.join("structure.json").to_str().unwrap(), "--margins", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_levels() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("out");
    let o = infocomm(&["sweep", "--config", cfg.to_str().unwrap(), "--levels", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = infocomm(&["sweep", "--config", cfg.to_str().unwrap(), "--levels", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let run = fs::read_dir(&out).unwrap().next().unwrap().unwrap().path();
    let csv = fs::read_to_string(run.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("level,k_d,k_s,"));
}

#[test]
fn run_writes_every_artifact() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "[sweep]\nlevels = 2\n");
    let out = dir.path().join("out");
    let o = infocomm(&["--workers", "2", "run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let run = fs::read_dir(&out).unwrap().next().unwrap().unwrap().path();
    for f in ["structure.json", "equilibrium.json", "gaps.csv", "verdicts.json", "sweep.csv"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
}

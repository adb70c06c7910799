use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blowup-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const BUILTINS: [&str; 6] = [
    "stationary",
    "perturbed",
    "ode-pipeline",
    "frame-shift",
    "klein-gordon",
    "refinement-study",
];

const USER_SCENARIO: &str = r#"
name = "tiny"
description = "small stationary run"
[params]
dim = 3
p = 4.0
[grid]
nodes = 33
[run]
mode = "similarity"
initial = "stationary"
s_end = 1.0
[checks]
drift = true
positivity = true
"#;

fn names(listing: &str) -> Vec<String> {
    listing
        .lines()
        .map(|l| l.split('\t').next().unwrap().to_string())
        .collect()
}

#[test]
fn list_shows_builtins_and_user_scenarios() {
    let out = lab(&["list"]);
    assert!(out.status.success());
    let listed = names(&stdout(&out));
    for name in BUILTINS {
        assert!(listed.iter().any(|l| l == name), "{name} missing");
    }

    let empty = tempdir().unwrap();
    let out = lab(&["list", "--scenario-dir", empty.path().to_str().unwrap()]);
    assert_eq!(names(&stdout(&out)).len(), BUILTINS.len());

    let dir = tempdir().unwrap();
    fs::write(dir.path().join("tiny.toml"), USER_SCENARIO).unwrap();
    fs::write(dir.path().join("broken.toml"), "name = ").unwrap();
    let out = lab(&["list", "--scenario-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let listed = names(&stdout(&out));
    assert_eq!(listed.len(), BUILTINS.len() + 1);
    assert!(listed.contains(&"tiny".to_string()));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.toml"));
}

#[test]
fn stationary_builtin_passes_and_writes_artifacts() {
    let dir = tempdir().unwrap();
    let out = lab(&["run", "stationary", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    for file in [
        "summary.json",
        "manifest.toml",
        "energy.csv",
        "diagnostics.csv",
        "similarity_snapshots.csv",
    ] {
        assert!(dir.path().join(file).is_file(), "{file} missing");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["exit_code"], 0);
    let energy = fs::read_to_string(dir.path().join("energy.csv")).unwrap();
    assert!(energy.starts_with("s,E0,I,E,F,"));
}

#[test]
fn sobolev_exponent_exits_with_config_error() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("sobolev.toml");
    fs::write(&config, USER_SCENARIO.replace("p = 4.0", "p = 5.0")).unwrap();
    let out = lab(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(lab(&["run", "no-such-scenario"]).status.code(), Some(2));
}

#[test]
fn failed_verdict_exits_with_one() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("strict.toml");
    let text = USER_SCENARIO
        .replace("initial = \"stationary\"", "initial = \"perturbed\"")
        .replace(
            "drift = true\npositivity = true",
            "dissipation = true\nidentity_tolerance = 1e-12",
        );
    fs::write(&config, text).unwrap();
    let out = lab(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
}

fn run_into(config: &Path, out: &Path, seed: &str) {
    let status = lab(&[
        "run",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        seed,
    ])
    .status;
    assert_eq!(status.code(), Some(0));
}

#[test]
fn identical_runs_give_identical_artifacts() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("tiny.toml");
    fs::write(&config, USER_SCENARIO).unwrap();
    run_into(&config, &dir.path().join("a"), "7");
    run_into(&config, &dir.path().join("b"), "7");
    for file in [
        "summary.json",
        "manifest.toml",
        "energy.csv",
        "similarity_snapshots.csv",
    ] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
}

#[test]
fn manifest_records_derived_constants() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("tiny.toml");
    fs::write(&config, USER_SCENARIO).unwrap();
    run_into(&config, &dir.path().join("o"), "11");
    let text = fs::read_to_string(dir.path().join("o/manifest.toml")).unwrap();
    let manifest: toml::Table = text.parse().unwrap();
    assert_eq!(manifest["run"]["seed"].as_integer(), Some(11));
    let derived = manifest["derived"].as_table().unwrap();
    for key in [
        "eta",
        "kappa0",
        "similarity_cfl",
        "similarity_h",
        "similarity_ds",
        "monotonicity_constant",
        "positivity_tolerance",
        "resolution_floor_constant",
        "min_r2",
    ] {
        assert!(derived.contains_key(key), "{key} missing");
    }
    let eta = derived["eta"].as_float().unwrap();
    assert!((eta - (1.0 - 2.0 / 3.0)).abs() < 1e-15);
    let kappa0 = derived["kappa0"].as_float().unwrap();
    assert!((kappa0.powi(3) - 10.0 / 9.0).abs() < 1e-14);
}

#[test]
fn batch_runs_every_file() {
    let dir = tempdir().unwrap();
    let scenarios = dir.path().join("scenarios");
    fs::create_dir(&scenarios).unwrap();
    fs::write(
        scenarios.join("a.toml"),
        USER_SCENARIO.replace("\"tiny\"", "\"tiny-a\""),
    )
    .unwrap();
    fs::write(
        scenarios.join("b.toml"),
        USER_SCENARIO.replace("\"tiny\"", "\"tiny-b\""),
    )
    .unwrap();
    let out_root = dir.path().join("out");
    let out = lab(&[
        "--threads",
        "2",
        "batch",
        scenarios.to_str().unwrap(),
        "--out",
        out_root.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(out_root.join("tiny-a/summary.json").is_file());
    assert!(out_root.join("tiny-b/summary.json").is_file());
}

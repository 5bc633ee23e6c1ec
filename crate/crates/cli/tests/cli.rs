use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flocknet_cli::ENERGIES_HEADER;
use flocknet_core::config::{pi_config, RunConfig};
use flocknet_core::CommunicationKernel;

fn flocknet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flocknet")).args(args).output().expect("spawn flocknet")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

/// A short, small-ensemble variant of the pi configuration.
fn quick_config() -> RunConfig {
    let mut c = pi_config();
    c.ensemble.realizations = 4;
    c.stepper.t_end = 1.0;
    c.stepper.sample_stride = Some(0.25);
    c.output.snapshot_times = vec![0.0, 0.5];
    c
}

fn write_config(dir: &Path, name: &str, config: &RunConfig) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, config.to_toml().unwrap()).unwrap();
    path
}

#[test]
fn graph_info_reports_table_values() {
    let v = json(&flocknet(&["graph-info", "G3", "-n", "30", "--json"]));
    assert_eq!(v["n_arcs"], 60);
    assert_eq!(v["diameter"], 15);
    assert_eq!(v["max_degree"], 2);
    let v = json(&flocknet(&["graph-info", "G4", "-n", "30", "--json"]));
    assert_eq!(v["diameter"], 2);

    let v = json(&flocknet(&["graph-info", "G0", "-n", "5", "--json", "--convention", "off_diagonal"]));
    assert_eq!((v["n_arcs"].as_u64(), v["diameter"].as_u64()), (Some(20), Some(1)));
    assert_eq!(v["connectivity_denominator"], 1);
    let v = json(&flocknet(&["graph-info", "G0", "-n", "5", "--json"]));
    assert_eq!(v["connectivity_denominator"], 6);

    let text = stdout(&flocknet(&["graph-info", "G2", "-n", "4"]));
    assert!(text.contains("L_G              1/31"), "{text}");
}

#[test]
fn graph_info_reads_edge_lists_and_flags_disconnection() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("split.txt");
    fs::write(&path, "# two components\n4\n1 2\n3 4\n").unwrap();
    let out = flocknet(&["graph-info", path.to_str().unwrap(), "--json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["connected"], false);
    assert!(v["diameter"].is_null());

    let out = flocknet(&["graph-info", dir.path().join("missing.txt").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing.txt"));
}

#[test]
fn check_passes_for_pi_configuration() {
    let out = flocknet(&["check"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json(&out);
    let lambda = v["lambda"].as_f64().unwrap();
    assert!((lambda - 9.0e-5).abs() < 0.05e-5, "{lambda}");
    assert_eq!(v["failures"].as_array().unwrap().len(), 0);
    assert!(v["analysis"]["beta"].as_f64().unwrap() > 0.0);
}

#[test]
fn check_fails_on_weak_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = quick_config();
    config.model.coupling = 1e-9;
    config.model.sigma = 1.0;
    let path = write_config(dir.path(), "weak.toml", &config);
    let out = flocknet(&["check", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["coupling_ok"], false);
    assert!(stderr(&out).contains("coupling"));
}

#[test]
fn check_flags_violated_initial_condition() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = quick_config();
    config.model.phi = CommunicationKernel::power_shift(1.0, 1.0, 0.0).unwrap();
    config.ensemble.velocity_half_width = 1e6;
    config.ensemble.center_velocities = false;
    let path = write_config(dir.path(), "fast.toml", &config);
    let out = flocknet(&["check", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["initial_condition"]["verdict"], "violated");
    assert_eq!(v["phi_min_ok"], false);
}

#[test]
fn simulate_writes_bit_stable_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "quick.toml", &quick_config());
    let out_dir = dir.path().join("run");
    let out = flocknet(&[
        "simulate",
        "--config",
        path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--seed",
        "31",
        "--convention",
        "off_diagonal",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let energies = fs::read_to_string(out_dir.join("energies.csv")).unwrap();
    let mut lines = energies.lines();
    assert_eq!(lines.next(), Some(ENERGIES_HEADER));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.len() == 13));
    assert_eq!(rows[4][0], 1.0);
    for cell in energies.lines().nth(1).unwrap().split(',') {
        let mantissa = cell.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.len(), 18, "{cell}");
    }

    let snapshot = fs::read_to_string(out_dir.join("snapshot_r0_001_t0.5000.csv")).unwrap();
    let mut lines = snapshot.lines();
    assert_eq!(lines.next(), Some("i,x_1,x_2,v_1,v_2"));
    assert_eq!(lines.count(), 30);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 31);
    assert_eq!(summary["convention"], "off_diagonal");
    assert_eq!(summary["status"], "complete");
    assert_eq!(summary["config"]["stepper"]["seed"], 31);
    assert_eq!(summary["config"]["model"]["targets"], "pi30");
    assert!(summary["versions"]["flocknet"].is_string());
    let z = summary["target_mean"].as_array().unwrap();
    assert!((z[0].as_f64().unwrap() + 4.4306).abs() < 1e-3 && (z[1].as_f64().unwrap() - 34.1460).abs() < 1e-3);
    let embedded: RunConfig = serde_json::from_value(summary["config"].clone()).unwrap();
    assert_eq!(embedded.model.psi, quick_config().model.psi);
}

#[test]
fn frozen_dynamics_keep_energy_constant() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = quick_config();
    config.model.coupling = 0.0;
    config.model.control = 0.0;
    config.model.sigma = 0.0;
    config.ensemble.velocity_half_width = 0.0;
    let path = write_config(dir.path(), "frozen.toml", &config);
    let out_dir = dir.path().join("frozen");
    let out = flocknet(&["simulate", "--config", path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let energies = fs::read_to_string(out_dir.join("energies.csv")).unwrap();
    let h: Vec<&str> = energies.lines().skip(1).map(|l| l.split(',').nth(3).unwrap()).collect();
    assert!(h.windows(2).all(|w| w[0] == w[1]), "{h:?}");
}

#[test]
fn targets_shape_is_checked() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..29).map(|i| format!("{i},{}\n", 2 * i)).collect();
    fs::write(dir.path().join("short.csv"), rows).unwrap();
    let mut config = quick_config();
    config.model.targets = "short.csv".into();
    let path = write_config(dir.path(), "short.toml", &config);
    let out = flocknet(&["check", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("29 x 2"), "{}", stderr(&out));

    let rows: String = (0..30).map(|i| format!("{i},{}\n", 2 * i)).collect();
    fs::write(dir.path().join("full.csv"), rows).unwrap();
    config.model.targets = "full.csv".into();
    let path = write_config(dir.path(), "full.toml", &config);
    assert!(flocknet(&["check", "--config", path.to_str().unwrap()]).status.code().is_some_and(|c| c < 2));
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = quick_config().to_toml().unwrap().replace("coupling = 5.0", "coupling = 5.0\ncoupling_typo = 1");
    let path = dir.path().join("typo.toml");
    fs::write(&path, text).unwrap();
    let out = flocknet(&["check", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("coupling_typo") && err.contains("line"), "{err}");
}

#[test]
fn blow_up_leaves_a_failure_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = quick_config();
    config.model.sigma = 10.0;
    config.stepper.t_end = 5.0;
    config.output.snapshot_times.clear();
    let path = write_config(dir.path(), "wild.toml", &config);
    let out_dir = dir.path().join("wild");
    let out = flocknet(&["simulate", "--config", path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("failures.json")).unwrap()).unwrap();
    assert!(manifest.to_string().contains("time"), "{manifest}");
}

#[test]
fn default_config_round_trips() {
    let out = flocknet(&["default-config"]);
    assert!(out.status.success());
    let parsed = RunConfig::parse(&stdout(&out)).unwrap();
    assert_eq!(parsed, pi_config());
}

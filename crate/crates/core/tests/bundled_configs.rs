use std::path::PathBuf;

use imitation_core::harness::{default_config, list_scenarios, ExperimentConfig, HarnessError};

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn one_bundled_config_per_scenario_matching_the_defaults() {
    for s in list_scenarios() {
        let path = configs_dir().join(format!("{}.json", s.name));
        let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(Some(cfg), default_config(s.name), "{} is out of date", path.display());
    }
    let count = std::fs::read_dir(configs_dir()).unwrap().count();
    assert_eq!(count, list_scenarios().len());
}

#[test]
fn unknown_scenario_param_is_rejected_with_its_path() {
    let mut cfg = default_config("boundary-extraction").unwrap();
    cfg.params = serde_json::json!({ "tolerance": 1e-9 });
    match imitation_core::harness::run_experiment(&cfg) {
        Err(HarnessError::Config { path, message }) => {
            assert!(path.starts_with("params"), "{path}");
            assert!(message.contains("tolerance"), "{message}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn scenario_params_override_defaults() {
    let mut cfg = default_config("equation-solving").unwrap();
    cfg.params = serde_json::json!({ "targets": 3, "p_max": 2 });
    let report = imitation_core::harness::run_experiment(&cfg).unwrap();
    assert!(report.passed);
    assert_eq!(report.attack_records.len(), 3);
}

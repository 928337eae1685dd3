use std::time::Instant;

use serde::Serialize;

use super::scenarios::{default_config, REGISTRY};
use super::{ExperimentConfig, ExperimentReport, HarnessError, ScenarioInfo, Timing, Versions};

/// Environment variable that overrides a config's seed (a `--seed` flag wins).
pub const SEED_ENV: &str = "IMITATION_SEED";
pub const REPORT_FORMAT: u32 = 1;

pub fn list_scenarios() -> &'static [ScenarioInfo] {
    REGISTRY
}

pub fn find_scenario(name: &str) -> Result<&'static ScenarioInfo, HarnessError> {
    REGISTRY.iter().find(|s| s.name == name).ok_or_else(|| HarnessError::UnknownScenario(name.into()))
}

/// Seed precedence: explicit flag, then [`SEED_ENV`], then the config.
pub fn apply_seed_override(cfg: &mut ExperimentConfig, flag: Option<u64>, env: Option<&str>) -> Result<(), HarnessError> {
    if let Some(seed) = flag {
        cfg.seed = seed;
    } else if let Some(text) = env {
        cfg.seed = text.trim().parse().map_err(|_| HarnessError::Config {
            path: SEED_ENV.into(),
            message: format!("not an unsigned integer: {text:?}"),
        })?;
    }
    Ok(())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let info = find_scenario(&cfg.scenario)?;
    log::info!("running {} (scenario {}, seed {})", cfg.experiment_id, cfg.scenario, cfg.seed);
    let start = Instant::now();
    let out = (info.run)(cfg)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    for a in &out.assertions {
        log::info!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
    Ok(ExperimentReport {
        experiment_id: cfg.experiment_id.clone(),
        scenario: cfg.scenario.clone(),
        config: cfg.clone(),
        config_sha256: cfg.hash(),
        versions: Versions { crate_version: env!("CARGO_PKG_VERSION").into(), report_format: REPORT_FORMAT },
        passed: out.assertions.iter().all(|a| a.passed),
        assertions: out.assertions,
        estimates: out.estimates,
        attack_records: out.attack_records,
        results: out.results,
        traces: out.traces,
        timing: Timing { wall_time_s },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayOutcome {
    pub config_hash_matches: bool,
    pub payload_identical: bool,
    /// First differing line of the two payloads.
    pub first_difference: Option<(usize, String, String)>,
}

impl ReplayOutcome {
    pub fn ok(&self) -> bool {
        self.config_hash_matches && self.payload_identical
    }
}

/// Reruns the echoed config and compares everything except timing.
pub fn replay(report: &ExperimentReport) -> Result<ReplayOutcome, HarnessError> {
    let actual = report.config.hash();
    if actual != report.config_sha256 {
        return Err(HarnessError::HashMismatch { expected: report.config_sha256.clone(), actual });
    }
    let fresh = run_experiment(&report.config)?;
    let (a, b) = (report.numeric_payload(), fresh.numeric_payload());
    let first_difference = a
        .lines()
        .zip(b.lines())
        .enumerate()
        .find(|(_, (x, y))| x != y)
        .map(|(i, (x, y))| (i + 1, x.to_string(), y.to_string()))
        .or_else(|| (a.lines().count() != b.lines().count()).then(|| (a.lines().count().min(b.lines().count()) + 1, String::new(), String::new())));
    Ok(ReplayOutcome { config_hash_matches: true, payload_identical: a == b, first_difference })
}

/// Runs every quick scenario with its bundled config.
pub fn selftest() -> Vec<(&'static str, Result<ExperimentReport, HarnessError>)> {
    REGISTRY
        .iter()
        .filter(|s| s.quick)
        .map(|s| (s.name, run_experiment(&default_config(s.name).expect("registered"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_precedence() {
        let mut c = default_config("trivial-imitation").unwrap();
        apply_seed_override(&mut c, Some(5), Some("7")).unwrap();
        assert_eq!(c.seed, 5);
        apply_seed_override(&mut c, None, Some(" 7 ")).unwrap();
        assert_eq!(c.seed, 7);
        apply_seed_override(&mut c, None, None).unwrap();
        assert_eq!(c.seed, 7);
        assert!(apply_seed_override(&mut c, None, Some("x")).is_err());
    }

    #[test]
    fn unknown_scenario() {
        let mut c = default_config("trivial-imitation").unwrap();
        c.scenario = "nope".into();
        assert!(matches!(run_experiment(&c), Err(HarnessError::UnknownScenario(s)) if s == "nope"));
    }

    #[test]
    fn registry_is_sorted_and_complete() {
        let names: Vec<&str> = REGISTRY.iter().map(|s| s.name).collect();
        let mut sorted = names.clone();
        sorted.sort_unstable();
        assert_eq!(names, sorted);
        assert_eq!(names.len(), 15);
        assert!(names.iter().all(|n| default_config(n).unwrap().validate().is_ok()));
    }

    #[test]
    fn trivial_run_replays_bit_for_bit() {
        let report = run_experiment(&default_config("trivial-imitation").unwrap()).unwrap();
        assert!(report.passed, "{:?}", report.assertions);
        let back = ExperimentReport::parse(&report.to_json()).unwrap();
        assert_eq!(back.numeric_payload(), report.numeric_payload());
        assert!(replay(&back).unwrap().ok());
    }

    #[test]
    fn edited_config_fails_hash_check() {
        let mut report = run_experiment(&default_config("trivial-imitation").unwrap()).unwrap();
        report.config.seed += 1;
        assert!(matches!(replay(&report), Err(HarnessError::HashMismatch { .. })));
    }
}

//! `imitation`: run, list, replay and self-test imitation-privacy experiments.
//!
//! Exit status is 0 when every assertion passed, 1 when a run completed
//! with a failed assertion and 2 on any error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use imitation_core::harness::{
    apply_seed_override, default_config, list_scenarios, replay, run_experiment, selftest, ExperimentConfig, ExperimentReport,
    REPORT_FILE, SEED_ENV,
};

#[derive(Debug, Parser)]
#[command(name = "imitation", version, about = "Imitation-privacy experiment runner")]
struct Cli {
    /// Override the config seed (takes precedence over IMITATION_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports and traces.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the Monte-Carlo loops (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment config and write its report.
    Run { config: PathBuf },
    /// List registered scenarios.
    List,
    /// Print the bundled default config of a scenario.
    Config { scenario: String },
    /// Rerun a report's config and compare every non-timing number.
    Replay { report: PathBuf },
    /// Run the quick scenarios with their default configs.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Passed,
    AssertionFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::AssertionFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> Result<Outcome> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Run { config } => run(cli, config),
        Command::List => {
            for s in list_scenarios() {
                let keys = if s.params.is_empty() { "none".to_string() } else { s.params.join(", ") };
                println!("{:<30} {} [params: {keys}]", s.name, s.description);
            }
            Ok(Outcome::Passed)
        }
        Command::Config { scenario } => {
            let cfg = default_config(scenario).with_context(|| format!("unknown scenario `{scenario}`"))?;
            println!("{}", cfg.canonical_json());
            Ok(Outcome::Passed)
        }
        Command::Replay { report } => replay_report(report),
        Command::Selftest => {
            let mut outcome = Outcome::Passed;
            for (name, result) in selftest() {
                let report = result.with_context(|| format!("scenario {name}"))?;
                println!("{} {name}", if report.passed { "PASS" } else { "FAIL" });
                if !report.passed {
                    outcome = Outcome::AssertionFailed;
                }
            }
            Ok(outcome)
        }
    }
}

fn run(cli: &Cli, path: &Path) -> Result<Outcome> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = ExperimentConfig::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    let env = std::env::var(SEED_ENV).ok();
    apply_seed_override(&mut cfg, cli.seed, env.as_deref())?;
    let report = run_experiment(&cfg)?;
    let dir = match (&cli.out, &cfg.output_dir) {
        (Some(out), _) => out.clone(),
        (None, Some(dir)) => PathBuf::from(dir),
        (None, None) => Path::new("runs").join(&cfg.experiment_id),
    };
    report.write(&dir).with_context(|| format!("writing {}", dir.display()))?;
    print_summary(&report);
    println!("report: {}", dir.join(REPORT_FILE).display());
    Ok(if report.passed { Outcome::Passed } else { Outcome::AssertionFailed })
}

fn print_summary(report: &ExperimentReport) {
    println!("{} ({}, seed {})", report.experiment_id, report.scenario, report.config.seed);
    for a in &report.assertions {
        println!("  {} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
    for e in &report.estimates {
        println!("  rho_hat[{}] = {:.6} (se {:.2e})", e.label, e.rho_hat, e.std_error);
    }
}

fn replay_report(path: &Path) -> Result<Outcome> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report = ExperimentReport::parse(&text)?;
    let outcome = replay(&report)?;
    if let Some((line, old, new)) = &outcome.first_difference {
        bail!("replay differs at line {line}:\n  recorded: {old}\n  replayed: {new}");
    }
    println!("replay identical: {} ({})", report.experiment_id, report.config_sha256);
    Ok(if report.passed { Outcome::Passed } else { Outcome::AssertionFailed })
}

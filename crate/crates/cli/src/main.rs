//! `contact-hj`: command-line harness for the contact Hamilton-Jacobi
//! laboratory.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure,
//! 4 failed acceptance checks (verify and example scenarios).

mod config;
mod emit;
mod scenarios;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ScenarioConfig, ScenarioKind};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn io(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }

    fn numerical(e: impl std::fmt::Display) -> Self {
        CliError::Numerical(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }
}

#[derive(Parser)]
#[command(name = "contact-hj", version, about = "Contact Hamilton-Jacobi laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a JSON config file.
    Run {
        config: PathBuf,
        /// Thread count for the parallel verification and field sweeps.
        #[arg(long)]
        jobs: Option<usize>,
        /// Output root (overrides CONTACT_HJ_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the module invariant suites.
    Verify {
        /// Smaller grids, heavy checks skipped.
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in worked example end to end.
    Example {
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Grid nodes (even, at least 16).
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("CONTACT_HJ_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn configure_jobs(jobs: Option<usize>) {
    if let Some(jobs) = jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }
}

fn load_config(path: &PathBuf) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let cfg: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("config parse error: {e}")))?;
    config::validate(&cfg).map_err(CliError::Validation)?;
    Ok(cfg)
}

fn execute(cfg: &ScenarioConfig, out: &PathBuf) -> Result<scenarios::Outcome, CliError> {
    let outcome = scenarios::run_scenario(cfg, out)?;
    if outcome.checks_failed > 0 {
        eprintln!(
            "{} of {} checks failed (scenario `{}`)",
            outcome.checks_failed, outcome.checks_total, cfg.scenario
        );
    } else if outcome.checks_total > 0 {
        println!(
            "all {} checks passed (scenario `{}`)",
            outcome.checks_total, cfg.scenario
        );
    }
    Ok(outcome)
}

fn write_error_json(out: &PathBuf, scenario: &str, err: &CliError) {
    let doc = serde_json::json!({
        "scenario": scenario,
        "error_kind": err.kind(),
        "message": err.message(),
    });
    let dir = out.join(scenario);
    if std::fs::create_dir_all(&dir).is_ok() {
        if let Ok(file) = std::fs::File::create(dir.join("error.json")) {
            let _ = serde_json::to_writer_pretty(file, &doc);
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, out) = match cli.command {
        Command::Run { config, jobs, out } => {
            configure_jobs(jobs);
            let out = out_root(out);
            match load_config(&config) {
                Ok(cfg) => (cfg, out),
                Err(e) => {
                    eprintln!("error ({}): {}", e.kind(), e.message());
                    return ExitCode::from(e.exit_code());
                }
            }
        }
        Command::Verify { quick, jobs, out } => {
            configure_jobs(jobs);
            let cfg = ScenarioConfig {
                scenario: if quick { "verify_quick" } else { "verify" }.to_string(),
                kind: ScenarioKind::Verify { quick },
                hamiltonian: contact_hj_core::model::HamiltonianSpec::example(),
                grid_n: 1000,
                semigroup: Default::default(),
                fd: Default::default(),
                ode: Default::default(),
            };
            (cfg, out_root(out))
        }
        Command::Example {
            epsilon,
            n,
            jobs,
            out,
        } => {
            configure_jobs(jobs);
            let cfg = ScenarioConfig {
                scenario: "example".to_string(),
                kind: ScenarioKind::Example { epsilon },
                hamiltonian: contact_hj_core::model::HamiltonianSpec::example(),
                grid_n: n,
                semigroup: Default::default(),
                fd: Default::default(),
                ode: Default::default(),
            };
            if let Err(msg) = config::validate(&cfg) {
                eprintln!("error (validation): {msg}");
                return ExitCode::from(2);
            }
            (cfg, out_root(out))
        }
    };

    match execute(&cfg, &out) {
        Ok(outcome) if outcome.checks_failed > 0 => ExitCode::from(4),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({}): {}", e.kind(), e.message());
            write_error_json(&out, &cfg.scenario, &e);
            ExitCode::from(e.exit_code())
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use splitstep::builtin::{builtin, describe, NAMES};
use splitstep::config::{read_config, EigenSpec, Scenario};
use splitstep::validate::{oracle_suite, ORACLE_TOLERANCE};
use splitstep_core::propagator::Order;
use splitstep_core::EigenOptions;

/// Pseudo-spectral split-operator Schrödinger simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or `builtin:NAME`.
    Run {
        target: String,
        /// Run directory (default: runs/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the propagator order.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=3))]
        order: Option<u32>,
        /// Override the number of evenly spaced snapshots.
        #[arg(long)]
        snapshots: Option<usize>,
    },
    /// Solve only the lowest levels of a scenario.
    Eigen {
        target: String,
        #[arg(long)]
        count: usize,
        /// Also write energies.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List builtin scenarios.
    List,
    /// Compare the eigensolver with the dense oracle on every small builtin.
    Validate,
}

const EXIT_SCENARIO: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn load(target: &str) -> Result<Scenario, String> {
    match target.strip_prefix("builtin:") {
        Some(name) => builtin(name).map_err(|e| e.to_string()),
        None => read_config(target.as_ref()).map_err(|e| format!("{target}: {e}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for name in NAMES {
                println!("{name:<14} {}", describe(name).unwrap_or_default());
            }
            ExitCode::SUCCESS
        }
        Command::Validate => match oracle_suite() {
            Ok(checks) => {
                let mut failed = 0;
                for c in &checks {
                    let verdict = if c.passed() { "ok" } else { "FAIL" };
                    if !c.passed() {
                        failed += 1;
                    }
                    println!(
                        "{verdict:<4} {:<12} E{} eigensolver {:>14.8} oracle {:>14.8} |diff| {:.2e}",
                        c.scenario,
                        c.level,
                        c.eigensolver,
                        c.oracle,
                        c.difference()
                    );
                }
                println!("{} checks, {failed} failed (tolerance {ORACLE_TOLERANCE:e})", checks.len());
                if failed == 0 {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_SCENARIO)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_SCENARIO)
            }
        },
        Command::Run {
            target,
            out,
            order,
            snapshots,
        } => {
            let mut s = match load(&target) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            if let Some(ev) = s.evolve.as_mut() {
                if let Some(o) = order.and_then(Order::from_number) {
                    ev.order = o;
                }
                if let Some(k) = snapshots {
                    ev.snapshots = k;
                }
            }
            let out = out.unwrap_or_else(|| PathBuf::from("runs").join(&s.name));
            finish(splitstep::run(&s, Some(&out)))
        }
        Command::Eigen { target, count, out } => {
            let mut s = match load(&target) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            if count == 0 {
                eprintln!("error: --count must be positive");
                return ExitCode::from(EXIT_CONFIG);
            }
            let mut spec = s.eigen.take().unwrap_or_else(|| {
                let d = EigenOptions::default();
                EigenSpec {
                    count,
                    tolerance: d.energy_tolerance,
                    max_steps: d.max_steps,
                    reorth_every: d.reorth_every,
                    order: d.order,
                    dtau_base: d.dtau_base,
                    residual_target: d.residual_target,
                    probe_alpha: None,
                }
            });
            spec.count = count;
            s.eigen = Some(spec);
            s.init = None;
            s.evolve = None;
            finish(splitstep::run(&s, out.as_deref()))
        }
    }
}

fn finish(result: Result<splitstep::RunReport, splitstep::RunError>) -> ExitCode {
    match result {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_SCENARIO)
        }
    }
}

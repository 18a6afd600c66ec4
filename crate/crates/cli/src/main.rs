use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lowstep_cli::commands;
use lowstep_cli::config::{ExperimentConfig, MethodName, ScheduleName};
use lowstep_cli::presets;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Picard,
    Sdc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Constant,
    Adaptive,
}

#[derive(Parser)]
#[command(
    name = "lowstep",
    about = "Rank-adaptive low-rank time integration experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file or a named preset.
    ///
    /// Exit codes: 0 converged, 1 invalid configuration, 2 flagged
    /// non-convergence.
    Run {
        /// Path to a TOML configuration file.
        config: Option<PathBuf>,
        /// Built-in preset name.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Override the fixed-point solver.
        #[arg(long)]
        method: Option<MethodArg>,
        /// Override the threshold schedule.
        #[arg(long)]
        schedule: Option<ScheduleArg>,
        /// Override the threshold decrease factor.
        #[arg(long)]
        theta: Option<f64>,
        /// Override the adaptive acceptance factor.
        #[arg(long)]
        c: Option<f64>,
        /// Override the iteration tolerance.
        #[arg(long)]
        eps: Option<f64>,
        /// Override the boundary recompression tolerance.
        #[arg(long)]
        delta_boundary: Option<f64>,
        /// Override the number of subintervals.
        #[arg(long)]
        intervals: Option<usize>,
        /// Enable or disable the dense reference.
        #[arg(long)]
        reference: Option<bool>,
        /// Output directory (the LOWSTEP_OUTDIR variable overrides this).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence-order study over nodes J and step sizes h.
    Convergence {
        #[arg(long = "J", value_delimiter = ',', default_value = "2,3")]
        j: Vec<usize>,
        #[arg(long = "h", value_delimiter = ',', default_value = "0.2,0.1,0.05,0.025")]
        h: Vec<f64>,
        #[arg(long = "K", default_value_t = 32)]
        k: usize,
        /// Common final time (defaults to the largest h).
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Seeded randomized property suites; nonzero exit on any failure.
    Properties {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            preset,
            method,
            schedule,
            theta,
            c,
            eps,
            delta_boundary,
            intervals,
            reference,
            out,
        } => {
            let mut experiment: ExperimentConfig = match (&config, &preset) {
                (Some(path), None) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
                    ExperimentConfig::from_toml(&text)?
                }
                (None, Some(name)) => presets::preset(name).ok_or_else(|| {
                    anyhow::anyhow!(
                        "unknown preset '{name}'; available: {}",
                        presets::PRESET_NAMES.join(", ")
                    )
                })?,
                _ => anyhow::bail!("provide a config file or --preset NAME"),
            };
            if let Some(m) = method {
                experiment.integrator.method = match m {
                    MethodArg::Picard => MethodName::Picard,
                    MethodArg::Sdc => MethodName::Sdc,
                };
            }
            if let Some(s) = schedule {
                experiment.integrator.schedule = match s {
                    ScheduleArg::Constant => ScheduleName::Constant,
                    ScheduleArg::Adaptive => ScheduleName::Adaptive,
                };
            }
            if let Some(v) = theta {
                experiment.integrator.theta = v;
            }
            if let Some(v) = c {
                experiment.integrator.c = v;
            }
            if let Some(v) = eps {
                experiment.integrator.eps = v;
            }
            if let Some(v) = delta_boundary {
                experiment.integrator.delta_boundary = v;
            }
            if let Some(v) = intervals {
                experiment.integrator.intervals = v;
            }
            if let Some(v) = reference {
                experiment.reference.enabled = v;
            }

            let artifacts = commands::cmd_run(&experiment, out.as_deref())?;
            let max_err = artifacts
                .metrics
                .errors
                .iter()
                .filter(|e| e.is_finite())
                .fold(0.0_f64, |a, &b| a.max(b));
            println!(
                "run finished: converged = {}, max error = {:e}, outputs in {}",
                artifacts.converged,
                max_err,
                artifacts.out_dir.display()
            );
            if !artifacts.reference_converged {
                eprintln!("warning: dense reference did not reach its tolerance");
            }
            Ok(if artifacts.converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Convergence {
            j,
            h,
            k,
            t_final,
            out,
        } => {
            let study = commands::cmd_convergence(&j, &h, k, t_final, &out)?;
            for (jj, slope) in &study.orders {
                println!("J = {jj}: fitted order {slope:.3}");
            }
            println!("outputs in {}", study.out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Properties { seed } => {
            let (checks, ok) = commands::cmd_properties(seed);
            for check in &checks {
                println!(
                    "{} {} - {}",
                    if check.passed { "PASS" } else { "FAIL" },
                    check.name,
                    check.detail
                );
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

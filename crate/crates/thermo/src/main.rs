//! `thermo`: sweep driver and reporting for the impurity-thermometry
//! toolkit.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use thermo::bath::DosSpec;
use thermo::cli::{self, TkChoice};

#[derive(Parser)]
#[command(name = "thermo", version, about = "Quantum-impurity thermometry toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (model, field) point of a declarative config.
    Sweep {
        /// TOML run configuration.
        config: PathBuf,
    },
    /// Rescale sweep curves to (T/T_K, Q T_K/B) and report the collapse
    /// deviation.
    Collapse {
        /// One or more sweep manifests.
        manifests: Vec<PathBuf>,
        /// Kondo-scale estimator: perturbative | entropy | magq.
        #[arg(long, default_value = "perturbative")]
        tk: String,
        /// Permit mixing DoS families.
        #[arg(long)]
        allow_mixed: bool,
        /// Output CSV path (defaults next to the first manifest).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Summarize a sweep: peaks, Kondo scales, quick checks.
    Report {
        manifest: PathBuf,
        /// Output JSON path (stdout when absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Emit a DoS and its Green's function on the default grid.
    Dos {
        /// flat | nanowire | gaussian | graphene | tbg | tabulated
        family: String,
        #[arg(long, default_value_t = 1.0)]
        halfwidth: f64,
        /// Table path for the tabulated family.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Write the sampled grid as CSV.
        #[arg(long)]
        emit_grid: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    // single-threaded BLAS: parallelism lives at the sweep-point level
    if std::env::var_os("OPENBLAS_NUM_THREADS").is_none() {
        std::env::set_var("OPENBLAS_NUM_THREADS", "1");
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, cli::CliError> {
    match cli.command {
        Command::Sweep { config } => {
            let outcome = cli::cmd_sweep(&config)?;
            println!(
                "sweep {}: {} curves, {} failures -> {}",
                outcome.manifest.config_hash,
                outcome.manifest.curves.len(),
                outcome.manifest.failures.len(),
                outcome.manifest_path.display()
            );
            for f in &outcome.manifest.failures {
                eprintln!("  B={:e}: {}", f.b, f.error);
            }
            if outcome.manifest.failures.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(3))
            }
        }
        Command::Collapse {
            manifests,
            tk,
            allow_mixed,
            output,
        } => {
            let choice: TkChoice = tk.parse().map_err(cli::CliError::Config)?;
            let outcome = cli::cmd_collapse(&manifests, choice, allow_mixed)?;
            let out = output.unwrap_or_else(|| {
                manifests[0]
                    .parent()
                    .unwrap_or(std::path::Path::new("."))
                    .join("collapse.csv")
            });
            cli::cache::atomic_write(&out, &outcome.csv)?;
            for (dos, tk) in &outcome.tk_values {
                println!("T_K[{dos}] = {tk:e}");
            }
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "collapse deviation {:.4} -> {}",
                outcome.max_deviation,
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { manifest, output } => {
            let report = cli::cmd_report(&manifest)?;
            let payload = serde_json::to_string_pretty(&report)
                .map_err(|e| cli::CliError::Io(e.to_string()))?;
            match output {
                Some(path) => cli::cache::atomic_write(&path, &payload)?,
                None => println!("{payload}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Dos {
            family,
            halfwidth,
            table,
            emit_grid,
        } => {
            let spec = match family.as_str() {
                "tabulated" => {
                    let path = table
                        .ok_or_else(|| cli::CliError::Config("tabulated needs --table".into()))?;
                    DosSpec::tabulated_from_path(&path, halfwidth)?
                }
                "flat" => DosSpec::flat(halfwidth),
                "nanowire" => DosSpec::nanowire(halfwidth),
                "gaussian" => DosSpec::gaussian(halfwidth),
                "graphene" => DosSpec::graphene(halfwidth),
                "tbg" => DosSpec::tbg(halfwidth),
                other => {
                    return Err(cli::CliError::Config(format!("unknown family '{other}'")))
                }
            };
            println!(
                "{}: rho0 = {:.6}, normalization = {:.9}",
                spec.identifier(),
                spec.rho0(),
                spec.normalization_integral()
            );
            if let Some(path) = emit_grid {
                let csv = cli::cmd_dos_grid(&spec)?;
                cli::cache::atomic_write(&path, &csv)?;
                println!("grid -> {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dgsem::signal::FilterMode;
use dgsem_cli::{compare, default_workers, run, CliError, RunConfig, RunOptions};

#[derive(Parser, Debug)]
#[command(
    name = "dgsem",
    version,
    about = "Coupled elastic/acoustic DG spectral-element wave solver"
)]
struct Cli {
    /// Worker threads for operator application (default: all available).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write energy.csv with the energy after every step.
    #[arg(long, global = true)]
    energy_trace: bool,
    /// Forward-backward (zero-phase) band-pass filtering in `compare`.
    #[arg(long, global = true)]
    zero_phase: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the simulation described by a config file.
    Run { config: PathBuf },
    /// Score synthetic against recorded receiver CSVs.
    Compare {
        syn_dir: PathBuf,
        rec_dir: PathBuf,
        #[arg(long, num_args = 2, value_names = ["F_LO", "F_HI"], default_values_t = [0.1, 1.0])]
        band: Vec<f64>,
        /// Output CSV (default: <syn_dir>/gof.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::load(&config)?;
            let opts = RunOptions {
                workers: cli.workers.unwrap_or_else(default_workers).max(1),
                energy_trace: cli.energy_trace,
            };
            let report = run(&cfg, opts)?;
            println!(
                "wrote {} ({} elastic, {} acoustic dofs; dt_max estimate {:e})",
                report.output_dir.display(),
                report.elastic_dofs,
                report.acoustic_dofs,
                report.dt_max
            );
        }
        Command::Compare {
            syn_dir,
            rec_dir,
            band,
            out,
        } => {
            let mode = if cli.zero_phase {
                FilterMode::ZeroPhase
            } else {
                FilterMode::Causal
            };
            let outcome = compare(&syn_dir, &rec_dir, (band[0], band[1]), mode)?;
            let out = out.unwrap_or_else(|| syn_dir.join("gof.csv"));
            std::fs::write(&out, &outcome.csv).map_err(|source| CliError::Io {
                path: out.display().to_string(),
                source,
            })?;
            for (side, id) in &outcome.unmatched {
                eprintln!("unmatched {side} station: {id}");
            }
            for (id, mean) in &outcome.station_means {
                println!("{id} {mean:.3}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

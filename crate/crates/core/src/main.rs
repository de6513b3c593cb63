use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hyperroute::cli::{self, CliError, OptimizeArgs};
use hyperroute::geometry::G;

/// Evolve low-cost, comfortable transport alignments over terrain.
#[derive(Parser)]
#[command(name = "hyperroute", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an Esri ASCII grid and print its summary.
    ValidateDem { path: PathBuf },
    /// Run the genetic algorithm and write all artifacts.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `ga.rng_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for fitness evaluation.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Score a single genome file without evolving.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        genome: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert between design speed and minimum curve radius.
    Speed {
        /// Speed in m/s.
        #[arg(long, conflicts_with = "radius")]
        speed: Option<f64>,
        /// Radius in m.
        #[arg(long)]
        radius: Option<f64>,
        /// Maximum lateral acceleration in m/s².
        #[arg(long, default_value_t = 0.5 * G)]
        a_lat: f64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ValidateDem { path } => print!("{}", cli::validate_dem(&path)?),
        Command::Optimize {
            config,
            seed,
            out,
            workers,
        } => {
            let (dir, result) = cli::optimize(&OptimizeArgs {
                config,
                seed,
                out,
                workers,
            })?;
            let b = &result.evaluation.breakdown;
            let m = &result.evaluation.metrics;
            println!(
                "best total ${:.4e} (penalty ${:.3e}), length {:.0} m, tunnel {:.0} m, min radius {:.0} m",
                b.total, b.penalty_cost, m.total_length, m.tunnel_length, m.min_radius
            );
            println!("artifacts written to {}", dir.display());
        }
        Command::Evaluate {
            config,
            genome,
            out,
        } => {
            let (dir, report) = cli::evaluate(&config, &genome, out.as_deref())?;
            println!(
                "total ${:.4e} (penalty ${:.3e}); report in {}",
                report.breakdown.total,
                report.breakdown.penalty_cost,
                dir.display()
            );
        }
        Command::Speed {
            speed,
            radius,
            a_lat,
        } => print!("{}", cli::speed(speed, radius, a_lat)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crowgate::experiments::{self, catalogue, params_estimate, DeviceParams, ExitStatus, RunOptions};

#[derive(Parser)]
#[command(name = "crowgate", version, about = "Coupled-cavity waveguide gate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured experiment and write report.json, CSV and SVG files.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        allow_nonperturbative: bool,
    },
    /// Feasibility estimate in SI units, printed as JSON.
    Estimate(EstimateArgs),
    /// List experiments with their CSV column schemas.
    ListExperiments,
}

#[derive(Args)]
struct EstimateArgs {
    /// Cavity quality factor.
    #[arg(long)]
    q: f64,
    /// Photon angular frequency in rad/s.
    #[arg(long, required_unless_present = "wavelength")]
    omega: Option<f64>,
    /// Wavelength in metres, instead of --omega.
    #[arg(long, conflicts_with = "omega")]
    wavelength: Option<f64>,
    /// Dopant-photon coupling in rad/s.
    #[arg(long)]
    g: f64,
    /// Dopants per cavity.
    #[arg(long)]
    n: f64,
    /// Dispersive detuning in rad/s.
    #[arg(long)]
    delta: f64,
    /// Group velocity as a fraction of c.
    #[arg(long, default_value_t = 1e-4)]
    v_g: f64,
    /// Device length in lattice constants.
    #[arg(long, default_value_t = 30.0)]
    length: f64,
    /// Lattice constant in metres.
    #[arg(long, default_value_t = 0.5e-6)]
    lattice_constant: f64,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let status = match cli.command {
        Command::Run { config, out, threads, allow_nonperturbative } => {
            let opts = RunOptions { threads, allow_nonperturbative };
            match experiments::run_experiment_file(&config, out.as_deref(), &opts) {
                Ok(outcome) => {
                    for check in outcome.report["checks"].as_array().into_iter().flatten() {
                        let pass = check["pass"].as_bool().unwrap_or(false);
                        eprintln!(
                            "{} {}: {} (limit {})",
                            if pass { "PASS" } else { "FAIL" },
                            check["name"].as_str().unwrap_or(""),
                            check["value"],
                            check["limit"]
                        );
                    }
                    println!("{}", outcome.files.join("\n"));
                    outcome.status
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitStatus::for_error(&e)
                }
            }
        }
        Command::Estimate(a) => {
            let device = DeviceParams {
                q: a.q,
                omega: a.omega.unwrap_or_else(|| DeviceParams::omega_from_wavelength(a.wavelength.unwrap_or(f64::NAN))),
                g: a.g,
                n: a.n,
                delta: a.delta,
                v_g: a.v_g,
                length: a.length,
                lattice_constant: a.lattice_constant,
            };
            match params_estimate(&device) {
                Ok(report) => {
                    println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
                    ExitStatus::Success
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitStatus::ConfigError
                }
            }
        }
        Command::ListExperiments => {
            for info in catalogue() {
                println!("{}\n    {}", info.name, info.summary);
                for (file, columns) in info.csv {
                    println!("    {file}: {columns}");
                }
            }
            ExitStatus::Success
        }
    };
    ExitCode::from(status.code() as u8)
}

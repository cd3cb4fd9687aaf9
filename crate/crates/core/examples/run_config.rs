//! Run a config file the way the CLI does.
//!
//! `cargo run --example run_config -- configs/cz_truth_table.toml out/`

use std::path::PathBuf;

use crowgate::experiments::{run_experiment_file, RunOptions};

fn main() -> crowgate::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(args.next().unwrap_or_else(|| "configs/two_photon_rabi.toml".into()));
    let out = args.next().map(PathBuf::from);
    let outcome = run_experiment_file(&config, out.as_deref(), &RunOptions::default())?;
    println!("{}", serde_json::to_string_pretty(&outcome.report["results"]).unwrap_or_default());
    println!("status {:?}, wrote {}", outcome.status, outcome.files.join(", "));
    Ok(())
}

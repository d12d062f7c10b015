use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dglm::checkpoint::{load_belief, save_belief};
use dglm::config::load_config;
use dglm::dglm_core::sim::{run_simulation, SimConfig};
use dglm::dglm_core::Belief;
use dglm::harness::aggregate_runs;
use dglm::offline::{parse_dynamics, parse_model, read_observations, run_filter, write_filter_output};
use dglm::tables::{emit_csv, metrics_path};
use dglm::{Error, Result};

#[derive(Parser)]
#[command(name = "dglm", version, about = "Dynamic GLM filtering and Thompson-sampling simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write `<out>.rounds.csv` and `<out>.metrics.csv`.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run all repetitions in parallel and write `<out>.metrics.csv`.
    Aggregate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Filter a CSV observation stream.
    Filter {
        /// e.g. `poisson`, `gaussian:0.5`, `bernoulli_logit+gaussian`.
        #[arg(long)]
        model: String,
        /// `static` or `random_walk:<variance>`.
        #[arg(long, default_value = "static")]
        dynamics: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Prior variance of the isotropic starting belief.
        #[arg(long, default_value_t = 1.0)]
        prior_var: f64,
        /// Save the final belief here.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Start from a saved belief instead of the isotropic prior.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
}

fn sim_config(path: Option<PathBuf>, seed: Option<u64>) -> Result<SimConfig> {
    let mut config = match path {
        Some(p) => load_config(&p)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let config = sim_config(config, seed)?;
            let run = run_simulation(&config)?;
            emit_csv(&run.series, &run.records, &out)
        }
        Command::Aggregate { config, seed, out } => {
            let config = sim_config(config, seed)?;
            let series = aggregate_runs(&config)?;
            dglm::tables::write_metrics(&series, &metrics_path(&out))
        }
        Command::Filter {
            model,
            dynamics,
            data,
            out,
            prior_var,
            checkpoint,
            resume,
        } => {
            let model = parse_model(&model)?;
            let stream = read_observations(&data, &model)?;
            let k = stream.param_dim;
            let start = match resume {
                Some(p) => load_belief(&p)?,
                None => Belief::isotropic(k, prior_var)?,
            };
            if start.dim() != k {
                return Err(Error::Checkpoint(format!(
                    "belief has dimension {}, data has {k} predictors",
                    start.dim()
                )));
            }
            let dynamics = parse_dynamics(&dynamics, k)?;
            let steps = run_filter(start.clone(), &dynamics, &model, &stream)?;
            write_filter_output(&steps, k, &out)?;
            if let Some(p) = checkpoint {
                let last = steps.last().map_or(&start, |s| &s.belief);
                save_belief(last, &p)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

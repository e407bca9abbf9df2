use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commitment_lab::harness::{self, Checkpoint, ExperimentConfig, Probe};
use commitment_lab::oracle::{self, EquilibriumReport};
use commitment_lab::{envs, Result};

#[derive(Parser)]
#[command(name = "commitlab", version, about = "Commitment games and differentiable commitment learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of an experiment config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Added to every configured seed.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
    },
    /// Play a checkpoint's frozen policies.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum)]
        probe: Option<Probe>,
    },
    /// Exhaustive equilibrium check of the cooperative and defection tuples.
    VerifyEquilibrium {
        #[arg(long, value_enum, default_value = "pd")]
        env: EquilibriumEnv,
        #[arg(long, value_enum, default_value = "all")]
        tuple: TupleChoice,
    },
    /// Charts of per-agent return and welfare, mean and standard error over files.
    Plot {
        /// Glob of metrics files.
        #[arg(long)]
        metrics: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EquilibriumEnv {
    Pd,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum TupleChoice {
    Starred,
    MutualDefect,
    All,
}

fn print_report(name: &str, r: &EquilibriumReport) {
    println!("[{name}]");
    println!("value = {:?}", r.value);
    println!("is_nash = {}", r.is_nash);
    println!("is_pareto_optimal = {}", r.is_pareto_optimal);
    let scanned: Vec<usize> = (0..r.value.len()).map(|i| r.scanned(i)).collect();
    println!("deviations_scanned = {scanned:?}");
    if let Some(d) = r.best_deviation() {
        println!("best_deviation = {{ agent = {}, gain = {} }}", d.agent, d.gain);
    }
    if let Some(v) = &r.dominated_by {
        println!("dominated_by = {v:?}");
    }
    println!();
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, seed_offset } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = harness::run(&cfg, seed_offset)?;
            for s in &out.seeds {
                if let Some(last) = &s.last {
                    println!(
                        "seed {}: welfare {:.4} agreement {:.4} -> {}",
                        s.seed,
                        last.welfare,
                        last.agreement_rate,
                        s.metrics.display()
                    );
                }
            }
            println!("aggregate -> {}", out.aggregate.display());
        }
        Command::Eval { checkpoint, episodes, seed, probe } => {
            let ckpt = Checkpoint::load(&checkpoint)?;
            let spec = ckpt.env.build()?;
            let report = harness::evaluate(&ckpt, &spec, episodes, seed, probe)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::VerifyEquilibrium { env: EquilibriumEnv::Pd, tuple } => {
            let spec = envs::prisoners_dilemma();
            if tuple != TupleChoice::MutualDefect {
                for dd in [false, true] {
                    let r = oracle::verify_equilibrium(&spec, &oracle::cooperative_tuple(&spec, dd)?)?;
                    print_report(&format!("starred, commit on (D,D) = {dd}"), &r);
                }
            }
            if tuple != TupleChoice::Starred {
                let r = oracle::verify_equilibrium(&spec, &oracle::mutual_defection_tuple(&spec)?)?;
                print_report("mutual-defect", &r);
            }
        }
        Command::Plot { metrics, out } => {
            let files = harness::plot::expand(&metrics)?;
            for p in harness::plot(&files, &out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

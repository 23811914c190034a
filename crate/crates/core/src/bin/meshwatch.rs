use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use meshwatch::expctl::{
    emit_summary_csv, emit_verdict_csv, plotdata, read_summary_csv, run_scenario, sweep,
    write_plotdata, ExpError, ScenarioConfig, Strategy,
};

#[derive(Parser)]
#[command(
    name = "meshwatch",
    version,
    about = "Selfish-node detection experiments on a simulated AODV mesh"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and report detection metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long = "drop-prob")]
        drop_prob: Option<f64>,
        /// Write the per-tick verdict CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep drop probabilities over several seeds and strategies.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "drop-probs", value_delimiter = ',', required = true)]
        drop_probs: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, value_delimiter = ',', default_value = "dropreq,droprep")]
        strategies: Vec<Strategy>,
        /// Summary CSV destination.
        #[arg(long, default_value = "summary.csv")]
        out: PathBuf,
    },
    /// Turn a summary CSV into one x/y/yerr file per strategy and metric.
    Plotdata {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        outdir: PathBuf,
    },
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

fn run(cli: Cli) -> Result<(), ExpError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            strategy,
            drop_prob,
            out,
        } => {
            let mut cfg = ScenarioConfig::from_file(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(strategy) = strategy {
                cfg.strategy = strategy;
            }
            if let Some(p) = drop_prob {
                cfg.drop_probability = p;
            }
            let metrics = run_scenario(&cfg)?;
            println!(
                "seed={} strategy={} drop_prob={} detection_rate={:.4} false_positive_rate={:.4}",
                cfg.seed,
                cfg.strategy,
                cfg.drop_probability,
                metrics.detection_rate,
                metrics.false_positive_rate
            );
            if let Some(path) = out {
                emit_verdict_csv(&metrics, &path)?;
                println!("verdicts written to {}", path.display());
            }
        }
        Command::Sweep {
            config,
            drop_probs,
            runs,
            strategies,
            out,
        } => {
            let cfg = ScenarioConfig::from_file(&config)?;
            let rows = sweep(&cfg, &strategies, &drop_probs, runs)?;
            for r in &rows {
                println!(
                    "{:8} p={:<4} DR={:.3}±{:.3} FPR={:.3}±{:.3}",
                    r.strategy.as_str(),
                    r.drop_prob,
                    r.detection_rate_mean,
                    r.detection_rate_se,
                    r.fpr_mean,
                    r.fpr_se
                );
            }
            emit_summary_csv(&rows, &out)?;
            println!("summary written to {}", out.display());
        }
        Command::Plotdata { input, outdir } => {
            let rows = read_summary_csv(&input)?;
            if rows.is_empty() {
                return Err(ExpError::Parse("summary is empty".into()));
            }
            for path in write_plotdata(&plotdata(&rows), &outdir)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

//! Experiment controller: scenario configuration, single runs, multi-seed
//! sweeps and CSV/plot-data emission.

mod config;
mod network;
mod output;

use rayon::prelude::*;
use thiserror::Error;

use crate::sim::{NodeId, SimError};

pub use config::{ConfigError, ScenarioConfig, Strategy};
pub use network::Simulation;
pub use output::{
    emit_summary_csv, emit_verdict_csv, format_sig6, parse_summary, plotdata, read_summary_csv,
    write_plotdata, write_summary, write_verdicts, Metric, Series, SUMMARY_HEADER, VERDICT_HEADER,
};

#[derive(Debug, Error)]
pub enum ExpError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed input: {0}")]
    Parse(String),
}

/// Global classification of one node at one detection tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickVerdict {
    pub seed: u64,
    pub tick_time_s: f64,
    pub node: NodeId,
    pub true_selfish: bool,
    pub global_selfish: bool,
    pub n_monitors: usize,
    pub n_selfish_votes: usize,
    pub total_evidence: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub seed: u64,
    pub detection_rate: f64,
    pub false_positive_rate: f64,
    pub per_tick_verdicts: Vec<TickVerdict>,
}

/// Builds the scenario described by `config` and runs it to completion.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunMetrics, ExpError> {
    Ok(Simulation::new(config)?.run())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub strategy: Strategy,
    pub drop_prob: f64,
    pub runs: usize,
    pub detection_rate_mean: f64,
    pub detection_rate_se: f64,
    pub fpr_mean: f64,
    pub fpr_se: f64,
}

/// Mean and standard error of the mean; the error is 0 for one sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs `n_runs` seeds (`base.seed + i`) for every strategy and drop
/// probability. Runs execute in parallel; rows follow the input order.
pub fn sweep(
    base: &ScenarioConfig,
    strategies: &[Strategy],
    drop_probs: &[f64],
    n_runs: usize,
) -> Result<Vec<SummaryRow>, ExpError> {
    if n_runs == 0 {
        return Err(ConfigError::Invalid("n_runs must be at least 1".into()).into());
    }
    let cells: Vec<(Strategy, f64)> = strategies
        .iter()
        .flat_map(|&s| drop_probs.iter().map(move |&p| (s, p)))
        .collect();
    let jobs: Vec<(usize, ScenarioConfig)> = cells
        .iter()
        .enumerate()
        .flat_map(|(cell, &(strategy, p))| {
            (0..n_runs).map(move |i| {
                let mut cfg = base.clone();
                cfg.strategy = strategy;
                cfg.drop_probability = p;
                cfg.seed = base.seed.wrapping_add(i as u64);
                (cell, cfg)
            })
        })
        .collect();
    let results: Vec<(usize, RunMetrics)> = jobs
        .par_iter()
        .map(|(cell, cfg)| run_scenario(cfg).map(|m| (*cell, m)))
        .collect::<Result<_, _>>()?;

    Ok(cells
        .iter()
        .enumerate()
        .map(|(cell, &(strategy, drop_prob))| {
            let mine: Vec<&RunMetrics> = results
                .iter()
                .filter(|(c, _)| *c == cell)
                .map(|(_, m)| m)
                .collect();
            let dr: Vec<f64> = mine.iter().map(|m| m.detection_rate).collect();
            let fpr: Vec<f64> = mine.iter().map(|m| m.false_positive_rate).collect();
            let (dr_mean, dr_se) = mean_se(&dr);
            let (fpr_mean, fpr_se) = mean_se(&fpr);
            SummaryRow {
                strategy,
                drop_prob,
                runs: mine.len(),
                detection_rate_mean: dr_mean,
                detection_rate_se: dr_se,
                fpr_mean,
                fpr_se,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_se_basics() {
        assert_eq!(mean_se(&[0.25]), (0.25, 0.0));
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (1.666_666_666_666_666_7f64 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_sweep_is_empty() {
        let rows = sweep(&ScenarioConfig::default(), &[Strategy::DropReq], &[], 3).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn zero_runs_is_rejected() {
        assert!(sweep(&ScenarioConfig::default(), &[Strategy::DropReq], &[1.0], 0).is_err());
    }
}

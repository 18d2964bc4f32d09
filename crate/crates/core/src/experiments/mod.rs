//! Monte Carlo harness behind the `critfield` binary.
//!
//! Every experiment validates its [`ExperimentConfig`] before computing,
//! runs replicas in parallel on the current rayon pool, and reduces the
//! per-replica numbers in replica-index order, so rows are bit-identical for
//! any thread count.

mod config;
mod convergence;
mod malliavin;
mod results;
mod sigma;
mod tails;

use std::path::Path;

use rayon::prelude::*;

pub use config::{ExperimentConfig, ExperimentKind, GridSpec, ReactionSpec};
pub use convergence::{run_convergence, run_corollary};
pub use malliavin::run_malliavin;
pub use results::{mean_and_stderr, write_outputs, Check, Meta, Outcome, ResultRow, Status};
pub use sigma::run_sigma_limit;
pub use tails::run_tails;

use crate::error::{Error, Result};
use crate::noise::GENERATOR;

pub const CODE_VERSION: &str = concat!("critfield ", env!("CARGO_PKG_VERSION"));

/// Runs the experiment named in `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.kind()? {
        ExperimentKind::Convergence => run_convergence(cfg),
        ExperimentKind::Corollary => run_corollary(cfg),
        ExperimentKind::Tails => run_tails(cfg),
        ExperimentKind::Malliavin => run_malliavin(cfg),
        ExperimentKind::SigmaLimit => run_sigma_limit(cfg),
    }
}

/// Writes `results.csv`, `meta.json` and extra files for a finished run.
pub fn save(dir: &Path, cfg: &ExperimentConfig, outcome: &Outcome) -> Result<()> {
    let kind = cfg.kind()?;
    let meta = Meta {
        experiment: kind.name(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        generator: GENERATOR,
        code_version: CODE_VERSION.to_string(),
        exit_code: outcome.exit_code(),
        warnings: &outcome.warnings,
        checks: &outcome.checks,
    };
    write_outputs(dir, outcome, &meta)
}

/// Process exit code for an error: 2 for configuration problems, 3 for numerical faults.
pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::BlowUp { .. } | Error::SigmaOutOfRange { .. } | Error::NonFiniteIntegrand { .. } => 3,
        _ => 2,
    }
}

/// Per-replica metrics, with blown-up replicas counted instead of failing the run.
struct Gathered {
    metrics: Vec<Vec<f64>>,
    blowups: usize,
}

impl Gathered {
    fn column(&self, k: usize) -> Vec<f64> {
        self.metrics.iter().map(|m| m[k]).collect()
    }
}

fn par_replicas(count: usize, f: impl Fn(u64) -> Result<Vec<f64>> + Sync + Send) -> Result<Gathered> {
    let results: Vec<Result<Vec<f64>>> = (0..count as u64).into_par_iter().map(&f).collect();
    let mut gathered = Gathered { metrics: Vec::with_capacity(count), blowups: 0 };
    for r in results {
        match r {
            Ok(m) => gathered.metrics.push(m),
            Err(Error::BlowUp { time, index }) => {
                log::warn!("replica blew up at t = {time} (index {index})");
                gathered.blowups += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(gathered)
}

/// Every consecutive pair must drop by more than two joint standard errors;
/// returns the smallest drop in units of its joint standard error.
fn strict_decrease(stats: &[(f64, f64)]) -> f64 {
    stats
        .windows(2)
        .map(|w| (w[0].0 - w[1].0) / (w[0].1 * w[0].1 + w[1].1 * w[1].1).sqrt())
        .fold(f64::INFINITY, f64::min)
}

/// Least-squares slope of `log value` against `log log ε⁻¹`.
fn log_log_slope(eps: &[f64], values: &[f64]) -> f64 {
    let xs: Vec<f64> = eps.iter().map(|e| (-e.ln()).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

//! Empirical tails of `u_ε(t, x)` against the sub-Gaussian concentration bound.

use std::time::Instant;

use super::config::ExperimentConfig;
use super::par_replicas;
use super::results::{mean_and_stderr, Outcome, ResultRow, Status};
use crate::error::Result;
use crate::noise::{mollify, sample_white_noise};
use crate::spde::evolve;

/// Multiples `k` in `θ = k/√(t + ε²)`.
const LEVELS: [f64; 3] = [1.0, 2.0, 3.0];

/// `2·exp(−θ²(t+ε²)/(2e^{2|m|t + 6L₁}))`.
pub fn tail_bound(theta: f64, t: f64, eps: f64, mass: f64, l1: f64) -> f64 {
    let s = t + eps * eps;
    2.0 * (-theta * theta * s / (2.0 * (2.0 * mass.abs() * t + 6.0 * l1).exp())).exp()
}

/// One sample `u_ε(T, x₀)` per replica; rows `tails-k1..3` hold the
/// exceedance frequency with its binomial standard error.
pub fn run_tails(cfg: &ExperimentConfig) -> Result<Outcome> {
    let warnings = cfg.validate()?;
    let reaction = cfg.reaction.build()?;
    let l1 = reaction.constants().l1;
    let grid = cfg.torus()?;
    let replicas = cfg.replicas();
    let t = cfg.horizon;
    let mut out = Outcome { warnings, ..Default::default() };
    for &eps in &cfg.epsilons {
        let started = Instant::now();
        log::info!("tails: eps = {eps}, {replicas} replicas");
        let solver = cfg.solver(reaction.clone(), eps)?;
        let g = par_replicas(replicas, |r| {
            let noise = sample_white_noise(&grid, cfg.seed, r);
            let u = evolve(&mollify(&noise, eps)?, &solver)?;
            Ok(vec![u.u.values()[0]])
        })?;
        let samples = g.column(0);
        let n = samples.len() as f64;
        let wall_ms = started.elapsed().as_millis();
        let scale = (t + eps * eps).sqrt();
        for (i, k) in LEVELS.iter().enumerate() {
            let theta = k / scale;
            let p = samples.iter().filter(|u| u.abs() >= theta).count() as f64 / n;
            let se = (p * (1.0 - p) / n).sqrt();
            let bound = tail_bound(theta, t, eps, cfg.m, l1);
            let passed = p <= bound + 3.0 * se;
            let label = format!("tails-k{}", i + 1);
            out.rows.push(ResultRow {
                experiment: label.clone(),
                epsilon: Some(eps),
                horizon: t,
                value: p,
                stderr: se,
                replicas: samples.len(),
                wall_ms,
                status: if g.blowups > 0 { Status::Blowup } else { Status::gate(passed) },
            });
            out.check(
                format!("{label} eps={eps}"),
                passed,
                format!("P(|u| >= {theta:.4}) = {p} (se {se:.4}) vs bound {bound:.6}"),
            );
        }
        // (t+ε²)·E[u²] should stay bounded in ε
        let scaled: Vec<f64> = samples.iter().map(|u| u * u * scale * scale).collect();
        let (value, stderr) = mean_and_stderr(&scaled);
        out.rows.push(ResultRow {
            experiment: "tails-moment".into(),
            epsilon: Some(eps),
            horizon: t,
            value,
            stderr,
            replicas: samples.len(),
            wall_ms,
            status: Status::Info,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_values() {
        assert_eq!(tail_bound(0.0, 0.25, 0.1, 0.0, 0.0), 2.0);
        let s: f64 = 0.26;
        let theta = 1.0 / s.sqrt();
        assert!((tail_bound(theta, 0.25, 0.1, 0.0, 0.0) - 2.0 * (-0.5f64).exp()).abs() < 1e-15);
        assert!(tail_bound(theta, 0.25, 0.1, 1.0, 0.0) > tail_bound(theta, 0.25, 0.1, 0.0, 0.0));
    }
}

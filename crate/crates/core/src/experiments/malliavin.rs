//! Pointwise Malliavin bound `0 ≤ D_z u ≤ e^{3L₁+mt}G_{t+ε²}(· − z)` and
//! the one-cell Gateaux oracle.

use std::time::Instant;

use rand::Rng;

use super::config::ExperimentConfig;
use super::par_replicas;
use super::results::{Outcome, ResultRow, Status};
use crate::error::Result;
use crate::grid::TorusGrid;
use crate::noise::{mollify, replica_rng, sample_white_noise};
use crate::spde::{evolve_malliavin, gateaux_check, malliavin_bound_check, BoundTolerance};

/// Stream index reserved for probe placement (replicas use `0..R`).
const PROBE_STREAM: u64 = u64::MAX;
pub const GATEAUX_TOLERANCE: f64 = 1e-2;

/// `count` points spread over the torus, away from each other.
pub fn spread_points(grid: &TorusGrid, count: usize) -> Vec<usize> {
    let n = grid.points_per_side();
    (0..count)
        .map(|k| {
            let ix = n * (2 * k + 1) / (2 * count);
            let iy = n * (k + 1) / (count + 1);
            grid.index(ix, iy)
        })
        .collect()
}

/// Random grid points within `radius` of `center` (torus distance).
fn probes_near(grid: &TorusGrid, center: usize, radius: f64, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = replica_rng(seed, PROBE_STREAM);
    let n = grid.points_per_side() as i64;
    let reach = ((radius / grid.spacing()).floor() as i64).clamp(1, n / 2);
    let (cx, cy) = grid.coords(center);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let dx = rng.random_range(-reach..=reach);
        let dy = rng.random_range(-reach..=reach);
        if dx * dx + dy * dy > reach * reach {
            continue;
        }
        let ix = (cx as i64 + dx).rem_euclid(n) as usize;
        let iy = (cy as i64 + dy).rem_euclid(n) as usize;
        out.push(grid.index(ix, iy));
    }
    out
}

/// Runs `evolve_malliavin` on `R` replicas (default 8) with `z_points`
/// companions, checks every coarse-mesh snapshot against the bound, and runs
/// the Gateaux oracle on replica 0.
pub fn run_malliavin(cfg: &ExperimentConfig) -> Result<Outcome> {
    let warnings = cfg.validate()?;
    let reaction = cfg.reaction.build()?;
    let grid = cfg.torus()?;
    let replicas = cfg.replicas();
    let zs = spread_points(&grid, cfg.z_points);
    let tol = BoundTolerance::default();
    let mut out = Outcome { warnings, ..Default::default() };
    for &eps in &cfg.epsilons {
        let started = Instant::now();
        log::info!("malliavin: eps = {eps}, {replicas} replicas x {} z-points", zs.len());
        let solver = cfg.solver(reaction.clone(), eps)?;
        let g = par_replicas(replicas, |r| {
            let noise = sample_white_noise(&grid, cfg.seed, r);
            let run = evolve_malliavin(&mollify(&noise, eps)?, &zs, &solver)?;
            let mut ratio: f64 = 0.0;
            let mut min_rel = f64::INFINITY;
            let mut tail = f64::NEG_INFINITY;
            for snap in &run.snapshots {
                let report = malliavin_bound_check(&snap.d, snap.t, snap.z, &solver, tol)?;
                ratio = ratio.max(report.max_ratio);
                min_rel = min_rel.min(report.min_d / report.max_d);
                tail = tail.max(report.tail_excess);
            }
            Ok(vec![ratio, min_rel, tail])
        })?;
        let wall_ms = started.elapsed().as_millis();
        let blown = g.blowups > 0;
        let ratio = g.column(0).into_iter().fold(0.0, f64::max);
        let min_rel = g.column(1).into_iter().fold(f64::INFINITY, f64::min);
        let tail = g.column(2).into_iter().fold(f64::NEG_INFINITY, f64::max);
        let ratio_ok = ratio <= 1.0 + tol.relative && tail <= tol.absolute;
        let min_ok = min_rel >= -tol.absolute;
        let status = |ok: bool| if blown { Status::Blowup } else { Status::gate(ok) };
        let count = g.metrics.len();
        out.rows.push(ResultRow {
            experiment: "malliavin-ratio".into(),
            epsilon: Some(eps),
            horizon: cfg.horizon,
            value: ratio,
            stderr: 0.0,
            replicas: count,
            wall_ms,
            status: status(ratio_ok),
        });
        out.check(
            format!("malliavin-ratio eps={eps}"),
            ratio_ok,
            format!("max D/bound = {ratio:.6} (need <= {}), tail excess {tail:e}", 1.0 + tol.relative),
        );
        out.rows.push(ResultRow {
            experiment: "malliavin-min".into(),
            epsilon: Some(eps),
            horizon: cfg.horizon,
            value: min_rel,
            stderr: 0.0,
            replicas: count,
            wall_ms,
            status: status(min_ok),
        });
        out.check(format!("malliavin-min eps={eps}"), min_ok, format!("min D / max D = {min_rel:e}"));

        let started = Instant::now();
        let noise = sample_white_noise(&grid, cfg.seed, 0);
        let radius = 2.0 * (cfg.horizon + eps * eps).sqrt();
        let probes = probes_near(&grid, zs[0], radius, cfg.probes, cfg.seed);
        let fd = gateaux_check(&noise, zs[0], &probes, 1e-4 / grid.spacing(), &solver)?;
        let fd_ok = fd.max_relative_error < GATEAUX_TOLERANCE;
        out.rows.push(ResultRow {
            experiment: "malliavin-fd".into(),
            epsilon: Some(eps),
            horizon: cfg.horizon,
            value: fd.max_relative_error,
            stderr: 0.0,
            replicas: 1,
            wall_ms: started.elapsed().as_millis(),
            status: Status::gate(fd_ok),
        });
        out.check(
            format!("malliavin-fd eps={eps}"),
            fd_ok,
            format!("max relative error {:e} over {} probes", fd.max_relative_error, probes.len()),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_distinct_and_probes_local() {
        let g = TorusGrid::new(4.0, 64).unwrap();
        let zs = spread_points(&g, 3);
        assert_eq!(zs.len(), 3);
        assert!(zs[0] != zs[1] && zs[1] != zs[2]);
        let probes = probes_near(&g, zs[0], 0.5, 10, 1);
        assert_eq!(probes.len(), 10);
        for p in &probes {
            assert!(g.torus_distance_squared(*p, zs[0]) <= 0.25 + 1e-12);
        }
        assert_eq!(probes, probes_near(&g, zs[0], 0.5, 10, 1));
    }
}

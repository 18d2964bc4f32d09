//! One Allen–Cahn trajectory from mollified noise, compared with its
//! Gaussian approximation `σ_ε(T)·G_T ∗ η_ε`.
//!
//! `cargo run --release --example allen_cahn_evolve -- [eps] [n]`

use critfield::spde::evolve_observed;
use critfield::{
    apply_semigroup, build_mesh, mkv_field, mollify, sample_white_noise, solve_sigma_eps, QuadratureRule, Reaction,
    SolverConfig, TorusGrid, VarianceMode,
};

fn main() -> critfield::Result<()> {
    let mut args = std::env::args().skip(1);
    let eps: f64 = args.next().map(|a| a.parse().expect("eps")).unwrap_or(0.1);
    let n: usize = args.next().map(|a| a.parse().expect("n")).unwrap_or(256);
    let horizon = 0.25;
    let grid = TorusGrid::new(4.0, n)?;
    let reaction = Reaction::allen_cahn(1.0)?;
    let cfg = SolverConfig::new(reaction.clone(), grid, eps, 0.0, horizon)?;
    let mesh = build_mesh(&cfg)?;
    println!("eps = {eps}, {} coarse steps, {} substeps total", mesh.coarse.len() - 1, mesh.substeps());

    let eta = mollify(&sample_white_noise(&grid, 42, 0), eps)?;
    let mut u_rms = Vec::new();
    let run = evolve_observed(&eta, &cfg, |t, u| {
        u_rms.push((t, u.rms()));
        Ok(())
    })?;
    for (t, rms) in u_rms.iter().step_by((u_rms.len() / 8).max(1)) {
        let linear = apply_semigroup(&eta, *t, 0.0)?.rms();
        println!("t = {t:.4}: rms u = {rms:.4}, rms linear = {linear:.4}");
    }

    let rule = QuadratureRule::gauss_hermite(64)?;
    let path = solve_sigma_eps(&reaction, eps, 0.0, horizon, 1e-3, VarianceMode::Grid(grid), &rule)?;
    let v = mkv_field(&path, horizon, &eta, 0.0)?;
    println!("sigma_eps(T) = {:.5}", path.at_time(horizon)?);
    println!("normalized error sqrt(T+eps^2)*rms(u - v) = {:.5}", (horizon + eps * eps).sqrt() * run.u.rms_diff(&v)?);
    Ok(())
}

//! Empirical variance and covariance of mollified white noise.
//!
//! `cargo run --release --example noise_covariance -- [n] [replicas]`

use std::f64::consts::PI;

use critfield::{covariance_estimate, TorusGrid};

fn main() -> critfield::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let n = args.next().unwrap_or(256);
    let replicas = args.next().unwrap_or(100);
    let grid = TorusGrid::new(4.0, n)?;
    let eps: f64 = 0.05;
    let t = 2.0 * eps * eps;
    println!("L = 4, n = {n}, eps = {eps}, {replicas} replicas");
    println!("grid point variance      {:.4}", grid.point_variance(eps * eps)?);
    println!("whole-plane 1/(4 pi e^2) {:.4}", 1.0 / (4.0 * PI * eps * eps));
    for lag_cells in [0, 2, 4, 8, 16] {
        let est = covariance_estimate(&grid, eps, 0, replicas, lag_cells)?;
        let exact = (-est.lag * est.lag / (2.0 * t)).exp() / (2.0 * PI * t);
        println!("r = {:.4}: {:>9.4} +- {:.4}   (kernel {:.4})", est.lag, est.covariance, est.covariance_se, exact);
    }
    Ok(())
}

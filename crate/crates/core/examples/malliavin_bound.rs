//! Malliavin derivative of the solution against its heat-kernel envelope.
//!
//! `cargo run --release --example malliavin_bound`

use critfield::spde::{gateaux_check, malliavin_bound_check, BoundTolerance};
use critfield::{evolve_malliavin, mollify, sample_white_noise, Reaction, SolverConfig, TorusGrid};

fn main() -> critfield::Result<()> {
    let grid = TorusGrid::new(4.0, 128)?;
    let cfg = SolverConfig::new(Reaction::allen_cahn(1.0)?, grid, 0.1, 0.0, 0.5)?;
    let noise = sample_white_noise(&grid, 1, 0);
    let z = grid.index(64, 64);
    let run = evolve_malliavin(&mollify(&noise, 0.1)?, &[z], &cfg)?;
    for snap in &run.snapshots {
        let r = malliavin_bound_check(&snap.d, snap.t, z, &cfg, BoundTolerance::default())?;
        println!(
            "t = {:.4}: max D = {:>9.4}, max D/bound = {:.5}, min D = {:+.2e}",
            r.t, r.max_d, r.max_ratio, r.min_d
        );
    }
    let probes = [z, grid.index(65, 64), grid.index(60, 66), grid.index(70, 70)];
    let fd = gateaux_check(&noise, z, &probes, 1e-4 / grid.spacing(), &cfg)?;
    for p in &fd.probes {
        println!("probe {}: finite difference {:.6e}, h^2 D {:.6e}", p.index, p.finite_difference, p.predicted);
    }
    println!("max relative error {:.2e}", fd.max_relative_error);
    Ok(())
}

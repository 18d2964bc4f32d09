//! Amplitude ODE for Allen–Cahn: limit path, closed form, and ε-paths with mass.
//!
//! `cargo run --release --example sigma_limit`

use critfield::{allen_cahn_sigma_closed, solve_sigma_eps, solve_sigma_limit, QuadratureRule, Reaction, VarianceMode};

fn main() -> critfield::Result<()> {
    let rule = QuadratureRule::gauss_hermite(64)?;
    let ac = Reaction::allen_cahn(1.0)?;
    let limit = solve_sigma_limit(&ac, 3.0, 1e-3, &rule)?;
    println!("{:>5} {:>12} {:>12}", "q", "sigma", "closed");
    for q in [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
        println!("{q:>5.2} {:>12.9} {:>12.9}", limit.at_q(q)?, allen_cahn_sigma_closed(1.0, q));
    }

    println!("\nm = 1, T = 1: sup gap to the limit path");
    for eps in [1e-2, 1e-4, 1e-8] {
        let path = solve_sigma_eps(&ac, eps, 1.0, 1.0, 1e-3, VarianceMode::Continuum, &rule)?;
        let reference = solve_sigma_limit(&ac, path.q_max(), 1e-3, &rule)?;
        println!("eps = {eps:e}: q(T) = {:.4}, gap = {:.3e}", path.q_max(), path.sup_gap(&reference, path.q_max())?);
    }
    Ok(())
}

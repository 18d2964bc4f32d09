//! Small convergence experiment: the coupled error `√(T+ε²)·RMS(u − v)` per ε.
//!
//! `cargo run --release --example coupled_error -- [replicas]`

use critfield::experiments::{run_convergence, ExperimentConfig, ExperimentKind, GridSpec, ReactionSpec};

fn main() -> critfield::Result<()> {
    let replicas = std::env::args().nth(1).map(|a| a.parse().expect("replicas")).unwrap_or(8);
    let mut cfg =
        ExperimentConfig::new(ExperimentKind::Convergence, ReactionSpec::allen_cahn(1.0), vec![0.2, 0.1], 0.25);
    cfg.grid = GridSpec { side_length: 4.0, n: 128 };
    cfg.replicas = Some(replicas);
    let out = run_convergence(&cfg)?;
    print!("{}", out.csv());
    for c in &out.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(())
}

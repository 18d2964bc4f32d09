//! Point-value tails of the Allen–Cahn solution against the sub-Gaussian bound.
//!
//! `cargo run --release --example concentration_tails -- [replicas]`

use critfield::experiments::{run_tails, ExperimentConfig, ExperimentKind, GridSpec, ReactionSpec};

fn main() -> critfield::Result<()> {
    let replicas = std::env::args().nth(1).map(|a| a.parse().expect("replicas")).unwrap_or(400);
    let mut cfg = ExperimentConfig::new(ExperimentKind::Tails, ReactionSpec::allen_cahn(1.0), vec![0.1], 0.25);
    cfg.grid = GridSpec { side_length: 4.0, n: 128 };
    cfg.replicas = Some(replicas);
    let out = run_tails(&cfg)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    print!("{}", out.csv());
    Ok(())
}

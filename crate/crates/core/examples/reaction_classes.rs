//! Class metadata and sampled class checks for the built-in reactions.
//!
//! `cargo run --example reaction_classes`

use critfield::Reaction;

fn main() -> critfield::Result<()> {
    let ts = [0.01, 0.1, 1.0];
    let ws: Vec<f64> = (-60..=60).map(|k| k as f64 * 0.25).collect();
    let reactions = [
        Reaction::allen_cahn(1.0)?,
        Reaction::linear(-0.5)?,
        Reaction::odd_poly(&[0.2, 1.0, 0.1])?,
        Reaction::allen_cahn(1.0)?.cutoff(2.0)?,
        Reaction::zero(),
    ];
    for r in &reactions {
        let report = r.verify_class(&ts, &ws);
        println!(
            "{:<24} S' = {:<5} self-similar = {:<5} L1 = {:<6} class check {}",
            r.name(),
            r.in_s_prime(),
            r.is_self_similar(),
            r.constants().l1,
            if report.passed { "ok" } else { "VIOLATED" }
        );
        if let Some(v) = &report.worst {
            println!("    worst: {:?} at t = {}, w = {} (excess {:.2e})", v.kind, v.t, v.w, v.excess);
        }
    }
    let cut = Reaction::allen_cahn(1.0)?.cutoff(2.0)?;
    println!(
        "\nF vs cutoff(2): w = 1 -> {} / {}, w = 3 -> {} / {}",
        1.0,
        cut.value(1.0, 1.0),
        27.0,
        cut.value(1.0, 3.0)
    );
    Ok(())
}

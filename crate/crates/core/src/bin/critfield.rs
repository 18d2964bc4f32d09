use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use critfield::experiments::{error_exit_code, run_experiment, save, ExperimentConfig, ExperimentKind};
use critfield::Error;

/// Run one experiment from a JSON config and write results.csv + meta.json.
///
/// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
/// 3 numerical fault (blow-up).
#[derive(Parser, Debug)]
#[command(name = "critfield", version)]
struct Cli {
    /// convergence | corollary | tails | malliavin | sigma-limit
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: the config's "out", else critfield-out/<experiment>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replicas (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<i32, Error> {
    let kind = ExperimentKind::parse(&cli.experiment)?;
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    match cfg.experiment {
        Some(k) if k != kind => {
            return Err(Error::Config(format!("config describes {k}, command line asks for {kind}")));
        }
        _ => cfg.experiment = Some(kind),
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli
        .out
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("critfield-out").join(kind.name()));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| Error::Config(e.to_string()))?;
    let outcome = pool.install(|| run_experiment(&cfg))?;
    for w in &outcome.warnings {
        log::warn!("{w}");
    }
    save(&out, &cfg, &outcome)?;
    print!("{}", outcome.csv());
    for c in &outcome.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("critfield: {e}");
            error_exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}

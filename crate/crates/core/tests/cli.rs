use std::path::Path;
use std::process::Command;

fn critfield(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_critfield")).args(args).env("RUST_LOG", "error").output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn sigma_limit_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"reaction": {"name": "allen-cahn", "lambda": 1.0}, "epsilons": [0.01, 0.0001], "m": 0.0, "T": 1.0}"#,
    );
    let out = dir.path().join("out");
    let (code, stdout) = critfield(&["sigma-limit", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("PASS sigma-closed-dev"));
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.starts_with("experiment,epsilon,T,value,stderr,replicas,wall_ms,status\n"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("sigma-gap,")).count(), 2);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["experiment"], "sigma-limit");
    assert_eq!(meta["exit_code"], 0);
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert!(out.join("sigma_paths.csv").exists());
}

#[test]
fn same_seed_gives_identical_results_on_different_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"reaction": {"name": "allen-cahn", "lambda": 1.0}, "epsilons": [0.2, 0.1], "T": 0.25,
            "grid": {"L": 4.0, "n": 64}, "replicas": 4, "seed": 5}"#,
    );
    let mut columns = Vec::new();
    for threads in ["1", "2"] {
        let out = dir.path().join(threads);
        let (code, _) =
            critfield(&["convergence", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", threads]);
        assert!(code == 0 || code == 1);
        let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
        // drop wall_ms, keep everything else
        let rows: Vec<String> = csv
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(6);
                f.join(",")
            })
            .collect();
        columns.push(rows);
    }
    assert_eq!(columns[0], columns[1]);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    let bad_json = write(dir.path(), "bad.json", "{ not json");
    assert_eq!(critfield(&["sigma-limit", "--config", &bad_json, "--out", out]).0, 2);

    let unknown_key = write(
        dir.path(),
        "k.json",
        r#"{"reaction": {"name": "allen-cahn", "lambda": 1.0}, "epsilons": [0.1], "T": 1.0, "bogus": 1}"#,
    );
    assert_eq!(critfield(&["sigma-limit", "--config", &unknown_key, "--out", out]).0, 2);

    let mismatch = write(
        dir.path(),
        "m.json",
        r#"{"experiment": "tails", "reaction": {"name": "allen-cahn", "lambda": 1.0}, "epsilons": [0.1], "T": 1.0}"#,
    );
    assert_eq!(critfield(&["sigma-limit", "--config", &mismatch, "--out", out]).0, 2);

    let rising = write(
        dir.path(),
        "r.json",
        r#"{"reaction": {"name": "allen-cahn", "lambda": 1.0}, "epsilons": [0.05, 0.1], "T": 0.25,
            "grid": {"L": 4.0, "n": 32}, "replicas": 2}"#,
    );
    assert_eq!(critfield(&["convergence", "--config", &rising, "--out", out]).0, 2);

    assert_eq!(critfield(&["no-such-experiment", "--config", &rising, "--out", out]).0, 2);
    assert_eq!(critfield(&["sigma-limit", "--config", "/nonexistent/x.json", "--out", out]).0, 2);
}

//! Result rows, pass/fail checks, and the CSV + JSON writers.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Reported quantity without a gate.
    Info,
    /// At least one replica hit a non-finite value.
    Blowup,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Info => "info",
            Status::Blowup => "blowup",
        })
    }
}

impl Status {
    pub fn gate(passed: bool) -> Self {
        if passed {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub epsilon: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub value: f64,
    pub stderr: f64,
    pub replicas: usize,
    pub wall_ms: u128,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub rows: Vec<ResultRow>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    /// Extra output files `(name, contents)` written next to `results.csv`.
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn blew_up(&self) -> bool {
        self.rows.iter().any(|r| r.status == Status::Blowup)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.rows.iter().all(|r| r.status != Status::Fail)
    }

    /// 0 when every check passes, 1 on a failed check, 3 on blow-up.
    pub fn exit_code(&self) -> i32 {
        if self.blew_up() {
            3
        } else if self.all_passed() {
            0
        } else {
            1
        }
    }

    pub fn row(&self, experiment: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.experiment == experiment)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("experiment,epsilon,T,value,stderr,replicas,wall_ms,status\n");
        for r in &self.rows {
            let eps = r.epsilon.map(|e| format!("{e:?}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{eps},{:?},{:?},{:?},{},{},{}\n",
                r.experiment, r.horizon, r.value, r.stderr, r.replicas, r.wall_ms, r.status
            ));
        }
        out
    }
}

#[derive(Debug, Serialize)]
pub struct Meta<'a> {
    pub experiment: &'a str,
    pub config_hash: String,
    pub seed: u64,
    pub generator: &'a str,
    pub code_version: String,
    pub exit_code: i32,
    pub warnings: &'a [String],
    pub checks: &'a [Check],
}

/// Writes `results.csv`, `meta.json` and any extra files into `dir`.
pub fn write_outputs(dir: &Path, outcome: &Outcome, meta: &Meta<'_>) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), outcome.csv())?;
    let mut file = fs::File::create(dir.join("meta.json"))?;
    serde_json::to_writer_pretty(&mut file, meta)?;
    writeln!(file)?;
    for (name, contents) in &outcome.files {
        fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

/// Mean and standard error (sample std / √n) of `xs`.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats() {
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_stderr(&[3.0]), (3.0, 0.0));
        assert!(mean_and_stderr(&[]).0.is_nan());
    }

    #[test]
    fn csv_layout_and_exit_codes() {
        let mut o = Outcome::default();
        o.rows.push(ResultRow {
            experiment: "convergence".into(),
            epsilon: Some(0.1),
            horizon: 0.25,
            value: 0.1 + 0.2,
            stderr: 0.0,
            replicas: 4,
            wall_ms: 12,
            status: Status::Info,
        });
        let csv = o.csv();
        assert!(csv.starts_with("experiment,epsilon,T,value,stderr,replicas,wall_ms,status\n"));
        assert!(csv.contains("convergence,0.1,0.25,0.30000000000000004,0.0,4,12,info"));
        assert_eq!(o.exit_code(), 0);
        o.check("x", false, "");
        assert_eq!(o.exit_code(), 1);
        o.rows[0].status = Status::Blowup;
        assert_eq!(o.exit_code(), 3);
    }
}

//! Declarative experiment description, read from JSON.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gaussian_expectation::{QuadratureRule, VarianceMode, DEFAULT_NODES};
use crate::grid::TorusGrid;
use crate::mckean_vlasov::DEFAULT_DQ;
use crate::reaction::{ClassConstants, Reaction};
use crate::spde::{NonlinearScheme, SolverConfig, DEFAULT_SUBSTEPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Convergence,
    Corollary,
    Tails,
    Malliavin,
    SigmaLimit,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] =
        [Self::Convergence, Self::Corollary, Self::Tails, Self::Malliavin, Self::SigmaLimit];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Convergence => "convergence",
            Self::Corollary => "corollary",
            Self::Tails => "tails",
            Self::Malliavin => "malliavin",
            Self::SigmaLimit => "sigma-limit",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown experiment {name:?}")))
    }

    fn is_monte_carlo(&self) -> bool {
        !matches!(self, Self::SigmaLimit)
    }

    fn default_replicas(&self) -> usize {
        match self {
            Self::Tails => 400,
            Self::Malliavin => 8,
            _ => 64,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionSpec {
    /// `allen-cahn`, `linear`, `odd-poly` or `zero`.
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    /// Overrides the built-in class constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ClassConstants>,
}

impl ReactionSpec {
    pub fn allen_cahn(lambda: f64) -> Self {
        Self { name: "allen-cahn".into(), lambda: Some(lambda), coefficients: None, constants: None }
    }

    pub fn build(&self) -> Result<Reaction> {
        let config = |e: Error| Error::Config(format!("reaction {:?}: {e}", self.name));
        let reaction = match self.name.as_str() {
            "allen-cahn" => Reaction::allen_cahn(self.lambda.unwrap_or(1.0)).map_err(config)?,
            "linear" => {
                let a = match (&self.coefficients, self.lambda) {
                    (Some(c), _) if c.len() == 1 => c[0],
                    (Some(_), _) => return Err(Error::Config("linear takes exactly one coefficient".into())),
                    (None, l) => l.unwrap_or(1.0),
                };
                Reaction::linear(a).map_err(config)?
            }
            "odd-poly" => {
                let c = self
                    .coefficients
                    .as_ref()
                    .ok_or_else(|| Error::Config("odd-poly needs a coefficients list".into()))?;
                Reaction::odd_poly(c).map_err(config)?
            }
            "zero" => Reaction::zero(),
            other => return Err(Error::Config(format!("unknown reaction {other:?}"))),
        };
        Ok(match self.constants {
            Some(c) => reaction.with_constants(c),
            None => reaction,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "L")]
    pub side_length: f64,
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { side_length: 4.0, n: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    pub reaction: ReactionSpec,
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub m: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "Tprime", default, skip_serializing_if = "Option::is_none")]
    pub t_prime: Option<f64>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    #[serde(default = "default_dq")]
    pub dq: f64,
    /// `grid` or `continuum`; defaults to `continuum` for sigma-limit and `grid` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_mode: Option<String>,
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
    #[serde(default)]
    pub seed: u64,
    /// `rk4` (default) or `exact-cubic`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default = "default_z_points")]
    pub z_points: usize,
    #[serde(default = "default_probes")]
    pub probes: usize,
    /// Adds the `F = 0` control row to convergence runs.
    #[serde(default = "default_true")]
    pub control: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

fn default_substeps() -> usize {
    DEFAULT_SUBSTEPS
}

fn default_dq() -> f64 {
    DEFAULT_DQ
}

fn default_nodes() -> usize {
    DEFAULT_NODES
}

fn default_z_points() -> usize {
    3
}

fn default_probes() -> usize {
    10
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(kind: ExperimentKind, reaction: ReactionSpec, epsilons: Vec<f64>, horizon: f64) -> Self {
        Self {
            experiment: Some(kind),
            reaction,
            epsilons,
            m: 0.0,
            horizon,
            t_prime: None,
            grid: GridSpec::default(),
            replicas: None,
            substeps: DEFAULT_SUBSTEPS,
            dq: DEFAULT_DQ,
            variance_mode: None,
            quadrature_nodes: DEFAULT_NODES,
            seed: 0,
            scheme: None,
            delta: None,
            z_points: 3,
            probes: 10,
            control: true,
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config JSON: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.experiment.ok_or_else(|| Error::Config("config does not name an experiment".into()))
    }

    pub fn replicas(&self) -> usize {
        match self.replicas {
            Some(r) => r,
            None => self.experiment.map_or(64, |k| k.default_replicas()),
        }
    }

    pub fn torus(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.grid.side_length, self.grid.n).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn variance_mode(&self) -> Result<VarianceMode> {
        let default = if self.experiment == Some(ExperimentKind::SigmaLimit) { "continuum" } else { "grid" };
        match self.variance_mode.as_deref().unwrap_or(default) {
            "continuum" => Ok(VarianceMode::Continuum),
            "grid" => Ok(VarianceMode::Grid(self.torus()?)),
            other => Err(Error::Config(format!("variance_mode must be grid or continuum, got {other:?}"))),
        }
    }

    pub fn scheme(&self) -> Result<NonlinearScheme> {
        match &self.scheme {
            None => Ok(NonlinearScheme::Rk4),
            Some(s) => NonlinearScheme::parse(s).map_err(|e| Error::Config(e.to_string())),
        }
    }

    pub fn rule(&self) -> Result<QuadratureRule> {
        QuadratureRule::gauss_hermite(self.quadrature_nodes).map_err(|e| Error::Config(e.to_string()))
    }

    /// Solver settings for one `ε`.
    pub fn solver(&self, reaction: Reaction, eps: f64) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::new(reaction, self.torus()?, eps, self.m, self.horizon)
            .map_err(|e| Error::Config(e.to_string()))?
            .with_substeps(self.substeps)
            .with_scheme(self.scheme()?);
        if let Some(d) = self.delta {
            cfg = cfg.with_delta(d);
        }
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Checks every range before any computation; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let kind = self.kind()?;
        let bad = |msg: String| Err(Error::Config(msg));
        if self.epsilons.is_empty() {
            return bad("epsilons must not be empty".into());
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("every epsilon must lie in (0, 1), got {e}"));
        }
        if matches!(kind, ExperimentKind::Convergence | ExperimentKind::Corollary)
            && self.epsilons.windows(2).any(|w| w[1] >= w[0])
        {
            return bad("epsilons must be strictly decreasing".into());
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad(format!("T must be positive, got {}", self.horizon));
        }
        if let Some(tp) = self.t_prime {
            if !(tp > 0.0 && tp <= self.horizon) {
                return bad(format!("Tprime must lie in (0, T], got {tp}"));
            }
        }
        if !self.m.is_finite() {
            return bad("m must be finite".into());
        }
        if !(self.dq.is_finite() && self.dq > 0.0) {
            return bad(format!("dq must be positive, got {}", self.dq));
        }
        if self.substeps == 0 {
            return bad("substeps must be at least 1".into());
        }
        if self.quadrature_nodes == 0 {
            return bad("quadrature_nodes must be at least 1".into());
        }
        let replicas = self.replicas();
        if kind.is_monte_carlo() && replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if kind == ExperimentKind::Tails && replicas < 400 {
            return bad(format!("tails needs at least 400 replicas, got {replicas}"));
        }
        if kind == ExperimentKind::Malliavin && (self.z_points == 0 || self.probes == 0) {
            return bad("malliavin needs at least one z-point and one probe".into());
        }
        let grid = self.torus()?;
        self.variance_mode()?;
        self.scheme()?;
        let reaction = self.reaction.build()?;
        match kind {
            ExperimentKind::Corollary if self.reaction.name != "allen-cahn" => {
                return bad("corollary is defined for the allen-cahn reaction only".into());
            }
            ExperimentKind::SigmaLimit if !reaction.is_self_similar() => {
                return bad("sigma-limit needs a self-similar reaction F(w) independent of t".into());
            }
            ExperimentKind::Convergence | ExperimentKind::Corollary | ExperimentKind::Tails
                if !reaction.in_s_prime() =>
            {
                return Err(Error::Class(format!(
                    "{} is outside S' (needs gamma1 < 3 and gamma2 < 2)",
                    reaction.name()
                )));
            }
            _ => {}
        }
        if kind != ExperimentKind::SigmaLimit {
            let reach = 10.0;
            let ws: Vec<f64> = (0..=400).map(|i| -reach + 2.0 * reach * i as f64 / 400.0).collect();
            let report = reaction.verify_class(&[0.01, 1.0], &ws);
            if !report.passed {
                return Err(Error::Class(format!("{} fails its class check: {:?}", reaction.name(), report.worst)));
            }
            for &eps in &self.epsilons {
                self.solver(reaction.clone(), eps)?;
            }
        }
        let mut warnings = Vec::new();
        if kind != ExperimentKind::SigmaLimit || self.variance_mode.as_deref() == Some("grid") {
            for &eps in &self.epsilons {
                let need = 12.0 * (self.horizon + eps * eps).sqrt();
                if grid.side_length() < need {
                    warnings.push(format!(
                        "L = {} is below 12*sqrt(T + eps^2) = {need:.3} at eps = {eps}",
                        grid.side_length()
                    ));
                }
                if grid.spacing() > eps / 4.0 {
                    warnings.push(format!("h = {} exceeds eps/4 = {} at eps = {eps}", grid.spacing(), eps / 4.0));
                }
            }
        }
        Ok(warnings)
    }

    /// SHA-256 of the canonical JSON serialization of this config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

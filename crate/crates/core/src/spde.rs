//! Strang-split solver for
//!
//! ```text
//! ∂_t u = ½Δu + m·u − f(t + ε², u) / log ε⁻¹,   u(0) = η_ε,
//! ```
//!
//! on the exponential mesh `t_j = ε^{2−jδ} − ε²`, with optional Malliavin
//! companions `D_z u` advanced by the tangent-linear map of the same scheme.
//! Because each companion is the exact derivative of the discrete map, a
//! one-cell perturbation of the noise reproduces `h²·D_z u` up to `O(a)`.

use crate::error::{invalid, Error, Result};
use crate::grid::{heat_kernel, HeatMultiplier, RealField, SpectralWorkspace, TorusGrid};
use crate::mckean_vlasov::TimeMap;
use crate::noise::{mollify_field, NoiseRealization};
use crate::reaction::Reaction;

pub const DEFAULT_SUBSTEPS: usize = 8;
pub const DEFAULT_STIFFNESS_TARGET: f64 = 0.2;
/// Upper limit on RK4 sub-steps inside one nonlinear half step.
pub const MAX_SUB_SUBSTEPS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearScheme {
    Rk4,
    /// Closed-form flow of `du/dt = −a·u³/log ε⁻¹`; only for `F = a·w³`.
    ExactCubic,
}

impl NonlinearScheme {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "rk4" => Ok(Self::Rk4),
            "exact-cubic" => Ok(Self::ExactCubic),
            other => Err(invalid(format!("unknown nonlinear scheme {other:?}"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Rk4 => "rk4",
            Self::ExactCubic => "exact-cubic",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub eps: f64,
    pub mass: f64,
    pub horizon: f64,
    pub grid: TorusGrid,
    /// Mesh exponent step; `None` means `1/√(log ε⁻¹)`.
    pub delta: Option<f64>,
    pub substeps: usize,
    pub scheme: NonlinearScheme,
    pub reaction: Reaction,
    /// Target for `h·max|f'|/log ε⁻¹` per RK4 sub-step.
    pub stiffness_target: f64,
}

impl SolverConfig {
    pub fn new(reaction: Reaction, grid: TorusGrid, eps: f64, mass: f64, horizon: f64) -> Result<Self> {
        let cfg = Self {
            eps,
            mass,
            horizon,
            grid,
            delta: None,
            substeps: DEFAULT_SUBSTEPS,
            scheme: NonlinearScheme::Rk4,
            reaction,
            stiffness_target: DEFAULT_STIFFNESS_TARGET,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn with_scheme(mut self, scheme: NonlinearScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        TimeMap::new(self.eps)?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(invalid(format!("horizon T must be positive, got {}", self.horizon)));
        }
        if !self.mass.is_finite() {
            return Err(invalid("mass rate must be finite"));
        }
        if self.substeps == 0 {
            return Err(invalid("need at least one substep per interval"));
        }
        if let Some(d) = self.delta {
            if !(d.is_finite() && d > 0.0) {
                return Err(invalid(format!("delta must be positive, got {d}")));
            }
        }
        if !(self.stiffness_target.is_finite() && self.stiffness_target > 0.0) {
            return Err(invalid("stiffness target must be positive"));
        }
        if self.scheme == NonlinearScheme::ExactCubic && self.reaction.pure_cubic_coefficient().is_none() {
            return Err(invalid(format!(
                "exact-cubic scheme needs a t-independent F = a·w³, got {}",
                self.reaction.name()
            )));
        }
        Ok(())
    }

    /// `log ε⁻¹`.
    pub fn log_attenuation(&self) -> f64 {
        -self.eps.ln()
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or_else(|| 1.0 / self.log_attenuation().sqrt())
    }

    pub fn time_map(&self) -> TimeMap {
        TimeMap::new(self.eps).expect("validated eps")
    }
}

/// Exponential mesh: `coarse` holds `t_j = ε^{2−jδ} − ε²` (last clamped to
/// `T`), `fine` subdivides each interval into `K` steps uniform in `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
}

impl Mesh {
    pub fn substeps(&self) -> usize {
        (self.fine.len() - 1) / (self.coarse.len() - 1)
    }
}

pub fn build_mesh(cfg: &SolverConfig) -> Result<Mesh> {
    cfg.validate()?;
    let map = cfg.time_map();
    let delta = cfg.delta();
    let q_max = map.q_of_t(cfg.horizon);
    let whole = (q_max / delta).floor() as usize;
    let mut q_nodes: Vec<f64> = (0..=whole).map(|j| j as f64 * delta).collect();
    if q_max - q_nodes[whole] > 1e-12 * q_max.max(1.0) {
        q_nodes.push(q_max);
    } else if whole > 0 {
        q_nodes[whole] = q_max;
    } else {
        q_nodes.push(q_max);
    }
    let last = q_nodes.len() - 1;
    let t_at = |q: f64, is_last: bool| if is_last { cfg.horizon } else { map.t_of_q(q) };
    let coarse: Vec<f64> = q_nodes.iter().enumerate().map(|(j, q)| t_at(*q, j == last)).collect();
    let k = cfg.substeps;
    let mut fine = Vec::with_capacity(last * k + 1);
    fine.push(0.0);
    for j in 0..last {
        let (qa, qb) = (q_nodes[j], q_nodes[j + 1]);
        for s in 1..k {
            fine.push(map.t_of_q(qa + (qb - qa) * s as f64 / k as f64));
        }
        fine.push(coarse[j + 1]);
    }
    if fine.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
        return Err(invalid("mesh is not strictly increasing; reduce substeps or delta"));
    }
    Ok(Mesh { coarse, fine })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLog {
    pub t_start: f64,
    pub t_end: f64,
    /// RK4 sub-steps used by each nonlinear half step.
    pub sub_substeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: f64,
    pub u: RealField,
    pub log: Vec<StepLog>,
}

/// `D_z u(t, ·)` recorded at a coarse mesh time.
#[derive(Debug, Clone, PartialEq)]
pub struct MalliavinSnapshot {
    pub t: f64,
    pub z: usize,
    pub d: RealField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MalliavinRun {
    pub trajectory: Trajectory,
    pub snapshots: Vec<MalliavinSnapshot>,
}

/// Right-hand side `g(u) = −f(τ, u)/log ε⁻¹` at a frozen shifted time `τ`.
struct FrozenReaction<'a> {
    reaction: &'a Reaction,
    tau: f64,
    sqrt_tau: f64,
    value_scale: f64,
    slope_scale: f64,
}

impl<'a> FrozenReaction<'a> {
    fn new(reaction: &'a Reaction, tau: f64, log_inv: f64) -> Self {
        let sqrt_tau = tau.sqrt();
        Self {
            reaction,
            tau,
            sqrt_tau,
            value_scale: -1.0 / (tau * sqrt_tau * log_inv),
            slope_scale: -1.0 / (tau * log_inv),
        }
    }

    #[inline]
    fn g(&self, u: f64) -> f64 {
        self.value_scale * self.reaction.value(self.tau, self.sqrt_tau * u)
    }

    #[inline]
    fn dg(&self, u: f64) -> f64 {
        self.slope_scale * self.reaction.derivative(self.tau, self.sqrt_tau * u)
    }
}

/// Sub-step count for the RK4 integration of one nonlinear half step of
/// length `h` starting at `t0`. Depends only on `(t0, h, cfg)`, never on the
/// field, so perturbed and unperturbed runs share the same discrete map.
fn sub_substep_count(t0: f64, h: f64, cfg: &SolverConfig) -> usize {
    let tau = t0 + cfg.eps * cfg.eps;
    let reach = 8.0 * (cfg.mass.abs() * (t0 + h)).exp() / (4.0 * std::f64::consts::PI * tau).sqrt();
    let frozen = FrozenReaction::new(&cfg.reaction, tau, cfg.log_attenuation());
    let samples = 32;
    let stiffness = (0..=samples).map(|i| frozen.dg(reach * i as f64 / samples as f64).abs()).fold(0.0, f64::max);
    let n = (h * stiffness / cfg.stiffness_target).ceil();
    if n.is_finite() {
        (n as usize).clamp(1, MAX_SUB_SUBSTEPS)
    } else {
        MAX_SUB_SUBSTEPS
    }
}

fn blow_up_check(values: &[f64], time: f64) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::BlowUp { time, index }),
        None => Ok(()),
    }
}

/// Advances `du/dt = −f(t + ε², u)/log ε⁻¹` pointwise over `[t0, t0 + h]`,
/// carrying the companions `d` along the linearization. Returns the number
/// of RK4 sub-steps used (1 for the exact cubic flow).
fn nonlinear_flow(u: &mut [f64], d: &mut [Vec<f64>], t0: f64, h: f64, cfg: &SolverConfig) -> Result<usize> {
    let log_inv = cfg.log_attenuation();
    match cfg.scheme {
        NonlinearScheme::ExactCubic => {
            let a = cfg.reaction.pure_cubic_coefficient().expect("validated scheme");
            let c = 2.0 * a * h / log_inv;
            for (i, ui) in u.iter_mut().enumerate() {
                let factor = 1.0 + c * *ui * *ui;
                *ui /= factor.sqrt();
                if !d.is_empty() {
                    let tangent = factor.powf(-1.5);
                    for di in d.iter_mut() {
                        di[i] *= tangent;
                    }
                }
            }
            blow_up_check(u, t0 + h)?;
            Ok(1)
        }
        NonlinearScheme::Rk4 => {
            let count = sub_substep_count(t0, h, cfg);
            let hs = h / count as f64;
            let half = 0.5 * hs;
            for j in 0..count {
                let tau = t0 + (j as f64 + 0.5) * hs + cfg.eps * cfg.eps;
                let frozen = FrozenReaction::new(&cfg.reaction, tau, log_inv);
                for (i, ui) in u.iter_mut().enumerate() {
                    let u0 = *ui;
                    let k1 = frozen.g(u0);
                    let u1 = u0 + half * k1;
                    let k2 = frozen.g(u1);
                    let u2 = u0 + half * k2;
                    let k3 = frozen.g(u2);
                    let u3 = u0 + hs * k3;
                    let k4 = frozen.g(u3);
                    *ui = u0 + hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                    if !d.is_empty() {
                        let (s1, s2, s3, s4) = (frozen.dg(u0), frozen.dg(u1), frozen.dg(u2), frozen.dg(u3));
                        for di in d.iter_mut() {
                            let d0 = di[i];
                            let l1 = s1 * d0;
                            let l2 = s2 * (d0 + half * l1);
                            let l3 = s3 * (d0 + half * l2);
                            let l4 = s4 * (d0 + hs * l3);
                            di[i] = d0 + hs / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
                        }
                    }
                }
            }
            blow_up_check(u, t0 + h)?;
            Ok(count)
        }
    }
}

/// One nonlinear step of length `h` from `t0` on raw values (no companions).
pub fn nonlinear_substep(values: &[f64], t0: f64, h: f64, cfg: &SolverConfig) -> Result<Vec<f64>> {
    if !(h.is_finite() && h > 0.0) {
        return Err(invalid(format!("substep length must be positive, got {h}")));
    }
    if !(t0.is_finite() && t0 >= 0.0) {
        return Err(invalid(format!("substep start must be non-negative, got {t0}")));
    }
    cfg.validate()?;
    let mut out = values.to_vec();
    nonlinear_flow(&mut out, &mut [], t0, h, cfg)?;
    Ok(out)
}

/// Core stepping loop; `on_coarse(t, u, d)` fires at every coarse node, including `t = 0`.
fn run(
    u: &mut [f64],
    d: &mut [Vec<f64>],
    cfg: &SolverConfig,
    mut on_coarse: impl FnMut(f64, &[f64], &[Vec<f64>]) -> Result<()>,
) -> Result<Vec<StepLog>> {
    let mesh = build_mesh(cfg)?;
    let k = mesh.substeps();
    let mut workspace = SpectralWorkspace::new(cfg.grid);
    let linear_only = cfg.reaction.is_zero();
    let mut log = Vec::with_capacity(mesh.fine.len() - 1);
    on_coarse(0.0, u, d)?;
    for (step, w) in mesh.fine.windows(2).enumerate() {
        let (s, e) = (w[0], w[1]);
        let h = e - s;
        let mut sub = 0;
        if !linear_only {
            sub = nonlinear_flow(u, d, s, 0.5 * h, cfg)?;
        }
        let multiplier = HeatMultiplier::new(&cfg.grid, h, cfg.mass);
        workspace.heat_step(u, &multiplier);
        for di in d.iter_mut() {
            workspace.heat_step(di, &multiplier);
        }
        if !linear_only {
            sub = sub.max(nonlinear_flow(u, d, s + 0.5 * h, 0.5 * h, cfg)?);
        }
        blow_up_check(u, e)?;
        log.push(StepLog { t_start: s, t_end: e, sub_substeps: sub });
        if (step + 1) % k == 0 {
            on_coarse(e, u, d)?;
        }
    }
    Ok(log)
}

fn check_grid(field: &RealField, cfg: &SolverConfig) -> Result<()> {
    if field.grid() != &cfg.grid {
        return Err(Error::GridMismatch(format!("initial field on {:?}, solver on {:?}", field.grid(), cfg.grid)));
    }
    Ok(())
}

/// Evolves `u0` (normally `η_ε`) to `T`.
pub fn evolve(u0: &RealField, cfg: &SolverConfig) -> Result<Trajectory> {
    evolve_observed(u0, cfg, |_, _| Ok(()))
}

/// As [`evolve`], calling `observer(t, u)` at every coarse mesh time.
pub fn evolve_observed(
    u0: &RealField,
    cfg: &SolverConfig,
    mut observer: impl FnMut(f64, &RealField) -> Result<()>,
) -> Result<Trajectory> {
    check_grid(u0, cfg)?;
    let mut u = u0.values().to_vec();
    let grid = cfg.grid;
    let log = run(&mut u, &mut [], cfg, |t, values, _| observer(t, &RealField::from_parts(grid, values.to_vec())))?;
    Ok(Trajectory { t: cfg.horizon, u: RealField::from_parts(grid, u), log })
}

/// Evolves `u0` together with `D_z u` for each `z` in `z_points`, starting
/// from the periodized `G_{ε²}(· − z)`, and records every companion at every
/// coarse mesh time.
pub fn evolve_malliavin(u0: &RealField, z_points: &[usize], cfg: &SolverConfig) -> Result<MalliavinRun> {
    check_grid(u0, cfg)?;
    if z_points.is_empty() {
        return Err(invalid("need at least one z-point"));
    }
    let grid = cfg.grid;
    let mut d = z_points
        .iter()
        .map(|z| Ok(heat_kernel(&grid, cfg.eps * cfg.eps, *z)?.into_values()))
        .collect::<Result<Vec<_>>>()?;
    let mut u = u0.values().to_vec();
    let mut snapshots = Vec::new();
    let log = run(&mut u, &mut d, cfg, |t, _, ds| {
        for (z, di) in z_points.iter().zip(ds) {
            snapshots.push(MalliavinSnapshot { t, z: *z, d: RealField::from_parts(grid, di.clone()) });
        }
        Ok(())
    })?;
    Ok(MalliavinRun { trajectory: Trajectory { t: cfg.horizon, u: RealField::from_parts(grid, u), log }, snapshots })
}

/// Tolerances for [`malliavin_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTolerance {
    /// `min D ≥ −absolute·max D`.
    pub absolute: f64,
    /// `D / bound ≤ 1 + relative` where the bound is resolved.
    pub relative: f64,
    /// The ratio is taken where `bound ≥ support·max bound`; elsewhere
    /// `D ≤ bound + absolute·max D` is required instead.
    pub support: f64,
}

impl Default for BoundTolerance {
    fn default() -> Self {
        Self { absolute: 1e-8, relative: 5e-2, support: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub t: f64,
    pub z: usize,
    pub min_d: f64,
    pub max_d: f64,
    /// `max D(x) / (e^{3L₁+mt} G_{t+ε²}(x − z))` over the resolved region.
    pub max_ratio: f64,
    /// Largest `(D − bound)/max D` outside the resolved region.
    pub tail_excess: f64,
    pub passed: bool,
}

/// Checks `0 ≤ D_z u(t, x) ≤ e^{3L₁+mt}·G_{t+ε²}(x − z)` with the periodized kernel.
pub fn malliavin_bound_check(
    d: &RealField,
    t: f64,
    z: usize,
    cfg: &SolverConfig,
    tol: BoundTolerance,
) -> Result<BoundReport> {
    check_grid(d, cfg)?;
    let kernel = heat_kernel(&cfg.grid, t + cfg.eps * cfg.eps, z)?;
    let amplitude = (3.0 * cfg.reaction.constants().l1 + cfg.mass * t).exp();
    let max_bound = amplitude * kernel.max_abs();
    let min_d = d.values().iter().copied().fold(f64::INFINITY, f64::min);
    let max_d = d.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut max_ratio: f64 = 0.0;
    let mut tail_excess = f64::NEG_INFINITY;
    for (di, gi) in d.values().iter().zip(kernel.values()) {
        let bound = amplitude * gi;
        if bound >= tol.support * max_bound {
            max_ratio = max_ratio.max(di / bound);
        } else {
            tail_excess = tail_excess.max((di - bound) / max_d.abs().max(f64::MIN_POSITIVE));
        }
    }
    let passed = min_d >= -tol.absolute * max_d.abs() && max_ratio <= 1.0 + tol.relative && tail_excess <= tol.absolute;
    Ok(BoundReport { t, z, min_d, max_d, max_ratio, tail_excess, passed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateauxProbe {
    pub index: usize,
    pub finite_difference: f64,
    pub predicted: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateauxReport {
    pub z: usize,
    pub amount: f64,
    pub probes: Vec<GateauxProbe>,
    pub max_relative_error: f64,
}

/// Compares `(u[η + a·e_z] − u[η])/a` at `T` with `h²·D_z u(T)` at `probes`.
pub fn gateaux_check(
    noise: &NoiseRealization,
    z: usize,
    probes: &[usize],
    amount: f64,
    cfg: &SolverConfig,
) -> Result<GateauxReport> {
    if !(amount.is_finite() && amount != 0.0) {
        return Err(invalid("perturbation amount must be finite and non-zero"));
    }
    let base_eta = mollify_field(&noise.eta, cfg.eps)?;
    let run = evolve_malliavin(&base_eta, &[z], cfg)?;
    let perturbed = evolve(&mollify_field(&noise.perturbed(z, amount)?.eta, cfg.eps)?, cfg)?;
    let d = &run.snapshots.last().expect("final snapshot").d;
    let area = cfg.grid.cell_area();
    let mut out = Vec::with_capacity(probes.len());
    let mut worst: f64 = 0.0;
    for &index in probes {
        if index >= cfg.grid.len() {
            return Err(invalid(format!("probe {index} outside grid")));
        }
        let fd = (perturbed.u.values()[index] - run.trajectory.u.values()[index]) / amount;
        let predicted = area * d.values()[index];
        let relative_error = (fd - predicted).abs() / predicted.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(relative_error);
        out.push(GateauxProbe { index, finite_difference: fd, predicted, relative_error });
    }
    Ok(GateauxReport { z, amount, probes: out, max_relative_error: worst })
}

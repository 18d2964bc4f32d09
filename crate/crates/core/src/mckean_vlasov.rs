//! Amplitude ODEs of the McKean–Vlasov (Gaussian) approximation.
//!
//! The Gaussian solution is `v_ε(t, x) = σ_ε(t)·e^{mt}G_t ∗ η_ε(x)`. In the
//! exponential variable `q`, with `t = ε^{2−q} − ε²`, the amplitude solves
//!
//! ```text
//! dσ/dq = −E[F'(s, σ·e^{m(s−ε²)}·W)]·σ,   s = ε^{2−q},   σ(0) = 1,
//! ```
//!
//! where `W = √s·(G_s ∗ η)(x)` has variance `1/(4π)` in the plane (or
//! `s·grid_point_variance(s)` on a grid). Dropping the mass factor gives the
//! ε-free limit equation. Both are integrated with classical RK4 on a uniform
//! `q`-mesh `q_j = j·Δq` (plus a final partial step), which keeps the mesh
//! nodes of different paths bitwise identical.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::gaussian_expectation::{expect_f_prime, QuadratureRule, VarianceMode};
use crate::grid::{apply_semigroup, RealField};
use crate::reaction::Reaction;

pub const DEFAULT_DQ: f64 = 1e-3;

/// Relative slack on the upper bound `σ(q) ≤ e^{L₁·q}`.
const SIGMA_BOUND_SLACK: f64 = 1e-9;

/// `t(q) = ε^{2−q} − ε²` and its inverse `q(t) = 2 + log(t + ε²) / log(1/ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeMap {
    eps: f64,
    log_inv: f64,
}

impl TimeMap {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid(format!("eps must lie in (0, 1), got {eps}")));
        }
        Ok(Self { eps, log_inv: -eps.ln() })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `log(1/ε)`.
    pub fn log_inv(&self) -> f64 {
        self.log_inv
    }

    /// `ε^{2−q}`, the shifted time `t + ε²`.
    pub fn shifted_time(&self, q: f64) -> f64 {
        (-(2.0 - q) * self.log_inv).exp()
    }

    pub fn t_of_q(&self, q: f64) -> f64 {
        if q == 0.0 {
            return 0.0;
        }
        self.shifted_time(q) - self.eps * self.eps
    }

    pub fn q_of_t(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        2.0 + (t + self.eps * self.eps).ln() / self.log_inv
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathKind {
    Eps(f64),
    /// The ε-free limit `σ̄`.
    Limit,
}

/// Sampled amplitude `σ(q)` on a `q`-mesh with a monotone cubic interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaPath {
    kind: PathKind,
    mass: f64,
    reaction: String,
    variance_mode: VarianceMode,
    q: Vec<f64>,
    sigma: Vec<f64>,
    slopes: Vec<f64>,
}

impl SigmaPath {
    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn reaction_name(&self) -> &str {
        &self.reaction
    }

    pub fn variance_mode(&self) -> &VarianceMode {
        &self.variance_mode
    }

    pub fn q_mesh(&self) -> &[f64] {
        &self.q
    }

    pub fn sigma_values(&self) -> &[f64] {
        &self.sigma
    }

    pub fn q_max(&self) -> f64 {
        *self.q.last().unwrap()
    }

    pub fn time_map(&self) -> Option<TimeMap> {
        match self.kind {
            PathKind::Eps(eps) => TimeMap::new(eps).ok(),
            PathKind::Limit => None,
        }
    }

    /// `σ(q)` by monotone cubic interpolation; mesh nodes return stored values exactly.
    pub fn at_q(&self, q: f64) -> Result<f64> {
        let q_max = self.q_max();
        let tol = 1e-12 * q_max.max(1.0);
        if !(q >= -tol && q <= q_max + tol) {
            return Err(invalid(format!("q = {q} outside [0, {q_max}]")));
        }
        let q = q.clamp(0.0, q_max);
        let k = self.q.partition_point(|x| *x <= q).saturating_sub(1);
        if self.q[k] == q || k + 1 == self.q.len() {
            return Ok(self.sigma[k]);
        }
        let h = self.q[k + 1] - self.q[k];
        let s = (q - self.q[k]) / h;
        let (y0, y1) = (self.sigma[k], self.sigma[k + 1]);
        let (d0, d1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        Ok((2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1)
    }

    /// `σ_ε(t)` through the change of variables `q(t)`.
    pub fn at_time(&self, t: f64) -> Result<f64> {
        let map = self.time_map().ok_or_else(|| invalid("the limit path has no time parametrization"))?;
        if t.is_nan() || t < 0.0 {
            return Err(invalid(format!("time must be non-negative, got {t}")));
        }
        self.at_q(map.q_of_t(t))
    }

    /// `sup |σ_self − σ_other|` over the mesh nodes of `self` in `[0, q_upper]`
    /// that both paths cover.
    pub fn sup_gap(&self, other: &SigmaPath, q_upper: f64) -> Result<f64> {
        let limit = q_upper.min(self.q_max()).min(other.q_max());
        let mut gap: f64 = 0.0;
        for (q, s) in self.q.iter().zip(&self.sigma) {
            if *q > limit {
                break;
            }
            gap = gap.max((s - other.at_q(*q)?).abs());
        }
        gap = gap.max((self.at_q(limit)? - other.at_q(limit)?).abs());
        Ok(gap)
    }

    /// CSV with columns `q,t,sigma`; `t` is empty for the limit path.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "q,t,sigma")?;
        let map = self.time_map();
        for (q, s) in self.q.iter().zip(&self.sigma) {
            match map {
                Some(m) => writeln!(out, "{q},{},{s}", m.t_of_q(*q))?,
                None => writeln!(out, "{q},,{s}")?,
            }
        }
        Ok(())
    }
}

/// `q_j = j·dq` up to `q_max`, closing with `q_max` itself.
fn q_mesh(q_max: f64, dq: f64) -> Vec<f64> {
    let full = (q_max / dq).floor() as usize;
    let mut q: Vec<f64> = (0..=full).map(|j| j as f64 * dq).filter(|x| *x <= q_max).collect();
    if q_max - q.last().unwrap() > 1e-12 * q_max.max(1.0) {
        q.push(q_max);
    } else {
        *q.last_mut().unwrap() = q.last().unwrap().max(if full == 0 { 0.0 } else { q_max });
    }
    q
}

fn integrate(q: &[f64], l1: f64, rhs: impl Fn(f64, f64) -> Result<f64>) -> Result<Vec<f64>> {
    let mut sigma = Vec::with_capacity(q.len());
    let mut s = 1.0;
    sigma.push(s);
    for w in q.windows(2) {
        let (q0, q1) = (w[0], w[1]);
        let h = q1 - q0;
        let k1 = rhs(q0, s)?;
        let k2 = rhs(q0 + 0.5 * h, s + 0.5 * h * k1)?;
        let k3 = rhs(q0 + 0.5 * h, s + 0.5 * h * k2)?;
        let k4 = rhs(q1, s + h * k3)?;
        s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let bound = (l1 * q1).exp() * (1.0 + SIGMA_BOUND_SLACK);
        if !(s.is_finite() && s > 0.0 && s <= bound) {
            return Err(Error::SigmaOutOfRange { q: q1, sigma: s });
        }
        sigma.push(s);
    }
    Ok(sigma)
}

/// Fritsch–Carlson slopes for a monotone piecewise cubic.
fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = y.windows(2).zip(&h).map(|(w, h)| (w[1] - w[0]) / h).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a * b > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn check_dq(dq: f64) -> Result<()> {
    if dq.is_finite() && dq > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("dq must be positive, got {dq}")))
    }
}

/// Solves the ε-dependent amplitude ODE up to `q_max = q(T)`.
pub fn solve_sigma_eps(
    reaction: &Reaction,
    eps: f64,
    mass: f64,
    horizon: f64,
    dq: f64,
    variance_mode: VarianceMode,
    rule: &QuadratureRule,
) -> Result<SigmaPath> {
    let map = TimeMap::new(eps)?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    if !mass.is_finite() {
        return Err(invalid("mass rate must be finite"));
    }
    check_dq(dq)?;
    let q = q_mesh(map.q_of_t(horizon), dq);
    let continuum = 1.0 / (4.0 * PI);
    let sigma = integrate(&q, reaction.constants().l1, |q, s| {
        let shifted = map.shifted_time(q);
        let t = shifted - eps * eps;
        let variance = match &variance_mode {
            VarianceMode::Continuum => continuum,
            VarianceMode::Grid(grid) => shifted * grid.point_variance(shifted)?,
        };
        let scale = if mass == 0.0 { s } else { s * (mass * t).exp() };
        Ok(-expect_f_prime(reaction, shifted, scale, variance, rule)? * s)
    })?;
    let slopes = monotone_slopes(&q, &sigma);
    Ok(SigmaPath {
        kind: PathKind::Eps(eps),
        mass,
        reaction: reaction.name().to_string(),
        variance_mode,
        q,
        sigma,
        slopes,
    })
}

/// Solves the limit equation `dσ̄/dq = −E[F'(σ̄·W)]·σ̄`, `W ~ N(0, 1/(4π))`.
pub fn solve_sigma_limit(reaction: &Reaction, q_max: f64, dq: f64, rule: &QuadratureRule) -> Result<SigmaPath> {
    if !reaction.is_self_similar() {
        return Err(invalid("the limit equation requires a self-similar (t-independent) F"));
    }
    if !(q_max.is_finite() && q_max >= 0.0) {
        return Err(invalid(format!("q_max must be non-negative, got {q_max}")));
    }
    check_dq(dq)?;
    let q = q_mesh(q_max, dq);
    let continuum = 1.0 / (4.0 * PI);
    let sigma =
        integrate(&q, reaction.constants().l1, |_, s| Ok(-expect_f_prime(reaction, 1.0, s, continuum, rule)? * s))?;
    let slopes = monotone_slopes(&q, &sigma);
    Ok(SigmaPath {
        kind: PathKind::Limit,
        mass: 0.0,
        reaction: reaction.name().to_string(),
        variance_mode: VarianceMode::Continuum,
        q,
        sigma,
        slopes,
    })
}

/// `v_ε(t) = σ_ε(t)·e^{mt}G_t ∗ η_ε`.
pub fn mkv_field(path: &SigmaPath, t: f64, eta_eps: &RealField, mass: f64) -> Result<RealField> {
    if let VarianceMode::Grid(grid) = path.variance_mode() {
        if grid != eta_eps.grid() {
            return Err(Error::GridMismatch(format!("path solved on {grid:?}, field lives on {:?}", eta_eps.grid())));
        }
    }
    if mass != path.mass() {
        return Err(invalid(format!("path solved with m = {}, requested m = {mass}", path.mass())));
    }
    let sigma = path.at_time(t)?;
    Ok(apply_semigroup(eta_eps, t, mass)?.scaled(sigma))
}

/// `σ̄(q) = (1 + 3qλ²/(2π))^{−1/2}` for `F(w) = λ²w³`.
pub fn allen_cahn_sigma_closed(lambda: f64, q: f64) -> f64 {
    (1.0 + 3.0 * q * lambda * lambda / (2.0 * PI)).powf(-0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_values() {
        assert_eq!(allen_cahn_sigma_closed(1.0, 0.0), 1.0);
        assert!((allen_cahn_sigma_closed(1.0, 2.0) - 0.7152114).abs() < 1e-7);
        assert!((allen_cahn_sigma_closed(2.0, 2.0) - 0.4555008).abs() < 1e-7);
        assert!((allen_cahn_sigma_closed(1.0, 1.0) - 0.8226999).abs() < 1e-7);
    }

    #[test]
    fn time_map_roundtrip() {
        let map = TimeMap::new(0.1).unwrap();
        assert_eq!(map.q_of_t(0.0), 0.0);
        assert_relative_eq!(map.t_of_q(1.0), 0.09, max_relative = 1e-13);
        for &t in &[1e-3, 0.09, 0.5, 1.0, 7.0] {
            assert_relative_eq!(map.t_of_q(map.q_of_t(t)), t, max_relative = 1e-12);
        }
        assert!(TimeMap::new(1.0).is_err());
    }

    #[test]
    fn mesh_is_uniform_with_closing_node() {
        let q = q_mesh(0.0035, 1e-3);
        assert_eq!(q.len(), 5);
        assert_eq!(q[3], 3.0 * 1e-3);
        assert_eq!(q[4], 0.0035);
        assert_eq!(q_mesh(0.0, 1e-3), vec![0.0]);
        let q = q_mesh(2.0, 0.5);
        assert_eq!(q, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn zero_reaction_keeps_sigma_one() {
        let rule = QuadratureRule::gauss_hermite(16).unwrap();
        let path = solve_sigma_eps(&Reaction::zero(), 0.1, 1.0, 1.0, 1e-2, VarianceMode::Continuum, &rule).unwrap();
        assert!(path.sigma_values().iter().all(|s| *s == 1.0));
        for &t in &[0.0, 0.01, 0.5, 1.0] {
            assert_eq!(path.at_time(t).unwrap(), 1.0);
        }
    }

    #[test]
    fn limit_path_trivial_horizon() {
        let rule = QuadratureRule::gauss_hermite(16).unwrap();
        let ac = Reaction::allen_cahn(1.0).unwrap();
        let path = solve_sigma_limit(&ac, 0.0, 1e-3, &rule).unwrap();
        assert_eq!(path.sigma_values(), &[1.0]);
        assert!(path.at_time(0.1).is_err());
        let dep = Reaction::allen_cahn(1.0).unwrap().time_dependent();
        assert!(solve_sigma_limit(&dep, 1.0, 1e-3, &rule).is_err());
    }

    #[test]
    fn sigma_at_time_uses_change_of_variables() {
        let rule = QuadratureRule::default();
        let ac = Reaction::allen_cahn(1.0).unwrap();
        let path = solve_sigma_eps(&ac, 0.1, 0.0, 1.0, 1e-3, VarianceMode::Continuum, &rule).unwrap();
        assert_eq!(path.at_time(0.0).unwrap(), 1.0);
        assert!((path.at_time(0.09).unwrap() - allen_cahn_sigma_closed(1.0, 1.0)).abs() < 1e-8);
        assert!(path.at_time(2.0).is_err());
    }

    #[test]
    fn linear_growth_respects_bound() {
        let rule = QuadratureRule::gauss_hermite(8).unwrap();
        // F(w) = −w makes σ grow like e^{q}, saturating the e^{L₁ q} bound
        let lin = Reaction::linear(-1.0).unwrap();
        let path = solve_sigma_limit(&lin, 2.0, 1e-3, &rule).unwrap();
        assert_relative_eq!(path.at_q(2.0).unwrap(), 2f64.exp(), max_relative = 1e-10);
        // a mislabeled constant trips the bound
        let wrong = lin.clone().with_constants(Default::default());
        assert!(matches!(solve_sigma_limit(&wrong, 2.0, 1e-3, &rule), Err(Error::SigmaOutOfRange { .. })));
    }

    #[test]
    fn monotone_interpolation_stays_within_data() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 1.0, 0.5, 0.49, 0.0];
        let d = monotone_slopes(&x, &y);
        assert_eq!(d[1], 0.0);
        let path = SigmaPath {
            kind: PathKind::Limit,
            mass: 0.0,
            reaction: "t".into(),
            variance_mode: VarianceMode::Continuum,
            q: x.to_vec(),
            sigma: y.to_vec(),
            slopes: d,
        };
        let mut prev = f64::INFINITY;
        for i in 0..=400 {
            let v = path.at_q(i as f64 / 100.0).unwrap();
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }
}

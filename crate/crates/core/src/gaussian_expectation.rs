//! Gaussian expectations `E[F'(t, σ·Z)]`, `Z ~ N(0, v)`, by Gauss–Hermite quadrature.
//!
//! This is the scalar kernel of both amplitude ODEs: the McKean–Vlasov field
//! is Gaussian with a known single-point variance, so no field sampling is
//! needed inside the ODE.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::grid::TorusGrid;
use crate::reaction::Reaction;

pub const DEFAULT_NODES: usize = 64;

/// Gauss–Hermite rule rescaled to the standard normal law:
/// `E[g(Z)] ≈ Σ wᵢ g(zᵢ)` with `Σ wᵢ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Nodes from Newton iteration on the orthonormal Hermite recurrence,
    /// exact for polynomials of degree up to `2n − 1`.
    pub fn gauss_hermite(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("quadrature needs at least one node"));
        }
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let pim4 = PI.powf(-0.25);
        let nf = n as f64;
        let mut z: f64 = 0.0;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for iter in 0..100 {
                let (p1, p2) = hermite_pair(n, z, pim4);
                pp = (2.0 * nf).sqrt() * p2;
                let step = p1 / pp;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) || iter == 99 {
                    // one more evaluation at the converged root for the weight
                    let (_, p2) = hermite_pair(n, z, pim4);
                    pp = (2.0 * nf).sqrt() * p2;
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        if n % 2 == 1 {
            x[n / 2] = 0.0;
        }
        let norm = PI.sqrt();
        let mut pairs: Vec<(f64, f64)> =
            x.iter().zip(&w).map(|(xi, wi)| (std::f64::consts::SQRT_2 * xi, wi / norm)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[g(Z)]` for standard normal `Z`.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(z, w)| w * g(*z)).sum()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::gauss_hermite(DEFAULT_NODES).expect("default node count is positive")
    }
}

/// Orthonormal Hermite values `(p_n(z), p_{n−1}(z))`.
fn hermite_pair(n: usize, z: f64, p0: f64) -> (f64, f64) {
    let mut p1 = p0;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, p2)
}

/// `E[F'(t, σ·Z)]` with `Z ~ N(0, variance)`.
pub fn expect_f_prime(reaction: &Reaction, t: f64, scale: f64, variance: f64, rule: &QuadratureRule) -> Result<f64> {
    if !(variance.is_finite() && variance > 0.0) {
        return Err(invalid(format!("variance must be positive, got {variance}")));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid(format!("time argument must be positive, got {t}")));
    }
    let sd = variance.sqrt();
    let mut total = 0.0;
    for (node, (z, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let argument = scale * sd * z;
        let d = reaction.derivative(t, argument);
        if !d.is_finite() {
            return Err(Error::NonFiniteIntegrand { node, argument });
        }
        total += w * d;
    }
    Ok(total)
}

/// Which single-point variance the amplitude ODE uses for `G_{t_eff} ∗ η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceMode {
    /// `1 / (4π·t_eff)`, the whole-plane value.
    Continuum,
    /// The exact discrete value on this grid, see [`TorusGrid::point_variance`].
    Grid(TorusGrid),
}

impl VarianceMode {
    pub fn label(&self) -> &'static str {
        match self {
            VarianceMode::Continuum => "continuum",
            VarianceMode::Grid(_) => "grid",
        }
    }
}

/// Single-point variance of `G_{t_eff} ∗ η` under `mode`.
pub fn variance_for_sigma_ode(mode: &VarianceMode, t_eff: f64) -> Result<f64> {
    if !(t_eff.is_finite() && t_eff > 0.0) {
        return Err(invalid(format!("effective time must be positive, got {t_eff}")));
    }
    match mode {
        VarianceMode::Continuum => Ok(1.0 / (4.0 * PI * t_eff)),
        VarianceMode::Grid(grid) => grid.point_variance(t_eff),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// E[Z^k] for standard normal Z.
    fn normal_moment(k: u32) -> f64 {
        if k % 2 == 1 {
            0.0
        } else {
            (1..k).step_by(2).map(|j| j as f64).product()
        }
    }

    #[test]
    fn weights_are_positive_and_normalized() {
        for n in [1, 2, 5, 20, 64, 128] {
            let rule = QuadratureRule::gauss_hermite(n).unwrap();
            assert!(rule.weights().iter().all(|w| *w > 0.0));
            let sum: f64 = rule.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-13, "n = {n}: {sum}");
        }
        assert!(QuadratureRule::gauss_hermite(0).is_err());
    }

    #[test]
    fn exact_for_low_degree_polynomials() {
        let rule = QuadratureRule::gauss_hermite(10).unwrap();
        for k in 0..20u32 {
            let got = rule.expect(|z| z.powi(k as i32));
            let want = normal_moment(k);
            // odd moments cancel between nodes of size ~|z|^k
            let scale: f64 = rule.nodes().iter().zip(rule.weights()).map(|(z, w)| w * z.abs().powi(k as i32)).sum();
            assert!((got - want).abs() <= 1e-12 * scale.max(1.0), "k = {k}: {got} vs {want}");
        }
        let rule = QuadratureRule::default();
        for k in [2u32, 4, 8, 16] {
            let want = normal_moment(k);
            assert_relative_eq!(rule.expect(|z| z.powi(k as i32)), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn cubic_expectation_closed_form() {
        let rule = QuadratureRule::default();
        let ac = Reaction::allen_cahn(1.0).unwrap();
        let v = 1.0 / (4.0 * PI);
        let got = expect_f_prime(&ac, 1.0, 1.0, v, &rule).unwrap();
        assert_relative_eq!(got, 3.0 / (4.0 * PI), max_relative = 1e-12);
        assert!((got - 0.2387324).abs() < 1e-7);

        assert_eq!(expect_f_prime(&Reaction::zero(), 1.0, 2.0, 0.3, &rule).unwrap(), 0.0);
        let lin = Reaction::linear(1.0).unwrap();
        assert_relative_eq!(expect_f_prime(&lin, 0.2, 5.0, 7.0, &rule).unwrap(), 1.0, max_relative = 1e-13);
        assert!(expect_f_prime(&ac, 1.0, 1.0, 0.0, &rule).is_err());
    }

    #[test]
    fn non_finite_integrand_is_located() {
        let rule = QuadratureRule::gauss_hermite(8).unwrap();
        let bad = Reaction::custom("exp", Default::default())
            .with_monotone_part(|_, w| w, |_, w| if w.abs() > 3.0 { f64::INFINITY } else { 1.0 });
        match expect_f_prime(&bad, 1.0, 1.0, 1.0, &rule) {
            Err(Error::NonFiniteIntegrand { node, argument }) => {
                assert!(argument.abs() > 3.0);
                assert!(node == 0 || node == 7);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn variance_modes() {
        let c = variance_for_sigma_ode(&VarianceMode::Continuum, 1.0).unwrap();
        assert!((c - 0.0795775).abs() < 1e-7);
        let c = variance_for_sigma_ode(&VarianceMode::Continuum, 0.25).unwrap();
        assert!((c - std::f64::consts::FRAC_1_PI).abs() < 1e-15);
        let grid = TorusGrid::new(8.0, 512).unwrap();
        let g = variance_for_sigma_ode(&VarianceMode::Grid(grid), 0.01).unwrap();
        assert!((g / 7.9577 - 1.0).abs() < 0.01);
        assert!(variance_for_sigma_ode(&VarianceMode::Continuum, 0.0).is_err());
    }

    #[test]
    fn node_doubling_is_stable_for_builtins() {
        let r64 = QuadratureRule::gauss_hermite(64).unwrap();
        let r128 = QuadratureRule::gauss_hermite(128).unwrap();
        let reactions = [
            Reaction::allen_cahn(1.3).unwrap(),
            Reaction::odd_poly(&[0.4, 0.9]).unwrap(),
            Reaction::linear(-0.7).unwrap(),
        ];
        for r in &reactions {
            for &(s, v) in &[(1.0, 0.08), (2.5, 0.3), (0.1, 3.0)] {
                let a = expect_f_prime(r, 1.0, s, v, &r64).unwrap();
                let b = expect_f_prime(r, 1.0, s, v, &r128).unwrap();
                assert!((a - b).abs() < 1e-10, "{} {a} {b}", r.name());
            }
        }
        // non-polynomial S₁ part
        let smooth =
            Reaction::custom("tanh", crate::reaction::ClassConstants { l1: 1.0, l2: 1.0, ..Default::default() })
                .with_lipschitz_part(|_, w| w.tanh(), |_, w| 1.0 / w.cosh().powi(2));
        let a = expect_f_prime(&smooth, 1.0, 1.0, 0.5, &r64).unwrap();
        let b = expect_f_prime(&smooth, 1.0, 1.0, 0.5, &r128).unwrap();
        assert!((a - b).abs() < 1e-8);
    }
}

//! Nonlinearities `F(t, w)` and the induced reaction `f(t, u) = t^{-3/2} F(t, t^{1/2} u)`.
//!
//! A [`Reaction`] is the sum of an optional globally Lipschitz part (class
//! S₁, constants `L₁`, `L₂`) and an optional odd increasing part (class S₂,
//! growth constants `γ₁`, `γ₂`, `ℓ₁`, `ℓ₂`). Each part is given as a value
//! and derivative pair; there is no symbolic layer.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A scalar function of `(t, w)`.
pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Slack used by [`Reaction::verify_class`].
pub const CLASS_SLACK: f64 = 1e-9;

/// Class metadata. `l1`/`l2` bound `Lip F₁` and `Lip F₁'`; `ell1`, `gamma1`
/// bound `Lip F₂|[0,u] ≤ ℓ₁(1 + u^γ₁)` and `ell2`, `gamma2` do the same for `F₂'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassConstants {
    #[serde(rename = "L1", default)]
    pub l1: f64,
    #[serde(rename = "L2", default)]
    pub l2: f64,
    #[serde(default = "default_gamma1")]
    pub gamma1: f64,
    #[serde(default = "default_gamma2")]
    pub gamma2: f64,
    #[serde(default)]
    pub ell1: f64,
    #[serde(default)]
    pub ell2: f64,
}

fn default_gamma1() -> f64 {
    2.0
}

fn default_gamma2() -> f64 {
    1.0
}

impl Default for ClassConstants {
    fn default() -> Self {
        Self { l1: 0.0, l2: 0.0, gamma1: 2.0, gamma2: 1.0, ell1: 0.0, ell2: 0.0 }
    }
}

impl ClassConstants {
    /// Growth envelope for `|F'|` on `[−w, w]`.
    pub fn value_envelope(&self, w: f64) -> f64 {
        self.l1 + self.ell1 * (1.0 + w.abs().powf(self.gamma1))
    }

    /// Growth envelope for the Lipschitz constant of `F'` on `[−w, w]`.
    pub fn derivative_envelope(&self, w: f64) -> f64 {
        self.l2 + self.ell2 * (1.0 + w.abs().powf(self.gamma2))
    }
}

#[derive(Clone)]
enum Part {
    /// `Σ a_k w^{2k+1}`
    OddPoly(Vec<f64>),
    Custom {
        value: ScalarFn,
        derivative: ScalarFn,
    },
    /// Derivative frozen outside `|w| ≤ level`.
    Cutoff {
        inner: Box<Part>,
        level: f64,
    },
}

impl Part {
    fn value(&self, t: f64, w: f64) -> f64 {
        match self {
            Part::OddPoly(a) => {
                let w2 = w * w;
                w * a.iter().rev().fold(0.0, |acc, c| acc * w2 + c)
            }
            Part::Custom { value, .. } => value(t, w),
            Part::Cutoff { inner, level } => {
                if w.abs() <= *level {
                    inner.value(t, w)
                } else {
                    let tail = inner.value(t, *level) + inner.derivative(t, *level) * (w.abs() - level);
                    tail.copysign(w)
                }
            }
        }
    }

    fn derivative(&self, t: f64, w: f64) -> f64 {
        match self {
            Part::OddPoly(a) => {
                let w2 = w * w;
                a.iter().enumerate().rev().fold(0.0, |acc, (k, c)| acc * w2 + (2 * k + 1) as f64 * c)
            }
            Part::Custom { derivative, .. } => derivative(t, w),
            Part::Cutoff { inner, level } => {
                if w.abs() <= *level {
                    inner.derivative(t, w)
                } else {
                    inner.derivative(t, *level)
                }
            }
        }
    }
}

/// Nonlinearity `F = F₁ + F₂` with class metadata.
#[derive(Clone)]
pub struct Reaction {
    name: String,
    lipschitz: Option<Part>,
    monotone: Option<Part>,
    constants: ClassConstants,
    self_similar: bool,
    coupling: Option<f64>,
}

impl fmt::Debug for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Reaction")
            .field("name", &self.name)
            .field("constants", &self.constants)
            .field("self_similar", &self.self_similar)
            .field("coupling", &self.coupling)
            .finish_non_exhaustive()
    }
}

impl Reaction {
    /// `F(w) = λ² w³`.
    pub fn allen_cahn(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid(format!("coupling must be positive, got {lambda}")));
        }
        let l2 = lambda * lambda;
        Ok(Self {
            name: "allen-cahn".into(),
            lipschitz: None,
            monotone: Some(Part::OddPoly(vec![0.0, l2])),
            constants: ClassConstants {
                gamma1: 2.0,
                gamma2: 1.0,
                ell1: 3.0 * l2,
                ell2: 6.0 * l2,
                ..Default::default()
            },
            self_similar: true,
            coupling: Some(lambda),
        })
    }

    /// `F(w) = a·w`, a pure S₁ reaction with `L₁ = |a|`, `L₂ = 0`.
    pub fn linear(coefficient: f64) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(invalid("linear coefficient must be finite"));
        }
        Ok(Self {
            name: "linear".into(),
            lipschitz: Some(Part::OddPoly(vec![coefficient])),
            monotone: None,
            constants: ClassConstants { l1: coefficient.abs(), ..Default::default() },
            self_similar: true,
            coupling: None,
        })
    }

    /// `F ≡ 0`.
    pub fn zero() -> Self {
        Self {
            name: "zero".into(),
            lipschitz: None,
            monotone: None,
            constants: ClassConstants::default(),
            self_similar: true,
            coupling: None,
        }
    }

    /// `F(w) = Σ_k a_k w^{2k+1}` with every `a_k ≥ 0`, placed in S₂ with
    /// `γ₁ = max(2, 2K)`, `γ₂ = max(1, 2K−1)` for top index `K`.
    pub fn odd_poly(coefficients: &[f64]) -> Result<Self> {
        if coefficients.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(invalid("odd-poly coefficients must be finite and non-negative"));
        }
        let top = coefficients.iter().rposition(|a| *a != 0.0).unwrap_or(0);
        let ell1: f64 = coefficients.iter().enumerate().map(|(k, a)| (2 * k + 1) as f64 * a).sum();
        let ell2: f64 = coefficients.iter().enumerate().map(|(k, a)| (2 * k * (2 * k + 1)) as f64 * a).sum();
        Ok(Self {
            name: "odd-poly".into(),
            lipschitz: None,
            monotone: Some(Part::OddPoly(coefficients.to_vec())),
            constants: ClassConstants {
                gamma1: (2 * top).max(2) as f64,
                gamma2: (2 * top).saturating_sub(1).max(1) as f64,
                ell1,
                ell2,
                ..Default::default()
            },
            self_similar: true,
            coupling: None,
        })
    }

    /// Empty reaction with user-declared constants; add parts with
    /// [`with_lipschitz_part`](Self::with_lipschitz_part) and
    /// [`with_monotone_part`](Self::with_monotone_part).
    pub fn custom(name: impl Into<String>, constants: ClassConstants) -> Self {
        Self { name: name.into(), lipschitz: None, monotone: None, constants, self_similar: true, coupling: None }
    }

    pub fn with_lipschitz_part(
        mut self,
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.lipschitz = Some(Part::Custom { value: Arc::new(value), derivative: Arc::new(derivative) });
        self
    }

    pub fn with_monotone_part(
        mut self,
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.monotone = Some(Part::Custom { value: Arc::new(value), derivative: Arc::new(derivative) });
        self
    }

    /// Marks `F` as depending on `t` (no limiting `q`-ODE exists then).
    pub fn time_dependent(mut self) -> Self {
        self.self_similar = false;
        self
    }

    pub fn with_constants(mut self, constants: ClassConstants) -> Self {
        self.constants = constants;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn constants(&self) -> &ClassConstants {
        &self.constants
    }

    pub fn is_self_similar(&self) -> bool {
        self.self_similar
    }

    pub fn coupling(&self) -> Option<f64> {
        self.coupling
    }

    pub fn is_zero(&self) -> bool {
        let zero_part = |p: &Option<Part>| match p {
            None => true,
            Some(Part::OddPoly(a)) => a.iter().all(|c| *c == 0.0),
            Some(_) => false,
        };
        zero_part(&self.lipschitz) && zero_part(&self.monotone)
    }

    /// Whether the S₂ part (if any) satisfies `γ₁ < 3`, `γ₂ < 2`.
    pub fn in_s_prime(&self) -> bool {
        let c = &self.constants;
        let trivial = self.monotone.is_none() || (c.ell1 == 0.0 && c.ell2 == 0.0);
        trivial || (c.gamma1 < 3.0 && c.gamma2 < 2.0)
    }

    /// `Some(a)` when `F(w) = a·w³` exactly and independent of `t`.
    pub fn pure_cubic_coefficient(&self) -> Option<f64> {
        if !self.self_similar {
            return None;
        }
        let lipschitz_zero = match &self.lipschitz {
            None => true,
            Some(Part::OddPoly(a)) => a.iter().all(|c| *c == 0.0),
            Some(_) => false,
        };
        match (&self.monotone, lipschitz_zero) {
            (Some(Part::OddPoly(a)), true) if a.len() == 2 && a[0] == 0.0 => Some(a[1]),
            _ => None,
        }
    }

    /// `F(t, w)`.
    pub fn value(&self, t: f64, w: f64) -> f64 {
        let a = self.lipschitz.as_ref().map_or(0.0, |p| p.value(t, w));
        let b = self.monotone.as_ref().map_or(0.0, |p| p.value(t, w));
        a + b
    }

    /// `∂_w F(t, w)`.
    pub fn derivative(&self, t: f64, w: f64) -> f64 {
        let a = self.lipschitz.as_ref().map_or(0.0, |p| p.derivative(t, w));
        let b = self.monotone.as_ref().map_or(0.0, |p| p.derivative(t, w));
        a + b
    }

    /// `∂_w F₂(t, w)`, or `None` when there is no monotone part.
    pub fn monotone_derivative(&self, t: f64, w: f64) -> Option<f64> {
        self.monotone.as_ref().map(|p| p.derivative(t, w))
    }

    /// `f(t, u) = t^{-3/2} F(t, √t·u)`.
    pub fn eval_f(&self, t: f64, u: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.f_unchecked(t, u))
    }

    /// `f'(t, u) = t^{-1} F'(t, √t·u)`.
    pub fn eval_f_prime(&self, t: f64, u: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.f_prime_unchecked(t, u))
    }

    #[inline]
    pub(crate) fn f_unchecked(&self, t: f64, u: f64) -> f64 {
        let s = t.sqrt();
        self.value(t, s * u) / (t * s)
    }

    #[inline]
    pub(crate) fn f_prime_unchecked(&self, t: f64, u: f64) -> f64 {
        self.derivative(t, t.sqrt() * u) / t
    }

    /// Freezes `F₂'` outside `|w| ≤ level`: `F̃₂(t, w) = ∫₀^w F₂'(t, |p| ∧ level) dp`.
    ///
    /// The result agrees with `self` for `|w| ≤ level` and lies in S₁ with
    /// `L̃₁ = L₁ + ℓ₁(1 + level^γ₁)`, `L̃₂ = L₂ + ℓ₂(1 + level^γ₂)`.
    pub fn cutoff(&self, level: f64) -> Result<Reaction> {
        if !(level.is_finite() && level > 0.0) {
            return Err(invalid(format!("cutoff level must be positive, got {level}")));
        }
        let c = self.constants;
        let mut out = self.clone();
        out.name = format!("{}|cutoff({level})", self.name);
        out.monotone = self.monotone.as_ref().map(|p| Part::Cutoff { inner: Box::new(p.clone()), level });
        out.constants.l1 = c.value_envelope(level);
        out.constants.l2 = c.derivative_envelope(level);
        Ok(out)
    }

    /// Sampling-based class check over `t_samples × w_samples`.
    ///
    /// Checks oddness of `F`, non-negativity of `F₂'`, and that difference
    /// quotients of `F` and `F'` between neighbouring `w` samples stay below
    /// the growth envelopes evaluated at the larger `|w|` of each pair.
    pub fn verify_class(&self, t_samples: &[f64], w_samples: &[f64]) -> ClassReport {
        let mut ws: Vec<f64> = w_samples.iter().copied().filter(|w| w.is_finite()).collect();
        ws.sort_by(f64::total_cmp);
        ws.dedup();
        let mut report = ClassReport {
            t_range: range(t_samples),
            w_range: range(&ws),
            samples: t_samples.len() * ws.len(),
            oddness: 0.0,
            monotonicity: 0.0,
            value_growth: f64::NEG_INFINITY,
            derivative_growth: f64::NEG_INFINITY,
            worst: None,
            passed: false,
        };
        let c = self.constants;
        let record = |report: &mut ClassReport, kind: ViolationKind, t: f64, w: f64, excess: f64| {
            let slot = match kind {
                ViolationKind::Oddness => &mut report.oddness,
                ViolationKind::Monotonicity => &mut report.monotonicity,
                ViolationKind::ValueGrowth => &mut report.value_growth,
                ViolationKind::DerivativeGrowth => &mut report.derivative_growth,
            };
            *slot = slot.max(excess);
            if excess > CLASS_SLACK && report.worst.as_ref().is_none_or(|v| excess > v.excess) {
                report.worst = Some(Violation { kind, t, w, excess });
            }
        };
        for &t in t_samples {
            for &w in &ws {
                let f = self.value(t, w);
                let odd = (f + self.value(t, -w)).abs() / f.abs().max(1.0);
                record(&mut report, ViolationKind::Oddness, t, w, odd);
                if let Some(d) = self.monotone_derivative(t, w) {
                    record(&mut report, ViolationKind::Monotonicity, t, w, (-d).max(0.0));
                }
                let bound = c.value_envelope(w);
                let excess = (self.derivative(t, w).abs() - bound) / bound.max(1.0);
                record(&mut report, ViolationKind::ValueGrowth, t, w, excess);
            }
            for pair in ws.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                let reach = a.abs().max(b.abs());
                let quotient = ((self.value(t, b) - self.value(t, a)) / (b - a)).abs();
                let bound = c.value_envelope(reach);
                record(&mut report, ViolationKind::ValueGrowth, t, b, (quotient - bound) / bound.max(1.0));
                let quotient = ((self.derivative(t, b) - self.derivative(t, a)) / (b - a)).abs();
                let bound = c.derivative_envelope(reach);
                record(&mut report, ViolationKind::DerivativeGrowth, t, b, (quotient - bound) / bound.max(1.0));
            }
        }
        report.passed = report.samples > 0 && report.worst.is_none();
        report
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("reaction time argument must be positive, got {t}")))
    }
}

fn range(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Oddness,
    Monotonicity,
    ValueGrowth,
    DerivativeGrowth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub t: f64,
    pub w: f64,
    /// Excess over the bound, relative to `max(1, bound)`.
    pub excess: f64,
}

/// Worst-case relative excesses found by [`Reaction::verify_class`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub t_range: (f64, f64),
    pub w_range: (f64, f64),
    pub samples: usize,
    pub oddness: f64,
    pub monotonicity: f64,
    pub value_growth: f64,
    pub derivative_growth: f64,
    pub worst: Option<Violation>,
    pub passed: bool,
}

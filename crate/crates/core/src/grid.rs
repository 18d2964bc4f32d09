//! Periodic square torus standing in for the plane, its discrete Fourier
//! transform, and the heat semigroup with a mass term.
//!
//! Fields are stored row-major: `values[iy * n + ix]` is the sample at
//! `(ix·h, iy·h)`. The forward transform divides by `n²`, so the zero-mode
//! coefficient equals the field mean; the inverse transform is the plain sum.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Relative tolerance on the Hermitian defect accepted by [`inverse_transform`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// Discretization `[0, L)²` with `n × n` points and spacing `h = L / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    side_length: f64,
    points_per_side: usize,
}

impl TorusGrid {
    pub const MIN_POINTS: usize = 8;

    pub fn new(side_length: f64, points_per_side: usize) -> Result<Self> {
        if !(side_length.is_finite() && side_length > 0.0) {
            return Err(invalid(format!("side length must be positive, got {side_length}")));
        }
        if points_per_side < Self::MIN_POINTS {
            return Err(invalid(format!("need at least {} points per side, got {points_per_side}", Self::MIN_POINTS)));
        }
        Ok(Self { side_length, points_per_side })
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    pub fn points_per_side(&self) -> usize {
        self.points_per_side
    }

    pub fn spacing(&self) -> f64 {
        self.side_length / self.points_per_side as f64
    }

    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Total number of grid points, `n²`.
    pub fn len(&self) -> usize {
        self.points_per_side * self.points_per_side
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed mode number of storage index `k`: `0, 1, …, ⌈n/2⌉−1, −⌊n/2⌋, …, −1`.
    pub fn mode_number(&self, k: usize) -> i64 {
        let n = self.points_per_side;
        if k < n.div_ceil(2) {
            k as i64
        } else {
            k as i64 - n as i64
        }
    }

    /// Angular wavenumber `2πk / L` for storage index `k` along one axis.
    pub fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI * self.mode_number(k) as f64 / self.side_length
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.points_per_side + ix
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.points_per_side, index / self.points_per_side)
    }

    pub fn position(&self, index: usize) -> (f64, f64) {
        let (ix, iy) = self.coords(index);
        let h = self.spacing();
        (ix as f64 * h, iy as f64 * h)
    }

    /// Squared minimal-image distance between two grid points.
    pub fn torus_distance_squared(&self, a: usize, b: usize) -> f64 {
        let n = self.points_per_side as i64;
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        let wrap = |d: i64| {
            let d = d.rem_euclid(n);
            d.min(n - d) as f64
        };
        let h = self.spacing();
        let dx = wrap(ax as i64 - bx as i64) * h;
        let dy = wrap(ay as i64 - by as i64) * h;
        dx * dx + dy * dy
    }

    /// Per-axis factors `exp(−rate·ξ_k²)`.
    pub(crate) fn axis_decay(&self, rate: f64) -> Vec<f64> {
        (0..self.points_per_side)
            .map(|k| {
                let xi = self.wavenumber(k);
                (-rate * xi * xi).exp()
            })
            .collect()
    }

    /// Single-point variance of `G_{t_eff} ∗ η` for the discrete white noise
    /// on this grid (see [`grid_point_variance`]).
    pub fn point_variance(&self, t_eff: f64) -> Result<f64> {
        grid_point_variance(self, t_eff)
    }

    fn check_same(&self, other: &TorusGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Variance at one grid point of white noise (cells i.i.d. `N(0, 1/h²)`)
/// after spectral heat flow for total time `t_eff`:
/// `(1/L²)·Σ_k exp(−|ξ_k|²·t_eff)`, which tends to `1/(4π·t_eff)` as the
/// grid is refined and enlarged.
pub fn grid_point_variance(grid: &TorusGrid, t_eff: f64) -> Result<f64> {
    if !(t_eff.is_finite() && t_eff > 0.0) {
        return Err(invalid(format!("diffusion time must be positive, got {t_eff}")));
    }
    let axis: f64 = grid.axis_decay(t_eff).iter().sum();
    let l = grid.side_length();
    Ok(axis * axis / (l * l))
}

/// Real samples on a [`TorusGrid`]; every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite field value at index {index}")));
        }
        Ok(Self { grid, values })
    }

    /// Skips the finiteness scan; callers guarantee the invariant.
    pub(crate) fn from_parts(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::from_parts(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: TorusGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()])
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|i| {
                let (x, y) = grid.position(i);
                f(x, y)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Root mean square over grid points.
    pub fn rms(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_parts(self.grid, self.values.iter().map(|v| v * factor).collect())
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &RealField, b: f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Self::new(self.grid, values)
    }

    pub fn max_abs_diff(&self, other: &RealField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (x, y)| m.max((x - y).abs())))
    }

    /// Root mean square of `self − other`.
    pub fn rms_diff(&self, other: &RealField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let sum: f64 = self.values.iter().zip(&other.values).map(|(x, y)| (x - y) * (x - y)).sum();
        Ok((sum / self.values.len() as f64).sqrt())
    }
}

/// Discrete Fourier coefficients, stored with the same index layout as
/// [`RealField`] (storage index `k` ↔ mode [`TorusGrid::mode_number`]).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: TorusGrid, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coefficients.len()
            )));
        }
        Ok(Self { grid, coefficients })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, coefficients: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    /// Coefficient of the signed mode `(kx, ky)`.
    pub fn mode(&self, kx: i64, ky: i64) -> Complex64 {
        let n = self.grid.points_per_side() as i64;
        let ix = kx.rem_euclid(n) as usize;
        let iy = ky.rem_euclid(n) as usize;
        self.coefficients[self.grid.index(ix, iy)]
    }

    /// `max_k |c(k) − conj(c(−k))|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.points_per_side();
        let mut defect: f64 = 0.0;
        for iy in 0..n {
            let jy = (n - iy) % n;
            for ix in 0..n {
                let jx = (n - ix) % n;
                let a = self.coefficients[iy * n + ix];
                let b = self.coefficients[jy * n + jx];
                defect = defect.max((a - b.conj()).norm());
            }
        }
        defect
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let mut cache = CACHE.get_or_init(Default::default).lock().unwrap();
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) })
        })
        .clone()
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Reusable unnormalized 2D transform plus a complex work buffer.
pub(crate) struct SpectralWorkspace {
    grid: TorusGrid,
    plans: Arc<Plans>,
    scratch: Vec<Complex64>,
    buffer: Vec<Complex64>,
}

impl SpectralWorkspace {
    pub(crate) fn new(grid: TorusGrid) -> Self {
        let n = grid.points_per_side();
        let plans = plans(n);
        let scratch_len = plans.forward.get_inplace_scratch_len().max(plans.inverse.get_inplace_scratch_len());
        Self {
            grid,
            plans,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            buffer: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    fn transform(&mut self, forward: bool) {
        let n = self.grid.points_per_side();
        let fft = if forward { &self.plans.forward } else { &self.plans.inverse };
        fft.process_with_scratch(&mut self.buffer, &mut self.scratch);
        transpose_square(&mut self.buffer, n);
        fft.process_with_scratch(&mut self.buffer, &mut self.scratch);
        transpose_square(&mut self.buffer, n);
    }

    pub(crate) fn forward_into(&mut self, values: &[f64]) -> &mut [Complex64] {
        for (b, v) in self.buffer.iter_mut().zip(values) {
            *b = Complex64::new(*v, 0.0);
        }
        self.transform(true);
        &mut self.buffer
    }

    /// In place `values ← e^{m·t} G_t ∗ values` (periodic, spectrally exact).
    pub(crate) fn heat_step(&mut self, values: &mut [f64], multiplier: &HeatMultiplier) {
        debug_assert_eq!(values.len(), self.grid.len());
        self.forward_into(values);
        multiplier.apply(&mut self.buffer, self.grid.points_per_side());
        self.transform(false);
        for (v, b) in values.iter_mut().zip(&self.buffer) {
            *v = b.re;
        }
    }
}

/// Spectral multiplier `exp((m − |ξ|²/2)·t)` with the `1/n²` normalization folded in.
pub(crate) struct HeatMultiplier {
    axis: Vec<f64>,
    scale: f64,
}

impl HeatMultiplier {
    pub(crate) fn new(grid: &TorusGrid, t: f64, mass: f64) -> Self {
        let n = grid.points_per_side() as f64;
        Self { axis: grid.axis_decay(0.5 * t), scale: (mass * t).exp() / (n * n) }
    }

    fn apply(&self, data: &mut [Complex64], n: usize) {
        for (row, fy) in data.chunks_exact_mut(n).zip(&self.axis) {
            let s = self.scale * fy;
            for (c, fx) in row.iter_mut().zip(&self.axis) {
                *c *= s * fx;
            }
        }
    }
}

/// Normalized forward transform: the zero mode equals the field mean.
pub fn forward_transform(field: &RealField) -> SpectralField {
    let grid = *field.grid();
    let mut ws = SpectralWorkspace::new(grid);
    let scale = 1.0 / grid.len() as f64;
    let coefficients = ws.forward_into(field.values()).iter().map(|c| c * scale).collect();
    SpectralField { grid, coefficients }
}

/// Inverse of [`forward_transform`]. Fails when the coefficients are not
/// Hermitian to within [`HERMITIAN_TOLERANCE`] relative to their largest magnitude.
pub fn inverse_transform(spectrum: &SpectralField) -> Result<RealField> {
    let scale = spectrum.coefficients.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
    let defect = spectrum.hermitian_defect();
    if defect > HERMITIAN_TOLERANCE * scale {
        return Err(Error::NotHermitian { defect });
    }
    let grid = *spectrum.grid();
    let mut ws = SpectralWorkspace::new(grid);
    ws.buffer.copy_from_slice(&spectrum.coefficients);
    ws.transform(false);
    RealField::new(grid, ws.buffer.iter().map(|c| c.re).collect())
}

/// `e^{m·t} G_t ∗ f` on the torus: mode `k` is multiplied by `exp((m − |ξ_k|²/2)·t)`.
pub fn apply_semigroup(field: &RealField, t: f64, mass: f64) -> Result<RealField> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(invalid(format!("semigroup time must be non-negative, got {t}")));
    }
    if !mass.is_finite() {
        return Err(invalid("mass rate must be finite"));
    }
    if t == 0.0 {
        return Ok(field.clone());
    }
    let grid = *field.grid();
    let mut values = field.values().to_vec();
    let mut ws = SpectralWorkspace::new(grid);
    ws.heat_step(&mut values, &HeatMultiplier::new(&grid, t, mass));
    RealField::new(grid, values)
}

/// Periodized heat kernel `G^per_t(· − z)` centred on grid point `center`,
/// synthesized spectrally (unit mass over the torus).
pub fn heat_kernel(grid: &TorusGrid, t: f64, center: usize) -> Result<RealField> {
    if center >= grid.len() {
        return Err(invalid(format!("kernel centre {center} outside grid")));
    }
    let mut spike = RealField::zeros(*grid);
    spike.values_mut()[center] = 1.0 / grid.cell_area();
    apply_semigroup(&spike, t, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::new(2.0, n).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TorusGrid::new(0.0, 16).is_err());
        assert!(TorusGrid::new(1.0, 4).is_err());
        assert!(TorusGrid::new(f64::NAN, 16).is_err());
    }

    #[test]
    fn mode_numbers_cover_symmetric_range() {
        let g = grid(8);
        let modes: Vec<i64> = (0..8).map(|k| g.mode_number(k)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        let g = TorusGrid::new(1.0, 9).unwrap();
        let modes: Vec<i64> = (0..9).map(|k| g.mode_number(k)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, 4, -4, -3, -2, -1]);
    }

    #[test]
    fn constant_and_zero_fields_transform_to_zero_mode() {
        let g = grid(16);
        let spec = forward_transform(&RealField::constant(g, 2.5).unwrap());
        assert_relative_eq!(spec.mode(0, 0).re, 2.5, epsilon = 1e-14);
        let rest = spec.coefficients()[1..].iter().fold(0.0_f64, |m, c| m.max(c.norm()));
        assert!(rest < 1e-14);

        let spec = forward_transform(&RealField::zeros(g));
        assert!(spec.coefficients().iter().all(|c| c.norm() == 0.0));
        let back = inverse_transform(&SpectralField::zeros(g)).unwrap();
        assert!(back.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_cosine_has_two_half_coefficients() {
        let g = grid(32);
        let l = g.side_length();
        let f = RealField::from_fn(g, |x, _| (2.0 * PI * x / l).cos()).unwrap();
        let spec = forward_transform(&f);
        assert_relative_eq!(spec.mode(1, 0).re, 0.5, epsilon = 1e-14);
        assert_relative_eq!(spec.mode(-1, 0).re, 0.5, epsilon = 1e-14);
        assert!(spec.mode(1, 0).im.abs() < 1e-14);
        assert!(spec.mode(0, 1).norm() < 1e-14);
    }

    #[test]
    fn zero_mode_inverts_to_constant() {
        let g = grid(16);
        let mut spec = SpectralField::zeros(g);
        spec.coefficients_mut()[0] = Complex64::new(-1.5, 0.0);
        let f = inverse_transform(&spec).unwrap();
        assert!(f.values().iter().all(|v| (v + 1.5).abs() < 1e-14));
    }

    #[test]
    fn non_hermitian_spectrum_is_rejected() {
        let g = grid(16);
        let mut spec = SpectralField::zeros(g);
        spec.coefficients_mut()[1] = Complex64::new(1.0, 0.0);
        assert!(matches!(inverse_transform(&spec), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn semigroup_identity_and_constants() {
        let g = grid(16);
        let f = RealField::from_fn(g, |x, y| (x * 3.0).sin() + y).unwrap();
        assert_eq!(apply_semigroup(&f, 0.0, 1.0).unwrap(), f);
        let c = RealField::constant(g, 3.0).unwrap();
        let out = apply_semigroup(&c, 5.0, 0.0).unwrap();
        assert!(out.values().iter().all(|v| (v - 3.0).abs() < 1e-13));
        assert!(apply_semigroup(&c, -1.0, 0.0).is_err());
    }

    #[test]
    fn cosine_is_damped_by_analytic_multiplier() {
        let g = TorusGrid::new(3.0, 32).unwrap();
        let l = g.side_length();
        let f = RealField::from_fn(g, |x, _| (2.0 * PI * x / l).cos()).unwrap();
        let out = apply_semigroup(&f, 1.0, 0.0).unwrap();
        let damp = (-2.0 * PI * PI / (l * l)).exp();
        for (o, v) in out.values().iter().zip(f.values()) {
            assert!((o - v * damp).abs() < 1e-13);
        }
    }

    #[test]
    fn point_variance_limits() {
        let g = TorusGrid::new(8.0, 512).unwrap();
        let v = g.point_variance(0.01).unwrap();
        let continuum = 1.0 / (4.0 * PI * 0.01);
        assert!((v / continuum - 1.0).abs() < 0.01, "{v} vs {continuum}");

        // only the zero mode survives long diffusion: variance → 1/L²
        let v = g.point_variance(1e4).unwrap();
        assert_relative_eq!(v, 1.0 / 64.0, max_relative = 1e-12);

        let coarse = TorusGrid::new(8.0, 256).unwrap().point_variance(0.05).unwrap();
        let fine = TorusGrid::new(8.0, 512).unwrap().point_variance(0.05).unwrap();
        assert!((coarse / fine - 1.0).abs() < 1e-3);

        assert!(g.point_variance(0.0).is_err());
    }

    #[test]
    fn point_variance_matches_direct_mode_sum() {
        let g = TorusGrid::new(1.5, 12).unwrap();
        let t = 0.02;
        let mut direct = 0.0;
        for ky in 0..12 {
            for kx in 0..12 {
                let xi2 = g.wavenumber(kx).powi(2) + g.wavenumber(ky).powi(2);
                direct += (-xi2 * t).exp();
            }
        }
        direct /= 1.5 * 1.5;
        assert_relative_eq!(g.point_variance(t).unwrap(), direct, max_relative = 1e-13);
    }

    #[test]
    fn heat_kernel_has_unit_mass_and_matches_gaussian() {
        let g = TorusGrid::new(4.0, 64).unwrap();
        let t = 0.05;
        let center = g.index(10, 20);
        let k = heat_kernel(&g, t, center).unwrap();
        let mass: f64 = k.values().iter().sum::<f64>() * g.cell_area();
        assert_relative_eq!(mass, 1.0, max_relative = 1e-12);
        let neighbour = g.index(12, 21);
        let r2 = g.torus_distance_squared(center, neighbour);
        let gauss = (-r2 / (2.0 * t)).exp() / (2.0 * PI * t);
        assert_relative_eq!(k.values()[neighbour], gauss, max_relative = 1e-6);
    }

    #[test]
    fn torus_distance_wraps() {
        let g = TorusGrid::new(8.0, 8).unwrap();
        let d = g.torus_distance_squared(g.index(0, 0), g.index(7, 0));
        assert_relative_eq!(d, 1.0);
    }
}

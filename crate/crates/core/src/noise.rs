//! Discretized spatial white noise and its heat-kernel mollification.
//!
//! Each cell carries an independent `N(0, 1/h²)` sample, so that the grid
//! pairing `h²·Σ f(x_i) η(x_i)` has variance `h²·Σ f(x_i)²`, the Riemann sum
//! of `‖f‖²`. Replica `r` of seed `s` uses ChaCha8 stream `r` keyed by `s`,
//! which makes replicas independent of evaluation order.

use std::io::{Read, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::{apply_semigroup, RealField, TorusGrid};

/// Name of the generator family, recorded in experiment metadata.
pub const GENERATOR: &str =
    "rand_chacha::ChaCha8Rng(seed_from_u64(seed), stream = replica) / rand_distr::StandardNormal";

/// One white-noise draw, reproducible from `(seed, replica_index, grid)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub eta: RealField,
    pub seed: u64,
    pub replica_index: u64,
}

impl NoiseRealization {
    pub fn grid(&self) -> &TorusGrid {
        self.eta.grid()
    }

    /// Adds `amount` to the single cell `index` (a Gateaux direction for
    /// finite-difference checks of Malliavin derivatives).
    pub fn perturbed(&self, index: usize, amount: f64) -> Result<NoiseRealization> {
        if index >= self.grid().len() {
            return Err(invalid(format!("cell {index} outside grid")));
        }
        let mut values = self.eta.values().to_vec();
        values[index] += amount;
        Ok(NoiseRealization {
            eta: RealField::new(*self.grid(), values)?,
            seed: self.seed,
            replica_index: self.replica_index,
        })
    }
}

pub(crate) fn replica_rng(seed: u64, replica_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica_index);
    rng
}

pub fn sample_white_noise(grid: &TorusGrid, seed: u64, replica_index: u64) -> NoiseRealization {
    let mut rng = replica_rng(seed, replica_index);
    let scale = 1.0 / grid.spacing();
    let values = (0..grid.len()).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
    NoiseRealization { eta: RealField::from_parts(*grid, values), seed, replica_index }
}

/// `η_ε = G_{ε²} ∗ η`.
pub fn mollify(noise: &NoiseRealization, eps: f64) -> Result<RealField> {
    mollify_field(&noise.eta, eps)
}

pub fn mollify_field(eta: &RealField, eps: f64) -> Result<RealField> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("mollification scale must lie in (0, 1), got {eps}")));
    }
    apply_semigroup(eta, eps * eps, 0.0)
}

/// Replica-averaged second moments of `η_ε` at lag 0 and at a lag of
/// `lag_cells` grid cells, each averaged over the torus within a replica
/// (stationarity); standard errors are across replicas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceEstimate {
    pub variance: f64,
    pub variance_se: f64,
    /// Physical lag `lag_cells · h`.
    pub lag: f64,
    pub covariance: f64,
    pub covariance_se: f64,
    pub replicas: usize,
}

pub fn covariance_estimate(
    grid: &TorusGrid,
    eps: f64,
    seed: u64,
    replicas: usize,
    lag_cells: usize,
) -> Result<CovarianceEstimate> {
    if replicas < 2 {
        return Err(invalid("covariance estimate needs at least two replicas"));
    }
    let n = grid.points_per_side();
    if lag_cells >= n {
        return Err(invalid(format!("lag of {lag_cells} cells exceeds the grid")));
    }
    let per_replica: Vec<Result<(f64, f64)>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let field = mollify(&sample_white_noise(grid, seed, r), eps)?;
            let v = field.values();
            let mut sq = 0.0;
            let mut cross = 0.0;
            for iy in 0..n {
                for ix in 0..n {
                    let here = v[iy * n + ix];
                    sq += here * here;
                    // average the x- and y-shifted products
                    cross += 0.5 * here * (v[iy * n + (ix + lag_cells) % n] + v[((iy + lag_cells) % n) * n + ix]);
                }
            }
            let cells = (n * n) as f64;
            Ok((sq / cells, cross / cells))
        })
        .collect();
    let pairs = per_replica.into_iter().collect::<Result<Vec<_>>>()?;
    let stats = |xs: Vec<f64>| {
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
        (mean, (var / k).sqrt())
    };
    let (variance, variance_se) = stats(pairs.iter().map(|p| p.0).collect());
    let (covariance, covariance_se) = stats(pairs.iter().map(|p| p.1).collect());
    Ok(CovarianceEstimate {
        variance,
        variance_se,
        lag: lag_cells as f64 * grid.spacing(),
        covariance,
        covariance_se,
        replicas,
    })
}

const RASTER_MAGIC: &[u8; 8] = b"CRITFLD1";

/// Writes a field as a little-endian raster: a 32-byte header
/// (`"CRITFLD1"`, `u32` n, 4 zero bytes, `f64` L, `f64` t) followed by
/// `n²` row-major `f64` samples.
pub fn write_raster<W: Write>(mut out: W, field: &RealField, t: f64) -> Result<()> {
    let grid = field.grid();
    let n = u32::try_from(grid.points_per_side()).map_err(|_| Error::Raster("grid too large for u32 header".into()))?;
    let mut header = [0u8; 32];
    header[..8].copy_from_slice(RASTER_MAGIC);
    header[8..12].copy_from_slice(&n.to_le_bytes());
    header[16..24].copy_from_slice(&grid.side_length().to_le_bytes());
    header[24..32].copy_from_slice(&t.to_le_bytes());
    out.write_all(&header)?;
    let mut body = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        body.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&body)?;
    Ok(())
}

/// Reads a raster written by [`write_raster`], returning the field and its time stamp.
pub fn read_raster<R: Read>(mut input: R) -> Result<(RealField, f64)> {
    let mut header = [0u8; 32];
    input.read_exact(&mut header)?;
    if &header[..8] != RASTER_MAGIC {
        return Err(Error::Raster("bad magic".into()));
    }
    let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let side = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let t = f64::from_le_bytes(header[24..32].try_into().unwrap());
    let grid = TorusGrid::new(side, n)?;
    let mut body = vec![0u8; 8 * grid.len()];
    input.read_exact(&mut body)?;
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((RealField::new(grid, values)?, t))
}

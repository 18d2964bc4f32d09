//! Numerical laboratory for the scaling-critical two-dimensional
//! reaction–diffusion equation
//!
//! ```text
//! ∂t u = ½Δu + m·u − f(t + ε², u) / log(1/ε),     u(0) = η_ε = G_{ε²} ∗ η,
//! ```
//!
//! with spatial white noise `η`, together with its Gaussian (McKean–Vlasov)
//! approximation `v_ε = σ_ε(t)·e^{mt}G_t ∗ η_ε`.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`]: periodic torus, discrete Fourier transforms, exact heat semigroup.
//! - [`noise`]: white-noise sampling, mollification, raster dumps.
//! - [`reaction`]: nonlinearities `F` with their class constants, cutoffs, class checks.
//! - [`gaussian_expectation`]: Gauss–Hermite evaluation of `E[F'(t, σZ)]`.
//! - [`mckean_vlasov`]: the amplitude ODE in the exponential time variable `q`.
//! - [`spde`]: Strang splitting on the exponential mesh, Malliavin companions.
//! - [`experiments`]: Monte Carlo harness behind the `critfield` binary.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod error;
pub mod experiments;
pub mod gaussian_expectation;
pub mod grid;
pub mod mckean_vlasov;
pub mod noise;
pub mod reaction;
pub mod spde;

pub use error::{Error, Result};
pub use gaussian_expectation::{expect_f_prime, variance_for_sigma_ode, QuadratureRule, VarianceMode};
pub use grid::{apply_semigroup, forward_transform, inverse_transform, RealField, SpectralField, TorusGrid};
pub use mckean_vlasov::{allen_cahn_sigma_closed, mkv_field, solve_sigma_eps, solve_sigma_limit, SigmaPath, TimeMap};
pub use noise::{covariance_estimate, mollify, sample_white_noise, CovarianceEstimate, NoiseRealization};
pub use reaction::{ClassConstants, Reaction};
pub use spde::{build_mesh, evolve, evolve_malliavin, NonlinearScheme, SolverConfig, Trajectory};

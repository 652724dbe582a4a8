//! Reconstruction of v̂ from restricted scattering data R: the fixed-point
//! equation H = R + M(H), the two recovery formulas, low-pass truncated data
//! and a noise stability probe.

pub mod fixed_point;
pub mod reconstruct;
pub mod stability;

use thiserror::Error;

pub use fixed_point::{solve_h_from_r, solve_h_from_r_with, InverseConfig, InverseSolution};
pub use reconstruct::{
    reconstruct_truncated, reconstruct_vhat, write_reconstruction_csv, Reconstruction, TruncatedReconstruction,
};
pub use stability::{stability_probe, StabilityStats};

#[derive(Debug, Error)]
pub enum InverseError {
    #[error("|||R|||_mu = {norm:e} exceeds r/2 = {half_r:e}; the data lie outside the ball where H = R + M(H) is solved")]
    Precondition { norm: f64, half_r: f64 },
    #[error("fixed-point iteration diverged after {iterations} iterations (difference {difference:e})")]
    Divergence { iterations: usize, difference: f64 },
    #[error("fixed-point iteration did not reach tol after {iterations} iterations (difference {difference:e})")]
    NonConvergence { iterations: usize, difference: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dbar(#[from] fd_dbar::DbarError),
    #[error(transparent)]
    Core(#[from] fd_core::CoreError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

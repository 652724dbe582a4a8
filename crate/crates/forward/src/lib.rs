//! Direct problem: H(k, ·) from v̂ by successive approximations, restriction to
//! scattering data R(p) = H(k_γ(p), p), low-pass truncation and the Born limit.

pub mod born;
pub mod quadrature;
pub mod scatter;
pub mod solve;

use thiserror::Error;

pub use born::{born_limit_sweep, lambda_for_im_k, BornRow};
pub use quadrature::XiQuadrature;
pub use scatter::{restrict_r, ScatterData};
pub use solve::{apply_a, solve_h_at_k, ForwardConfig, ForwardSolution};

#[derive(Debug, Error)]
pub enum ForwardError {
    #[error("successive approximations diverged after {iterations} iterations (difference {difference:e})")]
    Divergence { iterations: usize, difference: f64 },
    #[error("no convergence in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("at p-node {index}: {source}")]
    AtNode {
        index: usize,
        #[source]
        source: Box<ForwardError>,
    },
    #[error(transparent)]
    Core(fd_core::CoreError),
    #[error(transparent)]
    Geometry(#[from] fd_geometry::GeometryError),
    #[error("scatter data: {0}")]
    Data(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! ∂̄-machinery on Ω in λ-coordinates: the bracket {U₁,U₂}, area Cauchy transforms,
//! the operators I, N, M, and a numerical residual of ∂H/∂λ̄ = {H,H}.

pub mod bracket;
pub mod omega;
pub mod operators;
pub mod residual;
pub mod zeta;

use thiserror::Error;

pub use bracket::{bracket, bracket_weight, PhiRule};
pub use omega::{ChartField, ForwardOmega, OmegaField};
pub use operators::{m_from_n, operator_i, operator_m, operator_n, NOutput, OperatorConfig};
pub use residual::{dbar_residual, ResidualPoint};
pub use zeta::{cauchy_transform, ZetaQuadrature};

#[derive(Debug, Error)]
pub enum DbarError {
    #[error("lambda must be nonzero")]
    ZeroLambda,
    #[error("Cauchy transform tail {tail:e} exceeds 10% of the accumulated value {total:e}")]
    TailTooLarge { tail: f64, total: f64 },
    #[error(transparent)]
    Geometry(#[from] fd_geometry::GeometryError),
    #[error(transparent)]
    Forward(#[from] fd_forward::ForwardError),
    #[error(transparent)]
    Core(#[from] fd_core::CoreError),
}

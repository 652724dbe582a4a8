use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fd_core::{Grid, PotentialSpec, Vec3, C64};
use fd_forward::ForwardConfig;
use fd_geometry::{k_of_lambda, Frame};

use crate::bracket::{bracket, PhiRule};
use crate::omega::ForwardOmega;
use crate::DbarError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub lambda: C64,
    pub p: Vec3,
    pub residual: f64,
    pub lhs: C64,
    pub rhs: C64,
}

/// Relative residual of ∂H/∂λ̄ = {H, H} at each sample point.
///
/// The left side is a central difference ½(∂_{Re λ} + i∂_{Im λ}) with step
/// `fd_step·|λ|` (four forward solves); the right side is the bracket with
/// H(k, −ξ) from the solve at k and H(k + ξ, p + ξ) from one solve per φ-node.
pub fn dbar_residual(
    vhat: &PotentialSpec,
    points: &[(C64, Vec3)],
    fd_step: f64,
    phi_nodes: usize,
    frame: &Frame<f64>,
    grid: &Arc<Grid>,
    cfg: &ForwardConfig,
) -> Result<Vec<ResidualPoint>, DbarError> {
    points
        .par_iter()
        .map(|&(lambda, p)| {
            let field = ForwardOmega::new(vhat.clone(), grid.clone(), cfg.clone());
            let h_at = |l: C64| -> Result<C64, DbarError> {
                let k = k_of_lambda(l, &p, frame)?;
                Ok(field.solution(&k)?.eval(&p))
            };
            let d = fd_step * lambda.norm();
            let dre = (h_at(lambda + d)? - h_at(lambda - d)?) / (2.0 * d);
            let dim = (h_at(lambda + C64::new(0.0, d))? - h_at(lambda - C64::new(0.0, d))?) / (2.0 * d);
            let lhs = (dre + C64::new(0.0, 1.0) * dim) * 0.5;
            let rhs = bracket(&field, &field, lambda, &p, frame, &PhiRule { phi_nodes })?;
            let den = lhs.norm() + rhs.norm() + f64::EPSILON;
            let num = (lhs - rhs).norm();
            let residual = if num == 0.0 { 0.0 } else { num / den };
            Ok(ResidualPoint { lambda, p, residual, lhs, rhs })
        })
        .collect()
}

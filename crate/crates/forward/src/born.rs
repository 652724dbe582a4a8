use std::sync::Arc;

use serde::{Deserialize, Serialize};

use fd_core::vec3::norm;
use fd_core::{Grid, PotentialSpec, Vec3, C64};
use fd_geometry::{k_of_lambda, Frame};

use crate::solve::{solve_h_at_k, ForwardConfig};
use crate::ForwardError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BornRow {
    pub tau: f64,
    pub lambda: f64,
    /// max over p-nodes of (1+|p|)^μ |H(k_τ, p) − v̂(p)|
    pub weighted_error: f64,
    /// (1+|p₀|)^μ |H(k_τ, p₀) − v̂(p₀)|
    pub error_at_p0: f64,
    /// 2ĉ₂C²(ln τ)²/τ, present when ln τ ≥ 2 and ĉ₂ is known.
    pub envelope: Option<f64>,
    pub iterations: usize,
}

/// Real λ > 1 with |Im k(λ, p)| = τ, i.e. (|p|/4)(λ + 1/λ) = τ.
pub fn lambda_for_im_k(tau: f64, p_norm: f64) -> Option<f64> {
    let q = 2.0 * tau / p_norm;
    if q < 1.0 {
        return None;
    }
    Some(q + (q * q - 1.0).sqrt())
}

/// H(k_τ, ·) − v̂ for k_τ = k(λ_τ, p₀) with |Im k_τ| = τ, over the p-grid.
pub fn born_limit_sweep(
    vhat: &PotentialSpec,
    p0: &Vec3,
    taus: &[f64],
    frame: &Frame<f64>,
    grid: &Arc<Grid>,
    cfg: &ForwardConfig,
    c2_hat: Option<f64>,
) -> Result<Vec<BornRow>, ForwardError> {
    let mu = vhat.mu;
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        let lam = lambda_for_im_k(tau, norm(p0)).ok_or_else(|| {
            ForwardError::Data(format!("tau = {tau} is below |p0|/2; no real lambda reaches it"))
        })?;
        let k = k_of_lambda(C64::new(lam, 0.0), p0, frame)?;
        let sol = solve_h_at_k(&k, vhat, grid, cfg)?;
        let mut werr: f64 = 0.0;
        for (p, h) in grid.p_nodes.iter().zip(&sol.h.values) {
            werr = werr.max((1.0 + norm(p)).powf(mu) * (h - vhat.eval(p)).norm());
        }
        let e0 = (1.0 + norm(p0)).powf(mu) * (sol.eval(p0) - vhat.eval(p0)).norm();
        let envelope = match c2_hat {
            Some(c2) if tau.ln() >= 2.0 => {
                Some(2.0 * c2 * vhat.declared_c.powi(2) * tau.ln().powi(2) / tau)
            }
            _ => None,
        };
        rows.push(BornRow {
            tau,
            lambda: lam,
            weighted_error: werr,
            error_at_p0: e0,
            envelope,
            iterations: sol.report.iterations,
        });
    }
    Ok(rows)
}

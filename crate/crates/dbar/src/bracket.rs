use std::f64::consts::PI;

use fd_core::quad::{gl_panel, graded_breaks};
use fd_core::vec3::{add, neg, norm, re};
use fd_core::{Vec3, C64};
use fd_geometry::{k_of_lambda, psi_of_k, xi_on_circle, Frame};

use crate::omega::OmegaField;
use crate::DbarError;

/// Rule for the φ-integral of the bracket.
///
/// The integrand is periodic but its factors change on the scale 1/|Re k| near
/// φ = 0 (where ξ → 0) and φ = ψ (where p + ξ → 0), so [−π, π] is split at 0 and ψ
/// and each piece gets Gauss panels refined geometrically toward its ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiRule {
    pub phi_nodes: usize,
}

impl PhiRule {
    pub fn nodes(&self, psi: f64, t: f64) -> Vec<(f64, f64)> {
        const M: usize = 4;
        let hmax = 2.0 * PI * M as f64 / self.phi_nodes.max(M) as f64;
        let h0 = (0.5 * hmax).min(0.5 / t.max(1e-12));
        let mut cuts = vec![-PI, 0.0, psi.clamp(-PI, PI), PI];
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let mut out = Vec::new();
        for w in cuts.windows(2) {
            let br = graded_breaks(w[0], w[1], h0);
            for b in br.windows(2) {
                let n = ((b[1] - b[0]) / hmax).ceil().max(1.0) as usize;
                for j in 0..n {
                    let lo = b[0] + (b[1] - b[0]) * j as f64 / n as f64;
                    let hi = b[0] + (b[1] - b[0]) * (j + 1) as f64 / n as f64;
                    out.extend(gl_panel(M, lo, hi));
                }
            }
        }
        out
    }
}

/// The φ-dependent factor −(π/4)((|p|/2)((|λ|²−1)/(λ̄|λ|))(cos φ − 1) − (|p|/λ̄) sin φ).
pub fn bracket_weight(lambda: C64, p_norm: f64, phi: f64) -> C64 {
    let m = lambda.norm();
    let lb = lambda.conj();
    let a = (m * m - 1.0) / (lb * m) * (0.5 * p_norm);
    let b = p_norm / lb;
    (a * (phi.cos() - 1.0) - b * phi.sin()) * (-PI / 4.0)
}

const NUDGE: f64 = 1e-7;

/// {U₁, U₂}(λ, p): U₁ is read at (k, −ξ(φ)) and U₂ at (k + ξ(φ), p + ξ(φ)).
///
/// All U₁ values are requested before any U₂ value, so fields that cache per k
/// solve once for U₁.
pub fn bracket(
    u1: &dyn OmegaField,
    u2: &dyn OmegaField,
    lambda: C64,
    p: &Vec3,
    frame: &Frame<f64>,
    rule: &PhiRule,
) -> Result<C64, DbarError> {
    if lambda.norm() == 0.0 {
        return Err(DbarError::ZeroLambda);
    }
    let k = k_of_lambda(lambda, p, frame)?;
    let t = norm(&re(&k));
    let psi = psi_of_k(&k, p)?;
    let nodes = rule.nodes(psi, t);
    let pn = norm(p);

    let mut phis = Vec::with_capacity(nodes.len());
    let mut first = Vec::with_capacity(nodes.len());
    for &(phi, _) in &nodes {
        let mut ph = phi;
        let mut tries = 0;
        loop {
            let xi = xi_on_circle(&k, ph);
            match u1.eval(&k, &neg(&xi)) {
                Ok(v) => {
                    first.push(v);
                    break;
                }
                Err(DbarError::Geometry(_)) | Err(DbarError::ZeroLambda) if tries < 3 => {
                    ph += NUDGE;
                    tries += 1;
                }
                Err(e) => return Err(e),
            }
        }
        phis.push(ph);
    }
    let mut total = C64::new(0.0, 0.0);
    for (i, &(_, w)) in nodes.iter().enumerate() {
        let mut ph = phis[i];
        let mut tries = 0;
        let v2 = loop {
            let xi = xi_on_circle(&k, ph);
            let k2 = [k[0] + xi[0], k[1] + xi[1], k[2] + xi[2]];
            match u2.eval(&k2, &add(p, &xi)) {
                Ok(v) => break v,
                Err(DbarError::Geometry(_)) | Err(DbarError::ZeroLambda) if tries < 3 => {
                    ph += NUDGE;
                    tries += 1;
                }
                Err(e) => return Err(e),
            }
        };
        total += bracket_weight(lambda, pn, ph) * first[i] * v2 * w;
    }
    Ok(total)
}

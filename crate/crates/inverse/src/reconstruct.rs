use std::path::Path;

use serde::Serialize;

use fd_core::vec3::norm;
use fd_core::{PField, WeightedField, C64};
use fd_forward::ScatterData;
use fd_geometry::Frame;

use crate::fixed_point::{solve_h_from_r, InverseConfig, InverseSolution};
use crate::InverseError;

/// v̂ recovered from the fixed point H.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// R(p) − N(H)(λ₀(p), p)
    pub vhat: PField,
    /// R(p) + M(H)(0, p)
    pub cross_check: PField,
    /// ‖cross_check − vhat‖_μ; the two agree exactly when N(H)(0, ·) = 0.
    pub discrepancy: f64,
    /// ‖N(H)(0, ·)‖_μ
    pub n_at_zero: f64,
}

pub fn reconstruct_vhat(sol: &InverseSolution, r: &ScatterData) -> Result<Reconstruction, InverseError> {
    let n = &sol.n_of_h;
    let primary: Vec<C64> = r.r.values.iter().zip(&n.at_lambda0.values).map(|(a, b)| a - b).collect();
    let cross: Vec<C64> = r
        .r
        .values
        .iter()
        .zip(&n.at_zero.values)
        .zip(&n.at_lambda0.values)
        .map(|((a, z), l)| a + (z - l))
        .collect();
    let vhat = r.r.with_values(primary);
    let cross_check = r.r.with_values(cross);
    let discrepancy = cross_check.distance(&vhat)?;
    let n_at_zero = n.at_zero.norm()?;
    Ok(Reconstruction { vhat, cross_check, discrepancy, n_at_zero })
}

#[derive(Debug, Clone)]
pub struct TruncatedReconstruction {
    pub tau: f64,
    /// χ₂τR + M(H₂τ)(0, ·)
    pub vhat_plus: PField,
    /// χ₂τR − N(H₂τ)(λ₀, ·)
    pub vhat_minus: PField,
    pub solution: InverseSolution,
    /// |||H − H₂τ|||_μ when the full-data H is supplied.
    pub h_distance: Option<f64>,
    /// |||R|||_{μ*}/((1+2τ)^{μ*−μ}(1 − 4ĉ₆r)) when ĉ₆ is known and admissible.
    pub envelope: Option<f64>,
}

/// Solves H₂τ = χ₂τR + M(H₂τ) and recovers v̂ from it by both formulas.
pub fn reconstruct_truncated(
    r: &ScatterData,
    tau: f64,
    mu_star: f64,
    cfg: &InverseConfig,
    frame: &Frame<f64>,
    full_h: Option<&WeightedField>,
) -> Result<TruncatedReconstruction, InverseError> {
    let rt = r.truncate_lowpass(tau);
    let solution = solve_h_from_r(&rt, cfg, frame)?;
    let rec = reconstruct_vhat(&solution, &rt)?;
    let h_distance = match full_h {
        Some(h) => Some(h.distance(&solution.h)?),
        None => None,
    };
    let mu = r.r.mu;
    let envelope = match cfg.contraction_factor() {
        Some(q) if q < 1.0 => {
            let rs = r.r.norm_with(mu_star)?;
            Some(rs / ((1.0 + 2.0 * tau).powf(mu_star - mu) * (1.0 - q)))
        }
        _ => None,
    };
    Ok(TruncatedReconstruction {
        tau,
        vhat_plus: rec.cross_check,
        vhat_minus: rec.vhat,
        solution,
        h_distance,
        envelope,
    })
}

#[derive(Serialize)]
struct Row {
    p_x: f64,
    p_y: f64,
    p_z: f64,
    re_vhat: f64,
    im_vhat: f64,
    re_truth: f64,
    im_truth: f64,
    abs_err_weighted: f64,
}

pub fn write_reconstruction_csv(
    path: &Path,
    vhat: &PField,
    truth: &dyn Fn(&[f64; 3]) -> C64,
) -> Result<(), InverseError> {
    let mut w = csv::Writer::from_path(path)?;
    for (p, v) in vhat.grid.p_nodes.iter().zip(&vhat.values) {
        let t = truth(p);
        w.serialize(Row {
            p_x: p[0],
            p_y: p[1],
            p_z: p[2],
            re_vhat: v.re,
            im_vhat: v.im,
            re_truth: t.re,
            im_truth: t.im,
            abs_err_weighted: (1.0 + norm(p)).powf(vhat.mu) * (v - t).norm(),
        })?;
    }
    w.flush()?;
    Ok(())
}

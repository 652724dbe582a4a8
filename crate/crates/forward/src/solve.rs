use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fd_core::vec3::{add, im, neg, norm};
use fd_core::{CoreError, CVec3, Grid, PField, PotentialSpec, SolveReport, Vec3, C64};

use crate::quadrature::XiQuadrature;
use crate::ForwardError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardConfig {
    /// Base node count per coordinate of the ξ-rule.
    pub xi_nodes: usize,
    pub xi_max: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// When set, stop after exactly this many iterations without requiring `tol`.
    pub fixed_iterations: Option<usize>,
    /// Calibrated ĉ₁; used only to flag runs outside the contraction regime.
    pub c1_hat: Option<f64>,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self { xi_nodes: 16, xi_max: 6.0, tol: 1e-10, max_iter: 60, fixed_iterations: None, c1_hat: None }
    }
}

/// (A(k)U)(p) = ∫ v̂(p+ξ) U(−ξ) dξ/(ξ² + 2k·ξ) at each of `points`.
pub fn apply_a(
    quad: &XiQuadrature,
    vhat: &PotentialSpec,
    u: &(dyn Fn(&Vec3) -> C64 + Sync),
    points: &[Vec3],
) -> Vec<C64> {
    let wk = quad.weighted_kernel();
    let ux: Vec<C64> = quad.nodes.iter().zip(&wk).map(|(x, w)| u(&neg(x)) * w).collect();
    points
        .par_iter()
        .map(|p| {
            let mut s = C64::new(0.0, 0.0);
            for (x, c) in quad.nodes.iter().zip(&ux) {
                s += vhat.eval(&add(p, x)) * c;
            }
            s
        })
        .collect()
}

/// H(k, ·) on the p-grid together with the data needed to evaluate it anywhere.
#[derive(Debug, Clone)]
pub struct ForwardSolution {
    pub k: CVec3,
    pub h: PField,
    pub report: SolveReport,
    pub warnings: Vec<String>,
    pub quad: XiQuadrature,
    wk: Vec<C64>,
    /// wk_j · H(k, −ξ_j)
    whx: Vec<C64>,
    vhat: PotentialSpec,
    tail_hits: u64,
}

impl ForwardSolution {
    /// H(k, p) = v̂(p) − Σ_j w_j v̂(p+ξ_j) H(k, −ξ_j)/(ξ_j² + 2k·ξ_j), valid at any p.
    pub fn eval(&self, p: &Vec3) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (x, c) in self.quad.nodes.iter().zip(&self.whx) {
            s += self.vhat.eval(&add(p, x)) * c;
        }
        self.vhat.eval(p) - s
    }

    /// Number of interpolation queries of H(k, −ξ) beyond P_max during the solve.
    pub fn tail_hits(&self) -> u64 {
        self.tail_hits
    }

    pub fn quadrature_len(&self) -> usize {
        self.wk.len()
    }
}

/// Successive approximations H ← v̂ − A(k)H on the p-grid, starting from H = v̂.
///
/// Only the correction H − v̂ is interpolated at the points −ξ; v̂ itself is
/// evaluated exactly.
pub fn solve_h_at_k(
    k: &CVec3,
    vhat: &PotentialSpec,
    grid: &Arc<Grid>,
    cfg: &ForwardConfig,
) -> Result<ForwardSolution, ForwardError> {
    let mut warnings = Vec::new();
    if let Some(c1) = cfg.c1_hat {
        if c1 * vhat.declared_c >= 1.0 {
            warnings.push(format!(
                "c1_hat*C = {:.3} >= 1: convergence of successive approximations is not guaranteed",
                c1 * vhat.declared_c
            ));
        }
    }
    let quad = XiQuadrature::new(k, cfg.xi_max, cfg.xi_nodes);
    let wk = quad.weighted_kernel();
    let np = grid.n_p();
    let nx = quad.len();
    let mu = vhat.mu;

    let v_nodes: Vec<C64> = grid.p_nodes.iter().map(|p| vhat.eval(p)).collect();
    let v_minus_xi: Vec<C64> = quad.nodes.iter().map(|x| vhat.eval(&neg(x))).collect();
    let vmat: Vec<C64> = grid
        .p_nodes
        .par_iter()
        .flat_map_iter(|p| {
            quad.nodes
                .iter()
                .zip(&wk)
                .map(move |(x, w)| vhat.eval(&add(p, x)) * w)
                .collect::<Vec<_>>()
        })
        .collect();

    let mut g = PField::new(grid.clone(), vec![C64::new(0.0, 0.0); np], mu);
    let mut report = SolveReport::default();
    let mut hx = vec![C64::new(0.0, 0.0); nx];
    let mut bad_streak = 0;
    let target = cfg.fixed_iterations.unwrap_or(cfg.max_iter).max(1);
    loop {
        for j in 0..nx {
            hx[j] = v_minus_xi[j] + g.interpolate(&neg(&quad.nodes[j]));
        }
        let g_new: Vec<C64> = vmat
            .par_chunks(nx)
            .map(|row| {
                let mut s = C64::new(0.0, 0.0);
                for (a, b) in row.iter().zip(&hx) {
                    s += a * b;
                }
                -s
            })
            .collect();
        let g_new = g.with_values(g_new);
        let diff = g_new.distance(&g).map_err(ForwardError::from)?;
        let h_vals: Vec<C64> = g_new.values.iter().zip(&v_nodes).map(|(a, b)| a + b).collect();
        let h_norm = g.with_values(h_vals).norm()?;
        let prev = report.difference_history.last().copied();
        report.push(h_norm, diff);
        g = g_new;

        let floor = 1e-14 * h_norm.max(f64::MIN_POSITIVE);
        if let Some(prev) = prev {
            if diff >= prev && diff > floor {
                bad_streak += 1;
            } else {
                bad_streak = 0;
            }
        }
        if bad_streak >= 3 {
            return Err(ForwardError::Divergence { iterations: report.iterations, difference: diff });
        }
        if cfg.fixed_iterations.is_some() {
            if report.iterations >= target {
                break;
            }
        } else if diff <= cfg.tol || diff <= floor {
            break;
        } else if report.iterations >= target {
            return Err(ForwardError::NonConvergence { iterations: report.iterations, residual: diff });
        }
    }
    for j in 0..nx {
        hx[j] = v_minus_xi[j] + g.interpolate(&neg(&quad.nodes[j]));
    }
    let whx: Vec<C64> = hx.iter().zip(&wk).map(|(a, b)| a * b).collect();
    let h_vals: Vec<C64> = g.values.iter().zip(&v_nodes).map(|(a, b)| a + b).collect();
    let h = PField::new(grid.clone(), h_vals, mu);
    let hits = g.tail_hits();
    if hits > 0 {
        warnings.push(format!("{hits} evaluations of H(k, -xi) fell beyond P_max and were set to v_hat"));
    }
    Ok(ForwardSolution { k: *k, h, report, warnings, quad, wk, whx, vhat: vhat.clone(), tail_hits: hits })
}

/// |Im k|, the size parameter of the Born limit.
pub fn im_k_size(k: &CVec3) -> f64 {
    norm(&im(k))
}

impl From<CoreError> for ForwardError {
    fn from(e: CoreError) -> Self {
        ForwardError::Core(e)
    }
}

/// Aggregate over many forward solves.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub solves: usize,
    pub max_iterations: usize,
    pub max_residual: f64,
    pub max_contraction_ratio: f64,
    pub tail_hits: u64,
    pub warnings: Vec<String>,
}

impl SolveStats {
    pub fn absorb(&mut self, sol: &ForwardSolution) {
        self.solves += 1;
        self.max_iterations = self.max_iterations.max(sol.report.iterations);
        self.max_residual = self.max_residual.max(sol.report.residual);
        for r in &sol.report.contraction_ratios {
            self.max_contraction_ratio = self.max_contraction_ratio.max(*r);
        }
        self.tail_hits += sol.tail_hits();
        for w in &sol.warnings {
            if !self.warnings.contains(w) && !w.contains("beyond P_max") {
                self.warnings.push(w.clone());
            }
        }
    }
}

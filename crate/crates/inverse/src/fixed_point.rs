use std::time::Instant;

use serde::{Deserialize, Serialize};

use fd_core::{SolveReport, WeightedField};
use fd_dbar::{m_from_n, operator_n, NOutput, OperatorConfig};
use fd_forward::ScatterData;
use fd_geometry::Frame;

use crate::InverseError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseConfig {
    /// Radius of the |||·|||_μ-ball in which the fixed point is sought.
    pub r: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Low-pass truncation radius: data with |p| ≥ 2τ are dropped.
    pub tau: Option<f64>,
    pub c1_hat: Option<f64>,
    pub c6_hat: Option<f64>,
    #[serde(default)]
    pub operator: OperatorConfig,
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self { r: 1.0, tol: 1e-12, max_iter: 50, tau: None, c1_hat: None, c6_hat: None, operator: OperatorConfig::default() }
    }
}

impl InverseConfig {
    /// r = 2C/(1 − ĉ₁C), or None when ĉ₁C ≥ 1.
    pub fn ball_radius(c: f64, c1_hat: f64) -> Option<f64> {
        let d = 1.0 - c1_hat * c;
        (d > 0.0).then(|| 2.0 * c / d)
    }

    /// 4ĉ₆r, the a-priori contraction factor of U ↦ R + M(U) on the ball.
    pub fn contraction_factor(&self) -> Option<f64> {
        self.c6_hat.map(|c6| 4.0 * c6 * self.r)
    }

    /// Whether 4ĉ₆r < 1; None without a calibrated ĉ₆.
    pub fn admissible(&self) -> Option<bool> {
        self.contraction_factor().map(|q| q < 1.0)
    }

    /// r(4ĉ₆r)ⁿ/(2(1 − 4ĉ₆r)), the a-priori distance of the n-th iterate from the fixed point.
    pub fn iterate_error_bound(&self, n: usize) -> Option<f64> {
        let q = self.contraction_factor()?;
        (q < 1.0).then(|| self.r * q.powi(n as i32) / (2.0 * (1.0 - q)))
    }

    pub fn validate(&self) -> Result<(), InverseError> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(InverseError::Config("r must be positive".into()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(InverseError::Config("tol and max_iter must be positive".into()));
        }
        if let Some(t) = self.tau {
            if !(t > 0.0) {
                return Err(InverseError::Config("tau must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Fixed point H of U ↦ R + M(U) together with N(H), which the recovery formulas read.
#[derive(Debug, Clone)]
pub struct InverseSolution {
    pub h: WeightedField,
    pub n_of_h: NOutput,
    pub report: SolveReport,
    /// |||H − R − M(H)|||_μ from a fresh evaluation of M at the returned H.
    pub fixed_point_residual: f64,
    pub warnings: Vec<String>,
}

pub fn solve_h_from_r(r: &ScatterData, cfg: &InverseConfig, frame: &Frame<f64>) -> Result<InverseSolution, InverseError> {
    solve_h_from_r_with(r, cfg, frame, None)
}

/// Successive approximations Hₙ₊₁ = R + M(Hₙ) from `start` (H₀ = 0 by default).
pub fn solve_h_from_r_with(
    r: &ScatterData,
    cfg: &InverseConfig,
    frame: &Frame<f64>,
    start: Option<&WeightedField>,
) -> Result<InverseSolution, InverseError> {
    cfg.validate()?;
    let t0 = Instant::now();
    let mut warnings = Vec::new();
    let r_norm = r.r.norm()?;
    if r_norm > 0.5 * cfg.r {
        return Err(InverseError::Precondition { norm: r_norm, half_r: 0.5 * cfg.r });
    }
    if let Some(q) = cfg.contraction_factor() {
        if q >= 1.0 {
            warnings.push(format!("4*c6_hat*r = {q:.3} >= 1: contraction is not guaranteed"));
        }
    }
    let rf = WeightedField::from_p_field(&r.r);
    let mut report = SolveReport::default();
    if let Some(c) = cfg.c1_hat {
        report.calibrated_constants.push(("c1_hat".into(), c));
    }
    if let Some(c) = cfg.c6_hat {
        report.calibrated_constants.push(("c6_hat".into(), c));
    }

    let mut h = match start {
        Some(s) => s.clone(),
        None => WeightedField::zeros(rf.grid.clone(), rf.mu),
    };
    let mut n_of_h = operator_n(&h, frame, &cfg.operator)?;
    let mut bad_streak = 0;
    loop {
        let m = m_from_n(&n_of_h);
        let next = rf.with_values(rf.values.iter().zip(&m.values).map(|(a, b)| a + b).collect());
        let diff = next.distance(&h)?;
        let prev = report.difference_history.last().copied();
        report.push(next.norm()?, diff);
        h = next;

        if let Some(prev) = prev {
            if diff >= prev && diff > 1e-14 * r_norm {
                bad_streak += 1;
            } else {
                bad_streak = 0;
            }
        }
        if bad_streak >= 3 {
            return Err(InverseError::Divergence { iterations: report.iterations, difference: diff });
        }
        n_of_h = operator_n(&h, frame, &cfg.operator)?;
        if diff <= cfg.tol {
            break;
        }
        if report.iterations >= cfg.max_iter {
            return Err(InverseError::NonConvergence { iterations: report.iterations, difference: diff });
        }
    }
    let m = m_from_n(&n_of_h);
    let res: Vec<_> = h.values.iter().zip(&rf.values).zip(&m.values).map(|((a, b), c)| a - b - c).collect();
    let fixed_point_residual = h.with_values(res).norm()?;
    let hn = h.norm()?;
    if hn > 1.05 * cfg.r {
        warnings.push(format!("|||H|||_mu = {hn:e} exceeds the ball radius r = {:e}", cfg.r));
    }
    report.wall_time = t0.elapsed().as_secs_f64();
    Ok(InverseSolution { h, n_of_h, report, fixed_point_residual, warnings })
}

//! Calibration of the bilinear operator bound ĉ₆ and the bracket envelope K̂.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use fd_core::vec3::norm;
use fd_core::{Grid, WeightedField, C64};
use fd_dbar::{bracket, operator_i, ChartField, OperatorConfig, PhiRule};
use fd_geometry::Frame;

use crate::{BoundsError, CalibrationResult};

/// Random trial fields on the (λ, p)-grid.
pub struct TrialFields;

impl TrialFields {
    /// Sum of three Gaussian bumps in p with random centres, widths and phases,
    /// each modulated by a random rational profile in λ.
    pub fn smooth(grid: &Arc<Grid>, mu: f64, rng: &mut ChaCha8Rng) -> WeightedField {
        let bumps: Vec<([f64; 3], f64, C64, C64)> = (0..3)
            .map(|_| {
                let c = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
                let w = rng.random_range(0.5..2.0);
                let a = C64::from_polar(rng.random_range(0.2..1.0), rng.random_range(-PI..PI));
                let b = C64::from_polar(rng.random_range(0.0..1.0), rng.random_range(-PI..PI));
                (c, w, a, b)
            })
            .collect();
        WeightedField::from_fn(grid.clone(), mu, |l, p| {
            let mut s = C64::new(0.0, 0.0);
            for (c, w, a, b) in &bumps {
                let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
                let g = (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (w * w)).exp();
                s += (a + b * l / (1.0 + l.norm_sqr())) * g;
            }
            s
        })
    }

    /// Independent node values with |U(λ,p)| ≤ (1+|p|)^{−μ}.
    pub fn rough(grid: &Arc<Grid>, mu: f64, rng: &mut ChaCha8Rng) -> WeightedField {
        let np = grid.n_p();
        let vals = (0..grid.n_lambda() * np)
            .map(|i| {
                let p = &grid.p_nodes[i % np];
                C64::from_polar(rng.random_range(0.0..1.0), rng.random_range(-PI..PI)) * (1.0 + norm(p)).powf(-mu)
            })
            .collect();
        WeightedField::new(grid.clone(), vals, mu)
    }

    /// |U(λ,p)| = (1+|p|)^{−μ} with phase c + m·arg λ, m ∈ {−1, 0, 1}: fields that
    /// attain their norm at every node, which random fields rarely approach.
    pub fn saturated(grid: &Arc<Grid>, mu: f64, rng: &mut ChaCha8Rng) -> WeightedField {
        let c = rng.random_range(-PI..PI);
        let m = rng.random_range(-1i32..=1) as f64;
        WeightedField::from_fn(grid.clone(), mu, |l, p| C64::from_polar((1.0 + norm(p)).powf(-mu), c + m * l.arg()))
    }

    /// Cycles saturated, smooth and rough fields.
    pub fn nth(grid: &Arc<Grid>, mu: f64, rng: &mut ChaCha8Rng, i: usize) -> WeightedField {
        match i % 3 {
            0 => Self::saturated(grid, mu, rng),
            1 => Self::smooth(grid, mu, rng),
            _ => Self::rough(grid, mu, rng),
        }
    }
}

/// |||I(U₁,U₂)|||_μ over the λ-grid, λ₀(p) and λ = 0.
fn i_norm(u1: &WeightedField, u2: &WeightedField, frame: &Frame<f64>, cfg: &OperatorConfig) -> Result<f64, BoundsError> {
    let out = operator_i(u1, u2, frame, cfg)?;
    Ok(out.values.norm()?.max(out.at_lambda0.norm()?).max(out.at_zero.norm()?))
}

/// ĉ₆ = max over `2·trials` random pairs of |||I(U₁,U₂)|||/(|||U₁||| |||U₂|||);
/// also returns the per-pair ratios.
pub fn calibrate_c6(
    grid: &Arc<Grid>,
    mu: f64,
    frame: &Frame<f64>,
    cfg: &OperatorConfig,
    trials: usize,
    seed: u64,
) -> Result<(CalibrationResult, Vec<f64>), BoundsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(WeightedField, WeightedField)> = (0..2 * trials.max(1))
        .map(|i| (TrialFields::nth(grid, mu, &mut rng, i), TrialFields::nth(grid, mu, &mut rng, i + i / 3)))
        .collect();
    let mut ratios = Vec::with_capacity(pairs.len());
    for (u1, u2) in &pairs {
        let d = u1.norm()? * u2.norm()?;
        if d == 0.0 {
            continue;
        }
        ratios.push(i_norm(u1, u2, frame, cfg)? / d);
    }
    Ok((CalibrationResult::from_doubled("c6", &ratios), ratios))
}

/// |λ|/(|λ|²+1)² + |p|·||λ|²−1|/(|λ|²(1+|p|(|λ|+|λ|⁻¹))²) + |p|/(|λ|(1+|p|(|λ|+|λ|⁻¹))).
pub fn bracket_shape(lambda: C64, p_norm: f64) -> f64 {
    let m = lambda.norm();
    let q = 1.0 + p_norm * (m + 1.0 / m);
    m / (m * m + 1.0).powi(2) + p_norm * (m * m - 1.0).abs() / (m * m * q * q) + p_norm / (m * q)
}

/// K̂ = max of |{U₁,U₂}(λ,p)|(1+|p|)^μ/(|||U₁||| |||U₂||| · shape(λ,p)) over `pairs`
/// trial pairs and `2·points` random (λ, p), |λ| log-uniform on [0.1, 10] off the
/// unit ring and |p| ≤ P_max.
pub fn calibrate_bracket_envelope(
    grid: &Arc<Grid>,
    mu: f64,
    frame: &Frame<f64>,
    phi_nodes: usize,
    pairs: usize,
    points: usize,
    seed: u64,
) -> Result<CalibrationResult, BoundsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<(WeightedField, WeightedField)> = (0..pairs.max(1))
        .map(|i| (TrialFields::nth(grid, mu, &mut rng, i), TrialFields::nth(grid, mu, &mut rng, i + i / 3)))
        .collect();
    let pmax = grid.p_max();
    let pts: Vec<(C64, [f64; 3])> = (0..2 * points.max(1))
        .map(|_| {
            let m = loop {
                let m = rng.random_range(0.1f64.ln()..10f64.ln()).exp();
                if (m - 1.0).abs() > 0.05 {
                    break m;
                }
            };
            let l = C64::from_polar(m, rng.random_range(-PI..PI));
            let d = loop {
                let v = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                let n = norm(&v);
                if n > 0.1 && n <= 1.0 {
                    break [v[0] / n, v[1] / n, v[2] / n];
                }
            };
            let r = rng.random_range(0.05..pmax);
            (l, [r * d[0], r * d[1], r * d[2]])
        })
        .collect();
    let rule = PhiRule { phi_nodes };
    let norms: Vec<f64> = fields.iter().map(|(a, b)| Ok(a.norm()? * b.norm()?)).collect::<Result<_, BoundsError>>()?;
    let vals: Vec<f64> = pts
        .par_iter()
        .map(|(l, p)| -> Result<f64, BoundsError> {
            let mut best: f64 = 0.0;
            for ((u1, u2), n) in fields.iter().zip(&norms) {
                let c1 = ChartField { field: u1, frame: *frame };
                let c2 = ChartField { field: u2, frame: *frame };
                let b = bracket(&c1, &c2, *l, p, frame, &rule)?;
                let pn = norm(p);
                best = best.max(b.norm() * (1.0 + pn).powf(mu) / (n * bracket_shape(*l, pn)));
            }
            Ok(best)
        })
        .collect::<Result<_, _>>()?;
    Ok(CalibrationResult::from_doubled("K_bracket", &vals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_at_p_zero() {
        let l = C64::new(0.3, 0.4);
        assert!((bracket_shape(l, 0.0) - 0.5 / 1.25f64.powi(2)).abs() < 1e-14);
        assert!(bracket_shape(l, 2.0) > 0.0);
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fd_core::{PField, WeightedField, C64};
use fd_geometry::{lambda0, Frame};

use crate::bracket::{bracket, PhiRule};
use crate::omega::ChartField;
use crate::zeta::ZetaQuadrature;
use crate::DbarError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    pub phi_nodes: usize,
    /// Angular samples per ζ-ring.
    pub n_theta: usize,
    /// Gauss nodes per radial panel.
    pub ring_nodes: usize,
    pub r_min: f64,
    pub r_max: f64,
    /// Largest ratio between neighbouring radial breakpoints.
    pub ring_ratio: f64,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self { phi_nodes: 16, n_theta: 8, ring_nodes: 2, r_min: 1e-2, r_max: 1e3, ring_ratio: 2.5 }
    }
}

impl OperatorConfig {
    pub fn zeta_quadrature(&self, moduli: &[f64]) -> ZetaQuadrature {
        let mut breaks = moduli.to_vec();
        breaks.push(1.0);
        ZetaQuadrature::new(&breaks, self.r_min, self.r_max, self.ring_ratio, self.ring_nodes, self.n_theta)
    }
}

/// I(U₁,U₂) on the λ-grid, at λ₀(p) and at λ = 0.
#[derive(Debug, Clone)]
pub struct NOutput {
    pub values: WeightedField,
    pub at_lambda0: PField,
    pub at_zero: PField,
    /// Largest ratio of the far-field tail estimate to the accumulated transform.
    pub max_tail_fraction: f64,
}

/// I(U₁,U₂)(λ,p) = −(1/π)∫ {U₁′,U₂′}(ζ,p) dA(ζ)/(ζ − λ), with U′ the chart reading of U.
pub fn operator_i(
    u1: &WeightedField,
    u2: &WeightedField,
    frame: &Frame<f64>,
    cfg: &OperatorConfig,
) -> Result<NOutput, DbarError> {
    let grid = u1.grid.clone();
    let quad = cfg.zeta_quadrature(&grid.lambda_moduli);
    let pts = quad.points();
    let rule = PhiRule { phi_nodes: cfg.phi_nodes };
    let c1 = ChartField { field: u1, frame: *frame };
    let c2 = ChartField { field: u2, frame: *frame };
    let nl = grid.n_lambda();

    let per_p: Vec<(Vec<C64>, C64, C64, f64)> = grid
        .p_nodes
        .par_iter()
        .map(|p| -> Result<_, DbarError> {
            let mut samples = Vec::with_capacity(pts.len());
            for z in &pts {
                samples.push(bracket(&c1, &c2, *z, p, frame, &rule)?);
            }
            let modes = quad.modes(&samples);
            let mut worst: f64 = 0.0;
            let mut eval = |l: C64| {
                let (v, tail, acc) = quad.transform_modes(&modes, l);
                if acc > 0.0 {
                    worst = worst.max(tail / acc);
                }
                v
            };
            let vals: Vec<C64> = grid.lambda_nodes.iter().map(|l| eval(*l)).collect();
            let l0 = lambda0(p, frame)?;
            let at0 = eval(l0);
            let atz = eval(C64::new(0.0, 0.0));
            Ok((vals, at0, atz, worst))
        })
        .collect::<Result<_, _>>()?;

    let np = grid.n_p();
    let mut values = vec![C64::new(0.0, 0.0); nl * np];
    let mut a0 = Vec::with_capacity(np);
    let mut az = Vec::with_capacity(np);
    let mut worst: f64 = 0.0;
    for (ip, (vals, l0v, zv, w)) in per_p.into_iter().enumerate() {
        for (il, v) in vals.into_iter().enumerate() {
            values[il * np + ip] = v;
        }
        a0.push(l0v);
        az.push(zv);
        worst = worst.max(w);
    }
    if worst > 0.1 {
        return Err(DbarError::TailTooLarge { tail: worst, total: 1.0 });
    }
    let mu = u1.mu;
    Ok(NOutput {
        values: WeightedField::new(grid.clone(), values, mu),
        at_lambda0: PField::new(grid.clone(), a0, mu),
        at_zero: PField::new(grid, az, mu),
        max_tail_fraction: worst,
    })
}

/// N(U) = I(U, U).
pub fn operator_n(u: &WeightedField, frame: &Frame<f64>, cfg: &OperatorConfig) -> Result<NOutput, DbarError> {
    operator_i(u, u, frame, cfg)
}

/// M(U)(λ,p) = N(U)(λ,p) − N(U)(λ₀(p),p), returned with the N evaluation it came from.
pub fn operator_m(
    u: &WeightedField,
    frame: &Frame<f64>,
    cfg: &OperatorConfig,
) -> Result<(WeightedField, NOutput), DbarError> {
    let n = operator_n(u, frame, cfg)?;
    Ok((m_from_n(&n), n))
}

pub fn m_from_n(n: &NOutput) -> WeightedField {
    let np = n.values.grid.n_p();
    let vals = n
        .values
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| v - n.at_lambda0.values[i % np])
        .collect();
    n.values.with_values(vals)
}

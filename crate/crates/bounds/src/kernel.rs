//! I(k, p) = ∫ dξ / ((1+|p+ξ|)^μ (1+|ξ|)^μ |ξ² + 2kξ|) and the constants ĉ₁, ĉ₂.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fd_core::vec3::{add, complexify, cross, im, norm, normalize, scale};
use fd_core::{CVec3, Vec3};
use fd_forward::XiQuadrature;

use crate::{BoundsError, CalibrationResult};

/// Radius of the ξ-ball; the integrand beyond it is below (1+|ξ|)^{−2μ}|ξ|^{−2}.
const XI_MAX: f64 = 40.0;
const XI_NODES: usize = 20;

/// I(k, p) by the circle-adapted quadrature on |ξ| ≤ 40 plus the far-field bound
/// ∫_{|ξ|>R} dξ/|ξ|^{2μ+2} = 4π/((2μ−1)R^{2μ−1}).
pub fn kernel_integral(k: &CVec3, p: &Vec3, mu: f64) -> f64 {
    let q = XiQuadrature::new(k, XI_MAX, XI_NODES);
    let mut s = 0.0;
    for ((x, w), kv) in q.nodes.iter().zip(&q.weights).zip(&q.kernel) {
        s += w * kv.norm() * ((1.0 + norm(&add(p, x))) * (1.0 + norm(x))).powf(-mu);
    }
    s + 4.0 * PI / ((2.0 * mu - 1.0) * XI_MAX.powf(2.0 * mu - 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub im_k: f64,
    pub p_norm: f64,
    pub value: f64,
    /// (1+|p|)^μ I(k, p)
    pub weighted: f64,
    /// (1+|p|)^μ I(k, p)|Im k|/(ln|Im k|)², for ln|Im k| ≥ 2
    pub decay_weighted: Option<f64>,
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let n = norm(&v);
        if n > 0.1 && n <= 1.0 {
            return scale(1.0 / n, &v);
        }
    }
}

/// A point of the null cone Σ with |Re k| = |Im k| = t.
fn random_null_k(rng: &mut ChaCha8Rng, t: f64) -> CVec3 {
    let a = random_unit(rng);
    let b = loop {
        if let Some(b) = normalize(&cross(&a, &random_unit(rng))) {
            break b;
        }
    };
    complexify(&scale(t, &a), &scale(t, &b))
}

/// Samples (k, p) with |Im k| log-uniform on [0.05, 60] and |p| uniform on [0, 8];
/// every other sample has ln|Im k| ≥ 2.
pub fn kernel_samples(mu: f64, samples: usize, seed: u64) -> Vec<KernelSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(CVec3, Vec3)> = (0..samples)
        .map(|i| {
            let lt = if i % 2 == 1 { rng.random_range(2.0..60f64.ln()) } else { rng.random_range(0.05f64.ln()..60f64.ln()) };
            let k = random_null_k(&mut rng, lt.exp());
            let p = scale(rng.random_range(0.0..8.0), &random_unit(&mut rng));
            (k, p)
        })
        .collect();
    pts.par_iter()
        .map(|(k, p)| {
            let value = kernel_integral(k, p, mu);
            let t = norm(&im(k));
            let weighted = (1.0 + norm(p)).powf(mu) * value;
            let lt = t.ln();
            KernelSample {
                im_k: t,
                p_norm: norm(p),
                value,
                weighted,
                decay_weighted: (lt >= 2.0).then(|| weighted * t / (lt * lt)),
            }
        })
        .collect()
}

/// ĉ₁ = sup (1+|p|)^μ I(k,p) and ĉ₂ = sup over ln|Im k| ≥ 2 of (1+|p|)^μ I |Im k|/(ln|Im k|)²,
/// each with its drift between `samples` and `2·samples` points.
pub fn calibrate_c1_c2(mu: f64, samples: usize, seed: u64) -> Result<(CalibrationResult, CalibrationResult), BoundsError> {
    if mu < 2.0 {
        return Err(BoundsError::Invalid(format!("mu must be at least 2, got {mu}")));
    }
    let s = kernel_samples(mu, 2 * samples.max(4), seed);
    if let Some(bad) = s.iter().find(|x| !(x.value > 0.0 && x.value.is_finite())) {
        return Err(BoundsError::Quadrature(format!("I(k,p) = {} at |Im k| = {}", bad.value, bad.im_k)));
    }
    let w: Vec<f64> = s.iter().map(|x| x.weighted).collect();
    let d: Vec<f64> = s.iter().map(|x| x.decay_weighted.unwrap_or(0.0)).collect();
    Ok((CalibrationResult::from_doubled("c1", &w), CalibrationResult::from_doubled("c2", &d)))
}

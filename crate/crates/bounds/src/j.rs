//! Area integrals J₁, J₂, J₃ against the kernel 1/|ζ − λ|, which bound the
//! Cauchy-transform operators.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fd_core::quad::gl_composite;
use fd_core::C64;

use crate::{BoundsError, CalibrationResult};

/// Resolution of the polar rule centred at λ.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Rule {
    ratio: f64,
    nodes: usize,
    n_theta: usize,
}

const BASE: Rule = Rule { ratio: 2.0, nodes: 8, n_theta: 256 };
const FINE: Rule = Rule { ratio: std::f64::consts::SQRT_2, nodes: 8, n_theta: 512 };

/// ∫ f(ζ) dA/|ζ − λ| in polar coordinates about λ, where the kernel cancels the
/// Jacobian: ∫₀^∞∫₀^{2π} f(λ + s e^{iθ}) dθ ds. `scales` adds radial breakpoints.
fn polar(f: &(dyn Fn(f64) -> f64 + Sync), lambda: C64, scales: &[f64], rule: Rule) -> f64 {
    let (s_lo, s_hi) = (1e-7, 1e7);
    let mut breaks = vec![0.0, s_lo];
    let mut b = s_lo;
    while b < s_hi {
        b *= rule.ratio;
        breaks.push(b);
    }
    let lm = lambda.norm();
    for s in scales.iter().copied().chain([lm]) {
        if s > s_lo && s < s_hi {
            breaks.push(s);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, c| (*a - *c).abs() <= 1e-12 * c.abs());
    let rs = gl_composite(rule.nodes, &breaks);
    let dt = 2.0 * PI / rule.n_theta as f64;
    let dirs: Vec<C64> = (0..rule.n_theta).map(|j| C64::from_polar(1.0, (j as f64 + 0.5) * dt + 0.1)).collect();
    let mut total = 0.0;
    for (s, w) in rs {
        let mut ring = 0.0;
        for d in &dirs {
            ring += f((lambda + d * s).norm());
        }
        total += w * ring * dt;
    }
    total
}

/// J₁(λ) = ∫ |ζ|/(|ζ|²+1)² dA/|ζ−λ|.
pub fn j1(lambda: C64) -> f64 {
    j1_with(lambda, BASE)
}

fn j1_with(lambda: C64, rule: Rule) -> f64 {
    // tail beyond 10⁷: ∫ s^{-3} ds dθ
    polar(&|z| z / (z * z + 1.0).powi(2), lambda, &[1.0], rule) + PI * 1e-14
}

/// J₂(λ,ρ) = ∫ (|ζ|²+1)ρ / (|ζ|²(1+ρ(|ζ|+|ζ|⁻¹))²) dA/|ζ−λ|.
pub fn j2(lambda: C64, rho: f64) -> f64 {
    j2_with(lambda, rho, BASE)
}

fn j2_with(lambda: C64, rho: f64, rule: Rule) -> f64 {
    let f = move |z: f64| {
        // written with |ζ|² cleared from the denominator so ζ → 0 stays finite
        let d = z + rho * (z * z + 1.0);
        (z * z + 1.0) * rho / (d * d)
    };
    let tail = 2.0 * PI / (rho * 1e7);
    polar(&f, lambda, &[1.0, rho, 1.0 / rho], rule) + tail
}

/// J₃(λ,ρ) = ∫ ρ / (|ζ|(1+ρ(|ζ|+|ζ|⁻¹))) dA/|ζ−λ|.
pub fn j3(lambda: C64, rho: f64) -> f64 {
    j3_with(lambda, rho, BASE)
}

fn j3_with(lambda: C64, rho: f64, rule: Rule) -> f64 {
    let f = move |z: f64| rho / (z + rho * (z * z + 1.0));
    let tail = 2.0 * PI / 1e7;
    polar(&f, lambda, &[1.0, rho, 1.0 / rho], rule) + tail
}

/// Right side of the chain bounding J₁:
/// ∫₀^∞ 4πr dr/((r²+1)(r+1)²) + ∫₀^∞ 4π dr/((r²+1)(r+1)).
pub fn n1_chain_value() -> f64 {
    let mut breaks = vec![0.0];
    let mut b: f64 = 1e-3;
    while b < 1e8 {
        breaks.push(b);
        b *= 2.0;
    }
    let mut s = 0.0;
    for (r, w) in gl_composite(10, &breaks) {
        s += w * 4.0 * PI * (r / ((r * r + 1.0) * (r + 1.0).powi(2)) + 1.0 / ((r * r + 1.0) * (r + 1.0)));
    }
    s + 4.0 * PI / (2.0 * 1e16)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JProbe {
    pub j1_at_zero: f64,
    pub n1: CalibrationResult,
    pub n2: CalibrationResult,
    pub n3: CalibrationResult,
    /// Relative change of each sup when the rule is refined.
    pub refinement_drift: [f64; 3],
    /// max over sampled λ of J₂, J₃ at ρ = 10⁴, 10⁵.
    pub large_rho: [f64; 2],
    pub n1_chain: f64,
    /// 16π, the value the proof gives for n₂.
    pub n2_proof: f64,
}

/// Sup estimates n̂₁, n̂₂, n̂₃ over `n` samples (and their doubling) with |λ|
/// log-uniform on [10⁻², 10²] and ρ log-uniform on [10⁻³, 10³].
pub fn probe_j_integrals(n: usize, seed: u64) -> Result<JProbe, BoundsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(C64, f64)> = (0..2 * n.max(2))
        .map(|_| {
            let m = rng.random_range(1e-2f64.ln()..1e2f64.ln()).exp();
            let l = C64::from_polar(m, rng.random_range(-PI..PI));
            (l, rng.random_range(1e-3f64.ln()..1e3f64.ln()).exp())
        })
        .collect();
    let vals: Vec<[f64; 3]> = pts.par_iter().map(|&(l, r)| [j1(l), j2(l, r), j3(l, r)]).collect();
    if vals.iter().flatten().any(|v| !v.is_finite()) {
        return Err(BoundsError::Quadrature("non-finite J".into()));
    }
    let col = |i: usize| vals.iter().map(|v| v[i]).collect::<Vec<_>>();
    let n1 = CalibrationResult::from_doubled("n1", &col(0));
    let n2 = CalibrationResult::from_doubled("n2", &col(1));
    let n3 = CalibrationResult::from_doubled("n3", &col(2));

    // refine at the arg-max of each
    let argmax = |i: usize| {
        let (j, _) = vals.iter().enumerate().max_by(|a, b| a.1[i].total_cmp(&b.1[i])).unwrap();
        pts[j]
    };
    let (l, _) = argmax(0);
    let d1 = (j1_with(l, FINE) - n1.estimate).abs() / n1.estimate;
    let (l, r) = argmax(1);
    let d2 = (j2_with(l, r, FINE) - n2.estimate).abs() / n2.estimate;
    let (l, r) = argmax(2);
    let d3 = (j3_with(l, r, FINE) - n3.estimate).abs() / n3.estimate;

    let mut large = [0.0f64; 2];
    for &(l, _) in pts.iter().take(16) {
        for rho in [1e4, 1e5] {
            large[0] = large[0].max(j2(l, rho));
            large[1] = large[1].max(j3(l, rho));
        }
    }
    Ok(JProbe {
        j1_at_zero: j1(C64::new(0.0, 0.0)),
        n1,
        n2,
        n3,
        refinement_drift: [d1, d2, d3],
        large_rho: large,
        n1_chain: n1_chain_value(),
        n2_proof: 16.0 * PI,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j1_at_origin_is_pi() {
        assert!((j1(C64::new(0.0, 0.0)) - PI).abs() < 1e-6);
    }

    #[test]
    fn j_values_respect_chain_bounds() {
        for l in [C64::new(0.0, 0.0), C64::new(0.9, 0.4), C64::new(-3.0, 7.0)] {
            assert!(j1(l) <= n1_chain_value());
            for rho in [1e-2, 0.3, 1.0, 5.0, 1e3] {
                assert!(j2(l, rho) <= 16.0 * PI);
                assert!(j3(l, rho) > 0.0);
            }
        }
    }
}

//! I₄(ρ,s,t) = ∫ dξ / ((1+(ξ₁−t)²+ξ₂²+(ξ₃−s)²)^{μ/2} (|ξ|²−ρ²| + 2ρ|ξ₃|)) for μ = 2.
//!
//! In spherical coordinates about the ξ₃-axis with u = cos ψ the azimuthal
//! integral is closed: ∫_{−π}^{π} dφ/(a − b cos φ) = 2π/√(a² − b²) with
//! a = 1+r²+t²+s²−2rsu and b = 2rt√(1−u²), leaving a 2-D rule in (r, u).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fd_core::quad::gl_composite;

use crate::BoundsError;

const R_MAX: f64 = 1e6;

/// Breakpoints on [0, 1] refined geometrically toward 0 down to `scale`, and toward 1.
fn unit_breaks(scale: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut x = scale.clamp(1e-14, 0.25);
    while x < 0.5 {
        b.push(x);
        x *= 2.0;
    }
    b.push(0.5);
    let mut y = 0.25;
    while y > 1e-8 {
        b.push(1.0 - y);
        y *= 0.25;
    }
    b.push(1.0);
    b
}

/// Breakpoints on [0, R_MAX] refined geometrically toward each of `centres`.
fn radial_breaks(centres: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0, R_MAX];
    let mut x = 1e-3;
    while x < R_MAX {
        b.push(x);
        x *= 2.0;
    }
    for &c in centres {
        if c <= 0.0 || c >= R_MAX {
            continue;
        }
        b.push(c);
        let mut h = 0.25 * c.min(1.0);
        while h > 1e-12 * c.max(1.0) {
            if c - h > 0.0 {
                b.push(c - h);
            }
            b.push(c + h);
            h *= 0.25;
        }
    }
    b.sort_by(f64::total_cmp);
    b.dedup_by(|a, c| (*a - *c).abs() <= 1e-15 * c.abs().max(1.0));
    b
}

/// I₄(ρ,s,t) at μ = 2.
pub fn i4(rho: f64, s: f64, t: f64) -> f64 {
    i4_with(rho, s, t, 8)
}

fn i4_with(rho: f64, s: f64, t: f64, n: usize) -> f64 {
    let rs = gl_composite(n, &radial_breaks(&[rho, s, t, (s * s + t * t).sqrt(), 1.0]));
    let parts: Vec<f64> = rs
        .par_iter()
        .map(|&(r, wr)| {
            let d0 = (r * r - rho * rho).abs();
            let c = 2.0 * rho * r;
            let scale = if c > 0.0 { (d0 / c).max(1e-14) } else { 1.0 };
            let mut acc = 0.0;
            for (u, wu) in gl_composite(n, &unit_breaks(scale)) {
                for sign in [1.0, -1.0] {
                    let uu = sign * u;
                    let a = 1.0 + r * r + t * t + s * s - 2.0 * r * s * uu;
                    let b = 2.0 * r * t * (1.0 - uu * uu).max(0.0).sqrt();
                    let phi = 2.0 * PI / ((a - b) * (a + b)).sqrt();
                    acc += wu * phi / (d0 + c * u);
                }
            }
            wr * r * r * acc
        })
        .collect();
    let total: f64 = parts.iter().sum();
    // for r > R_MAX the integrand is ≈ 2π·2/r²
    total + 4.0 * PI / R_MAX
}

/// 32∫_{−∞}^{∞} dr/(1+r²), the last member of the chain bounding I₄(0,0,t).
pub fn i4_rho_zero_chain() -> f64 {
    let mut b = vec![0.0];
    let mut x: f64 = 1e-3;
    while x < 1e8 {
        b.push(x);
        x *= 2.0;
    }
    let s: f64 = gl_composite(10, &b).iter().map(|(r, w)| w / (1.0 + r * r)).sum();
    32.0 * 2.0 * (s + 1e-8)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct I4Probe {
    /// (ρ, s, t, I₄(ρ,s,t), I₄(ρ,0,t))
    pub reduction_samples: Vec<[f64; 5]>,
    pub reduction_violations: usize,
    /// max I₄(0,0,t) over sampled t.
    pub rho_zero_max: f64,
    /// The chain value, expected 32π.
    pub rho_zero_chain: f64,
    /// For ρ ∈ {8, 16, 32}: max over (s,t) samples of I₄·ρ/(ln ρ)².
    pub envelope: Vec<(f64, f64)>,
    /// max/min of the envelope column.
    pub envelope_spread: f64,
}

/// I₄(ρ,s,t) ≤ 2I₄(ρ,0,t) on `n` samples, the ρ = 0 value and the large-ρ envelope.
pub fn probe_i4(n: usize, seed: u64) -> Result<I4Probe, BoundsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |lo: f64, hi: f64| rng.random_range(lo..hi);
    let pts: Vec<[f64; 3]> = (0..n)
        .map(|_| {
            let rho = if draw(0.0, 1.0) < 0.2 { 0.0 } else { draw(-3.0, 4.0).exp() };
            [rho, draw(0.0, 10.0), draw(0.0, 10.0)]
        })
        .collect();
    let mut samples = Vec::with_capacity(n);
    let mut violations = 0;
    for [rho, s, t] in pts.iter().copied() {
        let full = i4(rho, s, t);
        let reduced = i4(rho, 0.0, t);
        if !(full.is_finite() && reduced.is_finite()) {
            return Err(BoundsError::Quadrature(format!("I4({rho},{s},{t})")));
        }
        if full > 2.0 * reduced * (1.0 + 1e-3) {
            violations += 1;
        }
        samples.push([rho, s, t, full, reduced]);
    }
    let rho_zero_max = [0.0, 0.5, 1.0, 2.0, 5.0, 20.0].iter().map(|&t| i4(0.0, 0.0, t)).fold(0.0, f64::max);
    let mut envelope = Vec::new();
    for rho in [8.0f64, 16.0, 32.0] {
        let mut m: f64 = 0.0;
        for (s, t) in [(0.0, 0.0), (0.0, 4.0), (3.0, 0.0), (2.0, 6.0), (0.0, rho), (rho, 0.0)] {
            m = m.max(i4(rho, s, t) * rho / rho.ln().powi(2));
        }
        envelope.push((rho, m));
    }
    let hi = envelope.iter().map(|e| e.1).fold(0.0, f64::max);
    let lo = envelope.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    Ok(I4Probe {
        reduction_samples: samples,
        reduction_violations: violations,
        rho_zero_max,
        rho_zero_chain: i4_rho_zero_chain(),
        envelope,
        envelope_spread: hi / lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_at_the_origin() {
        // I₄(0,0,0) = ∫ dξ/((1+|ξ|²)|ξ|²) = 4π·π/2
        let v = i4(0.0, 0.0, 0.0);
        assert!((v - 2.0 * PI * PI).abs() < 1e-4 * v, "{v}");
        assert!((i4_rho_zero_chain() - 32.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn refinement_is_stable() {
        for (rho, s, t) in [(1.0, 0.0, 1.0), (5.0, 2.0, 3.0), (0.3, 4.0, 0.0)] {
            let a = i4_with(rho, s, t, 8);
            let b = i4_with(rho, s, t, 16);
            assert!((a - b).abs() < 1e-4 * b, "{rho} {s} {t}: {a} vs {b}");
        }
    }
}

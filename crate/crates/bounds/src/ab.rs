//! The angular integrals A(r,ψ,α,β), B(r,ψ,α,β) that bound the bracket, and their
//! explicit majorant sums.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use fd_core::quad::{gl_composite, graded_breaks};

use crate::BoundsError;

fn denominators(r: f64, psi: f64, alpha: f64, beta: f64, phi: f64) -> f64 {
    (1.0 + 2.0 * r * (0.5 * phi).sin().abs()).powf(alpha) * (1.0 + 2.0 * r * (0.5 * (phi - psi)).sin().abs()).powf(beta)
}

fn angular(r: f64, psi: f64, alpha: f64, beta: f64, num: impl Fn(f64) -> f64) -> Result<f64, BoundsError> {
    let eval = |h0: f64, n: usize| {
        let mut cuts = vec![-PI, 0.0, psi, PI];
        cuts.sort_by(f64::total_cmp);
        let mut s = 0.0;
        for w in cuts.windows(2) {
            if w[1] - w[0] < 1e-15 {
                continue;
            }
            for (x, wx) in gl_composite(n, &graded_breaks(w[0], w[1], h0)) {
                s += wx * num(x) / denominators(r, psi, alpha, beta, x);
            }
        }
        s
    };
    let h0 = (PI / 8.0).min(0.25 / r.max(1e-12));
    let a = eval(h0, 10);
    let b = eval(0.5 * h0, 20);
    if (a - b).abs() > 1e-8 * b.abs().max(1e-300) {
        return Err(BoundsError::Quadrature(format!("A/B at r={r}, psi={psi}: {a} vs {b}")));
    }
    Ok(b)
}

/// A = ∫_{−π}^{π} (1 − cos φ) dφ / ((1+2r|sin(φ/2)|)^α (1+2r|sin((φ−ψ)/2)|)^β).
pub fn a_integral(r: f64, psi: f64, alpha: f64, beta: f64) -> Result<f64, BoundsError> {
    if r == 0.0 {
        return Ok(2.0 * PI);
    }
    angular(r, psi, alpha, beta, |x| 1.0 - x.cos())
}

/// B = ∫_{−π}^{π} |sin φ| dφ / ((1+2r|sin(φ/2)|)^α (1+2r|sin((φ−ψ)/2)|)^β).
pub fn b_integral(r: f64, psi: f64, alpha: f64, beta: f64) -> Result<f64, BoundsError> {
    if r == 0.0 {
        return Ok(4.0);
    }
    angular(r, psi, alpha, beta, |x| x.sin().abs())
}

/// Σ A_j with ρ = 2r|sin(ψ/2)|.
pub fn a_bound_sum(r: f64, psi: f64, alpha: f64, beta: f64) -> f64 {
    let rho = 2.0 * r * (0.5 * psi).sin().abs();
    let h = 1.0 + 0.5 * rho;
    let (a1, a2, a3) = if r > 0.0 {
        let q3 = (rho / r).powi(3);
        (
            (q3 / 6.0).min(rho / r.powi(3)) / h.powf(beta),
            q3 / h.powf(alpha + 1.0),
            4.0 * q3 / ((1.0 + rho).powf(alpha) * h),
        )
    } else {
        (0.0, 0.0, 0.0)
    };
    let a4 = (3.0 / (1.0 + r * r) + 2.0 * PI / (1.0 + SQRT_2 * r).powf(alpha)) / h.powf(beta);
    a1 + a2 + a3 + a4
}

/// Σ B_j with ρ = 2r|sin(ψ/2)|.
pub fn b_bound_sum(r: f64, psi: f64, alpha: f64, beta: f64) -> f64 {
    let rho = 2.0 * r * (0.5 * psi).sin().abs();
    let h = 1.0 + 0.5 * rho;
    let (b1, b2, b3) = if r > 0.0 {
        let q2 = (rho / r).powi(2);
        (
            (0.5 * q2).min(SQRT_2 * rho / (r * r)) / h.powf(beta),
            2.0 * q2 / h.powf(alpha + 1.0),
            4.0 * q2 / ((1.0 + rho).powf(alpha) * h),
        )
    } else {
        (0.0, 0.0, 0.0)
    };
    let b4 = (5.0 / (1.0 + r) + 3.0 / (1.0 + SQRT_2 * r).powf(alpha)) / h.powf(beta);
    b1 + b2 + b3 + b4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbSample {
    pub r: f64,
    pub psi: f64,
    pub a: f64,
    pub a_bound: f64,
    pub b: f64,
    pub b_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbProbe {
    pub samples: Vec<AbSample>,
    pub a_violations: usize,
    pub b_violations: usize,
    /// Samples whose quadrature did not settle.
    pub flagged: usize,
    /// max A/ΣA_j and max B/ΣB_j
    pub max_a_ratio: f64,
    pub max_b_ratio: f64,
}

/// Checks A ≤ ΣA_j and B ≤ ΣB_j at `n` samples with r log-uniform on [10⁻³, 10³]
/// (plus r = 0 and ψ = 0 rows) and ψ uniform on [−π, π].
pub fn probe_ab_bounds(n: usize, alpha: f64, beta: f64, seed: u64) -> Result<AbProbe, BoundsError> {
    if alpha < 2.0 || beta < 2.0 {
        return Err(BoundsError::Invalid("alpha and beta must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = vec![(0.0, 1.0), (1.5, 0.0)];
    while pts.len() < n {
        let r = rng.random_range(1e-3f64.ln()..1e3f64.ln()).exp();
        pts.push((r, rng.random_range(-PI..PI)));
    }
    let mut out = AbProbe {
        samples: Vec::with_capacity(n),
        a_violations: 0,
        b_violations: 0,
        flagged: 0,
        max_a_ratio: 0.0,
        max_b_ratio: 0.0,
    };
    for (r, psi) in pts {
        let (a, b) = match (a_integral(r, psi, alpha, beta), b_integral(r, psi, alpha, beta)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                out.flagged += 1;
                continue;
            }
        };
        let (ab, bb) = (a_bound_sum(r, psi, alpha, beta), b_bound_sum(r, psi, alpha, beta));
        if a > ab * (1.0 + 1e-9) {
            out.a_violations += 1;
        }
        if b > bb * (1.0 + 1e-9) {
            out.b_violations += 1;
        }
        out.max_a_ratio = out.max_a_ratio.max(a / ab);
        out.max_b_ratio = out.max_b_ratio.max(b / bb);
        out.samples.push(AbSample { r, psi, a, a_bound: ab, b, b_bound: bb });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_zero_radius() {
        assert_eq!(a_integral(0.0, 1.0, 2.0, 2.0).unwrap(), 2.0 * PI);
        assert_eq!(b_integral(0.0, 1.0, 2.0, 2.0).unwrap(), 4.0);
        // the numerical rule agrees with the unit-denominator values as r → 0
        assert!((a_integral(1e-12, 0.7, 2.0, 2.0).unwrap() - 2.0 * PI).abs() < 1e-9);
        assert!((b_integral(1e-12, 0.7, 2.0, 2.0).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn aligned_angles_leave_only_the_last_terms() {
        let r: f64 = 2.0;
        let a4 = 3.0 / (1.0 + r * r) + 2.0 * PI / (1.0 + SQRT_2 * r).powi(2);
        assert_eq!(a_bound_sum(r, 0.0, 2.0, 2.0), a4);
        let b4 = 5.0 / (1.0 + r) + 3.0 / (1.0 + SQRT_2 * r).powi(2);
        assert_eq!(b_bound_sum(r, 0.0, 2.0, 2.0), b4);
    }
}

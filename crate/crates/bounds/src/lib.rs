//! Numerical probes of the analytic estimates behind the solvers, and sampled-sup
//! calibration of the constants the solvers use as admission checks.

pub mod ab;
pub mod c6;
pub mod i4;
pub mod j;
pub mod kernel;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ab::{a_bound_sum, a_integral, b_bound_sum, b_integral, probe_ab_bounds, AbProbe, AbSample};
pub use c6::{bracket_shape, calibrate_bracket_envelope, calibrate_c6, TrialFields};
pub use i4::{i4, i4_rho_zero_chain, probe_i4, I4Probe};
pub use j::{j1, j2, j3, n1_chain_value, probe_j_integrals, JProbe};
pub use kernel::{calibrate_c1_c2, kernel_integral, KernelSample};

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Dbar(#[from] fd_dbar::DbarError),
    #[error(transparent)]
    Core(#[from] fd_core::CoreError),
}

/// A sampled sup standing in for a constant that is only known to exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub name: String,
    pub estimate: f64,
    pub sample_count: usize,
    /// (estimate on twice the samples − estimate)/estimate.
    pub drift: f64,
}

impl CalibrationResult {
    /// Builds a result from per-sample values; the first half is the base set and
    /// the whole list its doubling.
    pub fn from_doubled(name: &str, values: &[f64]) -> Self {
        let half = values.len() / 2;
        let base = values[..half].iter().copied().fold(0.0, f64::max);
        let full = values.iter().copied().fold(0.0, f64::max);
        let drift = if base > 0.0 { (full - base) / base } else { 0.0 };
        Self { name: name.into(), estimate: full, sample_count: values.len(), drift }
    }
}

/// Truth values of the smallness conditions for a potential of size `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallnessReport {
    pub c: f64,
    pub c1_hat: f64,
    pub c6_hat: f64,
    /// C < 1/(ĉ₁ + 8ĉ₆): the global condition for the whole reconstruction.
    pub global_condition: bool,
    /// ĉ₁C < 1: successive approximations for H(k, ·) converge.
    pub forward_contraction: bool,
    /// r = 2C/(1 − ĉ₁C), when ĉ₁C < 1.
    pub ball_radius: Option<f64>,
    /// r < 1/(4ĉ₆): U ↦ R + M(U) contracts on the ball of radius r.
    pub inverse_contraction: bool,
}

pub fn smallness(c: f64, c1_hat: f64, c6_hat: f64) -> SmallnessReport {
    let d = 1.0 - c1_hat * c;
    let ball_radius = (d > 0.0).then(|| 2.0 * c / d);
    SmallnessReport {
        c,
        c1_hat,
        c6_hat,
        global_condition: c < 1.0 / (c1_hat + 8.0 * c6_hat),
        forward_contraction: c1_hat * c < 1.0,
        ball_radius,
        inverse_contraction: ball_radius.is_some_and(|r| 4.0 * c6_hat * r < 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubled_sup_is_monotone() {
        let c = CalibrationResult::from_doubled("x", &[1.0, 3.0, 2.0, 3.3]);
        assert_eq!(c.estimate, 3.3);
        assert!((c.drift - 0.1).abs() < 1e-12);
        let c = CalibrationResult::from_doubled("x", &[1.0, 3.0, 2.0, 0.5]);
        assert_eq!(c.drift, 0.0);
    }

    #[test]
    fn smallness_flags() {
        let s = smallness(0.01, 5.0, 1.0);
        assert!(s.global_condition && s.forward_contraction && s.inverse_contraction);
        assert!((s.ball_radius.unwrap() - 0.02 / 0.95).abs() < 1e-15);
        let s = smallness(0.3, 5.0, 1.0);
        assert!(!s.forward_contraction && s.ball_radius.is_none() && !s.inverse_contraction);
    }
}

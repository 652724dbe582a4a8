//! The variety Ω of pairs (k, p) with k² = 0 and p² = 2k·p, the frame (θ, ω) on
//! ℝ³∖L_ν, the chart λ ↦ k(λ, p) and the circle S_k of singular ξ.
//!
//! Everything here is generic over the real scalar; `f64` is what the solvers use.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use fd_core::vec3::{cdot, cdot_real, complexify, cross, dot, im, norm, re, scale, CV3, V3};
use fd_core::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("p is parallel to nu (|nu x p| = {cross_norm:e})")]
    OnAxis { cross_norm: f64 },
    #[error("p is too close to zero")]
    ZeroP,
    #[error("lambda must be nonzero")]
    ZeroLambda,
    #[error("(k, p) is not on the variety: residual {residual:e}")]
    Inconsistent { residual: f64 },
}

/// Which unit vector γ(p) ⊥ p fixes the restriction k_γ(p) = p/2 + i|p|γ(p)/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaChoice {
    #[default]
    Theta,
    Omega,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame<T> {
    pub nu: V3<T>,
    pub gamma: GammaChoice,
}

impl<T: Real> Frame<T> {
    /// Normalizes `nu`; panics on the zero vector.
    pub fn new(nu: V3<T>, gamma: GammaChoice) -> Self {
        let n = norm(&nu);
        assert!(n > T::zero(), "nu must be nonzero");
        Self { nu: scale(T::one() / n, &nu), gamma }
    }
}

impl Default for Frame<f64> {
    fn default() -> Self {
        Self::new(fd_core::DEFAULT_NU, GammaChoice::Theta)
    }
}

fn c<T: Real>(x: f64) -> T {
    T::from_f64(x).unwrap()
}

/// θ = ν×p/|ν×p| and ω = p×θ/|p|.
pub fn frame<T: Real>(p: &V3<T>, nu: &V3<T>) -> Result<(V3<T>, V3<T>), GeometryError> {
    let pn = norm(p);
    if pn <= T::min_positive_value() {
        return Err(GeometryError::ZeroP);
    }
    let nxp = cross(nu, p);
    let m = norm(&nxp);
    if m < c::<T>(1e-12) * pn {
        return Err(GeometryError::OnAxis { cross_norm: m.to_f64().unwrap() });
    }
    let theta = scale(T::one() / m, &nxp);
    let omega = scale(T::one() / pn, &cross(p, &theta));
    Ok((theta, omega))
}

/// k(λ, p) = κ₁θ + κ₂ω + p/2 with κ₁ = (i|p|/4)(λ+1/λ), κ₂ = (|p|/4)(λ−1/λ).
pub fn k_of_lambda<T: Real>(
    lambda: Complex<T>,
    p: &V3<T>,
    fr: &Frame<T>,
) -> Result<CV3<T>, GeometryError> {
    if lambda.norm_sqr() == T::zero() {
        return Err(GeometryError::ZeroLambda);
    }
    let (theta, omega) = frame(p, &fr.nu)?;
    let q = norm(p) / c(4.0);
    let inv = lambda.inv();
    let k1 = Complex::new(T::zero(), q) * (lambda + inv);
    let k2 = (lambda - inv) * q;
    let half = c::<T>(0.5);
    Ok([0, 1, 2].map(|i| k1 * theta[i] + k2 * omega[i] + p[i] * half))
}

/// λ = 2k·(θ + iω)/(i|p|).
pub fn lambda_of_k<T: Real>(
    k: &CV3<T>,
    p: &V3<T>,
    fr: &Frame<T>,
) -> Result<Complex<T>, GeometryError> {
    let pn = norm(p);
    if pn < c::<T>(1e-12) {
        return Err(GeometryError::ZeroP);
    }
    let (theta, omega) = frame(p, &fr.nu)?;
    let e = complexify(&theta, &omega);
    let num = cdot(k, &e) * c::<T>(2.0);
    Ok(num / Complex::new(T::zero(), pn))
}

/// |Im k(λ, p)| = (|p|/4)(|λ| + 1/|λ|).
pub fn im_k_norm<T: Real>(lambda: Complex<T>, p_norm: T) -> T {
    let m = lambda.norm();
    p_norm / c(4.0) * (m + T::one() / m)
}

/// k^⊥ = Im k × Re k / |Im k|.
pub fn k_perp<T: Real>(k: &CV3<T>) -> V3<T> {
    let (kr, ki) = (re(k), im(k));
    scale(T::one() / norm(&ki), &cross(&ki, &kr))
}

/// ξ(φ) = Re k (cos φ − 1) + k^⊥ sin φ, a point of S_k.
pub fn xi_on_circle<T: Real>(k: &CV3<T>, phi: T) -> V3<T> {
    let kr = re(k);
    let kp = k_perp(k);
    let (s, co) = phi.sin_cos();
    [0, 1, 2].map(|i| kr[i] * (co - T::one()) + kp[i] * s)
}

pub fn xi_circle<T: Real>(
    lambda: Complex<T>,
    p: &V3<T>,
    fr: &Frame<T>,
    phi: T,
) -> Result<V3<T>, GeometryError> {
    Ok(xi_on_circle(&k_of_lambda(lambda, p, fr)?, phi))
}

/// The angle ψ ∈ [−π, π] with −p = Re k (cos ψ − 1) + k^⊥ sin ψ.
pub fn psi_of_k<T: Real>(k: &CV3<T>, p: &V3<T>) -> Result<T, GeometryError> {
    let kr = re(k);
    let kp = k_perp(k);
    let t2 = dot(&kr, &kr);
    let a = -dot(p, &kr) / t2;
    let b = -dot(p, &kp) / t2;
    let psi = b.atan2(T::one() + a);
    let (s, co) = psi.sin_cos();
    let res: V3<T> = [0, 1, 2].map(|i| p[i] + kr[i] * (co - T::one()) + kp[i] * s);
    let r = norm(&res);
    let tol = c::<T>(1e-9) * norm(p).max(T::one()) * tol_scale::<T>();
    if r > tol {
        return Err(GeometryError::Inconsistent { residual: r.to_f64().unwrap() });
    }
    Ok(psi)
}

pub fn psi_angle<T: Real>(lambda: Complex<T>, p: &V3<T>, fr: &Frame<T>) -> Result<T, GeometryError> {
    psi_of_k(&k_of_lambda(lambda, p, fr)?, p)
}

/// Loosens fixed double-precision tolerances for lower-precision scalars.
fn tol_scale<T: Real>() -> T {
    (T::epsilon() / c(f64::EPSILON)).max(T::one())
}

/// k_γ(p) = p/2 + i(|p|/2)γ(p).
pub fn k_gamma<T: Real>(p: &V3<T>, fr: &Frame<T>) -> Result<CV3<T>, GeometryError> {
    let (theta, omega) = frame(p, &fr.nu)?;
    let g = match fr.gamma {
        GammaChoice::Theta => theta,
        GammaChoice::Omega => omega,
    };
    let h = norm(p) * c(0.5);
    Ok(complexify(&scale(c(0.5), p), &scale(h, &g)))
}

/// λ₀(p) = λ(k_γ(p), p); identically 1 for γ = θ and i for γ = ω.
pub fn lambda0<T: Real>(p: &V3<T>, fr: &Frame<T>) -> Result<Complex<T>, GeometryError> {
    lambda_of_k(&k_gamma(p, fr)?, p, fr)
}

/// |k·k| ≤ 1e−10 (1 + |k|²).
pub fn is_null<T: Real>(k: &CV3<T>) -> bool {
    let kk = cdot(k, k).norm();
    let n2 = dot(&re(k), &re(k)) + dot(&im(k), &im(k));
    kk <= c::<T>(1e-10) * tol_scale::<T>() * (T::one() + n2)
}

/// |p·p − 2k·p| ≤ 1e−10 (1 + |p|²).
pub fn on_omega<T: Real>(k: &CV3<T>, p: &V3<T>) -> bool {
    let pp = dot(p, p);
    let r = (Complex::new(pp, T::zero()) - cdot_real(k, p) * c::<T>(2.0)).norm();
    is_null(k) && r <= c::<T>(1e-10) * tol_scale::<T>() * (T::one() + pp)
}

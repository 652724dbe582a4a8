//! Area Cauchy transforms −(1/π)∫ B(ζ) dA(ζ)/(ζ − λ) on rings.
//!
//! B is sampled on rings |ζ| = r_i (Gauss nodes in log r) at uniform angles and
//! expanded in angular Fourier modes b_n(r). Each mode integrates in closed form
//! against the Cauchy kernel:
//!
//!   ∫₀^{2π} e^{inθ} dθ / (r e^{iθ} − λ) =  2π λ^{n−1} r^{−n}   for r > |λ|, n ≥ 1,
//!                                       = −2π λ^{n−1} r^{−n}   for r < |λ|, n ≤ 0,
//!
//! and vanishes otherwise, so the singularity at ζ = λ never meets a node. Target
//! moduli are ring-panel breakpoints, which keeps each panel's radial integrand smooth.

use std::f64::consts::PI;

use fd_core::quad::gl_panel;
use fd_core::C64;

use crate::DbarError;

#[derive(Debug, Clone)]
pub struct ZetaQuadrature {
    /// (radius, dr-weight)
    pub rings: Vec<(f64, f64)>,
    pub n_theta: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl ZetaQuadrature {
    /// Rings on [r_min, r_max] with panel breakpoints at `breaks`, filled geometrically
    /// so neighbouring breakpoints differ by at most `ratio`; `per_panel` Gauss nodes
    /// in log r per panel.
    pub fn new(breaks: &[f64], r_min: f64, r_max: f64, ratio: f64, per_panel: usize, n_theta: usize) -> Self {
        assert!(r_min > 0.0 && r_max > r_min && ratio > 1.0 && n_theta >= 2);
        let mut b: Vec<f64> = breaks.iter().copied().filter(|x| *x > r_min && *x < r_max).collect();
        b.push(r_min);
        b.push(r_max);
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, c| (*a / *c - 1.0).abs() < 1e-12);
        let mut filled = vec![b[0]];
        for w in b.windows(2) {
            let n = ((w[1] / w[0]).ln() / ratio.ln()).ceil().max(1.0) as usize;
            for j in 1..=n {
                filled.push(w[0] * (w[1] / w[0]).powf(j as f64 / n as f64));
            }
        }
        let mut rings = Vec::new();
        for w in filled.windows(2) {
            for (u, wu) in gl_panel(per_panel, w[0].ln(), w[1].ln()) {
                let r = u.exp();
                rings.push((r, wu * r));
            }
        }
        Self { rings, n_theta, r_min, r_max }
    }

    pub fn angles(&self) -> Vec<f64> {
        // offset by half a step so nodes never sit on the real axis
        (0..self.n_theta)
            .map(|j| 2.0 * PI * (j as f64 + 0.5) / self.n_theta as f64)
            .collect()
    }

    /// All sample points, ring-major.
    pub fn points(&self) -> Vec<C64> {
        let th = self.angles();
        let mut out = Vec::with_capacity(self.rings.len() * th.len());
        for &(r, _) in &self.rings {
            for &a in &th {
                out.push(C64::from_polar(r, a));
            }
        }
        out
    }

    /// Angular Fourier coefficients per ring: `modes[i][n + N/2]`, n ∈ [−N/2, N/2).
    pub fn modes(&self, samples: &[C64]) -> Vec<Vec<C64>> {
        let nt = self.n_theta;
        let th = self.angles();
        let half = (nt / 2) as i64;
        let mut tw = vec![C64::new(0.0, 0.0); nt * nt];
        for (ni, n) in (-half..(nt as i64 - half)).enumerate() {
            for (j, a) in th.iter().enumerate() {
                tw[ni * nt + j] = C64::from_polar(1.0 / nt as f64, -(n as f64) * a);
            }
        }
        samples
            .chunks(nt)
            .map(|ring| {
                (0..nt)
                    .map(|ni| ring.iter().zip(&tw[ni * nt..(ni + 1) * nt]).map(|(s, t)| s * t).sum())
                    .collect()
            })
            .collect()
    }

    /// −(1/π)∫ B dA/(ζ − λ) from precomputed modes, with the r > r_max tail closed
    /// by assuming b₁(r) ∝ r^{−2}. Returns (value, |tail|, accumulated |terms|).
    pub fn transform_modes(&self, modes: &[Vec<C64>], lambda: C64) -> (C64, f64, f64) {
        let nt = self.n_theta as i64;
        let half = nt / 2;
        let lm = lambda.norm();
        let mut total = C64::new(0.0, 0.0);
        let mut abs_sum = 0.0;
        for (&(r, w), b) in self.rings.iter().zip(modes) {
            let mut s = C64::new(0.0, 0.0);
            if r > lm {
                // n ≥ 1: 2π λ^{n−1} r^{−n}
                let q = lambda / r;
                let mut pw = C64::new(1.0 / r, 0.0);
                for n in 1..(nt - half) {
                    s += b[(n + half) as usize] * pw;
                    pw *= q;
                }
                s *= 2.0 * PI;
            } else {
                // n ≤ 0: −2π r^{−n} λ^{n−1}
                let q = r / lambda;
                let mut pw = 1.0 / lambda;
                for n in (-half..=0).rev() {
                    s -= b[(n + half) as usize] * pw;
                    pw *= q;
                }
                s *= 2.0 * PI;
            }
            let term = s * (w * r) * (-1.0 / PI);
            abs_sum += term.norm();
            total += term;
        }
        // inside r_min only the n = 0 mode survives, taken as constant
        if lm > self.r_min {
            let b0 = modes[0][half as usize];
            total += b0 * (self.r_min * self.r_min) / lambda;
        }
        let (rl, _) = *self.rings.last().unwrap();
        let b1 = modes.last().unwrap()[(1 + half) as usize];
        let tail = if lm < self.r_max { b1 * (-2.0 * rl * rl / self.r_max) } else { C64::new(0.0, 0.0) };
        (total + tail, tail.norm(), abs_sum)
    }
}

/// Single-pole (`lambda_ref = None`) or difference-kernel transform of `b`.
pub fn cauchy_transform(
    b: &dyn Fn(C64) -> C64,
    lambda: C64,
    lambda_ref: Option<C64>,
    quad: &ZetaQuadrature,
) -> Result<C64, DbarError> {
    let samples: Vec<C64> = quad.points().iter().map(|z| b(*z)).collect();
    let modes = quad.modes(&samples);
    let one = |l: C64| -> Result<C64, DbarError> {
        let (v, tail, acc) = quad.transform_modes(&modes, l);
        if tail > 0.1 * acc {
            return Err(DbarError::TailTooLarge { tail, total: acc });
        }
        Ok(v)
    };
    match lambda_ref {
        None => one(lambda),
        Some(l0) if l0 == lambda => Ok(C64::new(0.0, 0.0)),
        Some(l0) => Ok(one(lambda)? - one(l0)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_density() {
        let q = ZetaQuadrature::new(&[0.5, 2.0], 1e-2, 1e2, 2.0, 3, 8);
        let v = cauchy_transform(&|_| C64::new(0.0, 0.0), C64::new(0.3, 0.1), None, &q).unwrap();
        assert_eq!(v, C64::new(0.0, 0.0));
    }

    #[test]
    fn difference_kernel_vanishes_at_reference() {
        let q = ZetaQuadrature::new(&[1.0], 1e-2, 1e2, 2.0, 3, 8);
        let l = C64::new(1.0, 0.0);
        let v = cauchy_transform(&|z| (-z.norm_sqr()).exp() * z, l, Some(l), &q).unwrap();
        assert_eq!(v, C64::new(0.0, 0.0));
    }

    #[test]
    fn gaussian_density_has_closed_form_transform() {
        // −(1/π)∫ e^{−|ζ|²} dA/(ζ−λ) = (1 − e^{−|λ|²})/λ
        let lams = [C64::new(0.3, 0.4), C64::new(-1.5, 0.2), C64::new(0.0, 2.5)];
        let mods: Vec<f64> = lams.iter().map(|l| l.norm()).collect();
        let q = ZetaQuadrature::new(&mods, 1e-3, 20.0, 1.5, 6, 8);
        for l in lams {
            let v = cauchy_transform(&|z| C64::new((-z.norm_sqr()).exp(), 0.0), l, None, &q).unwrap();
            let want = (1.0 - (-l.norm_sqr()).exp()) / l;
            assert!((v - want).norm() < 1e-8, "{v} vs {want}");
        }
    }
}

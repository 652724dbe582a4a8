//! Quadrature for ∫ f(ξ) dξ/(ξ² + 2k·ξ) over the ball |ξ| ≤ Ξ_max.
//!
//! The denominator vanishes on the circle S_k of radius t = |Re k| through the
//! origin, centred at −Re k in the plane orthogonal to Im k. Points are written as
//!
//!   ξ = t(u_α − e₁) + s(cos β u_α + sin β e₂),   u_α = cos α e₁ + sin α e₃,
//!
//! with e₁ = Re k/t, e₂ = Im k/t, e₃ = e₁ × e₂. Then ξ² + 2k·ξ = s(2t e^{iβ} + s)
//! and dξ = (t + s cos β) s ds dβ dα, so the kernel times the volume element is
//! smooth and every rule below is a plain tensor Gauss/trapezoid rule.

use std::f64::consts::PI;

use fd_core::quad::{gl_composite, gl_panel};
use fd_core::vec3::{cross, dot, im, norm, re, scale};
use fd_core::{CVec3, Vec3, C64};

#[derive(Debug, Clone)]
pub struct XiQuadrature {
    pub nodes: Vec<Vec3>,
    /// Volume weights (positive); they sum to the ball volume.
    pub weights: Vec<f64>,
    /// 1/(ξ² + 2k·ξ) at each node.
    pub kernel: Vec<C64>,
    pub xi_max: f64,
}

impl XiQuadrature {
    /// Builds the rule for `k` with base order `n` per coordinate.
    ///
    /// α uses Gauss panels of about one Ξ_max of arc each, β a uniform rule with
    /// ⌈3n/2⌉ points, and s Gauss panels split geometrically away from the circle.
    pub fn new(k: &CVec3, xi_max: f64, n: usize) -> Self {
        let kr = re(k);
        let ki = im(k);
        let t = norm(&kr);
        assert!(t > 0.0 && norm(&ki) > 0.0, "k must have nonzero real and imaginary parts");
        let e1 = scale(1.0 / t, &kr);
        let e2 = scale(1.0 / norm(&ki), &ki);
        let e3 = cross(&e1, &e2);
        let n = n.max(2);

        let (a_lo, a_hi, full) = if t > xi_max {
            let a = (xi_max / t).asin();
            (-a, a, false)
        } else {
            (-PI, PI, true)
        };
        let arc = t * (a_hi - a_lo) / xi_max;
        let mut panels = arc.ceil().max(1.0) as usize;
        if full {
            panels = panels.max(2);
        }
        let a_breaks: Vec<f64> = (0..=panels)
            .map(|i| a_lo + (a_hi - a_lo) * i as f64 / panels as f64)
            .collect();
        let alphas = gl_composite(n, &a_breaks);

        let nb = (3 * n).div_ceil(2);
        let wb = 2.0 * PI / nb as f64;
        let betas: Vec<(f64, f64, C64)> = (0..nb)
            .map(|j| {
                let b = -PI + (j as f64 + 0.5) * wb;
                (b.cos(), b.sin(), C64::from_polar(2.0 * t, b))
            })
            .collect();

        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut kernel = Vec::new();
        for &(a, wa) in &alphas {
            let (sa, ca) = a.sin_cos();
            let u = [ca * e1[0] + sa * e3[0], ca * e1[1] + sa * e3[1], ca * e1[2] + sa * e3[2]];
            let c = [t * (u[0] - e1[0]), t * (u[1] - e1[1]), t * (u[2] - e1[2])];
            let cc = dot(&c, &c);
            for &(cb, sb, two_t_eib) in &betas {
                let v = [cb * u[0] + sb * e2[0], cb * u[1] + sb * e2[1], cb * u[2] + sb * e2[2]];
                let bb = t * cb * (1.0 - ca);
                let disc = bb * bb - (cc - xi_max * xi_max);
                if disc <= 0.0 {
                    continue;
                }
                let sq = disc.sqrt();
                let lo = (-bb - sq).max(0.0);
                let mut hi = -bb + sq;
                if cb < 0.0 {
                    hi = hi.min(t / -cb);
                }
                if hi <= lo {
                    continue;
                }
                for (s, ws) in s_rule(n, lo, hi, t) {
                    let rho = t + s * cb;
                    nodes.push([c[0] + s * v[0], c[1] + s * v[1], c[2] + s * v[2]]);
                    weights.push(wa * wb * ws * rho * s);
                    kernel.push(1.0 / (s * (two_t_eib + s)));
                }
            }
        }
        Self { nodes, weights, kernel, xi_max }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weight times kernel at each node.
    pub fn weighted_kernel(&self) -> Vec<C64> {
        self.weights.iter().zip(&self.kernel).map(|(w, k)| k * *w).collect()
    }
}

fn s_rule(n: usize, lo: f64, hi: f64, t: f64) -> Vec<(f64, f64)> {
    // The integrand varies on the scale t near the circle and on the scale of
    // the ball further out.
    let mut breaks = vec![lo];
    let mut b = 2.0 * t;
    while b < 0.5 * hi {
        if b > lo {
            breaks.push(b);
        }
        b *= 4.0;
    }
    breaks.push(hi);
    if breaks.len() == 2 {
        return gl_panel(n, lo, hi);
    }
    gl_composite(n, &breaks)
}

//! Brute-force reference for ∫ f(ξ) dξ/(ξ² + 2k·ξ) on the cube [−Ξ, Ξ]³.
//!
//! Uniform cells; cells whose centre lies within `thr` cell widths of the singular
//! circle are split into eight, recursively, and cells still that close at the
//! last level are dropped. Surviving cells use the 2×2×2 Gauss rule.

use fd_core::vec3::{cdot_real, dot, im, norm, re, scale, sub};
use fd_core::{CVec3, Vec3, C64};

pub struct CubeOracle {
    pub n0: usize,
    pub depth: u32,
    pub thr: f64,
    pub xi_max: f64,
}

pub struct OracleValue {
    pub value: C64,
    pub excluded_volume: f64,
    pub points: usize,
}

impl CubeOracle {
    pub fn reference() -> Self {
        Self { n0: 128, depth: 8, thr: 4.0, xi_max: 6.0 }
    }

    pub fn integrate(&self, k: &CVec3, f: &dyn Fn(&Vec3) -> C64) -> OracleValue {
        let kr = re(k);
        let t = norm(&kr);
        let e2 = scale(1.0 / norm(&im(k)), &im(k));
        let centre = scale(-1.0, &kr);
        let dist = |x: &Vec3| {
            let d = sub(x, &centre);
            let y = dot(&d, &e2);
            let rho = norm(&sub(&d, &scale(y, &e2)));
            ((rho - t).powi(2) + y * y).sqrt()
        };
        let g = 0.5 / 3f64.sqrt();
        let mut total = C64::new(0.0, 0.0);
                let mut points = 0usize;
        let mut h = 2.0 * self.xi_max / self.n0 as f64;
        let mut near: Vec<Vec3> = Vec::new();
        let cell = |c: &Vec3, h: f64, total: &mut C64, points: &mut usize| {
            let w = h * h * h / 8.0;
            for sx in [-g, g] {
                for sy in [-g, g] {
                    for sz in [-g, g] {
                        let x = [c[0] + sx * h, c[1] + sy * h, c[2] + sz * h];
                        let den = C64::new(dot(&x, &x), 0.0) + cdot_real(k, &x) * 2.0;
                        *total += f(&x) / den * w;
                        *points += 1;
                    }
                }
            }
        };
        for i in 0..self.n0 {
            for j in 0..self.n0 {
                for l in 0..self.n0 {
                    let c = [
                        -self.xi_max + (i as f64 + 0.5) * h,
                        -self.xi_max + (j as f64 + 0.5) * h,
                        -self.xi_max + (l as f64 + 0.5) * h,
                    ];
                    if dist(&c) < self.thr * h {
                        near.push(c);
                    } else {
                        cell(&c, h, &mut total, &mut points);
                    }
                }
            }
        }
        for _ in 0..self.depth {
            let hc = 0.5 * h;
            let mut next = Vec::new();
            for c in &near {
                for sx in [-0.25, 0.25] {
                    for sy in [-0.25, 0.25] {
                        for sz in [-0.25, 0.25] {
                            let cc = [c[0] + sx * h, c[1] + sy * h, c[2] + sz * h];
                            if dist(&cc) < self.thr * hc {
                                next.push(cc);
                            } else {
                                cell(&cc, hc, &mut total, &mut points);
                            }
                        }
                    }
                }
            }
            near = next;
            h = hc;
        }
        let excluded = near.len() as f64 * h * h * h;
        OracleValue { value: total, excluded_volume: excluded, points }
    }
}

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_complex::Complex;

use crate::error::CoreError;
use crate::grid::Grid;
use crate::vec3::norm;
use crate::{Real, Vec3, C64};

/// `sup (1+|p|)^mu |u|` over samples given as (|p|, value) pairs.
///
/// Rejects the first non-finite value with its index.
pub fn weighted_norm<T: Real>(radii: &[T], values: &[Complex<T>], mu: T) -> Result<T, CoreError> {
    let mut best = T::zero();
    for (i, (r, v)) in radii.iter().zip(values).enumerate() {
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(CoreError::NonFinite { index: i });
        }
        let w = (T::one() + *r).powf(mu) * v.norm();
        if w > best {
            best = w;
        }
    }
    Ok(best)
}

/// Complex samples on the (λ, p) product grid.
///
/// Values are stored at `lambda_index * n_p + p_index`. Queries beyond P_max return
/// zero and bump a counter readable through [`WeightedField::tail_hits`].
#[derive(Debug)]
pub struct WeightedField {
    pub grid: Arc<Grid>,
    pub values: Vec<C64>,
    pub mu: f64,
    tail: AtomicU64,
}

impl Clone for WeightedField {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.clone(),
            mu: self.mu,
            tail: AtomicU64::new(self.tail.load(Ordering::Relaxed)),
        }
    }
}

impl WeightedField {
    pub fn new(grid: Arc<Grid>, values: Vec<C64>, mu: f64) -> Self {
        assert_eq!(values.len(), grid.n_lambda() * grid.n_p());
        Self { grid, values, mu, tail: AtomicU64::new(0) }
    }

    pub fn zeros(grid: Arc<Grid>, mu: f64) -> Self {
        let n = grid.n_lambda() * grid.n_p();
        Self::new(grid, vec![C64::new(0.0, 0.0); n], mu)
    }

    pub fn from_fn(grid: Arc<Grid>, mu: f64, f: impl Fn(C64, &Vec3) -> C64) -> Self {
        let mut values = Vec::with_capacity(grid.n_lambda() * grid.n_p());
        for l in &grid.lambda_nodes {
            for p in &grid.p_nodes {
                values.push(f(*l, p));
            }
        }
        Self::new(grid, values, mu)
    }

    /// Field constant in λ.
    pub fn from_p_field(r: &PField) -> Self {
        let nl = r.grid.n_lambda();
        let mut values = Vec::with_capacity(nl * r.values.len());
        for _ in 0..nl {
            values.extend_from_slice(&r.values);
        }
        Self::new(r.grid.clone(), values, r.mu)
    }

    pub fn get(&self, il: usize, ip: usize) -> C64 {
        self.values[il * self.grid.n_p() + ip]
    }

    pub fn with_values(&self, values: Vec<C64>) -> Self {
        Self::new(self.grid.clone(), values, self.mu)
    }

    pub fn norm(&self) -> Result<f64, CoreError> {
        self.norm_with(self.mu)
    }

    pub fn norm_with(&self, mu: f64) -> Result<f64, CoreError> {
        let np = self.grid.n_p();
        let radii: Vec<f64> = (0..self.values.len())
            .map(|i| norm(&self.grid.p_nodes[i % np]))
            .collect();
        weighted_norm(&radii, &self.values, mu)
    }

    /// Weighted norm of `self − other` (same grid).
    pub fn distance(&self, other: &Self) -> Result<f64, CoreError> {
        let d: Vec<C64> = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        self.with_values(d).norm()
    }

    /// λ-slice as a p-field.
    pub fn slice(&self, il: usize) -> PField {
        let np = self.grid.n_p();
        PField::new(self.grid.clone(), self.values[il * np..(il + 1) * np].to_vec(), self.mu)
    }

    pub fn interpolate(&self, lambda: C64, p: &Vec3) -> C64 {
        let Some(ps) = self.grid.p_stencil(p) else {
            self.tail.fetch_add(1, Ordering::Relaxed);
            return C64::new(0.0, 0.0);
        };
        let ls = self.grid.lambda_stencil(lambda);
        let np = self.grid.n_p();
        let mut s = C64::new(0.0, 0.0);
        for &(il, wl) in &ls {
            if wl == 0.0 {
                continue;
            }
            let row = &self.values[il * np..(il + 1) * np];
            let mut t = C64::new(0.0, 0.0);
            for &(ip, wp) in &ps {
                if wp != 0.0 {
                    t += row[ip] * wp;
                }
            }
            s += t * wl;
        }
        s
    }

    pub fn tail_hits(&self) -> u64 {
        self.tail.load(Ordering::Relaxed)
    }
}

/// Complex samples on the p-grid only (scattering data, potentials, slices).
#[derive(Debug)]
pub struct PField {
    pub grid: Arc<Grid>,
    pub values: Vec<C64>,
    pub mu: f64,
    tail: AtomicU64,
}

impl Clone for PField {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.clone(),
            mu: self.mu,
            tail: AtomicU64::new(self.tail.load(Ordering::Relaxed)),
        }
    }
}

impl PField {
    pub fn new(grid: Arc<Grid>, values: Vec<C64>, mu: f64) -> Self {
        assert_eq!(values.len(), grid.n_p());
        Self { grid, values, mu, tail: AtomicU64::new(0) }
    }

    pub fn from_fn(grid: Arc<Grid>, mu: f64, f: impl Fn(&Vec3) -> C64) -> Self {
        let values = grid.p_nodes.iter().map(f).collect();
        Self::new(grid, values, mu)
    }

    pub fn with_values(&self, values: Vec<C64>) -> Self {
        Self::new(self.grid.clone(), values, self.mu)
    }

    pub fn norm(&self) -> Result<f64, CoreError> {
        self.norm_with(self.mu)
    }

    pub fn norm_with(&self, mu: f64) -> Result<f64, CoreError> {
        let radii: Vec<f64> = self.grid.p_nodes.iter().map(norm).collect();
        weighted_norm(&radii, &self.values, mu)
    }

    pub fn distance(&self, other: &Self) -> Result<f64, CoreError> {
        let d: Vec<C64> = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        self.with_values(d).norm()
    }

    pub fn interpolate(&self, p: &Vec3) -> C64 {
        match self.grid.p_stencil(p) {
            Some(st) => st.iter().map(|&(i, w)| self.values[i] * w).sum(),
            None => {
                self.tail.fetch_add(1, Ordering::Relaxed);
                C64::new(0.0, 0.0)
            }
        }
    }

    pub fn tail_hits(&self) -> u64 {
        self.tail.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grids, DirectionSpec, GridSpec};
    use proptest::prelude::*;

    fn grid() -> Arc<Grid> {
        let spec = GridSpec {
            p_radii: vec![0.5, 1.0, 2.0, 4.0],
            p_directions: DirectionSpec::Icosphere { icosphere_level: 1 },
            lambda_moduli: vec![0.5, 0.9, 1.1, 2.0],
            lambda_args: 8,
            phi_nodes: 16,
            xi_nodes_per_axis: 8,
            xi_max: 6.0,
        };
        Arc::new(make_grids(&spec, &[0.0, 0.0, 1.0]).unwrap())
    }

    #[test]
    fn norm_examples() {
        let g = grid();
        assert_eq!(WeightedField::zeros(g.clone(), 2.0).norm().unwrap(), 0.0);
        let f = WeightedField::from_fn(g.clone(), 2.0, |_, p| {
            C64::new((1.0 + norm(p)).powf(-2.0), 0.0)
        });
        assert!((f.norm().unwrap() - 1.0).abs() < 1e-15);
        let mut r = PField::from_fn(g.clone(), 2.0, |_| C64::new(0.0, 0.0));
        let i = g.p_nodes.iter().position(|p| (norm(p) - 1.0).abs() < 1e-12).unwrap();
        r.values[i] = C64::new(3.0, 0.0);
        assert_eq!(r.norm().unwrap(), 12.0);
    }

    #[test]
    fn non_finite_sample_is_reported() {
        let g = grid();
        let mut f = WeightedField::zeros(g, 2.0);
        f.values[17] = C64::new(f64::NAN, 0.0);
        assert_eq!(f.norm().unwrap_err(), CoreError::NonFinite { index: 17 });
    }

    #[test]
    fn node_reproduction() {
        let g = grid();
        let f = WeightedField::from_fn(g.clone(), 2.0, |l, p| {
            C64::new(p[0] * p[1] + l.re, l.im * p[2] + l.norm_sqr())
        });
        for (il, l) in g.lambda_nodes.iter().enumerate() {
            for (ip, p) in g.p_nodes.iter().enumerate() {
                let v = f.interpolate(*l, p);
                assert!((v - f.get(il, ip)).norm() <= 1e-14 * (1.0 + v.norm()));
            }
        }
    }

    #[test]
    fn linear_in_lambda_reproduced_at_cell_midpoint() {
        let g = grid();
        let f = WeightedField::from_fn(g.clone(), 2.0, |l, _| C64::new(2.0 * l.re - 0.5, l.im));
        let p = g.p_nodes[5];
        let a = g.lambda_nodes[1 * 8 + 2];
        let b = g.lambda_nodes[2 * 8 + 3];
        let mid = (a + b) * 0.5;
        let v = f.interpolate(mid, &p);
        assert!((v - C64::new(2.0 * mid.re - 0.5, mid.im)).norm() < 1e-12);
    }

    #[test]
    fn tail_is_zero_and_counted() {
        let g = grid();
        let f = WeightedField::from_fn(g.clone(), 2.0, |_, _| C64::new(1.0, 0.0));
        let v = f.interpolate(C64::new(0.7, 0.2), &[8.0, 0.0, 0.0]);
        assert_eq!(v, C64::new(0.0, 0.0));
        assert_eq!(f.tail_hits(), 1);
    }

    fn arb_values(n: usize) -> impl Strategy<Value = Vec<C64>> {
        prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b)| C64::new(a, b)), n)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn norm_is_absolutely_homogeneous(vals in arb_values(168), a in -4.0..4.0f64, b in -4.0..4.0f64) {
            let g = grid();
            let u = PField::new(g, vals, 2.0);
            let s = C64::new(a, b);
            let su = u.with_values(u.values.iter().map(|v| v * s).collect());
            let lhs = su.norm().unwrap();
            let rhs = s.norm() * u.norm().unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }

        #[test]
        fn norm_triangle_inequality(u in arb_values(168), v in arb_values(168)) {
            let g = grid();
            let fu = PField::new(g.clone(), u, 2.5);
            let fv = PField::new(g, v, 2.5);
            let sum = fu.with_values(fu.values.iter().zip(&fv.values).map(|(a, b)| a + b).collect());
            prop_assert!(sum.norm().unwrap() <= fu.norm().unwrap() + fv.norm().unwrap() + 1e-12);
        }

        #[test]
        fn affine_in_lambda_and_p_reproduced(
            c in prop::array::uniform4(-2.0..2.0f64),
            m in 0.55..1.8f64, th in 0.0..6.28f64,
            il in 0usize..168,
        ) {
            let g = grid();
            // affine in (Re λ, Im λ) with p-dependent coefficients: exact along λ for any p-node
            let f = WeightedField::from_fn(g.clone(), 2.0, |l, p| {
                C64::new(c[0] + c[1] * l.re + p[0] * l.im, c[2] * l.im + c[3] * p[1])
            });
            let lam = C64::from_polar(m, th);
            prop_assume!((m - 1.0).abs() > 1e-3);
            let p = g.p_nodes[il];
            let v = f.interpolate(lam, &p);
            let e = C64::new(c[0] + c[1] * lam.re + p[0] * lam.im, c[2] * lam.im + c[3] * p[1]);
            prop_assert!((v - e).norm() < 1e-12, "{v} vs {e}");
        }

        #[test]
        fn p_interpolation_is_affine_in_radius_along_rays(
            id in 0usize..42, r in 0.5..4.0f64,
        ) {
            let g = grid();
            let d = g.sphere.vertices[id];
            let f = PField::from_fn(g.clone(), 2.0, |p| C64::new(norm(p), 0.0));
            let v = f.interpolate(&[r * d[0], r * d[1], r * d[2]]);
            prop_assert!((v.re - r).abs() < 1e-12);
        }
    }
}

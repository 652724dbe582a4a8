use serde::{Deserialize, Serialize};

use crate::error::{invalid, CoreError};
use crate::grid::icosphere;
use crate::vec3::{norm, normalize, scale, sub};
use crate::{PFunction, Vec3, C64};

/// One Gaussian term `a · exp(−|p − c|² / w²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianTerm {
    pub amplitude: C64,
    pub center: [f64; 3],
    pub width: f64,
}

/// Fourier-space potential as a Gaussian mixture with its decay exponents and size bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub terms: Vec<GaussianTerm>,
    pub mu: f64,
    pub mu_star: f64,
    #[serde(rename = "declared_C")]
    pub declared_c: f64,
}

impl PotentialSpec {
    pub fn eval(&self, p: &Vec3) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for t in &self.terms {
            let d = sub(p, &t.center);
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            s += t.amplitude * (-r2 / (t.width * t.width)).exp();
        }
        s
    }

    /// Centred isotropic Gaussian `a·exp(−|p|²/w²)` with `declared_C` set to its
    /// sampled μ-norm.
    pub fn gaussian(amplitude: f64, width: f64, mu: f64, mu_star: f64) -> Self {
        let mut s = Self {
            terms: vec![GaussianTerm {
                amplitude: C64::new(amplitude, 0.0),
                center: [0.0; 3],
                width,
            }],
            mu,
            mu_star,
            declared_c: 0.0,
        };
        s.declared_c = s.sampled_norm(mu);
        s
    }

    pub fn zero(mu: f64, mu_star: f64) -> Self {
        Self { terms: Vec::new(), mu, mu_star, declared_c: 0.0 }
    }

    /// Same potential with all amplitudes and `declared_C` multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.amplitude *= s;
        }
        out.declared_c *= s.abs();
        out
    }

    /// Numeric sup of `(1+|p|)^mu |v̂(p)|` over rays through the origin and through
    /// each term centre, sampled densely in radius.
    pub fn sampled_norm(&self, mu: f64) -> f64 {
        if self.terms.is_empty() {
            return 0.0;
        }
        let dirs = icosphere(3).vertices;
        let reach = self
            .terms
            .iter()
            .map(|t| norm(&t.center) + 8.0 * t.width)
            .fold(0.0, f64::max);
        let rmax = reach.max(4.0 * mu);
        let nr = 800;
        let mut best: f64 = 0.0;
        let mut visit = |p: Vec3| {
            let v = (1.0 + norm(&p)).powf(mu) * self.eval(&p).norm();
            if v > best {
                best = v;
            }
        };
        visit([0.0; 3]);
        for i in 1..=nr {
            let r = rmax * i as f64 / nr as f64;
            for d in &dirs {
                visit(scale(r, d));
            }
            for t in &self.terms {
                if let Some(u) = normalize(&t.center) {
                    visit(scale(r, &u));
                }
            }
        }
        best
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.mu >= 2.0 && self.mu.is_finite()) {
            return invalid(format!("mu must be at least 2, got {}", self.mu));
        }
        if !(self.mu_star > self.mu && self.mu_star.is_finite()) {
            return invalid("mu_star must exceed mu");
        }
        if !(self.declared_c >= 0.0 && self.declared_c.is_finite()) {
            return invalid("declared_C must be nonnegative");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if !(t.width > 0.0 && t.width.is_finite()) {
                return invalid(format!("term {i}: width must be positive"));
            }
            if !(t.amplitude.re.is_finite() && t.amplitude.im.is_finite())
                || t.center.iter().any(|c| !c.is_finite())
            {
                return invalid(format!("term {i}: non-finite amplitude or center"));
            }
        }
        let n = self.sampled_norm(self.mu);
        if n > self.declared_c * (1.0 + 1e-6) {
            return invalid(format!(
                "sampled mu-norm {n} exceeds declared_C {}",
                self.declared_c
            ));
        }
        Ok(())
    }
}

impl PFunction for PotentialSpec {
    fn eval(&self, p: &Vec3) -> C64 {
        PotentialSpec::eval(self, p)
    }
}

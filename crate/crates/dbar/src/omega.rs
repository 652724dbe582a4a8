use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use fd_core::{CVec3, Grid, PotentialSpec, Vec3, WeightedField, C64};
use fd_forward::{solve_h_at_k, ForwardConfig, ForwardSolution};
use fd_geometry::{lambda_of_k, Frame};

use crate::DbarError;

/// A function on Ω evaluated in ambient coordinates (k, p).
pub trait OmegaField: Sync {
    /// Geometry errors signal a point on L_ν (or p = 0); callers may perturb and retry.
    fn eval(&self, k: &CVec3, p: &Vec3) -> Result<C64, DbarError>;
}

/// A (λ, p)-grid field read through the chart: U′(k, p) = U(λ(k, p), p).
pub struct ChartField<'a> {
    pub field: &'a WeightedField,
    pub frame: Frame<f64>,
}

impl OmegaField for ChartField<'_> {
    fn eval(&self, k: &CVec3, p: &Vec3) -> Result<C64, DbarError> {
        let l = lambda_of_k(k, p, &self.frame)?;
        if l.norm() == 0.0 {
            return Err(DbarError::ZeroLambda);
        }
        Ok(self.field.interpolate(l, p))
    }
}

/// H(k, p) computed by a forward solve at k, with a small cache of recent solves.
pub struct ForwardOmega {
    pub vhat: PotentialSpec,
    pub grid: Arc<Grid>,
    pub cfg: ForwardConfig,
    cache: Mutex<Vec<([u64; 6], Arc<ForwardSolution>)>>,
    solves: AtomicUsize,
}

const CACHE_SLOTS: usize = 2;

fn key(k: &CVec3) -> [u64; 6] {
    [
        k[0].re.to_bits(),
        k[0].im.to_bits(),
        k[1].re.to_bits(),
        k[1].im.to_bits(),
        k[2].re.to_bits(),
        k[2].im.to_bits(),
    ]
}

impl ForwardOmega {
    pub fn new(vhat: PotentialSpec, grid: Arc<Grid>, cfg: ForwardConfig) -> Self {
        Self { vhat, grid, cfg, cache: Mutex::new(Vec::new()), solves: AtomicUsize::new(0) }
    }

    pub fn solution(&self, k: &CVec3) -> Result<Arc<ForwardSolution>, DbarError> {
        let kk = key(k);
        {
            let c = self.cache.lock().unwrap();
            if let Some((_, s)) = c.iter().find(|(q, _)| *q == kk) {
                return Ok(s.clone());
            }
        }
        let sol = Arc::new(solve_h_at_k(k, &self.vhat, &self.grid, &self.cfg)?);
        self.solves.fetch_add(1, Ordering::Relaxed);
        let mut c = self.cache.lock().unwrap();
        if c.len() >= CACHE_SLOTS {
            c.remove(0);
        }
        c.push((kk, sol.clone()));
        Ok(sol)
    }

    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }
}

impl OmegaField for ForwardOmega {
    fn eval(&self, k: &CVec3, p: &Vec3) -> Result<C64, DbarError> {
        Ok(self.solution(k)?.eval(p))
    }
}

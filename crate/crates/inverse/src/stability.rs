use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use fd_core::vec3::norm;
use fd_core::{PField, C64};
use fd_forward::ScatterData;
use fd_geometry::Frame;

use crate::fixed_point::{solve_h_from_r_with, InverseConfig, InverseSolution};
use crate::reconstruct::reconstruct_vhat;
use crate::InverseError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StabilityStats {
    pub noise_level: f64,
    /// ‖R − R̃‖_μ per completed trial.
    pub data_discrepancies: Vec<f64>,
    /// ‖v̂_rec − ṽ̂_rec‖_μ per completed trial.
    pub reconstruction_discrepancies: Vec<f64>,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// Trials whose perturbed data left the ball |||R̃|||_μ ≤ r/2.
    pub skipped: usize,
    /// Trials with identical data (zero noise).
    pub exact_matches: usize,
    /// 1.5/(1 − 4ĉ₆r) when ĉ₆ is known and admissible.
    pub envelope: Option<f64>,
}

impl StabilityStats {
    pub fn mean_reconstruction_discrepancy(&self) -> f64 {
        if self.reconstruction_discrepancies.is_empty() {
            return 0.0;
        }
        self.reconstruction_discrepancies.iter().sum::<f64>() / self.reconstruction_discrepancies.len() as f64
    }
}

/// Reconstructs from `trials` noisy copies of R and compares with the clean reconstruction.
///
/// Noise is a node-wise complex Gaussian of size `noise_level·(1+|p|)^{−μ}`. Each
/// perturbed solve starts from the clean H. The same `seed` with a different
/// `noise_level` reuses the same draws, scaled.
pub fn stability_probe(
    r: &ScatterData,
    clean: &InverseSolution,
    noise_level: f64,
    trials: usize,
    seed: u64,
    cfg: &InverseConfig,
    frame: &Frame<f64>,
) -> Result<StabilityStats, InverseError> {
    let clean_vhat = reconstruct_vhat(clean, r)?.vhat;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = r.r.mu;
    let mut out = StabilityStats {
        noise_level,
        envelope: cfg.contraction_factor().filter(|q| *q < 1.0).map(|q| 1.5 / (1.0 - q)),
        ..Default::default()
    };
    for _ in 0..trials {
        let noisy: Vec<C64> = r
            .r
            .grid
            .p_nodes
            .iter()
            .zip(&r.r.values)
            .map(|(p, v)| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                let s = noise_level * (1.0 + norm(p)).powf(-mu) / std::f64::consts::SQRT_2;
                v + C64::new(a, b) * s
            })
            .collect();
        let rt = ScatterData { r: r.r.with_values(noisy), tau: r.tau };
        let data = rt.r.distance(&r.r)?;
        if data == 0.0 {
            out.exact_matches += 1;
            out.data_discrepancies.push(0.0);
            out.reconstruction_discrepancies.push(0.0);
            out.ratios.push(0.0);
            continue;
        }
        if rt.r.norm()? > 0.5 * cfg.r {
            out.skipped += 1;
            continue;
        }
        let sol = solve_h_from_r_with(&rt, cfg, frame, Some(&clean.h))?;
        let v: PField = reconstruct_vhat(&sol, &rt)?.vhat;
        let rec = v.distance(&clean_vhat)?;
        let ratio = rec / data;
        out.data_discrepancies.push(data);
        out.reconstruction_discrepancies.push(rec);
        out.ratios.push(ratio);
        out.max_ratio = out.max_ratio.max(ratio);
    }
    Ok(out)
}

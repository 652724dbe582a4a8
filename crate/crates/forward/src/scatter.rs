use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use fd_core::vec3::norm;
use fd_core::{Grid, PField, PotentialSpec, C64};
use fd_geometry::{k_gamma, Frame};

use crate::solve::{solve_h_at_k, ForwardConfig, SolveStats};
use crate::ForwardError;

/// R(p) on the p-grid, optionally low-pass truncated at |p| < 2τ.
#[derive(Debug, Clone)]
pub struct ScatterData {
    pub r: PField,
    pub tau: Option<f64>,
}

#[allow(non_snake_case)]
#[derive(Debug, Serialize, Deserialize)]
struct Record {
    p_x: f64,
    p_y: f64,
    p_z: f64,
    re_R: f64,
    im_R: f64,
}

impl ScatterData {
    /// R_{2τ}: keeps nodes with |p| < 2τ and zeroes the rest.
    pub fn truncate_lowpass(&self, tau: f64) -> ScatterData {
        assert!(tau > 0.0, "tau must be positive");
        let vals = self
            .r
            .grid
            .p_nodes
            .iter()
            .zip(&self.r.values)
            .map(|(p, v)| if norm(p) < 2.0 * tau { *v } else { C64::new(0.0, 0.0) })
            .collect();
        ScatterData { r: self.r.with_values(vals), tau: Some(tau) }
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), ForwardError> {
        let mut w = csv::Writer::from_path(path)?;
        for (p, v) in self.r.grid.p_nodes.iter().zip(&self.r.values) {
            w.serialize(Record { p_x: p[0], p_y: p[1], p_z: p[2], re_R: v.re, im_R: v.im })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a CSV written for `grid`; every node must appear exactly once.
    pub fn read_csv(path: &Path, grid: &Arc<Grid>, mu: f64) -> Result<ScatterData, ForwardError> {
        let mut rd = csv::Reader::from_path(path)?;
        let headers = rd.headers()?.clone();
        let want = ["p_x", "p_y", "p_z", "re_R", "im_R"];
        if headers.iter().collect::<Vec<_>>() != want {
            return Err(ForwardError::Data(format!("unexpected header {headers:?}")));
        }
        let mut vals = vec![None; grid.n_p()];
        for rec in rd.deserialize() {
            let rec: Record = rec?;
            let p = [rec.p_x, rec.p_y, rec.p_z];
            let idx = grid
                .p_nodes
                .iter()
                .position(|q| norm(&[q[0] - p[0], q[1] - p[1], q[2] - p[2]]) <= 1e-9 * (1.0 + norm(q)))
                .ok_or_else(|| ForwardError::Data(format!("point {p:?} is not a grid node")))?;
            if vals[idx].is_some() {
                return Err(ForwardError::Data(format!("node {idx} listed twice")));
            }
            vals[idx] = Some(C64::new(rec.re_R, rec.im_R));
        }
        let vals: Option<Vec<C64>> = vals.into_iter().collect();
        let vals = vals.ok_or_else(|| ForwardError::Data("missing grid nodes".into()))?;
        Ok(ScatterData { r: PField::new(grid.clone(), vals, mu), tau: None })
    }
}

/// R(p) = H(k_γ(p), p) at every p-node, one forward solve per node.
pub fn restrict_r(
    vhat: &PotentialSpec,
    frame: &Frame<f64>,
    grid: &Arc<Grid>,
    cfg: &ForwardConfig,
) -> Result<(ScatterData, SolveStats), ForwardError> {
    let mut vals = Vec::with_capacity(grid.n_p());
    let mut stats = SolveStats::default();
    for (i, p) in grid.p_nodes.iter().enumerate() {
        let wrap = |e: ForwardError| ForwardError::AtNode { index: i, source: Box::new(e) };
        let k = k_gamma(p, frame).map_err(|e| wrap(e.into()))?;
        let sol = solve_h_at_k(&k, vhat, grid, cfg).map_err(wrap)?;
        stats.absorb(&sol);
        vals.push(sol.h.values[i]);
    }
    Ok((ScatterData { r: PField::new(grid.clone(), vals, vhat.mu), tau: None }, stats))
}

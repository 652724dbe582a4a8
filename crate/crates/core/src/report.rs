use serde::{Deserialize, Serialize};

/// Per-run record of an iterative solve.
///
/// `norm_history` and `difference_history` have one entry per iteration;
/// `contraction_ratios[n] = difference_history[n+1] / difference_history[n]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub norm_history: Vec<f64>,
    pub difference_history: Vec<f64>,
    pub contraction_ratios: Vec<f64>,
    pub residual: f64,
    pub calibrated_constants: Vec<(String, f64)>,
    pub wall_time: f64,
}

impl SolveReport {
    /// Appends one iteration given the new iterate norm and its distance to the previous iterate.
    pub fn push(&mut self, norm: f64, difference: f64) {
        if let Some(&prev) = self.difference_history.last() {
            self.contraction_ratios.push(if prev > 0.0 { difference / prev } else { 0.0 });
        }
        self.iterations += 1;
        self.norm_history.push(norm);
        self.difference_history.push(difference);
        self.residual = difference;
    }

    /// Geometric mean of the contraction ratios over the last `n` entries.
    pub fn fitted_ratio(&self, n: usize) -> Option<f64> {
        let r: Vec<f64> = self
            .contraction_ratios
            .iter()
            .rev()
            .take(n)
            .copied()
            .filter(|x| *x > 0.0)
            .collect();
        if r.is_empty() {
            return None;
        }
        Some((r.iter().map(|x| x.ln()).sum::<f64>() / r.len() as f64).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_lengths_track_iterations() {
        let mut r = SolveReport::default();
        for (i, d) in [1.0, 0.5, 0.25, 0.125].iter().enumerate() {
            r.push(1.0 + i as f64, *d);
        }
        assert_eq!(r.iterations, 4);
        assert_eq!(r.norm_history.len(), 4);
        assert_eq!(r.contraction_ratios, vec![0.5, 0.5, 0.5]);
        assert!((r.fitted_ratio(3).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(r.residual, 0.125);
    }
}

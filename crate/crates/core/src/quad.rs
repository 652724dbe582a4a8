//! Gauss-Legendre rules (nodes from `gauss-quad`, cached per order) and panel helpers.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;

/// Nodes and weights of the `n`-point rule on [-1, 1], sorted by node.
pub fn gauss_legendre(n: usize) -> Arc<Vec<(f64, f64)>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
            let mut pairs: Vec<(f64, f64)> =
                rule.nodes().copied().zip(rule.weights().copied()).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            Arc::new(pairs)
        })
        .clone()
}

/// Rule mapped to [a, b]: returns (node, weight) pairs.
pub fn gl_panel(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    gauss_legendre(n)
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect()
}

/// Composite rule over consecutive breakpoints.
pub fn gl_composite(n: usize, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n * breaks.len().saturating_sub(1));
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            out.extend(gl_panel(n, w[0], w[1]));
        }
    }
    out
}

/// Breakpoints on [a, b] refined geometrically toward both ends.
///
/// The first panel at each end has width `h0`; widths double toward the middle.
pub fn graded_breaks(a: f64, b: f64, h0: f64) -> Vec<f64> {
    let len = b - a;
    if len <= 0.0 {
        return vec![a, b];
    }
    if h0 <= 0.0 || 2.0 * h0 >= len {
        return vec![a, b];
    }
    let mut left = vec![a];
    let mut right = vec![b];
    let mut h = h0;
    let mut xl = a;
    let mut xr = b;
    loop {
        if xr - xl <= 4.0 * h {
            break;
        }
        xl += h;
        xr -= h;
        left.push(xl);
        right.push(xr);
        h *= 2.0;
    }
    right.reverse();
    left.extend(right);
    left
}

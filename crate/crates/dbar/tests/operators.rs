use std::sync::Arc;
use std::time::Instant;

use fd_core::{make_grids, DirectionSpec, Grid, GridSpec, PotentialSpec, WeightedField, C64, DEFAULT_NU};
use fd_dbar::{
    bracket, cauchy_transform, dbar_residual, m_from_n, operator_i, operator_n, ChartField, OperatorConfig,
    PhiRule, ZetaQuadrature,
};
use fd_forward::ForwardConfig;
use fd_geometry::{lambda0, Frame};

fn small_grid() -> Arc<Grid> {
    let spec = GridSpec {
        p_radii: vec![0.5, 1.5, 3.0],
        p_directions: DirectionSpec::Icosphere { icosphere_level: 0 },
        lambda_moduli: vec![0.5, 0.8, 1.25, 2.0],
        lambda_args: 6,
        phi_nodes: 16,
        xi_nodes_per_axis: 8,
        xi_max: 6.0,
    };
    Arc::new(make_grids(&spec, &DEFAULT_NU).unwrap())
}

fn smooth_field(grid: &Arc<Grid>, a: f64, c: f64) -> WeightedField {
    WeightedField::from_fn(grid.clone(), 2.0, |l, p| {
        let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        C64::new(a, c * p[2]) * (-r2 / 2.0).exp() * (1.0 + 0.2 / (1.0 + l.norm_sqr()))
    })
}

#[test]
fn disk_indicator_follows_disk_law() {
    for rd in [0.7, 1.3, 2.6] {
        let poles: Vec<C64> = (0..20)
            .map(|j| {
                let m = 0.2 + 0.21 * j as f64;
                C64::from_polar(m, 0.37 + 1.1 * j as f64)
            })
            .collect();
        let mut breaks: Vec<f64> = poles.iter().map(|l| l.norm()).collect();
        breaks.push(rd);
        let q = ZetaQuadrature::new(&breaks, 1e-2, 1e2, 2.0, 3, 8);
        let disk = |z: C64| C64::new(if z.norm() < rd { 1.0 } else { 0.0 }, 0.0);
        for l in &poles {
            let v = cauchy_transform(&disk, *l, None, &q).unwrap();
            let want = if l.norm() <= rd { l.conj() } else { rd * rd / l };
            assert!((v - want).norm() < 1e-3, "R={rd} lambda={l}: {v} vs {want}");
        }
    }
}

#[test]
fn bracket_is_bilinear() {
    let g = small_grid();
    let fr = Frame::default();
    let rule = PhiRule { phi_nodes: 16 };
    let u = smooth_field(&g, 1.0, 0.3);
    let v = smooth_field(&g, -0.4, 1.1);
    let w = smooth_field(&g, 0.7, -0.2);
    let (a, b) = (C64::new(0.3, -1.2), C64::new(2.0, 0.5));
    let uv = u.with_values(u.values.iter().zip(&v.values).map(|(x, y)| a * x + b * y).collect());
    let cu = ChartField { field: &u, frame: fr };
    let cv = ChartField { field: &v, frame: fr };
    let cw = ChartField { field: &w, frame: fr };
    let cuv = ChartField { field: &uv, frame: fr };
    for (l, p) in [(C64::from_polar(0.6, 0.4), [0.7, -0.2, 0.9]), (C64::from_polar(1.7, -2.2), [1.2, 0.8, -0.3])] {
        let lhs = bracket(&cuv, &cw, l, &p, &fr, &rule).unwrap();
        let rhs = a * bracket(&cu, &cw, l, &p, &fr, &rule).unwrap() + b * bracket(&cv, &cw, l, &p, &fr, &rule).unwrap();
        assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1e-300), "{lhs} vs {rhs}");
        let lhs = bracket(&cw, &cuv, l, &p, &fr, &rule).unwrap();
        let rhs = a * bracket(&cw, &cu, l, &p, &fr, &rule).unwrap() + b * bracket(&cw, &cv, l, &p, &fr, &rule).unwrap();
        assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1e-300), "{lhs} vs {rhs}");
    }
}

#[test]
fn zero_field_maps_to_zero() {
    let g = small_grid();
    let z = WeightedField::zeros(g.clone(), 2.0);
    let n = operator_n(&z, &Frame::default(), &OperatorConfig::default()).unwrap();
    assert!(n.values.values.iter().all(|v| *v == C64::new(0.0, 0.0)));
    assert!(n.at_lambda0.values.iter().all(|v| *v == C64::new(0.0, 0.0)));
    assert!(m_from_n(&n).values.iter().all(|v| *v == C64::new(0.0, 0.0)));
}

#[test]
fn m_vanishes_at_reference_ring_and_is_quadratic() {
    let g = small_grid();
    let fr = Frame::default();
    let cfg = OperatorConfig::default();
    let u = smooth_field(&g, 1.0, 0.5);
    let t = Instant::now();
    let n = operator_n(&u, &fr, &cfg).unwrap();
    assert!(t.elapsed().as_secs() < 60);
    let m = m_from_n(&n);
    let np = g.n_p();
    for (i, v) in m.values.iter().enumerate() {
        assert_eq!(*v, n.values.values[i] - n.at_lambda0.values[i % np]);
    }
    // M(U)(λ0(p), p) from the same modes is the difference kernel at its reference pole
    for p in g.p_nodes.iter().step_by(7) {
        let l0 = lambda0(p, &fr).unwrap();
        let q = cfg.zeta_quadrature(&g.lambda_moduli);
        let v = cauchy_transform(&|z| z.conj() * (-z.norm_sqr()).exp(), l0, Some(l0), &q).unwrap();
        assert_eq!(v, C64::new(0.0, 0.0));
    }
    let n2 = operator_n(&u.with_values(u.values.iter().map(|v| v * 3.0).collect()), &fr, &cfg).unwrap();
    for (a, b) in n2.values.values.iter().zip(&n.values.values) {
        assert!((a - b * 9.0).norm() <= 1e-10 * (b.norm() * 9.0).max(1e-300));
    }
    // bilinear I: I(U, V) + I(V, U) = N(U+V) − N(U) − N(V)
    let v = smooth_field(&g, -0.3, 0.8);
    let uv = u.with_values(u.values.iter().zip(&v.values).map(|(a, b)| a + b).collect());
    let nuv = operator_n(&uv, &fr, &cfg).unwrap();
    let nv = operator_n(&v, &fr, &cfg).unwrap();
    let iuv = operator_i(&u, &v, &fr, &cfg).unwrap();
    let ivu = operator_i(&v, &u, &fr, &cfg).unwrap();
    for i in 0..nuv.values.values.len() {
        let lhs = iuv.values.values[i] + ivu.values.values[i];
        let rhs = nuv.values.values[i] - n.values.values[i] - nv.values.values[i];
        assert!((lhs - rhs).norm() <= 1e-9 * (rhs.norm() + n.values.values[i].norm()));
    }
}

#[test]
fn residual_of_zero_potential_is_zero() {
    let g = small_grid();
    let v = PotentialSpec::zero(2.0, 4.0);
    let cfg = ForwardConfig { xi_nodes: 6, ..Default::default() };
    let pts = vec![(C64::from_polar(0.6, 0.3), [0.8, 0.3, -0.4])];
    let r = dbar_residual(&v, &pts, 0.1, 8, &Frame::default(), &g, &cfg).unwrap();
    assert_eq!(r[0].residual, 0.0);
}

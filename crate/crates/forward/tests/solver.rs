use std::sync::Arc;

use fd_core::vec3::{complexify, norm};
use fd_core::{make_grids, DirectionSpec, Grid, GridSpec, PotentialSpec, C64};
use fd_forward::*;
use fd_geometry::{k_of_lambda, lambda0, Frame};
use proptest::prelude::*;

fn grid() -> Arc<Grid> {
    let spec = GridSpec {
        p_radii: vec![0.25, 0.75, 1.5, 2.5, 4.0, 6.0],
        p_directions: DirectionSpec::Icosphere { icosphere_level: 1 },
        lambda_moduli: vec![0.5, 2.0],
        lambda_args: 4,
        phi_nodes: 16,
        xi_nodes_per_axis: 12,
        xi_max: 6.0,
    };
    Arc::new(make_grids(&spec, &[0.0, 0.0, 1.0]).unwrap())
}

fn cfg() -> ForwardConfig {
    ForwardConfig { xi_nodes: 12, xi_max: 6.0, tol: 1e-12, ..Default::default() }
}

fn k0() -> [C64; 3] {
    complexify(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0])
}

#[test]
fn zero_potential_gives_zero_in_one_iteration() {
    let g = grid();
    let v = PotentialSpec::zero(2.0, 4.0);
    let sol = solve_h_at_k(&k0(), &v, &g, &cfg()).unwrap();
    assert_eq!(sol.report.iterations, 1);
    assert!(sol.h.values.iter().all(|x| x.norm() == 0.0));
    let quad = XiQuadrature::new(&k0(), 6.0, 12);
    let out = apply_a(&quad, &v, &|_| C64::new(1.0, 0.0), &g.p_nodes[..3]);
    assert!(out.iter().all(|x| x.norm() == 0.0));
    let v = PotentialSpec::gaussian(0.01, 1.0, 2.0, 4.0);
    let out = apply_a(&quad, &v, &|_| C64::new(0.0, 0.0), &g.p_nodes[..3]);
    assert!(out.iter().all(|x| x.norm() == 0.0));
}

#[test]
fn first_iterate_is_vhat_minus_a_vhat() {
    let g = grid();
    let v = PotentialSpec::gaussian(0.02, 1.0, 2.0, 4.0);
    let c = ForwardConfig { fixed_iterations: Some(1), ..cfg() };
    let sol = solve_h_at_k(&k0(), &v, &g, &c).unwrap();
    let quad = XiQuadrature::new(&k0(), 6.0, 12);
    let av = apply_a(&quad, &v, &|x| v.eval(x), &g.p_nodes);
    for ((p, h), a) in g.p_nodes.iter().zip(&sol.h.values).zip(&av) {
        assert!((h - (v.eval(p) - a)).norm() <= 1e-15);
    }
}

#[test]
fn iteration_contracts_and_nystrom_matches_nodes() {
    let g = grid();
    let v = PotentialSpec::gaussian(0.3, 1.0, 2.0, 4.0);
    let sol = solve_h_at_k(&k0(), &v, &g, &cfg()).unwrap();
    let r = &sol.report;
    assert!(r.residual <= 1e-12);
    assert_eq!(r.norm_history.len(), r.iterations);
    assert_eq!(r.contraction_ratios.len(), r.iterations - 1);
    assert!(r.contraction_ratios.iter().all(|x| *x < 1.0), "{:?}", r.contraction_ratios);
    for (p, h) in g.p_nodes.iter().zip(&sol.h.values).step_by(23) {
        let e = sol.eval(p);
        assert!((e - h).norm() <= 1e-10, "{e} vs {h}");
    }
}

#[test]
fn strong_potential_is_reported_as_divergent() {
    let g = grid();
    let v = PotentialSpec::gaussian(40.0, 1.0, 2.0, 4.0);
    let k = complexify(&[0.2, 0.0, 0.0], &[0.0, 0.2, 0.0]);
    match solve_h_at_k(&k, &v, &g, &cfg()) {
        Err(ForwardError::Divergence { .. }) => {}
        other => panic!("expected divergence, got {:?}", other.map(|s| s.report)),
    }
}

#[test]
fn restriction_matches_full_field_at_lambda0() {
    let g = grid();
    let v = PotentialSpec::gaussian(0.05, 1.0, 2.0, 4.0);
    let fr = Frame::default();
    let c = cfg();
    let idx = [7usize, 60, 130, 200];
    for &i in &idx {
        let p = g.p_nodes[i];
        let l0 = lambda0(&p, &fr).unwrap();
        let k = k_of_lambda(l0, &p, &fr).unwrap();
        let sol = solve_h_at_k(&k, &v, &g, &c).unwrap();
        assert!((sol.eval(&p) - sol.h.values[i]).norm() < 1e-12);
    }
}

#[test]
fn born_error_scales_quadratically_with_amplitude() {
    let g = grid();
    let base = PotentialSpec::gaussian(0.02, 1.0, 2.0, 4.0);
    let fr = Frame::default();
    let mut errs = Vec::new();
    for s in [1.0, 0.5, 0.25] {
        let v = base.scaled(s);
        let mut e: f64 = 0.0;
        for &i in &[10usize, 100, 170] {
            let k = fd_geometry::k_gamma(&g.p_nodes[i], &fr).unwrap();
            let sol = solve_h_at_k(&k, &v, &g, &cfg()).unwrap();
            e = e.max((sol.h.values[i] - v.eval(&g.p_nodes[i])).norm());
        }
        errs.push(e);
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.5..4.3).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn truncation_examples() {
    let g = grid();
    let v = PotentialSpec::gaussian(0.05, 1.0, 2.0, 4.0);
    let r = fd_core::PField::from_fn(g.clone(), 2.0, |p| v.eval(p) * C64::new(1.0, 0.3));
    let data = ScatterData { r, tau: None };
    let all = data.truncate_lowpass(3.5);
    assert_eq!(all.r.values, data.r.values);
    let none = data.truncate_lowpass(1e-9);
    assert!(none.r.values.iter().all(|x| x.norm() == 0.0));
    let mu_star = 4.0;
    let rs = data.r.norm_with(mu_star).unwrap();
    for tau in [0.2, 0.5, 1.0, 2.0, 2.9] {
        let t = data.truncate_lowpass(tau);
        assert!(t.r.norm().unwrap() <= data.r.norm().unwrap());
        let d = data.r.distance(&t.r).unwrap();
        assert!(d <= rs / (1.0 + 2.0 * tau).powf(mu_star - 2.0) * (1.0 + 1e-12));
    }
}

#[test]
fn csv_round_trip() {
    let g = grid();
    let r = fd_core::PField::from_fn(g.clone(), 2.0, |p| C64::new(p[0], -norm(p)));
    let data = ScatterData { r, tau: None };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scatter.csv");
    data.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("p_x,p_y,p_z,re_R,im_R\n"));
    let back = ScatterData::read_csv(&path, &g, 2.0).unwrap();
    assert_eq!(back.r.values, data.r.values);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn apply_a_is_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, c in 0.1..1.5f64, d in -1.0..1.0f64) {
        let v = PotentialSpec::gaussian(0.05, 1.0, 2.0, 4.0);
        let quad = XiQuadrature::new(&k0(), 6.0, 8);
        let u1 = |x: &[f64; 3]| C64::new((-(x[0] * x[0]) / c).exp(), x[1]);
        let u2 = |x: &[f64; 3]| C64::new(x[2] * d, 1.0);
        let ca = C64::new(a, 0.5);
        let cb = C64::new(b, -0.2);
        let pts = [[0.5, 0.2, -0.1], [2.0, 1.0, 0.0]];
        let lhs = apply_a(&quad, &v, &|x| u1(x) * ca + u2(x) * cb, &pts);
        let r1 = apply_a(&quad, &v, &u1, &pts);
        let r2 = apply_a(&quad, &v, &u2, &pts);
        for i in 0..2 {
            let rhs = r1[i] * ca + r2[i] * cb;
            prop_assert!((lhs[i] - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
        }
    }
}

#[test]
fn born_sweep_of_zero_potential_is_zero() {
    let g = grid();
    let v = PotentialSpec::zero(2.0, 4.0);
    let rows =
        born_limit_sweep(&v, &[1.0, 0.5, 0.3], &[4.0, 8.0], &Frame::default(), &g, &cfg(), Some(1.0)).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.weighted_error == 0.0 && r.error_at_p0 == 0.0));
    assert!(rows[0].envelope.is_none() && rows[1].envelope.is_some());
    let lam = lambda_for_im_k(4.0, 2.0).unwrap();
    assert!((2.0 / 4.0 * (lam + 1.0 / lam) - 4.0).abs() < 1e-12);
}

use std::sync::Arc;
use std::time::Instant;

use fd_core::{make_grids, DirectionSpec, GridSpec, PotentialSpec, C64, DEFAULT_NU};
use fd_forward::{restrict_r, solve_h_at_k, ForwardConfig};
use fd_geometry::{k_of_lambda, Frame};
use fd_inverse::{reconstruct_vhat, solve_h_from_r, InverseConfig};

#[test]
#[ignore = "exploratory"]
fn study() {
    let spec = GridSpec {
        p_radii: vec![0.25, 0.75, 1.5, 2.5, 4.0, 6.0],
        p_directions: DirectionSpec::Icosphere { icosphere_level: 1 },
        lambda_moduli: vec![0.3, 0.6, 0.85, 1.2, 1.7, 3.0],
        lambda_args: 8,
        phi_nodes: 16,
        xi_nodes_per_axis: 12,
        xi_max: 6.0,
    };
    let g = Arc::new(make_grids(&spec, &DEFAULT_NU).unwrap());
    let amp: f64 = std::env::var("AMP").ok().and_then(|s| s.parse().ok()).unwrap_or(0.01);
    let v = PotentialSpec::gaussian(amp, 1.0, 2.0, 4.0);
    let fr = Frame::default();
    let fcfg = ForwardConfig { xi_nodes: 12, ..Default::default() };
    let t = Instant::now();
    let (r, _) = restrict_r(&v, &fr, &g, &fcfg).unwrap();
    println!("restrict {:?}", t.elapsed());
    let truth = r.r.with_values(g.p_nodes.iter().map(|p| v.eval(p)).collect());
    println!("|R| {:e} |v| {:e} |R-v|/|v| {:e}", r.r.norm().unwrap(), truth.norm().unwrap(), r.r.distance(&truth).unwrap() / truth.norm().unwrap());
    let cfg = InverseConfig { r: 4.0 * r.r.norm().unwrap(), ..Default::default() };
    let t = Instant::now();
    let sol = solve_h_from_r(&r, &cfg, &fr).unwrap();
    println!("invert {:?} iters {} diffs {:?}", t.elapsed(), sol.report.iterations, sol.report.difference_history);
    println!("ratios {:?} fp res {:e} tail {}", sol.report.contraction_ratios, sol.fixed_point_residual, sol.n_of_h.max_tail_fraction);
    let rec = reconstruct_vhat(&sol, &r).unwrap();
    println!(
        "rec err {:e}  born err {:e}  disc/|v| {:e}  N0 {:e} |H|^2 {:e}",
        rec.vhat.distance(&truth).unwrap() / truth.norm().unwrap(),
        r.r.distance(&truth).unwrap() / truth.norm().unwrap(),
        rec.discrepancy / truth.norm().unwrap(),
        rec.n_at_zero,
        sol.h.norm().unwrap().powi(2)
    );
    // H on the grid vs forward-solved H
    let mut worst: f64 = 0.0;
    for (il, l) in g.lambda_nodes.iter().enumerate().step_by(5) {
        for (ip, p) in g.p_nodes.iter().enumerate().step_by(37) {
            let k = k_of_lambda(*l, p, &fr).unwrap();
            let hf = solve_h_at_k(&k, &v, &g, &fcfg).unwrap().eval(p);
            let hi = sol.h.get(il, ip);
            let w = (1.0 + fd_core::vec3::norm(p)).powi(2);
            worst = worst.max(w * (hf - hi).norm() / sol.h.norm().unwrap());
            if ip == 0 { println!("l {l:.3} |p| {:.2}: fwd {hf:.4e} inv {hi:.4e}  fwd-v {:.3e} inv-R {:.3e}", fd_core::vec3::norm(p), (hf - v.eval(p)).norm(), (hi-r.r.values[ip]).norm()); }
        }
    }
    println!("worst weighted H mismatch / |||H||| {worst:e}");
    let _ = C64::new(0.0, 0.0);
}

use std::sync::Arc;

use fd_core::{make_grids, DirectionSpec, GridSpec, PotentialSpec, C64};
use fd_dbar::dbar_residual;
use fd_forward::ForwardConfig;
use fd_geometry::Frame;

#[test]
#[ignore = "exploratory"]
fn study() {
    let spec = GridSpec {
        p_radii: vec![0.25, 0.75, 1.5, 2.5, 4.0, 6.0],
        p_directions: DirectionSpec::Icosphere { icosphere_level: 1 },
        lambda_moduli: vec![0.5, 2.0],
        lambda_args: 4,
        phi_nodes: 16,
        xi_nodes_per_axis: 12,
        xi_max: 6.0,
    };
    let g = Arc::new(make_grids(&spec, &[0.0, 0.0, 1.0]).unwrap());
    let v = PotentialSpec::gaussian(0.01, 1.0, 2.0, 4.0);
    let cfg = ForwardConfig { xi_nodes: 12, xi_max: 6.0, tol: 1e-13, ..Default::default() };
    let pts = vec![
        (C64::from_polar(0.6, 0.3), [0.8, 0.3, -0.4]),
        (C64::from_polar(1.6, 2.0), [0.2, -1.1, 0.5]),
        (C64::from_polar(0.8, -1.0), [1.5, 0.4, 0.9]),
    ];
    for (ph, fd) in [(8, 0.1), (16, 0.05), (32, 0.025), (64, 0.0125)] {
        let t = std::time::Instant::now();
        let r = dbar_residual(&v, &pts, fd, ph, &Frame::default(), &g, &cfg).unwrap();
        for x in &r {
            println!("phi {ph} fd {fd}: res {:.3e} lhs {:.4e} rhs {:.4e}", x.residual, x.lhs, x.rhs);
        }
        println!("  {:?}", t.elapsed());
    }
}

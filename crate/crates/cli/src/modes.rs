use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fd_bounds::{
    calibrate_bracket_envelope, calibrate_c1_c2, calibrate_c6, probe_ab_bounds, probe_i4, probe_j_integrals, smallness,
    CalibrationResult,
};
use fd_core::vec3::norm;
use fd_core::{make_grids, Grid, PField, PotentialSpec, SolveReport, Vec3, C64};
use fd_dbar::{dbar_residual, OperatorConfig};
use fd_forward::{born_limit_sweep, restrict_r, solve_h_at_k, ForwardConfig, ScatterData};
use fd_geometry::{im_k_norm, k_of_lambda, Frame};
use fd_inverse::{
    reconstruct_truncated, reconstruct_vhat, solve_h_from_r, stability_probe, write_reconstruction_csv, InverseConfig,
    InverseSolution, Reconstruction,
};

use crate::config::{Calibrated, ExperimentConfig, Mode};
use crate::report::{Node, Report};
use crate::RunError;

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    v: PotentialSpec,
    grid: Arc<Grid>,
    frame: Frame<f64>,
    fcfg: ForwardConfig,
    cal: Calibrated,
    report: &'a mut Report,
    timings: &'a mut Report,
}

impl Ctx<'_> {
    /// Records `value` at `path` and its description under `quantities`.
    fn q(&mut self, path: &str, value: impl Into<Node>, what: &str) {
        self.report.set(path, value);
        self.report.set(&format!("quantities.{}", path.replace('.', "/")), what);
    }

    fn lap(&mut self, name: &str, t: Instant) {
        self.timings.set(&format!("phases.{name}"), t.elapsed().as_secs_f64());
    }

    fn out(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }

    fn mu(&self) -> f64 {
        self.v.mu
    }

    fn truth(&self) -> PField {
        PField::from_fn(self.grid.clone(), self.v.mu, |p| self.v.eval(p))
    }

    fn operator(&self) -> OperatorConfig {
        self.cfg
            .inverse
            .operator
            .clone()
            .unwrap_or_else(|| OperatorConfig { phi_nodes: self.grid.spec.phi_nodes, ..Default::default() })
    }

    fn inverse_config(&self, r_norm: f64) -> InverseConfig {
        let s = &self.cfg.inverse;
        let from_ball = self
            .cal
            .c1_hat
            .filter(|_| self.v.declared_c > 0.0)
            .and_then(|c1| InverseConfig::ball_radius(self.v.declared_c, c1));
        let r = s.r.or(from_ball).unwrap_or(if r_norm > 0.0 { 4.0 * r_norm } else { 1.0 });
        let d = InverseConfig::default();
        InverseConfig {
            r,
            tol: s.tol.unwrap_or(d.tol),
            max_iter: s.max_iter.unwrap_or(d.max_iter),
            tau: None,
            c1_hat: self.cal.c1_hat,
            c6_hat: self.cal.c6_hat,
            operator: self.operator(),
        }
    }
}

/// ‖a‖/‖b‖ when ‖b‖ > 0, else ‖a‖.
fn rel(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        a
    }
}

fn seed_for(cfg: &ExperimentConfig, stream: u64) -> u64 {
    cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream)
}

/// Geometric mean of contraction ratios whose new difference is still above the
/// stopping tolerance by a factor 10³, so the round-off floor does not bias it.
pub(crate) fn fitted_contraction(rep: &SolveReport, tol: f64) -> Option<f64> {
    let r: Vec<f64> = rep
        .contraction_ratios
        .iter()
        .zip(rep.difference_history.iter().skip(1))
        .filter(|(r, d)| **r > 0.0 && **d > 1e3 * tol)
        .map(|(r, _)| r.ln())
        .collect();
    (!r.is_empty()).then(|| (r.iter().sum::<f64>() / r.len() as f64).exp())
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn c64(z: C64) -> Node {
    Node::from(vec![z.re, z.im])
}

fn obj(r: Report) -> Node {
    match r.get_root() {
        n @ Node::Obj(_) => n,
        _ => unreachable!(),
    }
}

pub(crate) fn dispatch(cfg: &ExperimentConfig, report: &mut Report, timings: &mut Report) -> Result<(), RunError> {
    let t = Instant::now();
    let v = cfg.potential.resolve();
    let spec = cfg.grid_spec()?;
    let grid = Arc::new(make_grids(&spec, &cfg.frame.nu)?);
    timings.set("phases.grid", t.elapsed().as_secs_f64());

    let mut cal = match &cfg.calibration {
        Some(p) => Calibrated::read(p)?,
        None => Calibrated::default(),
    };
    let s = &cfg.inverse;
    cal.c1_hat = s.c1_hat.or(cal.c1_hat);
    cal.c2_hat = s.c2_hat.or(cal.c2_hat);
    cal.c6_hat = s.c6_hat.or(cal.c6_hat);

    let fcfg = cfg.forward_config(&spec, cal.c1_hat);
    let mut ctx = Ctx { cfg, v, grid, frame: cfg.frame(), fcfg, cal, report, timings };
    ctx.q("grid.p_nodes", ctx.grid.n_p(), "number of p-grid nodes");
    ctx.q("grid.lambda_nodes", ctx.grid.n_lambda(), "number of lambda-grid nodes");
    ctx.q("grid.p_max", ctx.grid.p_max(), "largest p-grid radius");
    let c = ctx.v.declared_c;
    ctx.q("potential.declared_c", c, "weighted sup norm C of the potential's Fourier transform");
    ctx.q("constants.c1_hat", ctx.cal.c1_hat, "calibrated sup of the weighted kernel integral");
    ctx.q("constants.c2_hat", ctx.cal.c2_hat, "calibrated large-|Im k| decay constant of the kernel integral");
    ctx.q("constants.c6_hat", ctx.cal.c6_hat, "calibrated bilinear operator bound");
    if let Some(c1) = ctx.cal.c1_hat {
        ctx.q("constants.c1_times_c", c1 * c, "forward smallness c1_hat*C, below 1 for contraction");
    }

    match cfg.mode {
        Mode::Forward => forward(&mut ctx),
        Mode::Restrict => restrict(&mut ctx).map(|_| ()),
        Mode::Invert => {
            let path = cfg.data_path.clone().expect("validated");
            let r = ScatterData::read_csv(&path, &ctx.grid, ctx.mu())?;
            let (sol, _) = invert(&mut ctx, &r)?;
            drop(sol);
            Ok(())
        }
        Mode::Roundtrip => roundtrip(&mut ctx),
        Mode::TruncationSweep => truncation_sweep(&mut ctx),
        Mode::DbarCheck => dbar_check(&mut ctx),
        Mode::ProbeBounds => probe_bounds(&mut ctx),
        Mode::Calibrate => calibrate(&mut ctx),
    }
}

fn forward(ctx: &mut Ctx) -> Result<(), RunError> {
    let pts = ctx.cfg.forward_points.clone().unwrap_or_default();
    let truth = ctx.truth();
    let mut w = csv::Writer::from_path(ctx.out("forward.csv"))?;
    w.write_record(["solve", "re_lambda", "im_lambda", "p_x", "p_y", "p_z", "re_h", "im_h"])?;
    let mut rows = Vec::new();
    let t = Instant::now();
    for (i, l) in pts.lambdas.iter().enumerate() {
        let lambda = C64::new(l[0], l[1]);
        let k = k_of_lambda(lambda, &pts.p0, &ctx.frame)?;
        let sol = solve_h_at_k(&k, &ctx.v, &ctx.grid, &ctx.fcfg)?;
        for (p, h) in ctx.grid.p_nodes.iter().zip(&sol.h.values) {
            w.write_record(
                [i as f64, lambda.re, lambda.im, p[0], p[1], p[2], h.re, h.im].map(|x| format!("{x:.16e}")),
            )?;
        }
        let mut r = Report::new();
        r.set("lambda", c64(lambda));
        r.set("im_k_norm", im_k_norm(lambda, norm(&pts.p0)));
        r.set("norm_h", sol.h.norm()?);
        r.set("born_deviation", sol.h.distance(&truth)?);
        r.set("h_at_p0", c64(sol.eval(&pts.p0)));
        r.set("iterations", sol.report.iterations);
        r.set("difference_history", sol.report.difference_history.clone());
        r.set("contraction_ratios", sol.report.contraction_ratios.clone());
        r.set("fitted_ratio", fitted_contraction(&sol.report, ctx.fcfg.tol));
        r.set("residual", sol.report.residual);
        r.set("warnings", sol.warnings.clone());
        rows.push(obj(r));
    }
    w.flush()?;
    ctx.lap("forward_solves", t);
    ctx.q("forward.p0", Node::from(pts.p0.to_vec()), "base point p0 of the solves");
    ctx.q(
        "forward.solves",
        Node::Arr(rows),
        "per lambda: |||H(k,.)|||, |||H(k,.) - v_hat|||, H(k,p0) and the successive-approximation history",
    );

    if let Some(b) = ctx.cfg.born.clone() {
        let t = Instant::now();
        let rows = born_limit_sweep(&ctx.v, &b.p0, &b.taus, &ctx.frame, &ctx.grid, &ctx.fcfg, ctx.cal.c2_hat)?;
        ctx.lap("born_sweep", t);
        let errs: Vec<f64> = rows.iter().map(|r| r.weighted_error).collect();
        let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
        let below = rows.iter().all(|r| r.envelope.is_none_or(|e| r.weighted_error <= e));
        let mut w = csv::Writer::from_path(ctx.out("born.csv"))?;
        w.write_record(["tau", "lambda", "weighted_error", "error_at_p0", "envelope"])?;
        for r in &rows {
            let env = r.envelope.map_or(String::new(), |e| format!("{e:.16e}"));
            w.write_record([
                format!("{:.16e}", r.tau),
                format!("{:.16e}", r.lambda),
                format!("{:.16e}", r.weighted_error),
                format!("{:.16e}", r.error_at_p0),
                env,
            ])?;
        }
        w.flush()?;
        ctx.q("born.taus", b.taus.clone(), "|Im k| values of the sweep");
        ctx.q("born.weighted_error", errs, "max_p (1+|p|)^mu |H(k_tau,p) - v_hat(p)|");
        ctx.q(
            "born.envelope",
            rows.iter().map(|r| Node::from(r.envelope)).collect::<Vec<_>>(),
            "2 c2_hat C^2 (ln tau)^2 / tau where ln tau >= 2",
        );
        ctx.q("born.strictly_decreasing", decreasing, "weighted error strictly decreases in tau");
        ctx.q("born.below_envelope", below, "weighted error below the envelope wherever it applies");
    }
    Ok(())
}

fn restrict(ctx: &mut Ctx) -> Result<ScatterData, RunError> {
    let t = Instant::now();
    let (r, stats) = restrict_r(&ctx.v, &ctx.frame, &ctx.grid, &ctx.fcfg)?;
    ctx.lap("restrict", t);
    r.write_csv(&ctx.out("scatter.csv"))?;
    let truth = ctx.truth();
    let vn = truth.norm()?;
    ctx.q("data.norm_r", r.r.norm()?, "|||R|||_mu, R(p) = H(k_gamma(p), p)");
    ctx.q("data.norm_r_mu_star", r.r.norm_with(ctx.v.mu_star)?, "|||R|||_{mu*}");
    ctx.q("data.norm_vhat", vn, "|||v_hat|||_mu on the p-grid");
    ctx.q("data.born_relative_error", rel(r.r.distance(&truth)?, vn), "|||R - v_hat|||_mu / |||v_hat|||_mu");
    ctx.q("data.forward_solves", stats.solves, "forward solves used for the restriction");
    ctx.q("data.max_iterations", stats.max_iterations, "largest forward iteration count");
    ctx.q("data.max_contraction_ratio", stats.max_contraction_ratio, "largest forward contraction ratio");
    ctx.q("data.max_residual", stats.max_residual, "largest final forward difference");
    ctx.q("data.warnings", stats.warnings.clone(), "forward solver warnings");
    Ok(r)
}

fn invert(ctx: &mut Ctx, r: &ScatterData) -> Result<(InverseSolution, Reconstruction), RunError> {
    let icfg = ctx.inverse_config(r.r.norm()?);
    ctx.q("inverse.r", icfg.r, "ball radius r in which H = R + M(H) is solved");
    ctx.q("inverse.contraction_factor", icfg.contraction_factor(), "4 c6_hat r, the contraction factor of M on the ball");
    ctx.q("inverse.admissible", icfg.admissible(), "4 c6_hat r < 1");
    let t = Instant::now();
    let sol = solve_h_from_r(r, &icfg, &ctx.frame)?;
    ctx.lap("invert", t);
    let rep = &sol.report;
    ctx.q("inverse.iterations", rep.iterations, "fixed-point iterations");
    ctx.q("inverse.norm_history", rep.norm_history.clone(), "|||H_n|||_mu per iteration");
    ctx.q("inverse.difference_history", rep.difference_history.clone(), "|||H_{n+1} - H_n|||_mu per iteration");
    ctx.q("inverse.contraction_ratios", rep.contraction_ratios.clone(), "successive difference ratios");
    let fitted = fitted_contraction(rep, icfg.tol);
    ctx.q("inverse.fitted_ratio", fitted, "geometric mean of the contraction ratios above the tolerance floor");
    ctx.q(
        "inverse.fitted_over_bound",
        fitted.zip(icfg.contraction_factor()).map(|(f, q)| rel(f, q)),
        "fitted contraction ratio divided by 4 c6_hat r",
    );
    ctx.q("inverse.fixed_point_residual", sol.fixed_point_residual, "|||H - R - M(H)|||_mu at the returned H");
    let hn = sol.h.norm()?;
    ctx.q("inverse.norm_h", hn, "|||H|||_mu");
    ctx.q("inverse.max_tail_fraction", sol.n_of_h.max_tail_fraction, "largest Cauchy-transform tail share");
    ctx.q("inverse.warnings", sol.warnings.clone(), "inverse solver warnings");

    let rec = reconstruct_vhat(&sol, r)?;
    let truth = ctx.truth();
    let vn = truth.norm()?;
    let err = rec.vhat.distance(&truth)?;
    ctx.q("reconstruction.error", err, "|||v_rec - v_hat|||_mu with v_rec = R - N(H)(lambda0)");
    ctx.q("reconstruction.relative_error", rel(err, vn), "|||v_rec - v_hat|||_mu / |||v_hat|||_mu");
    ctx.q(
        "reconstruction.cross_check_relative_error",
        rel(rec.cross_check.distance(&truth)?, vn),
        "same for v_rec = R + M(H)(0)",
    );
    ctx.q(
        "reconstruction.born_relative_error",
        rel(r.r.distance(&truth)?, vn),
        "|||R - v_hat|||_mu / |||v_hat|||_mu, the error of using R itself",
    );
    ctx.q("reconstruction.two_formula_discrepancy", rec.discrepancy, "|||(R + M(H)(0)) - (R - N(H)(lambda0))|||_mu");
    ctx.q(
        "reconstruction.two_formula_relative",
        rel(rec.discrepancy, vn),
        "two-formula discrepancy / |||v_hat|||_mu",
    );
    ctx.q("reconstruction.n_at_zero", rec.n_at_zero, "max_p (1+|p|)^mu |N(H)(0,p)|");
    ctx.q(
        "reconstruction.n_at_zero_over_h_norm_sq",
        rel(rec.n_at_zero, hn * hn),
        "max_p (1+|p|)^mu |N(H)(0,p)| / |||H|||_mu^2",
    );
    let v = ctx.v.clone();
    write_reconstruction_csv(&ctx.out("reconstruction.csv"), &rec.vhat, &|p: &Vec3| v.eval(p))?;

    if let (Some(c1), Some(c6)) = (ctx.cal.c1_hat, ctx.cal.c6_hat) {
        let s = smallness(ctx.v.declared_c, c1, c6);
        ctx.q("smallness.global_condition", s.global_condition, "C < 1/(c1_hat + 8 c6_hat)");
        ctx.q("smallness.forward_contraction", s.forward_contraction, "c1_hat C < 1");
        ctx.q("smallness.ball_radius", s.ball_radius, "2C/(1 - c1_hat C)");
        ctx.q("smallness.inverse_contraction", s.inverse_contraction, "4 c6_hat (2C/(1 - c1_hat C)) < 1");
    }
    if let Some(max) = ctx.cfg.acceptance.as_ref().and_then(|a| a.max_relative_error) {
        let e = rel(err, vn);
        ctx.q("reconstruction.accepted", e <= max, "relative error within the configured threshold");
        if !(e <= max) {
            return Err(RunError::Accuracy(format!("reconstruction relative error {e:e} exceeds {max:e}")));
        }
    }
    Ok((sol, rec))
}

fn roundtrip(ctx: &mut Ctx) -> Result<(), RunError> {
    let r = restrict(ctx)?;
    let (sol, _) = invert(ctx, &r)?;
    if let Some(noise) = ctx.cfg.noise.clone() {
        let icfg = ctx.inverse_config(r.r.norm()?);
        let mut levels = Vec::new();
        let t = Instant::now();
        for (i, &level) in noise.levels.iter().enumerate() {
            let seed = seed_for(ctx.cfg, 100 + i as u64);
            let full = stability_probe(&r, &sol, level, noise.trials, seed, &icfg, &ctx.frame)?;
            let half = stability_probe(&r, &sol, 0.5 * level, noise.trials, seed, &icfg, &ctx.frame)?;
            let mut e = Report::new();
            e.set("noise_level", level);
            e.set("ratios", full.ratios.clone());
            e.set("max_ratio", full.max_ratio);
            e.set("envelope", full.envelope);
            e.set("skipped", full.skipped);
            e.set("data_discrepancies", full.data_discrepancies.clone());
            e.set("reconstruction_discrepancies", full.reconstruction_discrepancies.clone());
            e.set("mean_reconstruction_discrepancy", full.mean_reconstruction_discrepancy());
            e.set("half_level_ratios", half.ratios.clone());
            e.set("half_level_max_ratio", half.max_ratio);
            e.set("half_level_mean_reconstruction_discrepancy", half.mean_reconstruction_discrepancy());
            e.set(
                "halving_ratio",
                rel(half.mean_reconstruction_discrepancy(), full.mean_reconstruction_discrepancy()),
            );
            e.set("within_envelope", full.envelope.is_some_and(|env| full.max_ratio.max(half.max_ratio) <= env));
            levels.push(obj(e));
        }
        ctx.lap("stability", t);
        ctx.q(
            "stability.levels",
            Node::Arr(levels),
            "per noise level: reconstruction/data discrepancy ratios, their bound 1.5/(1 - 4 c6_hat r) and the effect of halving the noise",
        );
    }
    Ok(())
}

/// Least-squares slope of ln(error) against ln(1 + 2τ) over rows with error > 0.
pub(crate) fn loglog_slope(taus: &[f64], errors: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        taus.iter().zip(errors).filter(|(_, e)| **e > 0.0).map(|(t, e)| ((1.0 + 2.0 * t).ln(), e.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn truncation_sweep(ctx: &mut Ctx) -> Result<(), RunError> {
    let taus = ctx.cfg.taus.clone().expect("validated");
    let r = restrict(ctx)?;
    let (full, full_rec) = invert(ctx, &r)?;
    let icfg = ctx.inverse_config(r.r.norm()?);
    let truth = ctx.truth();
    let t = Instant::now();
    let (mut errors, mut truth_err, mut envelopes, mut hdist, mut kept) = (vec![], vec![], vec![], vec![], vec![]);
    for &tau in &taus {
        let tr = reconstruct_truncated(&r, tau, ctx.v.mu_star, &icfg, &ctx.frame, Some(&full.h))?;
        errors.push(tr.vhat_minus.distance(&full_rec.vhat)?);
        truth_err.push(tr.vhat_minus.distance(&truth)?);
        envelopes.push(tr.envelope);
        hdist.push(tr.h_distance);
        kept.push(ctx.grid.p_nodes.iter().filter(|p| norm(p) < 2.0 * tau).count());
    }
    ctx.lap("truncation_sweep", t);
    let slope = loglog_slope(&taus, &errors);
    let expected = -(ctx.v.mu_star - ctx.v.mu);
    let nonincreasing = errors.windows(2).all(|w| w[1] <= 1.05 * w[0]);
    let within = errors.iter().zip(&envelopes).all(|(e, env)| env.is_none_or(|b| *e <= b));

    let mut w = csv::Writer::from_path(ctx.out("truncation.csv"))?;
    w.write_record(["tau", "error_mu", "bound_envelope", "error_vs_truth_mu"])?;
    let f = |x: f64| format!("{x:.16e}");
    for i in 0..taus.len() {
        w.write_record([f(taus[i]), f(errors[i]), envelopes[i].map_or(String::new(), f), f(truth_err[i])])?;
    }
    w.write_record(["slope".to_string(), slope.map_or(String::new(), f), f(expected), String::new()])?;
    w.flush()?;

    ctx.q("truncation.taus", taus.clone(), "truncation levels tau; data kept for |p| < 2 tau");
    ctx.q("truncation.kept_nodes", kept, "p-nodes kept at each tau");
    ctx.q("truncation.error_mu", errors, "|||v_2tau - v_rec|||_mu against the full-data reconstruction on the same grid");
    ctx.q("truncation.error_vs_truth_mu", truth_err, "|||v_2tau - v_hat|||_mu");
    ctx.q(
        "truncation.bound_envelope",
        envelopes.into_iter().map(Node::from).collect::<Vec<_>>(),
        "|||R|||_{mu*} / ((1+2 tau)^{mu*-mu} (1 - 4 c6_hat r))",
    );
    ctx.q(
        "truncation.h_distance",
        hdist.into_iter().map(Node::from).collect::<Vec<_>>(),
        "|||H - H_2tau|||_mu",
    );
    ctx.q("truncation.slope", slope, "least-squares slope of ln error_mu against ln(1+2 tau), rows with error > 0");
    ctx.q("truncation.expected_slope", expected, "-(mu* - mu)");
    ctx.q("truncation.nonincreasing", nonincreasing, "error_mu nonincreasing in tau with 5% slack");
    ctx.q("truncation.within_envelope", within, "every error_mu row below its envelope row");
    Ok(())
}

/// Sample points with |λ| log-uniform on [0.5, 2] outside (0.95, 1.05), uniform
/// arg, and p with |p| ∈ [0.3, 2] away from the ν axis.
fn residual_points(n: usize, seed: u64, nu: &Vec3) -> Vec<(C64, Vec3)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nn = norm(nu);
    (0..n)
        .map(|_| {
            let m = loop {
                let m: f64 = rng.random_range(0.5f64.ln()..2f64.ln()).exp();
                if !(0.95..=1.05).contains(&m) {
                    break m;
                }
            };
            let l = C64::from_polar(m, rng.random_range(-PI..PI));
            let d = loop {
                let v: Vec3 = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                let n = norm(&v);
                if n > 0.1 && n <= 1.0 {
                    let d = [v[0] / n, v[1] / n, v[2] / n];
                    if ((d[0] * nu[0] + d[1] * nu[1] + d[2] * nu[2]) / nn).abs() < 0.95 {
                        break d;
                    }
                }
            };
            let r = rng.random_range(0.3..2.0);
            (l, [r * d[0], r * d[1], r * d[2]])
        })
        .collect()
}

fn dbar_check(ctx: &mut Ctx) -> Result<(), RunError> {
    let spec = ctx.cfg.residual.clone().unwrap_or_default();
    let pts = residual_points(spec.points, seed_for(ctx.cfg, 200), &ctx.frame.nu);
    let t = Instant::now();
    let base = dbar_residual(&ctx.v, &pts, spec.fd_step, spec.phi_nodes, &ctx.frame, &ctx.grid, &ctx.fcfg)?;
    ctx.lap("residual_base", t);
    let base_res: Vec<f64> = base.iter().map(|x| x.residual).collect();
    let med = median(&base_res);
    ctx.q("dbar.fd_step", spec.fd_step, "central-difference step relative to |lambda|");
    ctx.q("dbar.phi_nodes", spec.phi_nodes, "circle nodes of the bracket rule");
    ctx.q("dbar.residuals", base_res.clone(), "|d_lambdabar H - {H,H}| / (|d_lambdabar H| + |{H,H}|) per point");
    ctx.q("dbar.median_residual", med, "median relative residual");
    let mut refined_res = None;
    if spec.refine {
        let t = Instant::now();
        let fine = dbar_residual(&ctx.v, &pts, 0.5 * spec.fd_step, 2 * spec.phi_nodes, &ctx.frame, &ctx.grid, &ctx.fcfg)?;
        ctx.lap("residual_refined", t);
        let res: Vec<f64> = fine.iter().map(|x| x.residual).collect();
        let mf = median(&res);
        ctx.q("dbar.refined_residuals", res.clone(), "residuals with doubled circle nodes and halved step");
        ctx.q("dbar.refined_median_residual", mf, "median refined residual");
        ctx.q("dbar.median_drop", rel(med - mf, med), "relative drop of the median under refinement");
        refined_res = Some(res);
    }
    let mut w = csv::Writer::from_path(ctx.out("dbar_residual.csv"))?;
    w.write_record(["re_lambda", "im_lambda", "p_x", "p_y", "p_z", "residual", "residual_refined"])?;
    let f = |x: f64| format!("{x:.16e}");
    for (i, x) in base.iter().enumerate() {
        let fine = refined_res.as_ref().map_or(String::new(), |r| f(r[i]));
        w.write_record([f(x.lambda.re), f(x.lambda.im), f(x.p[0]), f(x.p[1]), f(x.p[2]), f(x.residual), fine])?;
    }
    w.flush()?;
    Ok(())
}

fn calibration_node(c: &CalibrationResult) -> Node {
    let mut r = Report::new();
    r.set("estimate", c.estimate);
    r.set("drift", c.drift);
    r.set("sample_count", c.sample_count);
    obj(r)
}

fn probe_bounds(ctx: &mut Ctx) -> Result<(), RunError> {
    let spec = ctx.cfg.probes.clone().unwrap_or_default();
    let t = Instant::now();
    let ab = probe_ab_bounds(spec.ab_samples, 2.0, 2.0, seed_for(ctx.cfg, 300))?;
    ctx.lap("ab_probe", t);
    ctx.q("bounds.ab.samples", ab.samples.len(), "evaluated (r, psi) samples, alpha = beta = 2");
    ctx.q("bounds.ab.a_violations", ab.a_violations, "samples with A above its summed bound");
    ctx.q("bounds.ab.b_violations", ab.b_violations, "samples with B above its summed bound");
    ctx.q("bounds.ab.flagged", ab.flagged, "samples whose angular quadrature did not settle");
    ctx.q("bounds.ab.max_a_ratio", ab.max_a_ratio, "max A / summed bound");
    ctx.q("bounds.ab.max_b_ratio", ab.max_b_ratio, "max B / summed bound");
    let mut w = csv::Writer::from_path(ctx.out("ab_probe.csv"))?;
    w.write_record(["r", "psi", "a", "a_bound", "b", "b_bound"])?;
    for s in &ab.samples {
        w.write_record([s.r, s.psi, s.a, s.a_bound, s.b, s.b_bound].map(|x| format!("{x:.16e}")))?;
    }
    w.flush()?;

    let t = Instant::now();
    let i4 = probe_i4(spec.i4_samples, seed_for(ctx.cfg, 301))?;
    ctx.lap("i4_probe", t);
    ctx.q("bounds.i4.samples", i4.reduction_samples.len(), "(rho, s, t) samples of the reduction inequality");
    ctx.q("bounds.i4.reduction_violations", i4.reduction_violations, "samples with I4(rho,s,t) > 2 I4(rho,0,t)");
    ctx.q("bounds.i4.rho_zero_max", i4.rho_zero_max, "max over t of I4(0,0,t)");
    ctx.q("bounds.i4.rho_zero_chain", i4.rho_zero_chain, "32 * integral of dr/(1+r^2) over the line, the bound on I4(0,0,t)");
    ctx.q(
        "bounds.i4.envelope",
        i4.envelope.iter().map(|(r, m)| Node::from(vec![*r, *m])).collect::<Vec<_>>(),
        "[rho, max I4 rho/(ln rho)^2] at large rho",
    );
    ctx.q("bounds.i4.envelope_spread", i4.envelope_spread, "max/min of the large-rho envelope column");

    let t = Instant::now();
    let j = probe_j_integrals(spec.j_samples, seed_for(ctx.cfg, 302))?;
    ctx.lap("j_probe", t);
    ctx.q("bounds.j.j1_at_zero", j.j1_at_zero, "J1(0), exactly pi");
    ctx.q("bounds.j.n1", calibration_node(&j.n1), "sampled sup of J1");
    ctx.q("bounds.j.n2", calibration_node(&j.n2), "sampled sup of J2");
    ctx.q("bounds.j.n3", calibration_node(&j.n3), "sampled sup of J3");
    ctx.q("bounds.j.refinement_drift", j.refinement_drift.to_vec(), "relative change of each sup under a finer rule");
    ctx.q("bounds.j.large_rho", j.large_rho.to_vec(), "max of J2 and J3 at rho = 1e4, 1e5");
    ctx.q("bounds.j.n1_chain", j.n1_chain, "closed bound on J1");
    ctx.q("bounds.j.n2_bound", j.n2_proof, "16 pi, the closed bound on J2");
    Ok(())
}

fn calibrate(ctx: &mut Ctx) -> Result<(), RunError> {
    let spec = ctx.cfg.calibrate.clone().unwrap_or_default();
    let mu = ctx.mu();
    let t = Instant::now();
    let (c1, c2) = calibrate_c1_c2(mu, spec.kernel_samples, seed_for(ctx.cfg, 400))?;
    ctx.lap("kernel_calibration", t);
    let t = Instant::now();
    let op = ctx.operator();
    let (c6, ratios) = calibrate_c6(&ctx.grid, mu, &ctx.frame, &op, spec.c6_trials, seed_for(ctx.cfg, 401))?;
    ctx.lap("c6_calibration", t);
    let t = Instant::now();
    let k = calibrate_bracket_envelope(
        &ctx.grid,
        mu,
        &ctx.frame,
        op.phi_nodes,
        spec.bracket_pairs,
        spec.bracket_points,
        seed_for(ctx.cfg, 402),
    )?;
    ctx.lap("bracket_envelope", t);

    let mut cal = Report::new();
    cal.set("mu", mu);
    cal.set("c1", calibration_node(&c1));
    cal.set("c2", calibration_node(&c2));
    cal.set("c6", calibration_node(&c6));
    cal.set("bracket_envelope", calibration_node(&k));
    cal.write(&ctx.out("calibration.json"))?;

    ctx.q("calibration.c1", calibration_node(&c1), "sup (1+|p|)^mu I(k,p) with drift between n and 2n samples");
    ctx.q("calibration.c2", calibration_node(&c2), "sup (1+|p|)^mu I(k,p) |Im k|/(ln|Im k|)^2 for ln|Im k| >= 2");
    ctx.q("calibration.c6", calibration_node(&c6), "sup |||I(U1,U2)||| / (|||U1||| |||U2|||) over trial pairs");
    ctx.q("calibration.c6_ratios", ratios, "per-pair ratios behind c6");
    ctx.q("calibration.bracket_envelope", calibration_node(&k), "sup of |{U1,U2}| over its closed-form shape");
    let s = smallness(ctx.v.declared_c, c1.estimate, c6.estimate);
    ctx.q("calibration.smallness.global_condition", s.global_condition, "C < 1/(c1_hat + 8 c6_hat)");
    ctx.q("calibration.smallness.forward_contraction", s.forward_contraction, "c1_hat C < 1");
    ctx.q("calibration.smallness.ball_radius", s.ball_radius, "2C/(1 - c1_hat C)");
    ctx.q("calibration.smallness.inverse_contraction", s.inverse_contraction, "4 c6_hat r < 1 at that radius");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_power_law() {
        let taus = [1.0, 2.0, 4.0];
        let errs: Vec<f64> = taus.iter().map(|t: &f64| 3.0 * (1.0 + 2.0 * t).powf(-2.0)).collect();
        assert!((loglog_slope(&taus, &errs).unwrap() + 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&taus, &[1.0, 0.0, 0.0]), None);
    }

    #[test]
    fn fitted_contraction_skips_the_floor() {
        let mut r = SolveReport::default();
        for d in [1.0, 0.1, 0.01, 1e-13, 1e-13] {
            r.push(1.0, d);
        }
        assert!((fitted_contraction(&r, 1e-12).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn residual_points_respect_the_annulus() {
        for (l, p) in residual_points(50, 3, &[0.0, 0.0, 1.0]) {
            let m = l.norm();
            assert!((0.5..=2.0).contains(&m) && !(0.95..=1.05).contains(&m));
            assert!((0.3..=2.0).contains(&norm(&p)));
        }
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}

//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use selfsim::config::SolverConfig;
use selfsim::gprofile::{EpsilonParams, GProfile};
use selfsim::interface::corner_angle;
use selfsim::linsolve::{norms, LinearSolver};
use selfsim::pipeline::{solve, Run};
use selfsim::realline::{ihilbert, Backend, DecayTag, Field, Grid, Spectral};
use selfsim::verify::run_all;

struct Line {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn defaults(eps: f64) -> SolverConfig {
    SolverConfig {
        epsilon: eps,
        ..Default::default()
    }
}

fn envelopes(gp: &GProfile) -> [f64; 3] {
    let g = gp.grid();
    let f = &gp.family;
    let env = |v: &[f64], p: f64| (0..g.n).map(|j| (1.0 + g.x(j).powi(2)).powf(p) * v[j].abs()).fold(0.0, f64::max);
    [env(&f.g_x.values, 1.5), env(&f.g_xx.values, 2.0), env(&f.g_xxx.values, 2.5)]
}

fn max_ratio_from_3(run: &Run) -> f64 {
    run.sol.report.steps.iter().skip(2).filter_map(|s| s.ratio).fold(0.0, f64::max)
}

fn c1_flat() -> Line {
    let cfg = SolverConfig {
        epsilon: 0.0,
        n_points: 1024,
        half_width: 50.0,
        ..Default::default()
    };
    let t = Instant::now();
    let run = solve(&cfg).unwrap();
    let fine = solve(&cfg.refinement_partner()).unwrap();
    let checks = run_all(&run, Some(&fine));
    let secs = t.elapsed().as_secs_f64();
    let eta_err = run
        .iface
        .as_ref()
        .map(|i| i.eta.iter().zip(run.grid().nodes()).map(|(e, x)| (e - x).norm()).fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY);
    let failed = checks.iter().filter(|c| !c.pass).count();
    let xn = run.sol.norms.xnorm;
    Line {
        id: 1,
        title: "flat interface at eps = 0",
        pass: xn <= 1e-12 && eta_err <= 1e-10 && failed == 0 && secs < 5.0,
        detail: format!(
            "||v||_X = {xn:.1e}, sup|eta - x| = {eta_err:.1e}, {}/{} checks pass, {secs:.2} s",
            checks.len() - failed,
            checks.len()
        ),
    }
}

fn c2_gprofile() -> Line {
    let p = EpsilonParams::new(0.01).unwrap();
    let t = Instant::now();
    let sp = Spectral::new(&Grid::new(200.0, 4096, 2).unwrap()).unwrap();
    let gp = GProfile::build(p, &sp).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let sp2 = Spectral::new(&Grid::new(200.0, 8192, 2).unwrap()).unwrap();
    let gp2 = GProfile::build(p, &sp2).unwrap();
    let (e1, e2) = (envelopes(&gp), envelopes(&gp2));
    let drift = (0..3).map(|k| (e1[k] - e2[k]).abs() / e1[k].max(e2[k])).fold(0.0, f64::max);
    let r = &gp.report;
    let int_err = (r.integral_g_x - 2.0).abs();
    Line {
        id: 2,
        title: "G construction",
        pass: int_err <= 1e-6 && r.oddness <= 1e-10 && r.linear_residual <= 1e-6 && drift < 0.1 && secs < 30.0,
        detail: format!(
            "|int G_x - 2| = {int_err:.1e}, oddness {:.1e}, linear residual {:.1e}, envelope drift {:.1}%, {secs:.2} s",
            r.oddness,
            r.linear_residual,
            100.0 * drift
        ),
    }
}

fn c3_hilbert() -> Line {
    let g = Grid::new(50.0, 2048, 2).unwrap();
    let sp = Spectral::new(&g).unwrap();
    let mut worst = (0.0f64, "");
    for (name, f) in common::corpus() {
        let fld = Field::from_fn(g, DecayTag::SchwartzLike, f);
        let a = ihilbert(&fld, Backend::Fft, &sp).unwrap();
        let b = ihilbert(&fld, Backend::Direct, &sp).unwrap();
        let d = common::sup_diff(&a.values, &b.values);
        if d > worst.0 {
            worst = (d, name);
        }
    }
    Line {
        id: 3,
        title: "Hilbert transform, FFT vs direct quadrature",
        pass: worst.0 <= 1e-6,
        detail: format!("worst sup difference {:.1e} ({}) over 10 functions", worst.0, worst.1),
    }
}

fn c4_linear() -> Line {
    let k_and_err = |n: usize| {
        let sp = Spectral::new(&Grid::new(100.0, n, 2).unwrap()).unwrap();
        let gp = GProfile::build(EpsilonParams::new(0.01).unwrap(), &sp).unwrap();
        let x = gp.grid().nodes();
        let f = common::manufactured_rhs(&x, &gp.w.values, gp.a());
        let solver = LinearSolver::new(&gp, 0.0, &sp).unwrap();
        let (v, rep) = solver.solve_report(&f, &gp, &sp).unwrap();
        let want: Vec<f64> = x.iter().map(|&x| common::gauss_half(x)).collect();
        let (zero, _) = solver.solve(&vec![0.0; n]).unwrap();
        (common::rel_l2(&v, &want), rep.k_estimate, zero.iter().all(|&z| z == 0.0))
    };
    let (err, k1, zero) = k_and_err(2048);
    let (_, k2, _) = k_and_err(4096);
    let drift = (k1 - k2).abs() / k1.max(k2);
    Line {
        id: 4,
        title: "linear solver",
        pass: err <= 1e-8 && zero && drift < 0.1,
        detail: format!(
            "manufactured relative L2 error {err:.1e}, F = 0 gives v = 0: {zero}, K {k1:.4e} -> {k2:.4e} ({:.1}%)",
            100.0 * drift
        ),
    }
}

fn c5_contraction(runs: &[(f64, Run, f64)]) -> Line {
    let mut pass = true;
    let mut parts = Vec::new();
    for (eps, run, secs) in runs {
        let q = max_ratio_from_3(run);
        let steps = run.sol.report.steps.len();
        pass &= run.sol.report.converged && q <= 0.9 && steps <= 30 && *secs <= 300.0;
        parts.push(format!("eps {eps}: {steps} steps, max ratio {q:.3}, {secs:.1} s"));
    }
    Line {
        id: 5,
        title: "contraction",
        pass,
        detail: parts.join("; "),
    }
}

fn c6_residuals(runs: &[(f64, Run, f64)]) -> Line {
    let mut pass = true;
    let mut parts = Vec::new();
    for (eps, run, _) in runs {
        let r = &run.sol.residuals;
        let im = run.iface.as_ref().map(|i| i.u.im_sup).unwrap_or(f64::INFINITY);
        let gain = r.first_iterate_selfsimilar / r.selfsimilar;
        pass &= r.selfsimilar <= 1e-6 && im <= 1e-6 && gain >= 10.0;
        parts.push(format!("eps {eps}: residual {:.1e}, Im U {im:.1e}, gain {gain:.1e}", r.selfsimilar));
    }
    Line {
        id: 6,
        title: "fixed-point residuals",
        pass,
        detail: parts.join("; "),
    }
}

fn c7_linear_response(runs: &[(f64, Run, f64)]) -> Line {
    let q: Vec<f64> = runs.iter().map(|(e, r, _)| r.sol.norms.xnorm / e).collect();
    let hi = q.iter().cloned().fold(0.0, f64::max);
    let lo = q.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = (hi - lo) / hi;
    Line {
        id: 7,
        title: "linear response ||v||_X / eps",
        pass: spread <= 0.2,
        detail: format!(
            "ratios {}, spread {:.0}%",
            q.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", "),
            100.0 * spread
        ),
    }
}

fn c8_asymptotics(run: &Run) -> Line {
    let eps = run.gp.eps();
    let a = run.gp.a();
    let d = &run.iface.as_ref().unwrap().diagnostics;
    let fit = (d.power_fit - a).abs() / a;
    let ap = (d.angle_plus - eps).abs() / eps;
    let am = (d.angle_minus + PI + eps).abs() / eps;
    let corner = (corner_angle(eps) - (PI + 2.0 * eps)).abs();
    let two = 2.0 * eps / PI;
    let xfx = (d.xfx_limit - two).abs() / two;
    Line {
        id: 8,
        title: "asymptotics at eps = 0.02",
        pass: fit <= 0.02 && ap <= 0.02 && am <= 0.02 && corner <= 1e-15 && xfx <= 0.05,
        detail: format!(
            "exponent {:.6} vs {a:.6}, angle errors {:.1e} / {:.1e} of eps, corner gap {corner:.1e}, x f_x off by {:.2}%",
            d.power_fit,
            ap,
            am,
            100.0 * xfx
        ),
    }
}

fn c9_scaling(run: &Run) -> Line {
    let ev = run.iface.as_ref().unwrap().evaluator();
    let a = ev.a;
    let mut worst = 0.0f64;
    for lam in [0.5f64, 2.0, 10.0] {
        for &(al, t) in &[(1.0, 1.0), (-2.5, 0.3), (0.4, 3.0), (7.0, 0.0)] {
            let l = ev.evaluate_z(lam * al, lam.powf(3.0 * a) * t).unwrap().z();
            let r: Complex64 = ev.evaluate_z(al, t).unwrap().z() * lam.powf(a);
            worst = worst.max((l - r).norm() / r.norm());
        }
    }
    Line {
        id: 9,
        title: "scaling identity",
        pass: worst <= 1e-12,
        detail: format!("worst relative gap {worst:.1e} over lambda in {{0.5, 2, 10}}"),
    }
}

fn c10_refinement(coarse: &Run) -> Line {
    let fine = solve(&coarse.config.refinement_partner()).unwrap();
    let vf = fine.sol.v();
    let vc = coarse.sol.v();
    let d: Vec<f64> = (0..vc.len()).map(|j| vc[j] - vf[2 * j]).collect();
    let rel = norms(&d, &coarse.gp, &coarse.sp).xnorm / coarse.sol.norms.xnorm;
    Line {
        id: 10,
        title: "grid convergence N -> 2N",
        pass: rel <= 1e-3,
        detail: format!("||v(N) - v(2N)||_X / ||v(N)||_X = {rel:.1e} at N = {}", coarse.grid().n),
    }
}

fn main() {
    let mut lines = vec![c1_flat(), c2_gprofile(), c3_hilbert(), c4_linear()];
    let runs: Vec<(f64, Run, f64)> = [0.005, 0.01, 0.02]
        .iter()
        .map(|&e| {
            let t = Instant::now();
            let r = solve(&defaults(e)).unwrap();
            (e, r, t.elapsed().as_secs_f64())
        })
        .collect();
    lines.push(c5_contraction(&runs));
    lines.push(c6_residuals(&runs));
    lines.push(c7_linear_response(&runs));
    lines.push(c8_asymptotics(&runs[2].1));
    lines.push(c9_scaling(&runs[1].1));
    lines.push(c10_refinement(&runs[1].1));
    let mut failed = 0;
    for l in &lines {
        println!("[{}] criterion {:>2}: {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.title, l.detail);
        failed += (!l.pass) as usize;
    }
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

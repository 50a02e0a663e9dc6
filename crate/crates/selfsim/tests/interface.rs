use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use selfsim::config::SolverConfig;
use selfsim::interface::*;
use selfsim::nonlinear::{IterateState, Ops};
use selfsim::pipeline::{solve, Run};

fn cfg(eps: f64, n: usize, l: f64) -> SolverConfig {
    SolverConfig {
        epsilon: eps,
        n_points: n,
        half_width: l,
        ..Default::default()
    }
}

fn small_run() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| solve(&cfg(0.01, 2048, 100.0)).unwrap())
}

#[test]
fn flat_interface_at_epsilon_zero() {
    let run = solve(&cfg(0.0, 1024, 50.0)).unwrap();
    let ifs = run.iface.as_ref().unwrap();
    let grid = run.grid();
    for j in 0..grid.n {
        assert!((ifs.eta[j] - Complex64::new(grid.x(j), 0.0)).norm() <= 1e-10);
        assert!((ifs.eta_x[j] - 1.0).norm() <= 1e-12);
    }
    assert_eq!(ifs.u.im_sup_full, 0.0);
    let ev = ifs.evaluator();
    for &(al, t) in &[(1.0, 1.0), (-2.0, 0.3), (0.25, 8.0)] {
        let z = ev.evaluate_z(al, t).unwrap().z();
        assert!((z - al).norm() <= 1e-10, "Z({al}, {t}) = {z}");
    }
}

#[test]
fn zero_state_reconstructs_the_line() {
    let run = solve(&cfg(0.0, 512, 50.0)).unwrap();
    let ops = Ops::new(&run.sp, 0.05);
    let st = IterateState::new(&vec![0.0; 512], &run.gp, &ops);
    let ifs = reconstruct_from_state(&st, &run.gp, &ops).unwrap();
    assert!(ifs.eta.iter().zip(run.grid().nodes()).all(|(e, x)| (e - x).norm() <= 1e-10));
}

#[test]
fn eta_is_an_antiderivative_with_modulus_e_to_the_f() {
    let run = small_run();
    let ifs = run.iface.as_ref().unwrap();
    let g = run.grid();
    let h = g.h;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for j in g.n / 4..3 * g.n / 4 {
        // fourth-order central difference
        let d = (ifs.eta[j - 2] - ifs.eta[j - 1] * 8.0 + ifs.eta[j + 1] * 8.0 - ifs.eta[j + 2]) / (12.0 * h);
        worst = worst.max((d - ifs.eta_x[j]).norm());
        scale = scale.max(ifs.eta_x[j].norm());
        let want = Complex64::from_polar(ifs.f[j].exp(), ifs.g[j]);
        assert!((ifs.eta_x[j] - want).norm() <= 1e-12 * want.norm());
    }
    assert!(worst <= 1e-6 * scale, "{worst:e}");
}

#[test]
fn rays_and_growth_exponent() {
    let run = small_run();
    let ifs = run.iface.as_ref().unwrap();
    let eps = 0.01;
    let a = 1.0 + 2.0 * eps / PI;
    let g = run.grid();
    let l = g.half_width;
    // least-squares slope of ln|η| against ln x on [L/8, L/2]
    let pts: Vec<(f64, f64)> = (0..g.n)
        .filter(|&j| g.x(j) >= l / 8.0 && g.x(j) <= l / 2.0)
        .map(|j| (g.x(j).ln(), ifs.eta[j].norm().ln()))
        .collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope - a).abs() / a < 0.02, "slope {slope}");
    let node = |x: f64| ((x + l) / g.h).round() as usize;
    let (jr, jl) = (node(l / 2.0), node(-l / 2.0));
    assert!((ifs.eta[jr].arg() - eps).abs() < 0.02 * eps, "{}", ifs.eta[jr].arg());
    let left = ifs.eta[jl].arg() - 2.0 * PI;
    assert!((left + PI + eps).abs() < 0.02 * eps, "{left}");
    let xfx = g.x(jr) * ifs.f_x[jr];
    assert!((xfx - 2.0 * eps / PI).abs() < 0.05 * 2.0 * eps / PI, "{xfx}");
}

#[test]
fn imaginary_part_of_u_vanishes() {
    let ifs = small_run().iface.as_ref().unwrap();
    assert!(ifs.u.im_sup <= 1e-6, "{}", ifs.u.im_sup);
}

#[test]
fn scaling_identity_at_formula_level() {
    let ev = small_run().iface.as_ref().unwrap().evaluator();
    let a = ev.a;
    for lam in [0.5f64, 2.0, 10.0] {
        for &(al, t) in &[(1.0, 1.0), (-3.0, 0.5), (0.73, 2.0), (4.0, 0.0), (1e3, 1.0)] {
            let lhs = ev.evaluate_z(lam * al, lam.powf(3.0 * a) * t).unwrap().z();
            let rhs = ev.evaluate_z(al, t).unwrap().z() * lam.powf(a);
            assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm(), "lambda {lam}, alpha {al}, t {t}");
        }
    }
}

#[test]
fn corner_at_time_zero() {
    for eps in [0.0, 0.01, -0.02, 0.05] {
        assert!((corner_angle(eps) - (PI + 2.0 * eps)).abs() <= 1e-14);
        let a = 1.0 + 2.0 * eps / PI;
        let p = corner(2.0, eps);
        let m = corner(-2.0, eps);
        assert!((p.norm() - 2f64.powf(a)).abs() <= 1e-14);
        assert!((m.norm() - 2f64.powf(a)).abs() <= 1e-14);
        assert!((p.arg() - eps).abs() <= 1e-15);
    }
    let ev = small_run().iface.as_ref().unwrap().evaluator();
    assert_eq!(ev.evaluate_z(-1.5, 0.0).unwrap().z(), corner(-1.5, 0.01));
    assert!(ev.evaluate_z(1.0, -1.0).is_err());
    assert!(ev.evaluate_z(f64::NAN, 1.0).is_err());
}

#[test]
fn small_times_approach_the_corner() {
    let ev = small_run().iface.as_ref().unwrap().evaluator();
    let z0 = corner(1.0, 0.01);
    let gaps: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-5].iter().map(|&t| (ev.evaluate_z(1.0, t).unwrap().z() - z0).norm()).collect();
    assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");
    assert!(gaps[3] < 0.1 * gaps[0], "{gaps:?}");
    assert!(ev.evaluate_z(1.0, 1e-9).unwrap().out_of_range);
    assert!(!ev.evaluate_z(1.0, 1.0).unwrap().out_of_range);
}

#[test]
fn interpolation_between_nodes_is_accurate() {
    let run = small_run();
    let ifs = run.iface.as_ref().unwrap();
    let ev = ifs.evaluator();
    let g = run.grid();
    for j in (g.n / 4..3 * g.n / 4).step_by(97) {
        let x = g.x(j) + 0.5 * g.h;
        let mid = ev.eta_at(x).0;
        // η at the midpoint ≈ mean of the neighbours − (h²/8)η_xx
        let taylor = (ifs.eta[j] + ifs.eta[j + 1]) * 0.5 - (ifs.eta_x[j + 1] - ifs.eta_x[j]) * (g.h / 8.0);
        assert!((mid - taylor).norm() <= 1e-4 * g.h, "x = {x}");
    }
}

//! Nonlinear data `F = N(v) + S` and the Picard iteration `ℒv_{n+1} = F_n`.
//!
//! With `g = εG + u`, `u = w^{1/3}v`, `f = iℍg`, the self-similar equation
//! reads `ℒv = F` where (corrected form)
//!
//! ```text
//! S  = −ε iℍ∂²(w^{−1/3}G_x) − ε(x/3a) w^{2/3} G_x
//! N  = −iℍ∂²{(e^{−iℍu}−1)v_x + ε e^{−iℍu} iℍG_x v + ε(e^{−iℍu}−1)w^{−1/3}G_x}
//!      − w(e^{2iℍu}−1)(x/3a)v_x − ε(x/3a)e^{2f} iℍG_x u
//!      + f_x iℍ∂q − e^{2f} g_x iℍ(e^{−2f} iℍ∂q) − ε(x/3a)(e^{2iℍu}−1)w^{2/3}G_x
//! ```
//!
//! with `q = e^{−f}g_x`. [`DataForm::AsPrinted`] replaces the factor
//! `−(x/3a)` in the two `ε e^{2f}(G_x + iℍG_x u)` groups by `+1`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gprofile::GProfile;
use crate::linsolve::{norms, LinearSolver, NormReport};
use crate::realline::{taper, Spectral};

/// Which algebraic form of the data `F` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataForm {
    /// Consistent with the self-similar equation; `S = O(ε²)`.
    Corrected,
    /// `ε e^{2f}(G_x + iℍG_x u)` taken with a `+` sign and no `x/3a` factor.
    AsPrinted,
}

/// Transforms shared by the data assembly, with the outer taper applied to
/// every input of `iℍ` and `iℍ∂²`.
pub struct Ops<'a> {
    pub sp: &'a Spectral,
    pub taper: Vec<f64>,
}

impl<'a> Ops<'a> {
    pub fn new(sp: &'a Spectral, taper_fraction: f64) -> Self {
        let taper = if taper_fraction > 0.0 {
            taper(sp.grid(), taper_fraction)
        } else {
            vec![1.0; sp.grid().n]
        };
        Ops { sp, taper }
    }
    fn t(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.taper).map(|(a, b)| a * b).collect()
    }
    pub fn ih(&self, f: &[f64]) -> Vec<f64> {
        self.sp.apply(&self.sp.ih, &self.t(f))
    }
    pub fn ih_d2(&self, f: &[f64]) -> Vec<f64> {
        self.sp.apply(&self.sp.ih_d2, &self.t(f))
    }
    pub fn d1(&self, f: &[f64]) -> Vec<f64> {
        self.sp.apply(&self.sp.d1, f)
    }
    /// `iℍ∂q` as `iℍ(T·∂q)`.
    pub fn ih_d1(&self, f: &[f64]) -> Vec<f64> {
        self.ih(&self.d1(f))
    }
}

/// Everything derived from one iterate `v`.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub v: Vec<f64>,
    pub v_x: Vec<f64>,
    pub u: Vec<f64>,
    pub u_x: Vec<f64>,
    pub ih_u: Vec<f64>,
    pub g: Vec<f64>,
    pub g_x: Vec<f64>,
    pub f: Vec<f64>,
    pub f_x: Vec<f64>,
    /// `e^{−f}`.
    pub efm: Vec<f64>,
    /// `e^{2f}`.
    pub ef2: Vec<f64>,
}

impl IterateState {
    pub fn new(v: &[f64], gp: &GProfile, ops: &Ops) -> Self {
        let eps = gp.eps();
        let fam = &gp.family;
        let w = &gp.w.values;
        let n = v.len();
        let v_x = ops.d1(v);
        let u: Vec<f64> = v.iter().zip(w).map(|(v, w)| w.cbrt() * v).collect();
        let u_x = ops.d1(&u);
        let ih_u = ops.ih(&u);
        let ih_u_x = ops.ih(&u_x);
        let mut g = vec![0.0; n];
        let mut g_x = vec![0.0; n];
        let mut f = vec![0.0; n];
        let mut f_x = vec![0.0; n];
        let mut efm = vec![0.0; n];
        let mut ef2 = vec![0.0; n];
        for j in 0..n {
            g[j] = eps * fam.g.values[j] + u[j];
            g_x[j] = eps * fam.g_x.values[j] + u_x[j];
            f[j] = ih_u[j] + eps * gp.ih_g.values[j];
            f_x[j] = ih_u_x[j] + eps * fam.ih_g_x.values[j];
            // e^{−f} = w^{−1/3} e^{−iℍu}, e^{2f} = w^{2/3} e^{2iℍu}
            efm[j] = (-ih_u[j]).exp() / w[j].cbrt();
            ef2[j] = (2.0 * ih_u[j]).exp() * w[j].cbrt().powi(2);
        }
        IterateState {
            v: v.to_vec(),
            v_x,
            u,
            u_x,
            ih_u,
            g,
            g_x,
            f,
            f_x,
            efm,
            ef2,
        }
    }
}

fn form_factors(form: DataForm, x: f64, a: f64) -> f64 {
    match form {
        DataForm::Corrected => -x / (3.0 * a),
        DataForm::AsPrinted => 1.0,
    }
}

/// Source term `S`.
pub fn assemble_s(gp: &GProfile, ops: &Ops, form: DataForm) -> Result<Vec<f64>> {
    let eps = gp.eps();
    let a = gp.a();
    let grid = gp.grid();
    let w = &gp.w.values;
    let gx = &gp.family.g_x.values;
    let inner: Vec<f64> = gx.iter().zip(w).map(|(g, w)| g / w.cbrt()).collect();
    let lap = ops.ih_d2(&inner);
    let s: Vec<f64> = (0..grid.n)
        .map(|j| {
            let c = form_factors(form, grid.x(j), a);
            -eps * lap[j] + eps * c * w[j].cbrt().powi(2) * gx[j]
        })
        .collect();
    finite_or(s, "S")
}

fn finite_or(v: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::NonFiniteData(what.into()))
    }
}

/// Nonlinear remainder `N(v)`.
pub fn assemble_n(st: &IterateState, gp: &GProfile, ops: &Ops, form: DataForm) -> Result<Vec<f64>> {
    let eps = gp.eps();
    let a = gp.a();
    let grid = gp.grid();
    let n = grid.n;
    let w = &gp.w.values;
    let gx = &gp.family.g_x.values;
    let ihgx = &gp.family.ih_g_x.values;
    let em1: Vec<f64> = st.ih_u.iter().map(|h| (-h).exp_m1()).collect();
    let e2m1: Vec<f64> = st.ih_u.iter().map(|h| (2.0 * h).exp_m1()).collect();

    let bracket: Vec<f64> = (0..n)
        .map(|j| {
            em1[j] * st.v_x[j]
                + eps * (-st.ih_u[j]).exp() * ihgx[j] * st.v[j]
                + eps * em1[j] * gx[j] / w[j].cbrt()
        })
        .collect();
    let t1 = ops.ih_d2(&bracket);
    let q: Vec<f64> = (0..n).map(|j| st.efm[j] * st.g_x[j]).collect();
    let ih_dq = ops.ih_d1(&q);
    let inner: Vec<f64> = (0..n).map(|j| ih_dq[j] / st.ef2[j]).collect();
    let ih_inner = ops.ih(&inner);

    let out: Vec<f64> = (0..n)
        .map(|j| {
            let x = grid.x(j);
            let xs = x / (3.0 * a);
            let c = form_factors(form, x, a);
            let w23 = w[j].cbrt().powi(2);
            -t1[j] - w[j] * e2m1[j] * xs * st.v_x[j]
                + eps * c * st.ef2[j] * ihgx[j] * st.u[j]
                + st.f_x[j] * ih_dq[j]
                - st.ef2[j] * st.g_x[j] * ih_inner[j]
                + eps * c * e2m1[j] * w23 * gx[j]
        })
        .collect();
    finite_or(out, "N")
}

/// Residual of `iℍ∂²q + e^{2f}(x/3a)g_x − f_x iℍ∂q + e^{2f}g_x iℍ(e^{−2f}iℍ∂q)`,
/// the self-similar equation for `(f, g)`, with its normalization
/// `‖e^{2f}(x/3a)g_x‖₂ + ‖S‖₂`.
pub fn selfsimilar_residual(st: &IterateState, gp: &GProfile, ops: &Ops, s: &[f64]) -> (f64, f64) {
    let grid = gp.grid();
    let a = gp.a();
    let n = grid.n;
    let h = grid.h;
    let q: Vec<f64> = (0..n).map(|j| st.efm[j] * st.g_x[j]).collect();
    let lap = ops.ih_d2(&q);
    let ih_dq = ops.ih_d1(&q);
    let inner: Vec<f64> = (0..n).map(|j| ih_dq[j] / st.ef2[j]).collect();
    let ih_inner = ops.ih(&inner);
    let mut r2 = 0.0;
    let mut d2 = 0.0;
    for j in 0..n {
        let adv = st.ef2[j] * grid.x(j) / (3.0 * a) * st.g_x[j];
        let r = lap[j] + adv - st.f_x[j] * ih_dq[j] + st.ef2[j] * st.g_x[j] * ih_inner[j];
        r2 += r * r;
        d2 += adv * adv;
    }
    let s2: f64 = s.iter().map(|x| x * x).sum();
    let abs = (h * r2).sqrt();
    let den = (h * d2).sqrt() + (h * s2).sqrt();
    (abs, if den > 0.0 { abs / den } else { abs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub tol: f64,
    pub tol_rel: f64,
    pub max_iter: usize,
    pub relaxation: f64,
    pub form: DataForm,
    pub taper_fraction: f64,
    /// Bound checked on every `‖v_n‖_X`.
    pub eps1_cap: f64,
    /// Retry with `θ = 0.5` after a contraction failure at `θ = 1`.
    pub damping_fallback: bool,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            tol: 1e-10,
            tol_rel: 0.0,
            max_iter: 50,
            relaxation: 1.0,
            form: DataForm::Corrected,
            taper_fraction: 0.05,
            eps1_cap: 0.5,
            damping_fallback: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub n: usize,
    pub xnorm: f64,
    pub delta: f64,
    pub ratio: Option<f64>,
    /// Normalized self-similar residual of `v_n`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Converged,
    NoConvergence,
    ContractionFailure,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationReport {
    pub steps: Vec<StepRecord>,
    pub outcome: Outcome,
    pub converged: bool,
    pub relaxation: f64,
    pub smallness_preserved: bool,
    pub wall_time_s: f64,
}

impl IterationReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.steps.iter().filter_map(|s| s.ratio).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Residuals {
    /// `‖ℒv − (N(v)+S)‖₂`.
    pub fixed_point: f64,
    pub fixed_point_bound: f64,
    pub selfsimilar: f64,
    pub selfsimilar_abs: f64,
    pub first_iterate_selfsimilar: f64,
    pub s_l2: f64,
}

/// Converged (or best-effort) profile.
#[derive(Debug, Clone)]
pub struct ProfileSolution {
    pub state: IterateState,
    pub norms: NormReport,
    pub s: Vec<f64>,
    pub report: IterationReport,
    pub residuals: Residuals,
    pub config: PicardConfig,
}

fn l2(v: &[f64], h: f64) -> f64 {
    (h * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

fn iterate(
    gp: &GProfile,
    solver: &LinearSolver,
    sp: &Spectral,
    ops: &Ops,
    cfg: &PicardConfig,
    theta: f64,
    s: &[f64],
) -> Result<(Vec<f64>, IterationReport, f64)> {
    let start = Instant::now();
    let n = gp.grid().n;
    let mut v = vec![0.0; n];
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut outcome = Outcome::NoConvergence;
    let mut smallness = true;
    let mut above_one = 0;
    let mut first_residual = f64::NAN;
    for step in 1..=cfg.max_iter {
        let rhs = if step == 1 {
            s.to_vec()
        } else {
            let st = IterateState::new(&v, gp, ops);
            let nn = assemble_n(&st, gp, ops, cfg.form)?;
            nn.iter().zip(s).map(|(a, b)| a + b).collect()
        };
        if rhs.iter().any(|x| !x.is_finite()) {
            outcome = Outcome::ContractionFailure;
            break;
        }
        let (sol, _) = solver.solve(&rhs)?;
        let next: Vec<f64> = v.iter().zip(&sol).map(|(a, b)| (1.0 - theta) * a + theta * b).collect();
        let diff: Vec<f64> = next.iter().zip(&v).map(|(a, b)| a - b).collect();
        let delta = norms(&diff, gp, sp).xnorm;
        v = next;
        let xn = norms(&v, gp, sp).xnorm;
        smallness &= xn < cfg.eps1_cap;
        let st = IterateState::new(&v, gp, ops);
        let residual = selfsimilar_residual(&st, gp, ops, s).1;
        if step == 1 {
            first_residual = residual;
        }
        let ratio = steps.last().map(|p| if p.delta > 0.0 { delta / p.delta } else { 0.0 });
        steps.push(StepRecord {
            n: step,
            xnorm: xn,
            delta,
            ratio,
            residual,
        });
        if delta <= cfg.tol + cfg.tol_rel * xn {
            outcome = Outcome::Converged;
            break;
        }
        if !delta.is_finite() {
            outcome = Outcome::ContractionFailure;
            break;
        }
        match ratio {
            Some(r) if r >= 1.0 => above_one += 1,
            _ => above_one = 0,
        }
        if above_one >= 3 {
            outcome = Outcome::ContractionFailure;
            break;
        }
    }
    let report = IterationReport {
        steps,
        outcome,
        converged: outcome == Outcome::Converged,
        relaxation: theta,
        smallness_preserved: smallness,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((v, report, first_residual))
}

/// `v_1 = ℒ^{−1}S`, `v_{n+1} = ℒ^{−1}(N(v_n) + S)` until `Δ_n <= tol`.
pub fn picard_solve(gp: &GProfile, solver: &LinearSolver, sp: &Spectral, cfg: &PicardConfig) -> Result<ProfileSolution> {
    let ops = Ops::new(sp, cfg.taper_fraction);
    let s = assemble_s(gp, &ops, cfg.form)?;
    let (mut v, mut report, mut first) = iterate(gp, solver, sp, &ops, cfg, cfg.relaxation, &s)?;
    if report.outcome == Outcome::ContractionFailure && cfg.damping_fallback && cfg.relaxation == 1.0 {
        let wall = report.wall_time_s;
        (v, report, first) = iterate(gp, solver, sp, &ops, cfg, 0.5, &s)?;
        report.wall_time_s += wall;
    }
    let h = gp.grid().h;
    let st = IterateState::new(&v, gp, &ops);
    let nn = assemble_n(&st, gp, &ops, cfg.form)?;
    let lv = solver.op.apply(&v, sp);
    let fp: Vec<f64> = (0..v.len()).map(|j| lv[j] - nn[j] - s[j]).collect();
    let s_l2 = l2(&s, h);
    let (ss_abs, ss) = selfsimilar_residual(&st, gp, &ops, &s);
    let residuals = Residuals {
        fixed_point: l2(&fp, h),
        fixed_point_bound: 10.0 * cfg.tol * (1.0 + s_l2),
        selfsimilar: ss,
        selfsimilar_abs: ss_abs,
        first_iterate_selfsimilar: first,
        s_l2,
    };
    Ok(ProfileSolution {
        norms: norms(&v, gp, sp),
        state: st,
        s,
        report,
        residuals,
        config: *cfg,
    })
}

impl ProfileSolution {
    pub fn v(&self) -> &[f64] {
        &self.state.v
    }

    /// Error view of the outcome.
    pub fn check_outcome(&self) -> Result<()> {
        let last = self.report.steps.last().map(|s| s.delta).unwrap_or(0.0);
        match self.report.outcome {
            Outcome::Converged => Ok(()),
            Outcome::NoConvergence => Err(Error::NoConvergence {
                steps: self.report.steps.len(),
                last_delta: last,
            }),
            Outcome::ContractionFailure => Err(Error::ContractionFailure {
                step: self.report.steps.len(),
            }),
        }
    }
}

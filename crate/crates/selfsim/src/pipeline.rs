//! The full chain `G → ℒ → Picard → η` for one configuration.

use std::time::Instant;

use serde::Serialize;

use crate::config::SolverConfig;
use crate::error::Result;
use crate::gprofile::{EpsilonParams, GProfile, EPS_CAP};
use crate::interface::{reconstruct_eta, InterfaceSolution};
use crate::linsolve::{LinearSolver, SolverReport};
use crate::nonlinear::{picard_solve, Ops, Outcome, ProfileSolution};
use crate::realline::{Grid, Spectral};

/// What the truncation at `±L` leaves behind.
#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub half_width: f64,
    /// `max(|v(±L)|) / sup|v|`.
    pub v_edge_ratio: f64,
    /// `max |G(±L) ∓ 1|`.
    pub g_edge_gap: f64,
    /// `x f_x` at the last node, to compare with `2ε/π`.
    pub xfx_edge: f64,
    /// `max (1+L²)^{1/4} w^{1/2} |v(±L)|`.
    pub weighted_v_edge: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Timings {
    pub gprofile_s: f64,
    pub factor_s: f64,
    pub picard_s: f64,
    pub reconstruct_s: f64,
    pub total_s: f64,
}

pub struct Run {
    pub config: SolverConfig,
    pub sp: Spectral,
    pub gp: GProfile,
    pub solver_report: SolverReport,
    pub sol: ProfileSolution,
    /// Present when the iteration converged.
    pub iface: Option<InterfaceSolution>,
    pub holomorphy: f64,
    pub tails: TailReport,
    pub warnings: Vec<String>,
    pub timings: Timings,
}

impl Run {
    pub fn grid(&self) -> &Grid {
        self.sp.grid()
    }
    pub fn ops(&self) -> Ops<'_> {
        Ops::new(&self.sp, self.config.taper_fraction)
    }
}

pub fn build_profile(cfg: &SolverConfig) -> Result<(Spectral, GProfile)> {
    cfg.validate()?;
    let grid = Grid::new(cfg.half_width, cfg.n_points, cfg.pad_factor)?;
    let sp = Spectral::new(&grid)?;
    let gp = GProfile::build(EpsilonParams::with_cap(cfg.epsilon, crate::config::EPS_HARD_CAP)?, &sp)?;
    Ok((sp, gp))
}

pub fn tail_report(gp: &GProfile, sol: &ProfileSolution) -> TailReport {
    let grid = gp.grid();
    let n = grid.n;
    let v = sol.v();
    let sup = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let ends = [0, n - 1];
    let edge = ends.iter().map(|&j| v[j].abs()).fold(0.0, f64::max);
    let g = &gp.family.g.values;
    let l = grid.half_width;
    TailReport {
        half_width: l,
        v_edge_ratio: if sup == 0.0 { 0.0 } else { edge / sup },
        g_edge_gap: (g[0] + 1.0).abs().max((g[n - 1] - 1.0).abs()),
        xfx_edge: grid.x(n - 1) * sol.state.f_x[n - 1],
        weighted_v_edge: ends
            .iter()
            .map(|&j| (1.0 + grid.x(j).powi(2)).powf(0.25) * gp.w.values[j].sqrt() * v[j].abs())
            .fold(0.0, f64::max),
    }
}

/// Run everything; a non-converged iteration is reported, not raised.
pub fn solve(cfg: &SolverConfig) -> Result<Run> {
    let t0 = Instant::now();
    let mut warnings = Vec::new();
    if cfg.epsilon.abs() > EPS_CAP {
        warnings.push(format!(
            "|epsilon| = {} is outside the supported range |epsilon| <= {EPS_CAP}",
            cfg.epsilon.abs()
        ));
    }
    let (sp, gp) = build_profile(cfg)?;
    let t1 = Instant::now();
    let solver = LinearSolver::new(&gp, cfg.delta, &sp)?;
    if solver.delta() != cfg.delta {
        warnings.push(format!("near-singular system, regularized with delta = {}", solver.delta()));
    }
    let t2 = Instant::now();
    let ops = Ops::new(&sp, cfg.taper_fraction);
    let s = crate::nonlinear::assemble_s(&gp, &ops, cfg.form)?;
    let (_, solver_report) = solver.solve_report(&s, &gp, &sp)?;
    let pc = cfg.picard();
    let sol = picard_solve(&gp, &solver, &sp, &pc)?;
    drop(solver);
    if sol.report.relaxation != cfg.relaxation {
        warnings.push(format!("contraction failed; retried with relaxation {}", sol.report.relaxation));
    }
    if !sol.report.smallness_preserved {
        warnings.push("an iterate left the smallness ball".into());
    }
    let t3 = Instant::now();
    let (iface, holomorphy) = if sol.report.outcome == Outcome::Converged {
        let ifs = reconstruct_eta(&sol, &gp, &ops)?;
        let hol = InterfaceSolution::holomorphy_defect(&sol.state, &ops)?;
        (Some(ifs), hol)
    } else {
        (None, f64::NAN)
    };
    let t4 = Instant::now();
    let tails = tail_report(&gp, &sol);
    drop(ops);
    let timings = Timings {
        gprofile_s: (t1 - t0).as_secs_f64(),
        factor_s: (t2 - t1).as_secs_f64(),
        picard_s: (t3 - t2).as_secs_f64(),
        reconstruct_s: (t4 - t3).as_secs_f64(),
        total_s: (t4 - t0).as_secs_f64(),
    };
    Ok(Run {
        config: cfg.clone(),
        sp,
        gp,
        solver_report,
        sol,
        iface,
        holomorphy,
        tails,
        warnings,
        timings,
    })
}

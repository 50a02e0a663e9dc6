//! The weighted third-order linear problem
//! `ℒv = iℍv_xxx + w(x/3a)v_x = F`, with the optional regularization
//! `ℒ_δ = ℒ + δ∂_x(wx²∂_x ·)` so that `B_δ(v,ζ) = −⟨ℒ_δ v, ζ⟩`.
//!
//! Since `iℍ∂³` has symbol `−|ξ|³`, the leading part is `−|D|³`.

use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gprofile::GProfile;
use crate::realline::{homogeneous_sobolev_sq, Grid, Spectral};

/// Relative residual required of a dense solve.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;
/// Pivot threshold relative to `‖A‖_∞`.
pub const PIVOT_TOL: f64 = 1e-13;
/// Regularization used when the unregularized system is near singular.
pub const RETRY_DELTA: f64 = 1e-6;

/// Coefficients of `ℒ_δ` on one grid.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    pub grid: Grid,
    pub delta: f64,
    /// `w x / 3a`.
    pub coef: Vec<f64>,
    /// `w x²` at half nodes `i + 1/2`, for the δ term.
    pub c_half: Vec<f64>,
}

impl LinearOperator {
    pub fn new(gp: &GProfile, delta: f64) -> Self {
        let grid = *gp.grid();
        let a = gp.a();
        let x = grid.nodes();
        let w = &gp.w.values;
        let coef = x.iter().zip(w).map(|(x, w)| w * x / (3.0 * a)).collect();
        let c: Vec<f64> = x.iter().zip(w).map(|(x, w)| w * x * x).collect();
        let c_half = (0..grid.n - 1).map(|i| 0.5 * (c[i] + c[i + 1])).collect();
        LinearOperator {
            grid,
            delta,
            coef,
            c_half,
        }
    }

    fn delta_term(&self, v: &[f64], out: &mut [f64]) {
        if self.delta == 0.0 {
            return;
        }
        let n = v.len();
        let s = self.delta / (self.grid.h * self.grid.h);
        for i in 0..n {
            let right = if i + 1 < n { self.c_half[i] * (v[i + 1] - v[i]) } else { 0.0 };
            let left = if i > 0 {
                self.c_half[i - 1] * (v[i] - v[i - 1])
            } else {
                0.0
            };
            out[i] += s * (right - left);
        }
    }

    /// Matrix-free `ℒ_δ v`.
    pub fn apply(&self, v: &[f64], sp: &Spectral) -> Vec<f64> {
        let d3 = sp.apply(&sp.abs3, v);
        let d1 = sp.apply(&sp.d1, v);
        let mut out: Vec<f64> = (0..v.len()).map(|i| -d3[i] + self.coef[i] * d1[i]).collect();
        self.delta_term(v, &mut out);
        out
    }

    /// Dense matrix of `ℒ_δ`.
    pub fn assemble(&self, sp: &Spectral) -> Mat<f64> {
        let n = self.grid.n;
        let s = self.delta / (self.grid.h * self.grid.h);
        Mat::from_fn(n, n, |i, j| {
            let mut v = -sp.abs3.entry(i, j) + self.coef[i] * sp.d1.entry(i, j);
            if self.delta != 0.0 {
                if j == i {
                    let r = if i + 1 < n { self.c_half[i] } else { 0.0 };
                    let l = if i > 0 { self.c_half[i - 1] } else { 0.0 };
                    v -= s * (r + l);
                } else if j == i + 1 {
                    v += s * self.c_half[i];
                } else if j + 1 == i {
                    v += s * self.c_half[j];
                }
            }
            v
        })
    }
}

/// A factorized `ℒ_δ`, reusable for many right-hand sides.
pub struct LinearSolver {
    pub op: LinearOperator,
    matrix: Mat<f64>,
    lu: faer::linalg::solvers::PartialPivLu<f64>,
    pub min_pivot: f64,
    pub max_pivot: f64,
    pub matrix_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverReport {
    pub delta: f64,
    pub residual: f64,
    pub k_estimate: f64,
    pub condition_estimate: f64,
    pub norms: NormReport,
}

impl LinearSolver {
    /// Factorize; a near-singular `δ = 0` system is retried with `δ = 1e−6`.
    pub fn new(gp: &GProfile, delta: f64, sp: &Spectral) -> Result<Self> {
        match Self::factorize(LinearOperator::new(gp, delta), sp) {
            Err(Error::SingularSystem { .. }) if delta == 0.0 => {
                Self::factorize(LinearOperator::new(gp, RETRY_DELTA), sp)
            }
            other => other,
        }
    }

    pub fn factorize(op: LinearOperator, sp: &Spectral) -> Result<Self> {
        let matrix = op.assemble(sp);
        let n = matrix.nrows();
        let matrix_norm = (0..n)
            .map(|i| (0..n).map(|j| matrix[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let lu = matrix.partial_piv_lu();
        let u = lu.U();
        let (mut min_pivot, mut max_pivot) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let p = u[(i, i)].abs();
            min_pivot = min_pivot.min(p);
            max_pivot = max_pivot.max(p);
        }
        let threshold = PIVOT_TOL * matrix_norm;
        if !(min_pivot > threshold) {
            return Err(Error::SingularSystem {
                pivot: min_pivot,
                threshold,
            });
        }
        Ok(LinearSolver {
            op,
            matrix,
            lu,
            min_pivot,
            max_pivot,
            matrix_norm,
        })
    }

    pub fn delta(&self) -> f64 {
        self.op.delta
    }

    pub fn condition_estimate(&self) -> f64 {
        self.max_pivot / self.min_pivot
    }

    /// `A v` with the assembled matrix.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let vm = Mat::from_fn(n, 1, |i, _| v[i]);
        let r = &self.matrix * &vm;
        (0..n).map(|i| r[(i, 0)]).collect()
    }

    /// Solve `ℒ_δ v = F`, returning `v` and the relative residual.
    pub fn solve(&self, f: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = f.len();
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData("right-hand side".into()));
        }
        let b = Mat::from_fn(n, 1, |i, _| f[i]);
        let x = self.lu.solve(&b);
        let v: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        let fnorm = l2(f);
        if fnorm == 0.0 {
            return Ok((vec![0.0; n], 0.0));
        }
        let av = self.matvec(&v);
        let res = l2(&av.iter().zip(f).map(|(a, b)| a - b).collect::<Vec<_>>()) / fnorm;
        if !(res <= SOLVE_RESIDUAL_TOL) {
            return Err(Error::ConsistencyFailure {
                what: "dense solve residual".into(),
                measured: res,
                tol: SOLVE_RESIDUAL_TOL,
            });
        }
        Ok((v, res))
    }

    /// Solve and report the bound constant `K = ‖v‖_X / (‖F‖₂ + ‖w^{−1/2}F‖₂)`.
    pub fn solve_report(&self, f: &[f64], gp: &GProfile, sp: &Spectral) -> Result<(Vec<f64>, SolverReport)> {
        let (v, residual) = self.solve(f)?;
        let norms = norms(&v, gp, sp);
        Ok((
            v,
            SolverReport {
                delta: self.delta(),
                residual,
                k_estimate: bound_constant(norms.xnorm, f, gp),
                condition_estimate: self.condition_estimate(),
                norms,
            },
        ))
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `K = ‖v‖_X / (‖F‖₂ + ‖w^{−1/2}F‖₂)` with discrete `L²` norms.
pub fn bound_constant(xnorm: f64, f: &[f64], gp: &GProfile) -> f64 {
    let h = gp.grid().h;
    let a: f64 = f.iter().map(|x| x * x).sum::<f64>() * h;
    let b: f64 = f.iter().zip(&gp.w.values).map(|(x, w)| x * x / w).sum::<f64>() * h;
    let d = a.sqrt() + b.sqrt();
    if d == 0.0 {
        0.0
    } else {
        xnorm / d
    }
}

/// Components of `‖v‖_X = ‖v‖_{L²_w} + ‖xv_x‖_{L²_w} + ‖v‖_{Ḣ¹} + ‖v‖_{Ḣ³}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct NormReport {
    pub l2w: f64,
    pub xl2w: f64,
    pub h1: f64,
    pub h3: f64,
    pub xnorm: f64,
    /// `‖v‖_{Ḣ^{3/2}}`, diagnostic only.
    pub h32: f64,
}

pub fn norms(v: &[f64], gp: &GProfile, sp: &Spectral) -> NormReport {
    let grid = gp.grid();
    let h = grid.h;
    let vx = sp.apply(&sp.d1, v);
    let w = &gp.w.values;
    let l2w = (h * v.iter().zip(w).map(|(v, w)| w * v * v).sum::<f64>()).sqrt();
    let xl2w = (h * (0..grid.n)
        .map(|j| w[j] * (grid.x(j) * vx[j]).powi(2))
        .sum::<f64>())
    .sqrt();
    let h1 = homogeneous_sobolev_sq(v, grid, 1.0).sqrt();
    let h3 = homogeneous_sobolev_sq(v, grid, 3.0).sqrt();
    let h32 = homogeneous_sobolev_sq(v, grid, 1.5).sqrt();
    NormReport {
        l2w,
        xl2w,
        h1,
        h3,
        xnorm: l2w + xl2w + h1 + h3,
        h32,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormEquivalence {
    pub ratio: f64,
    /// `[1 ∓ 3ε sup|x iℍG_x|]`, from `(xw)_x = w(1 + 3ε x iℍG_x)`.
    pub bracket: (f64, f64),
    /// The narrower bracket without the factor 3.
    pub narrow_bracket: (f64, f64),
    pub within_narrow: bool,
}

/// `∫v²(xw)_x / ‖v‖²_{L²_w}` and its bracket.
pub fn check_norm_equivalence(v: &[f64], gp: &GProfile) -> Result<NormEquivalence> {
    let grid = gp.grid();
    let eps = gp.eps();
    let w = &gp.w.values;
    let ihgx = &gp.family.ih_g_x.values;
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..grid.n {
        let x = grid.x(j);
        let dxw = w[j] * (1.0 + 3.0 * eps * x * ihgx[j]);
        num += v[j] * v[j] * dxw;
        den += v[j] * v[j] * w[j];
    }
    let ratio = num / den;
    let s = gp.report.sup_x_ihg_x * eps.abs();
    let bracket = (1.0 - 3.0 * s, 1.0 + 3.0 * s);
    let narrow_bracket = (1.0 - s, 1.0 + s);
    let slack = 1e-14;
    if !(ratio >= bracket.0 - slack && ratio <= bracket.1 + slack) {
        return Err(Error::BoundViolation(format!(
            "norm ratio {ratio} outside [{}, {}]",
            bracket.0, bracket.1
        )));
    }
    Ok(NormEquivalence {
        ratio,
        bracket,
        narrow_bracket,
        within_narrow: ratio >= narrow_bracket.0 - slack && ratio <= narrow_bracket.1 + slack,
    })
}

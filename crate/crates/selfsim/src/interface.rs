//! Interface reconstruction: `η_x = e^{f+ig}`, the closed antiderivative
//!
//! ```text
//! η̄ = (x/a) η̄_x − 3i η̄_x (I−ℍ)P,   P = Re(|η_x|^{−2} ∂(I+ℍ)K),   K = η_x^{−1} ∂(η_x/|η_x|)
//! ```
//!
//! the residual `U` whose imaginary part is the solved equation, and the
//! space-time evaluator `Z(α,t) = t^{1/3} η(t^{−1/(3a)} α)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gprofile::GProfile;
use crate::nonlinear::{IterateState, Ops, ProfileSolution};
use crate::realline::{spectral_tail, Grid};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Relative tolerance of the `dη/dx = η_x` check on the inner half domain.
pub const ANTIDERIVATIVE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub angle_plus: f64,
    pub angle_minus: f64,
    pub power_fit: f64,
    pub xfx_limit: f64,
    pub antiderivative_error: f64,
    pub modulus_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UResidual {
    /// `sup |Im U|` over the untapered region `|x| <= (1−taper)L`.
    pub im_sup: f64,
    /// `sup |Im U|` over the whole grid.
    pub im_sup_full: f64,
    pub re_sup: f64,
    pub sup_norm: f64,
    pub l2_norm: f64,
    /// `x f_x − 2ε/π` at `x = L/2`.
    pub xfx_gap: f64,
}

#[derive(Debug, Clone)]
pub struct InterfaceSolution {
    pub grid: Grid,
    pub epsilon: f64,
    pub exponent: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub f_x: Vec<f64>,
    pub g_x: Vec<f64>,
    pub eta_x: Vec<Complex64>,
    pub eta: Vec<Complex64>,
    /// `(1/η_x) ∂(η_x/|η_x|) = i g_x e^{−f}`.
    pub curvature_term: Vec<Complex64>,
    pub p_field: Vec<f64>,
    pub diagnostics: Diagnostics,
    pub u: UResidual,
}

fn cmul_t(ops: &Ops, f: &[Complex64]) -> Vec<Complex64> {
    f.iter().zip(&ops.taper).map(|(z, t)| z * t).collect()
}

// Eighth-order central difference; NaN where the stencil leaves the grid.
fn fd8(f: &[Complex64], h: f64) -> Vec<Complex64> {
    const C: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let n = f.len();
    (0..n)
        .map(|i| {
            if i < 4 || i + 4 >= n {
                return Complex64::new(f64::NAN, f64::NAN);
            }
            C.iter()
                .enumerate()
                .map(|(k, c)| (f[i + k + 1] - f[i - k - 1]) * *c)
                .sum::<Complex64>()
                / h
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Least-squares slope of `ln|η|` against `ln|x|`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Build `η_x`, `η` and the `U` residual from a converged state.
pub fn reconstruct_eta(sol: &ProfileSolution, gp: &GProfile, ops: &Ops) -> Result<InterfaceSolution> {
    reconstruct_from_state(&sol.state, gp, ops)
}

pub fn reconstruct_from_state(st: &IterateState, gp: &GProfile, ops: &Ops) -> Result<InterfaceSolution> {
    let sp = ops.sp;
    let grid = *gp.grid();
    let n = grid.n;
    let a = gp.a();
    let eps = gp.eps();
    let x = grid.nodes();

    let eta_x: Vec<Complex64> = (0..n).map(|j| Complex64::new(st.f[j], st.g[j]).exp()).collect();
    let k: Vec<Complex64> = (0..n).map(|j| I * st.g_x[j] * st.efm[j]).collect();
    // (I+ℍ)K with ℍ = −i·iℍ
    let ihk = sp.apply_c(&sp.ih, &cmul_t(ops, &k));
    let ip_h: Vec<Complex64> = k.iter().zip(&ihk).map(|(k, h)| k - I * h).collect();
    let d_iph = sp.apply_c(&sp.d1, &cmul_t(ops, &ip_h));
    let p_raw: Vec<f64> = (0..n).map(|j| (d_iph[j] * st.efm[j] * st.efm[j]).re).collect();
    let p: Vec<f64> = p_raw.iter().zip(&ops.taper).map(|(p, t)| p * t).collect();
    let hp = sp.apply(&sp.ih, &p);
    // (I−ℍ)P = P + i·iℍP
    let im_h: Vec<Complex64> = (0..n).map(|j| Complex64::new(p[j], hp[j])).collect();
    let eta: Vec<Complex64> = (0..n)
        .map(|j| {
            let bx = eta_x[j].conj();
            (bx * (x[j] / a) - I * 3.0 * bx * im_h[j]).conj()
        })
        .collect();

    // U = 1/3 − 1/(3a) − (x/3a)(f_x − i g_x) + (i/η̄_x) ∂[η̄_x (I−ℍ)P]
    let p_x = sp.apply(&sp.d1, &p);
    let hp_x = sp.apply(&sp.d1, &hp);
    let u_field: Vec<Complex64> = (0..n)
        .map(|j| {
            let lg = Complex64::new(st.f_x[j], -st.g_x[j]);
            1.0 / 3.0 - 1.0 / (3.0 * a) - lg * (x[j] / (3.0 * a))
                + I * (lg * im_h[j] + Complex64::new(p_x[j], hp_x[j]))
        })
        .collect();

    let inner_lim = (1.0 - taper_fraction(ops)) * grid.half_width;
    let im_sup = (0..n)
        .filter(|&j| x[j].abs() <= inner_lim)
        .map(|j| u_field[j].im.abs())
        .fold(0.0, f64::max);
    let im_sup_full = u_field.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let re_sup = (0..n)
        .filter(|&j| x[j].abs() <= inner_lim)
        .map(|j| u_field[j].re.abs())
        .fold(0.0, f64::max);
    let sup_norm = u_field.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let l2_norm = (grid.h * u_field.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();

    let l = grid.half_width;
    let j_half = ((0.5 * l + l) / grid.h).round() as usize;
    let xfx_limit = x[j_half] * st.f_x[j_half];
    let u = UResidual {
        im_sup,
        im_sup_full,
        re_sup,
        sup_norm,
        l2_norm,
        xfx_gap: xfx_limit - 2.0 * eps / PI,
    };

    // antiderivative check on |x| <= L/2
    let de = fd8(&eta, grid.h);
    let inner: Vec<usize> = (0..n).filter(|&j| x[j].abs() <= 0.5 * l && de[j].re.is_finite()).collect();
    let scale = inner.iter().map(|&j| eta_x[j].norm()).fold(0.0, f64::max);
    let antiderivative_error = inner.iter().map(|&j| (de[j] - eta_x[j]).norm()).fold(0.0, f64::max) / scale;
    let modulus_error = (0..n)
        .map(|j| (eta_x[j].norm() - st.f[j].exp()).abs() / st.f[j].exp())
        .fold(0.0, f64::max);

    let plus: Vec<f64> = (0..n)
        .filter(|&j| x[j] >= 0.25 * l && x[j] <= 0.5 * l)
        .map(|j| eta[j].arg())
        .collect();
    let minus: Vec<f64> = (0..n)
        .filter(|&j| x[j] <= -0.25 * l && x[j] >= -0.5 * l)
        .map(|j| {
            let t = eta[j].arg();
            if t > 0.0 {
                t - 2.0 * PI
            } else {
                t
            }
        })
        .collect();
    let fit: Vec<usize> = (0..n).filter(|&j| x[j] >= l / 8.0 && x[j] <= l / 2.0).collect();
    let lx: Vec<f64> = fit.iter().map(|&j| x[j].ln()).collect();
    let ly: Vec<f64> = fit.iter().map(|&j| eta[j].norm().ln()).collect();
    let diagnostics = Diagnostics {
        angle_plus: median(plus),
        angle_minus: median(minus),
        power_fit: slope(&lx, &ly),
        xfx_limit,
        antiderivative_error,
        modulus_error,
    };
    if !(antiderivative_error <= ANTIDERIVATIVE_TOL) {
        return Err(Error::ConsistencyFailure {
            what: "d(eta)/dx vs eta_x".into(),
            measured: antiderivative_error,
            tol: ANTIDERIVATIVE_TOL,
        });
    }
    Ok(InterfaceSolution {
        grid,
        epsilon: eps,
        exponent: a,
        f: st.f.clone(),
        g: st.g.clone(),
        f_x: st.f_x.clone(),
        g_x: st.g_x.clone(),
        eta_x,
        eta,
        curvature_term: k,
        p_field: p,
        diagnostics,
        u,
    })
}

fn taper_fraction(ops: &Ops) -> f64 {
    // recover the flat region from the window itself
    let n = ops.taper.len();
    let mid = n / 2;
    let last_flat = (mid..n).take_while(|&j| ops.taper[j] == 1.0).last().unwrap_or(mid);
    let grid = ops.sp.grid();
    1.0 - grid.x(last_flat) / grid.half_width
}

impl InterfaceSolution {
    /// `‖u + iℍ(iℍu)‖₂ / ‖u‖₂` for the tapered `u`.
    ///
    /// `iℍu` has a `1/x` tail, so both transforms run on a zero-extended grid
    /// four times wider, and the part of the second one from beyond that grid
    /// is added in closed form, `(1/π²)∫u(z) ∫_{out} dy/((x−y)(y−z)) dz`.
    pub fn holomorphy_defect(st: &IterateState, ops: &Ops) -> Result<f64> {
        const WIDEN: usize = 4;
        let grid = ops.sp.grid();
        let n = grid.n;
        let tu: Vec<f64> = st.u.iter().zip(&ops.taper).map(|(u, t)| u * t).collect();
        let den: f64 = tu.iter().map(|u| u * u).sum();
        if den == 0.0 {
            return Ok(0.0);
        }
        let wide = Grid::new(grid.half_width * WIDEN as f64, n * WIDEN, 2)?;
        let sp = crate::realline::Spectral::new(&wide)?;
        let off = (WIDEN - 1) * n / 2;
        let mut ext = vec![0.0; wide.n];
        ext[off..off + n].copy_from_slice(&tu);
        let once = sp.apply(&sp.ih, &ext);
        let twice = sp.apply(&sp.ih, &once);
        let (yl, yr) = (-wide.half_width - 0.5 * wide.h, wide.half_width - 0.5 * wide.h);
        let x = grid.nodes();
        let lr: Vec<f64> = x.iter().map(|x| (yr - x).ln()).collect();
        let ll: Vec<f64> = x.iter().map(|x| (x - yl).ln()).collect();
        let support: Vec<usize> = (0..n).filter(|&j| tu[j] != 0.0).collect();
        let c = grid.h / (PI * PI);
        let num: f64 = (0..n)
            .map(|i| {
                let outer: f64 = support
                    .iter()
                    .map(|&j| {
                        let k = if i == j {
                            -1.0 / (yr - x[i]) - 1.0 / (x[i] - yl)
                        } else {
                            (lr[i] - lr[j] + ll[j] - ll[i]) / (x[i] - x[j])
                        };
                        tu[j] * k
                    })
                    .sum();
                (tu[i] + twice[off + i] + c * outer).powi(2)
            })
            .sum();
        Ok((num / den).sqrt())
    }

    /// High-frequency tail of `(f + ig)_x`, see [`spectral_tail`].
    pub fn spectral_tail(&self) -> f64 {
        let z: Vec<Complex64> = (0..self.grid.n).map(|j| Complex64::new(self.f_x[j], self.g_x[j])).collect();
        spectral_tail(&z, &self.grid)
    }

    pub fn evaluator(&self) -> SpaceTimeEvaluator {
        let l = self.grid.half_width;
        let n = self.grid.n;
        let jr = ((1.5 * l) / self.grid.h).round() as usize;
        let jl = ((0.5 * l) / self.grid.h).round() as usize;
        let xr = self.grid.x(jr.min(n - 1));
        let xl = self.grid.x(jl);
        SpaceTimeEvaluator {
            grid: self.grid,
            epsilon: self.epsilon,
            a: self.exponent,
            eta: self.eta.clone(),
            amp_plus: self.eta[jr.min(n - 1)].norm() / xr.abs().powf(self.exponent),
            amp_minus: self.eta[jl].norm() / xl.abs().powf(self.exponent),
            angle_plus: self.diagnostics.angle_plus,
            angle_minus: self.diagnostics.angle_minus,
        }
    }
}

/// `Z(α,t) = t^{1/3} η(t^{−1/(3a)} α)`, with the corner formula at `t = 0`.
#[derive(Debug, Clone)]
pub struct SpaceTimeEvaluator {
    pub grid: Grid,
    pub epsilon: f64,
    pub a: f64,
    pub eta: Vec<Complex64>,
    pub amp_plus: f64,
    pub amp_minus: f64,
    pub angle_plus: f64,
    pub angle_minus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZValue {
    pub re: f64,
    pub im: f64,
    /// Evaluated from the power-law asymptote instead of grid data.
    pub out_of_range: bool,
}

impl ZValue {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Corner at `t = 0`: `e^{iε}|α|^a` for `α >= 0`, `e^{−i(π+ε)}|α|^a` for `α < 0`.
pub fn corner(alpha: f64, epsilon: f64) -> Complex64 {
    let a = 1.0 + 2.0 * epsilon / PI;
    let r = alpha.abs().powf(a);
    if alpha >= 0.0 {
        Complex64::from_polar(r, epsilon)
    } else {
        Complex64::from_polar(r, -(PI + epsilon))
    }
}

/// Opening angle between the two rays of `Z(·,0)`.
pub fn corner_angle(epsilon: f64) -> f64 {
    corner(1.0, epsilon).arg() - (corner(-1.0, epsilon).arg() - if corner(-1.0, epsilon).arg() > 0.0 { 2.0 * PI } else { 0.0 })
}

impl SpaceTimeEvaluator {
    /// `η` off the grid: cubic Lagrange on `|x| <= L/2`, asymptote beyond.
    pub fn eta_at(&self, x: f64) -> (Complex64, bool) {
        let l = self.grid.half_width;
        if x.abs() > 0.5 * l {
            let (amp, ang) = if x > 0.0 {
                (self.amp_plus, self.angle_plus)
            } else {
                (self.amp_minus, self.angle_minus)
            };
            return (Complex64::from_polar(amp * x.abs().powf(self.a), ang), true);
        }
        let s = (x + l) / self.grid.h;
        let r = s.round();
        if (s - r).abs() < 1e-9 && r >= 0.0 && (r as usize) < self.eta.len() {
            return (self.eta[r as usize], false);
        }
        let j = (s.floor() as isize).clamp(1, self.eta.len() as isize - 3);
        let t = s - j as f64;
        let idx = [j - 1, j, j + 1, j + 2];
        let nodes = [-1.0, 0.0, 1.0, 2.0];
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &ik) in idx.iter().enumerate() {
            let mut w = 1.0;
            for (m, &nm) in nodes.iter().enumerate() {
                if m != k {
                    w *= (t - nm) / (nodes[k] - nm);
                }
            }
            acc += self.eta[ik as usize] * w;
        }
        (acc, false)
    }

    pub fn evaluate_z(&self, alpha: f64, t: f64) -> Result<ZValue> {
        if !(t >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParams(format!("Z needs t >= 0, got t = {t}")));
        }
        if t == 0.0 {
            let z = corner(alpha, self.epsilon);
            return Ok(ZValue {
                re: z.re,
                im: z.im,
                out_of_range: false,
            });
        }
        let arg = t.powf(-1.0 / (3.0 * self.a)) * alpha;
        let (e, oor) = self.eta_at(arg);
        let z = e * t.cbrt();
        Ok(ZValue {
            re: z.re,
            im: z.im,
            out_of_range: oor,
        })
    }
}

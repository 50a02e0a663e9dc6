//! The linearized profile `G` (`Ĝ_x = √(2/π) e^{−a|ξ|³}`) and everything
//! derived from it: `iℍG` through its log decomposition, `γ^ε` and the weight `w`.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::realline::{cumulative_from_right, ihilbert, integrate, Backend, DecayTag, Field, Grid, Spectral};

/// Default cap on `|ε|`.
pub const EPS_CAP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonParams {
    pub epsilon: f64,
    pub a: f64,
}

impl EpsilonParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        Self::with_cap(epsilon, EPS_CAP)
    }

    pub fn with_cap(epsilon: f64, cap: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon.abs() > cap {
            return Err(Error::InvalidParams(format!("|epsilon| = {} exceeds cap {cap}", epsilon.abs())));
        }
        let a = 1.0 + 2.0 * epsilon / PI;
        if !(0.5 < a && a < 1.5) {
            return Err(Error::InvalidParams(format!("a = {a} outside (1/2, 3/2)")));
        }
        Ok(EpsilonParams { epsilon, a })
    }

    /// `(1/ε) ln(1+2ε/π)`, with its limit `2/π` for tiny `ε`.
    pub fn c_const(&self) -> f64 {
        if self.epsilon.abs() < 1e-8 {
            2.0 / PI
        } else {
            (1.0 + 2.0 * self.epsilon / PI).ln() / self.epsilon
        }
    }
}

/// The G family sampled on the grid.
#[derive(Debug, Clone)]
pub struct GFamily {
    pub params: EpsilonParams,
    pub grid: Grid,
    pub g: Field,
    pub g_x: Field,
    pub g_xx: Field,
    pub g_xxx: Field,
    /// `iℍG_x` from its own sine integral.
    pub ih_g_x: Field,
    /// `G` from its sine integral `(2/π)∫ sin(xξ)e^{−aξ³}/ξ`, kept as a cross-check.
    pub g_quadrature: Field,
    /// Largest change of `G_x` when the panel count is halved.
    pub quadrature_change: f64,
    /// `max |∫_0^x G_x − G|` on the inner half.
    pub cumulative_gap: f64,
    pub xi_max: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GReport {
    pub integral_g_x: f64,
    pub oddness: f64,
    pub g_at_ends: (f64, f64),
    pub linear_residual: f64,
    pub quadrature_change: f64,
    pub ihg_consistency: f64,
    pub v_derivative_inner: f64,
    pub v_at_ends: (f64, f64),
    pub c_growth: f64,
    pub sup_x_ihg_x: f64,
    pub smallness: f64,
}

/// Complete profile bundle for one `ε`.
#[derive(Debug, Clone)]
pub struct GProfile {
    pub family: GFamily,
    pub v1: Field,
    pub v_big: Field,
    pub c_const: f64,
    pub ih_g: Field,
    pub gamma_eps: Field,
    pub w: Field,
    pub c_growth: f64,
    pub report: GReport,
}

impl GProfile {
    pub fn params(&self) -> EpsilonParams {
        self.family.params
    }
    pub fn grid(&self) -> &Grid {
        &self.family.grid
    }
    pub fn eps(&self) -> f64 {
        self.family.params.epsilon
    }
    pub fn a(&self) -> f64 {
        self.family.params.a
    }

    /// Full construction with all construction-time checks.
    pub fn build(params: EpsilonParams, sp: &Spectral) -> Result<Self> {
        let fam = build_g(params, sp)?;
        build_ih_g(fam, sp)
    }
}

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn panel_rule(xi_max: f64, panels: usize, a: f64) -> Rule {
    let gl = GaussLegendre::new(NonZeroUsize::new(16).unwrap());
    let width = xi_max / panels as f64;
    let mut nodes = Vec::with_capacity(16 * panels);
    let mut weights = Vec::with_capacity(16 * panels);
    for p in 0..panels {
        let lo = p as f64 * width;
        for &(t, w) in gl.as_node_weight_pairs() {
            let xi = lo + 0.5 * width * (t + 1.0);
            nodes.push(xi);
            weights.push(0.5 * width * w * (-a * xi * xi * xi).exp() * 2.0 / PI);
        }
    }
    Rule { nodes, weights }
}

// Values needed at one x: [G_x, G_xx, G_xxx, iℍG_x, G].
fn transforms_at(x: f64, r: &Rule) -> [f64; 5] {
    let mut out = [0.0; 5];
    for (&xi, &w) in r.nodes.iter().zip(&r.weights) {
        let (s, c) = (x * xi).sin_cos();
        out[0] += c * w;
        out[1] -= xi * s * w;
        out[2] -= xi * xi * c * w;
        out[3] += s * w;
        out[4] += s / xi * w;
    }
    out
}

fn gx_at(x: f64, r: &Rule) -> f64 {
    r.nodes.iter().zip(&r.weights).map(|(&xi, &w)| (x * xi).cos() * w).sum()
}

/// Sample `G_x` and its relatives by Gauss–Legendre panels on `[0, Ξ]`.
pub fn build_g(params: EpsilonParams, sp: &Spectral) -> Result<GFamily> {
    let grid = *sp.grid();
    let a = params.a;
    let xi_max = ((1e17f64).ln() / a).cbrt();
    let l = grid.half_width;
    let panels = ((xi_max * l).ceil() as usize).max(64);
    let fine = panel_rule(xi_max, panels, a);
    let coarse = panel_rule(xi_max, panels / 2, a);
    let n = grid.n;
    let mid = grid.origin();
    let mut vals = vec![[0.0; 5]; n];
    let mut change = 0.0f64;
    // x_{mid+k} = k h; mirror onto x_{mid-k}; node 0 (x = −L) has no partner.
    for k in 0..(n - mid) {
        let x = grid.x(mid + k);
        let t = transforms_at(x, &fine);
        change = change.max((gx_at(x, &coarse) - t[0]).abs());
        vals[mid + k] = t;
        if k > 0 && mid >= k {
            vals[mid - k] = [t[0], -t[1], t[2], -t[3], -t[4]];
        }
    }
    vals[0] = transforms_at(grid.x(0), &fine);
    let tol = 1e-9;
    if change > tol {
        return Err(Error::QuadratureFailure { change, tol });
    }
    let col = |i: usize, decay: DecayTag| Field {
        grid,
        values: vals.iter().map(|v| v[i]).collect(),
        decay,
    };
    let g_x = col(0, DecayTag::Algebraic(4.0));
    let g_xx = col(1, DecayTag::Algebraic(5.0));
    let g_xxx = col(2, DecayTag::Algebraic(6.0));
    let ih_g_x = col(3, DecayTag::Algebraic(1.0));
    let g_quadrature = col(4, DecayTag::BoundedNondecaying);

    // G itself from the sine quadrature; the running integral of G_x is a cross-check
    let cum = cumulative_from_right(&g_x, sp)?;
    let c0 = cum.values[mid];
    let cumulative_gap = (n / 4..3 * n / 4)
        .map(|j| (cum.values[j] - c0 - g_quadrature.values[j]).abs())
        .fold(0.0, f64::max);
    let g = g_quadrature.clone();
    Ok(GFamily {
        params,
        grid,
        g,
        g_x,
        g_xx,
        g_xxx,
        ih_g_x,
        g_quadrature,
        quadrature_change: change,
        cumulative_gap,
        xi_max,
        panels,
    })
}

/// Tolerance for the log-decomposition cross-check.
pub const IHG_CONSISTENCY_TOL: f64 = 1e-6;

/// `iℍG = (1/π)log(a²+x²) + C + V`, `V = −∫_x^∞ v1`, then `γ^ε` and `w`.
pub fn build_ih_g(fam: GFamily, sp: &Spectral) -> Result<GProfile> {
    let grid = fam.grid;
    let a = fam.params.a;
    let eps = fam.params.epsilon;
    let x = grid.nodes();
    let v1 = Field {
        grid,
        values: x
            .iter()
            .zip(&fam.ih_g_x.values)
            .map(|(&x, &h)| h - 2.0 / PI * x / (a * a + x * x))
            .collect(),
        decay: DecayTag::Algebraic(3.0),
    };
    let v_big = cumulative_from_right(&v1, sp)?;
    let c_const = fam.params.c_const();
    let ih_g = Field {
        grid,
        values: x
            .iter()
            .zip(&v_big.values)
            .map(|(&x, &v)| (a * a + x * x).ln() / PI + c_const + v)
            .collect(),
        decay: DecayTag::BoundedNondecaying,
    };

    // Spectral iℍ(G_x) against the decomposition (2/π)x/(a²+x²) + v1.
    let spectral = ihilbert(&fam.g_x, Backend::Fft, sp)?;
    let consistency = spectral
        .values
        .iter()
        .zip(&fam.ih_g_x.values)
        .map(|(s, q)| (s - q).abs())
        .fold(0.0, f64::max);
    if consistency > IHG_CONSISTENCY_TOL {
        return Err(Error::ConsistencyFailure {
            what: "iHG_x decomposition vs spectral iH(G_x)".into(),
            measured: consistency,
            tol: IHG_CONSISTENCY_TOL,
        });
    }
    let dv = crate::realline::derivative(&v_big, 1, sp)?;
    let n = grid.n;
    let v_derivative_inner = (n / 4..3 * n / 4)
        .map(|j| (dv.values[j] - v1.values[j]).abs())
        .fold(0.0, f64::max);

    let gamma_eps = Field {
        grid,
        values: ih_g.values.iter().map(|&h| (eps * h).exp()).collect(),
        decay: DecayTag::BoundedNondecaying,
    };
    let (w, c_growth) = build_weight(eps, &ih_g);

    let sup_x_ihg_x = x
        .iter()
        .zip(&fam.ih_g_x.values)
        .map(|(x, h)| (x * h).abs())
        .fold(0.0, f64::max);
    let integral_g_x = integrate(&fam.g_x, sp)?;
    let mid = grid.origin();
    let oddness = (1..mid)
        .map(|k| (fam.g.values[mid + k] + fam.g.values[mid - k]).abs())
        .fold(fam.g.values[mid].abs(), f64::max);
    let xs: Vec<f64> = x.iter().map(|x| x / (3.0 * a)).collect();
    let lin_res = linear_residual(&fam, &xs, sp);
    let report = GReport {
        integral_g_x,
        oddness,
        g_at_ends: (fam.g.values[0], fam.g.values[n - 1]),
        linear_residual: lin_res,
        quadrature_change: fam.quadrature_change,
        ihg_consistency: consistency,
        v_derivative_inner,
        v_at_ends: (v_big.values[0], v_big.values[n - 1]),
        c_growth,
        sup_x_ihg_x,
        smallness: eps.abs() * sup_x_ihg_x,
    };
    if report.smallness >= 0.5 {
        return Err(Error::InvalidParams(format!(
            "epsilon * sup|x iHG_x| = {} is not below 1/2",
            report.smallness
        )));
    }
    Ok(GProfile {
        family: fam,
        v1,
        v_big,
        c_const,
        ih_g,
        gamma_eps,
        w,
        c_growth,
        report,
    })
}

/// `‖iℍ∂²G_x + (x/3a)G_x‖₂ / ‖(x/3a)G_x‖₂`.
pub fn linear_residual(fam: &GFamily, x_over_3a: &[f64], sp: &Spectral) -> f64 {
    let lap = sp.apply(&sp.ih_d2, &fam.g_x.values);
    let mut num = 0.0;
    let mut den = 0.0;
    for ((l, g), xs) in lap.iter().zip(&fam.g_x.values).zip(x_over_3a) {
        num += (l + xs * g).powi(2);
        den += (xs * g).powi(2);
    }
    (num / den).sqrt()
}

/// `w = e^{3ε iℍG}` and `C_growth = max_{|x|≥1} |ln w| / ln(1+x²)`.
pub fn build_weight(eps: f64, ih_g: &Field) -> (Field, f64) {
    let grid = ih_g.grid;
    let values: Vec<f64> = ih_g.values.iter().map(|&h| (3.0 * eps * h).exp()).collect();
    let c_growth = (0..grid.n)
        .filter(|&j| grid.x(j).abs() >= 1.0)
        .map(|j| values[j].ln().abs() / (1.0 + grid.x(j).powi(2)).ln())
        .fold(0.0, f64::max);
    (
        Field {
            grid,
            values,
            decay: DecayTag::BoundedNondecaying,
        },
        c_growth,
    )
}

/// Closed form `(1+2ε/π)³ (a²+x²)^{3ε/π} e^{3εV}`.
pub fn weight_closed_form(gp: &GProfile) -> Vec<f64> {
    let eps = gp.eps();
    let a = gp.a();
    gp.grid()
        .nodes()
        .iter()
        .zip(&gp.v_big.values)
        .map(|(&x, &v)| {
            (1.0 + 2.0 * eps / PI).powi(3) * (a * a + x * x).powf(3.0 * eps / PI) * (3.0 * eps * v).exp()
        })
        .collect()
}

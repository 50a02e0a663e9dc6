//! Independent oracles: quadratures written against the defining integrals,
//! sharing no code with the library.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Composite Gauss–Legendre on `[a, b]`, panels doubled until two passes agree.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let gl = GaussLegendre::new(NonZeroUsize::new(20).unwrap());
    let rule = |panels: usize| -> f64 {
        let w = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let lo = a + p as f64 * w;
                gl.as_node_weight_pairs()
                    .iter()
                    .map(|&(t, wt)| 0.5 * w * wt * f(lo + 0.5 * w * (t + 1.0)))
                    .sum::<f64>()
            })
            .sum()
    };
    let mut panels = 8;
    let mut prev = rule(panels);
    loop {
        panels *= 2;
        let cur = rule(panels);
        if (cur - prev).abs() <= tol * (1.0 + cur.abs()) || panels > 1 << 16 {
            return cur;
        }
        prev = cur;
    }
}

/// `(1/π) p.v.∫ f(y)/(x−y) dy = (1/π)∫_0^∞ (f(x−t) − f(x+t))/t dt`
/// for functions negligible beyond `reach`.
pub fn pv_hilbert<F: Fn(f64) -> f64>(f: F, x: f64, reach: f64) -> f64 {
    let g = |t: f64| {
        if t == 0.0 {
            0.0
        } else {
            (f(x - t) - f(x + t)) / t
        }
    };
    let t_max = reach + x.abs();
    // resolve the unit scale near t = 0 separately from the long stretch
    (adaptive(&g, 0.0, 1.0, 1e-14) + adaptive(&g, 1.0, t_max, 1e-14)) / PI
}

/// `(1/√(2π))∫ |ξ|^s f̂(ξ) e^{ixξ} dξ` for even `f` with unitary transform `fhat`.
pub fn fourier_multiplier_even<F: Fn(f64) -> f64>(fhat: F, s: f64, x: f64, xi_max: f64) -> f64 {
    2.0 / (2.0 * PI).sqrt() * adaptive(|xi| xi.powf(s) * fhat(xi) * (x * xi).cos(), 0.0, xi_max, 1e-14)
}

/// `G_x(x) = (2/π)∫_0^∞ e^{−aξ³}cos(xξ) dξ`.
pub fn g_x(x: f64, a: f64) -> f64 {
    let top = (40.0 / a).cbrt();
    2.0 / PI * adaptive(|xi| (-a * xi.powi(3)).exp() * (x * xi).cos(), 0.0, top, 1e-15)
}

/// `iℍG(x) − iℍG(0) = (2/π)∫_0^∞ (1 − cos xξ)/ξ · e^{−aξ³} dξ`.
pub fn ihg_difference(x: f64, a: f64) -> f64 {
    let top = (40.0 / a).cbrt();
    let f = |xi: f64| {
        if xi == 0.0 {
            0.0
        } else {
            (1.0 - (x * xi).cos()) / xi * (-a * xi.powi(3)).exp()
        }
    };
    2.0 / PI * adaptive(f, 0.0, top, 1e-15)
}

/// `G(x) = (2/π)∫_0^∞ sin(xξ)/ξ · e^{−aξ³} dξ`.
pub fn g(x: f64, a: f64) -> f64 {
    let top = (40.0 / a).cbrt();
    let f = |xi: f64| {
        if xi == 0.0 {
            x
        } else {
            (x * xi).sin() / xi * (-a * xi.powi(3)).exp()
        }
    };
    2.0 / PI * adaptive(f, 0.0, top, 1e-15)
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn l2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    l2(&d) / l2(b)
}

/// Ten smooth, rapidly decaying test functions.
pub fn corpus() -> Vec<(&'static str, fn(f64) -> f64)> {
    vec![
        ("gauss", |x| (-x * x).exp()),
        ("x_gauss", |x| x * (-x * x).exp()),
        ("shifted", |x| (-(x - 1.0).powi(2) / 2.0).exp()),
        ("chirp", |x| (-x * x / 8.0).exp() * (2.0 * x).cos()),
        ("sech2", |x| 1.0 / x.cosh().powi(2)),
        ("hermite2", |x| (-x * x).exp() * (1.0 - x * x)),
        ("sech", |x| 1.0 / x.cosh()),
        ("cubic_gauss", |x| x.powi(3) * (-x * x / 2.0).exp()),
        ("quartic", |x| (-x.powi(4)).exp()),
        ("sin_gauss", |x| (-(x + 2.0).powi(2)).exp() * x.sin()),
    ]
}

pub fn gauss_half(x: f64) -> f64 {
    (-x * x / 2.0).exp()
}

/// `−|D|³v* + w (x/3a) v*_x` for `v* = e^{−x²/2}`, `|D|³` by its Fourier integral.
pub fn manufactured_rhs(x: &[f64], w: &[f64], a: f64) -> Vec<f64> {
    x.iter()
        .zip(w)
        .map(|(&x, &w)| {
            let d3 = fourier_multiplier_even(gauss_half, 3.0, x, 12.0);
            -d3 + w * x / (3.0 * a) * (-x * gauss_half(x))
        })
        .collect()
}

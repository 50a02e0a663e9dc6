//! Sampled functions on a truncated real line and the operators acting on
//! them: Hilbert transform, `|D|^s`, derivatives, quadrature.
//!
//! Convention: `ℍf = (1/iπ) p.v.∫ f(y)/(x−y) dy` with multiplier `−sgn ξ`, so
//! `iℍ` is the standard real-to-real Hilbert transform and `|D| = iℍ∂`.

mod direct;
pub mod kernel;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use direct::direct_ihilbert;
pub use kernel::{Kernel, Op, Spectral};

/// Uniform grid `x_j = −L + jh`, `j = 0..N`, `h = 2L/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub half_width: f64,
    pub n: usize,
    pub h: f64,
    pub pad_factor: usize,
}

impl Grid {
    pub fn new(half_width: f64, n: usize, pad_factor: usize) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(Error::InvalidParams(format!("N must be even and >= 16, got {n}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidParams(format!("half width must be positive, got {half_width}")));
        }
        if pad_factor < 1 {
            return Err(Error::InvalidParams("pad_factor must be >= 1".into()));
        }
        Ok(Grid {
            half_width,
            n,
            h: 2.0 * half_width / n as f64,
            pad_factor,
        })
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Index of the node `x = 0`.
    pub fn origin(&self) -> usize {
        self.n / 2
    }

    /// Every other node of a grid with twice the points and the same `L`.
    pub fn refined(&self) -> Grid {
        Grid {
            n: 2 * self.n,
            h: self.h / 2.0,
            ..*self
        }
    }
}

/// Declared decay class of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecayTag {
    SchwartzLike,
    /// `|f| ≲ (1+x²)^{−p/2}`.
    Algebraic(f64),
    BoundedNondecaying,
}

impl DecayTag {
    fn exponent(self) -> Option<f64> {
        match self {
            DecayTag::SchwartzLike => Some(f64::INFINITY),
            DecayTag::Algebraic(p) => Some(p),
            DecayTag::BoundedNondecaying => None,
        }
    }

    /// Conservative combination (minimum exponent).
    pub fn min(self, other: DecayTag) -> DecayTag {
        match (self.exponent(), other.exponent()) {
            (None, _) | (_, None) => DecayTag::BoundedNondecaying,
            (Some(a), Some(b)) => {
                let p = a.min(b);
                if p.is_infinite() {
                    DecayTag::SchwartzLike
                } else {
                    DecayTag::Algebraic(p)
                }
            }
        }
    }
}

/// Real or complex sample type.
pub trait Scalar: Copy + Send + Sync + std::fmt::Debug + 'static {
    fn to_c(self) -> Complex64;
    fn from_c(z: Complex64) -> Self;
    fn from_re(x: f64) -> Self;
    fn scale(self, s: f64) -> Self;
    fn add(self, o: Self) -> Self;
    fn abs(self) -> f64;
    fn finite(self) -> bool;
}

impl Scalar for f64 {
    fn to_c(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn from_c(z: Complex64) -> Self {
        z.re
    }
    fn from_re(x: f64) -> Self {
        x
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Complex64 {
    fn to_c(self) -> Complex64 {
        self
    }
    fn from_c(z: Complex64) -> Self {
        z
    }
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Samples of a function on a grid, with a decay class.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T: Scalar = f64> {
    pub grid: Grid,
    pub values: Vec<T>,
    pub decay: DecayTag,
}

pub type ComplexField = Field<Complex64>;

impl<T: Scalar> Field<T> {
    pub fn new(grid: Grid, values: Vec<T>, decay: DecayTag) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.finite()) {
            return Err(Error::NonFiniteData("field samples".into()));
        }
        Ok(Field { grid, values, decay })
    }

    pub fn from_fn(grid: Grid, decay: DecayTag, f: impl Fn(f64) -> T) -> Self {
        let values = (0..grid.n).map(|j| f(grid.x(j))).collect();
        Field { grid, values, decay }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Discrete `L²` norm `(h Σ|f_j|²)^{1/2}`.
    pub fn l2(&self) -> f64 {
        (self.grid.h * self.values.iter().map(|v| v.abs().powi(2)).sum::<f64>()).sqrt()
    }

    fn with_values(&self, values: Vec<T>, decay: DecayTag) -> Self {
        Field {
            grid: self.grid,
            values,
            decay,
        }
    }

    fn check(&self, sp: &Spectral) -> Result<()> {
        if self.grid != *sp.grid() {
            return Err(Error::GridMismatch);
        }
        if self.decay == DecayTag::BoundedNondecaying {
            return Err(Error::NonDecayingInput);
        }
        Ok(())
    }

    /// Field multiplied by the C² outer taper.
    pub fn tapered(&self, fraction: f64) -> Self {
        let t = taper(&self.grid, fraction);
        let values = self.values.iter().zip(&t).map(|(v, &w)| v.scale(w)).collect();
        self.with_values(values, self.decay)
    }
}

/// Which Hilbert transform implementation to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    Fft,
    Direct,
}

fn apply_kernel<T: Scalar>(sp: &Spectral, k: &Kernel, f: &[T]) -> Vec<T> {
    let c: Vec<Complex64> = f.iter().map(|v| v.to_c()).collect();
    sp.apply_c(k, &c).into_iter().map(T::from_c).collect()
}

fn integral_abs_ratio<T: Scalar>(f: &Field<T>) -> f64 {
    let s: Complex64 = f.values.iter().map(|v| v.to_c()).sum::<Complex64>() * f.grid.h;
    let l1: f64 = f.values.iter().map(|v| v.abs()).sum::<f64>() * f.grid.h;
    if l1 == 0.0 {
        0.0
    } else {
        s.norm() / l1
    }
}

/// `iℍf`, symbol `−i sgn ξ`; real fields map to real fields.
pub fn ihilbert<T: Scalar>(f: &Field<T>, backend: Backend, sp: &Spectral) -> Result<Field<T>> {
    f.check(sp)?;
    let values = match backend {
        Backend::Fft => apply_kernel(sp, &sp.ih, &f.values),
        Backend::Direct => {
            let re: Vec<f64> = f.values.iter().map(|v| v.to_c().re).collect();
            let im: Vec<f64> = f.values.iter().map(|v| v.to_c().im).collect();
            let hr = direct_ihilbert(&re, &f.grid);
            let hi = if im.iter().any(|&v| v != 0.0) {
                direct_ihilbert(&im, &f.grid)
            } else {
                vec![0.0; im.len()]
            };
            hr.into_iter()
                .zip(hi)
                .map(|(a, b)| T::from_c(Complex64::new(a, b)))
                .collect()
        }
    };
    let mut values = values;
    if let DecayTag::Algebraic(p) = f.decay {
        let (yl, yr) = match backend {
            Backend::Fft => (-f.grid.half_width - 0.5 * f.grid.h, f.grid.half_width - 0.5 * f.grid.h),
            Backend::Direct => (-f.grid.half_width, f.grid.half_width),
        };
        add_algebraic_tail(&mut values, &f.values, &f.grid, p, yl, yr);
    }
    let decay = if integral_abs_ratio(f) > 1e-12 {
        f.decay.min(DecayTag::Algebraic(1.0))
    } else {
        f.decay
    };
    Ok(f.with_values(values, decay))
}

// Contribution of the tails beyond the grid, modelled as f(y) ≈ f_end·(x_end/y)^p:
// (1/π)∫_Y^∞ A(X/y)^p/(x−y) dy = (A/π)(X/Y)^p ∫_0^1 t^{p−1} Y/(xt − Y) dt,
// on panels graded geometrically toward t = 1 where the integrand is nearly singular.
fn add_algebraic_tail<T: Scalar>(out: &mut [T], f: &[T], grid: &Grid, p: f64, yl: f64, yr: f64) {
    use gauss_quad::legendre::GaussLegendre;
    let gl = GaussLegendre::new(std::num::NonZeroUsize::new(8).unwrap());
    let mut nodes = Vec::new();
    let panels = 40;
    for k in 0..panels {
        let a = 1.0 - 0.5f64.powi(k);
        let b = if k + 1 == panels { 1.0 } else { 1.0 - 0.5f64.powi(k + 1) };
        for &(t, w) in gl.as_node_weight_pairs() {
            nodes.push((a + 0.5 * (b - a) * (t + 1.0), 0.5 * (b - a) * w));
        }
    }
    let n = grid.n;
    let tail = |x: f64, big_y: f64, big_x: f64| -> f64 {
        let r = (big_x / big_y).powf(p);
        r * nodes
            .iter()
            .map(|&(t, w)| w * t.powf(p - 1.0) * big_y / (x * t - big_y))
            .sum::<f64>()
            / PI
    };
    let (xl, xr) = (grid.x(0), grid.x(n - 1));
    let (al, ar) = (f[0].to_c(), f[n - 1].to_c());
    for (i, o) in out.iter_mut().enumerate() {
        let x = grid.x(i);
        let right = ar * tail(x, yr, xr);
        let left = -al * tail(-x, -yl, -xl);
        *o = o.add(T::from_c(right + left));
    }
}

/// `ℍf = −i·iℍf`, symbol `−sgn ξ`.
pub fn hilbert<T: Scalar>(f: &Field<T>, backend: Backend, sp: &Spectral) -> Result<ComplexField> {
    let g = ihilbert(f, backend, sp)?;
    let values = g.values.iter().map(|v| v.to_c() * Complex64::new(0.0, -1.0)).collect();
    Ok(Field {
        grid: g.grid,
        values,
        decay: g.decay,
    })
}

/// `|D|^s f` for `s ∈ [0, 4]`.
pub fn fractional_d<T: Scalar>(f: &Field<T>, s: f64, sp: &Spectral) -> Result<Field<T>> {
    f.check(sp)?;
    if !(0.0..=4.0).contains(&s) {
        return Err(Error::InvalidParams(format!("fractional order {s} outside [0, 4]")));
    }
    if s == 0.0 {
        return Ok(f.clone());
    }
    let k = if s == 3.0 { sp.abs3.clone() } else { sp.kernel(Op::AbsD(s)) };
    Ok(f.with_values(apply_kernel(sp, &k, &f.values), f.decay))
}

/// Spectral derivative of order 1..=4.
pub fn derivative<T: Scalar>(f: &Field<T>, order: u32, sp: &Spectral) -> Result<Field<T>> {
    f.check(sp)?;
    let k = match order {
        1 => sp.d1.clone(),
        2 => sp.d2.clone(),
        3 => sp.d3.clone(),
        4 => sp.kernel(Op::Deriv(4)),
        _ => return Err(Error::InvalidParams(format!("derivative order {order} outside 1..=4"))),
    };
    Ok(f.with_values(apply_kernel(sp, &k, &f.values), f.decay))
}

// Endpoint derivatives from the tail model f ≈ c|x|^{-p}; interior ones spectral.
fn em_derivatives<T: Scalar>(f: &Field<T>, sp: &Spectral) -> [Vec<T>; 3] {
    let d1 = apply_kernel(sp, &sp.d1, &f.values);
    let d3 = apply_kernel(sp, &sp.d3, &f.values);
    let d5 = apply_kernel(sp, &sp.d3, &apply_kernel(sp, &sp.d2, &f.values));
    let mut out = [d1, d3, d5];
    if let DecayTag::Algebraic(p) = f.decay {
        let n = f.grid.n;
        for &j in &[0, n - 1] {
            let x = f.grid.x(j);
            let v = f.values[j];
            let c1 = -p / x;
            let c3 = -p * (p + 1.0) * (p + 2.0) / x.powi(3);
            let c5 = -p * (p + 1.0) * (p + 2.0) * (p + 3.0) * (p + 4.0) / x.powi(5);
            out[0][j] = v.scale(c1);
            out[1][j] = v.scale(c3);
            out[2][j] = v.scale(c5);
        }
    }
    out
}

fn tail_factor(decay: DecayTag) -> Result<Option<f64>> {
    match decay {
        DecayTag::SchwartzLike => Ok(None),
        DecayTag::Algebraic(p) if p > 1.0 => Ok(Some(1.0 / (p - 1.0))),
        DecayTag::Algebraic(p) => Err(Error::NonIntegrableTail(p)),
        DecayTag::BoundedNondecaying => Err(Error::NonDecayingInput),
    }
}

const EM: [f64; 3] = [1.0 / 12.0, 1.0 / 720.0, 1.0 / 30240.0];

/// `∫_ℝ f` by corrected trapezoid plus the algebraic tail model.
pub fn integrate<T: Scalar>(f: &Field<T>, sp: &Spectral) -> Result<T> {
    if f.grid != *sp.grid() {
        return Err(Error::GridMismatch);
    }
    let tail = tail_factor(f.decay)?;
    let g = f.grid;
    let n = g.n;
    let h = g.h;
    let v = &f.values;
    let mut s = Complex64::new(0.0, 0.0);
    for x in v {
        s += x.to_c();
    }
    s -= (v[0].to_c() + v[n - 1].to_c()) * 0.5;
    s *= h;
    if let Some(t) = tail {
        let [d1, d3, d5] = em_derivatives(f, sp);
        s -= (d1[n - 1].to_c() - d1[0].to_c()) * (EM[0] * h * h);
        s += (d3[n - 1].to_c() - d3[0].to_c()) * (EM[1] * h.powi(4));
        s -= (d5[n - 1].to_c() - d5[0].to_c()) * (EM[2] * h.powi(6));
        s += (v[n - 1].to_c() * g.x(n - 1).abs() + v[0].to_c() * g.x(0).abs()) * t;
    }
    Ok(T::from_c(s))
}

/// `x ↦ −∫_x^∞ f(y) dy` with tail correction beyond the last node.
pub fn cumulative_from_right<T: Scalar>(f: &Field<T>, sp: &Spectral) -> Result<Field<T>> {
    if f.grid != *sp.grid() {
        return Err(Error::GridMismatch);
    }
    let tail = tail_factor(f.decay)?;
    let g = f.grid;
    let n = g.n;
    let h = g.h;
    let v: Vec<Complex64> = f.values.iter().map(|x| x.to_c()).collect();
    let [d1, d3, d5] = em_derivatives(f, sp);
    let (d1, d3, d5): (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) = (
        d1.iter().map(|x| x.to_c()).collect(),
        d3.iter().map(|x| x.to_c()).collect(),
        d5.iter().map(|x| x.to_c()).collect(),
    );
    let right_tail = match tail {
        Some(t) => v[n - 1] * g.x(n - 1) * t,
        None => Complex64::new(0.0, 0.0),
    };
    let mut out = vec![T::from_re(0.0); n];
    let mut run = Complex64::new(0.0, 0.0);
    for i in (0..n).rev() {
        if i < n - 1 {
            run += (v[i] + v[i + 1]) * (0.5 * h);
        }
        let mut integral = run;
        integral -= (d1[n - 1] - d1[i]) * (EM[0] * h * h);
        integral += (d3[n - 1] - d3[i]) * (EM[1] * h.powi(4));
        integral -= (d5[n - 1] - d5[i]) * (EM[2] * h.powi(6));
        out[i] = T::from_c(-(integral + right_tail));
    }
    Ok(Field {
        grid: g,
        values: out,
        decay: f.decay.min(DecayTag::Algebraic(match f.decay {
            DecayTag::Algebraic(p) => p - 1.0,
            _ => f64::INFINITY,
        })),
    })
}

/// C² (quintic smoothstep) window equal to 1 on `|x| <= (1−fraction)L`.
pub fn taper(grid: &Grid, fraction: f64) -> Vec<f64> {
    let l = grid.half_width;
    let inner = (1.0 - fraction) * l;
    (0..grid.n)
        .map(|j| {
            let s = ((grid.x(j).abs() - inner) / (fraction * l)).clamp(0.0, 1.0);
            1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
        })
        .collect()
}

/// Parseval `∫|ξ|^{2s}|f̂(ξ)|² dξ` of the band-limited interpolant.
pub fn homogeneous_sobolev_sq(values: &[f64], grid: &Grid, s: f64) -> f64 {
    use rustfft::FftPlanner;
    let m = (grid.pad_factor.max(2) * grid.n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (b, &v) in buf.iter_mut().zip(values) {
        *b = Complex64::new(v, 0.0);
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let dxi = 2.0 * PI / (m as f64 * grid.h);
    let mut acc = 0.0;
    for (k, b) in buf.iter().enumerate() {
        let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
        let xi = kk * dxi;
        // |f̂|² = h²/(2π)|Σ f_j e^{-iξx_j}|²; the phase from x_0 drops out.
        let w = if k == m / 2 { 0.5 } else { 1.0 };
        acc += w * xi.abs().powf(2.0 * s) * b.norm_sqr();
    }
    acc * grid.h * grid.h / (2.0 * PI) * dxi
}

/// C^∞ window: 1 on `|x| <= flat`, 0 on `|x| >= zero`.
pub fn smooth_window(grid: &Grid, flat: f64, zero: f64) -> Vec<f64> {
    grid.nodes()
        .iter()
        .map(|x| {
            let t = (x.abs() - flat) / (zero - flat);
            if t <= 0.0 {
                1.0
            } else if t >= 1.0 {
                0.0
            } else {
                let a = (-1.0 / t).exp();
                let b = (-1.0 / (1.0 - t)).exp();
                b / (a + b)
            }
        })
        .collect()
}

/// Largest DFT amplitude over `|ξ| > (2/3)π/h` relative to the peak, after
/// the window flat on `|x| <= L/4` and vanishing beyond `L/2`.
pub fn spectral_tail(values: &[Complex64], grid: &Grid) -> f64 {
    let n = grid.n;
    let l = grid.half_width;
    let win = smooth_window(grid, 0.25 * l, 0.5 * l);
    let mut buf: Vec<Complex64> = values.iter().zip(&win).map(|(z, w)| z * w).collect();
    rustfft::FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let peak = buf.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    buf.iter()
        .enumerate()
        .filter(|(k, _)| (*k).min(n - *k) > n / 3)
        .map(|(_, z)| z.norm())
        .fold(0.0, f64::max)
        / peak
}

//! Whole-line band-limited convolution kernels and their FFT application.
//!
//! A multiplier σ(ξ) acting on the band-limited interpolant of grid samples
//! becomes the Toeplitz sum `(Kf)_i = Σ_j k_{i-j} f_j` with
//! `k_m = (h/2π) ∫_{-π/h}^{π/h} σ(ξ) e^{iξmh} dξ`. No periodization is
//! involved, so algebraic tails do not wrap around. The sum is evaluated as a
//! zero-padded FFT linear convolution of length `M >= 2N`.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Grid;
use crate::error::{Error, Result};

/// Spectral operators available as Toeplitz kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    /// `iℍ`, symbol `−i sgn ξ` (the standard real-to-real Hilbert transform).
    IHilbert,
    /// `∂^k`, symbol `(iξ)^k`.
    Deriv(u32),
    /// `|D|^s`, symbol `|ξ|^s`.
    AbsD(f64),
    /// `iℍ|D|^s`, symbol `−i sgn(ξ)|ξ|^s`.
    IHilbertAbsD(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Family {
    Even,
    Odd,
}

impl Op {
    fn family(self) -> (Family, f64, f64) {
        match self {
            Op::IHilbert => (Family::Odd, 0.0, 1.0),
            Op::AbsD(s) => (Family::Even, s, 1.0),
            Op::IHilbertAbsD(s) => (Family::Odd, s, 1.0),
            Op::Deriv(k) => {
                let s = k as f64;
                match k % 4 {
                    0 => (Family::Even, s, 1.0),
                    1 => (Family::Odd, s, -1.0),
                    2 => (Family::Even, s, -1.0),
                    _ => (Family::Odd, s, 1.0),
                }
            }
        }
    }
}

/// `(∫_0^π t^s cos(mt) dt, ∫_0^π t^s sin(mt) dt)` for integer `m`.
pub(crate) fn moment_pair(s: f64, m: i64) -> (f64, f64) {
    if m == 0 {
        return (PI.powf(s + 1.0) / (s + 1.0), 0.0);
    }
    let sign = if m < 0 { -1.0 } else { 1.0 };
    let ma = m.unsigned_abs() as f64;
    let (c, sn) = if s.fract() == 0.0 && s >= 0.0 {
        integer_moments(s as u32, m.unsigned_abs())
    } else {
        fractional_moments(s, ma, m.unsigned_abs())
    };
    (c, sign * sn)
}

fn integer_moments(s: u32, m: u64) -> (f64, f64) {
    let mf = m as f64;
    let alt = if m % 2 == 0 { 1.0 } else { -1.0 };
    let mut c = 0.0;
    let mut sn = (1.0 - alt) / mf;
    for k in 1..=s {
        let kf = k as f64;
        let c_new = -(kf / mf) * sn;
        let s_new = -PI.powi(k as i32) * alt / mf + (kf / mf) * c;
        c = c_new;
        sn = s_new;
    }
    (c, sn)
}

// ∫_0^π = ∫_0^{i∞} − ∫_π^{π+i∞}, both rays decaying like e^{-mτ}.
fn fractional_moments(s: f64, mf: f64, m: u64) -> (f64, f64) {
    let gamma = statrs::function::gamma::gamma(s + 1.0);
    let phase = Complex64::from_polar(1.0, PI * (s + 1.0) / 2.0);
    let ray0 = phase * gamma / mf.powf(s + 1.0);
    let gl = GaussLegendre::new(NonZeroUsize::new(16).unwrap());
    let panels = 25;
    let width = 50.0 / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let a = p as f64 * width;
        for &(t, wt) in gl.as_node_weight_pairs() {
            let sigma = a + 0.5 * width * (t + 1.0);
            let z = Complex64::new(PI, sigma / mf);
            acc += z.powf(s) * (-sigma).exp() * (0.5 * width * wt);
        }
    }
    let alt = if m % 2 == 0 { 1.0 } else { -1.0 };
    let ray1 = Complex64::new(0.0, alt) * acc / mf;
    let j = ray0 - ray1;
    (j.re, j.im)
}

/// Spatial kernel `k_m` for `m = −(N−1)..=(N−1)`, stored with offset `N−1`.
pub fn kernel_values(op: Op, n: usize, h: f64) -> Vec<f64> {
    let (fam, s, sign) = op.family();
    let scale = sign / (PI * h.powf(s));
    let mut k = vec![0.0; 2 * n - 1];
    for idx in 0..n {
        let m = idx as i64;
        let (c, sn) = moment_pair(s, m);
        let val = match fam {
            Family::Even => c,
            Family::Odd => sn,
        } * scale;
        k[n - 1 + idx] = val;
        k[n - 1 - idx] = match fam {
            Family::Even => val,
            Family::Odd => -val,
        };
    }
    k
}

/// FFT-ready kernel for one operator on one grid.
#[derive(Clone)]
pub struct Kernel {
    pub op: Op,
    n: usize,
    pub values: Vec<f64>,
    spectrum: Vec<Complex64>,
}

impl Kernel {
    /// Matrix entry `K_{ij} = k_{i-j}`.
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.values[self.n - 1 + i - j]
    }
}

/// Toeplitz convolution engine for a fixed grid.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    pub ih: Kernel,
    pub d1: Kernel,
    pub d2: Kernel,
    pub d3: Kernel,
    pub ih_d2: Kernel,
    pub abs3: Kernel,
}

impl Spectral {
    pub fn new(grid: &Grid) -> Result<Self> {
        if grid.pad_factor < 2 {
            return Err(Error::InvalidParams(format!(
                "fft backend needs pad_factor >= 2, got {}",
                grid.pad_factor
            )));
        }
        let m = (grid.pad_factor * grid.n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let mut sp = Spectral {
            grid: *grid,
            m,
            fwd,
            inv,
            ih: dummy(),
            d1: dummy(),
            d2: dummy(),
            d3: dummy(),
            ih_d2: dummy(),
            abs3: dummy(),
        };
        sp.ih = sp.kernel(Op::IHilbert);
        sp.d1 = sp.kernel(Op::Deriv(1));
        sp.d2 = sp.kernel(Op::Deriv(2));
        sp.d3 = sp.kernel(Op::Deriv(3));
        sp.ih_d2 = sp.kernel_from(Op::IHilbertAbsD(2.0), -1.0);
        sp.abs3 = sp.kernel(Op::AbsD(3.0));
        Ok(sp)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn fft_len(&self) -> usize {
        self.m
    }

    pub fn kernel(&self, op: Op) -> Kernel {
        self.kernel_from(op, 1.0)
    }

    fn kernel_from(&self, op: Op, factor: f64) -> Kernel {
        let n = self.grid.n;
        let mut values = kernel_values(op, n, self.grid.h);
        values.iter_mut().for_each(|v| *v *= factor);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m];
        for idx in 0..n {
            buf[idx] = Complex64::new(values[n - 1 + idx], 0.0);
        }
        for idx in 1..n {
            buf[self.m - idx] = Complex64::new(values[n - 1 - idx], 0.0);
        }
        self.fwd.process(&mut buf);
        Kernel {
            op,
            n,
            values,
            spectrum: buf,
        }
    }

    /// Toeplitz product of a complex sample vector.
    pub fn apply_c(&self, k: &Kernel, f: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.n;
        assert_eq!(f.len(), n);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m];
        buf[..n].copy_from_slice(f);
        self.fwd.process(&mut buf);
        let scale = 1.0 / self.m as f64;
        for (b, s) in buf.iter_mut().zip(&k.spectrum) {
            *b *= s * scale;
        }
        self.inv.process(&mut buf);
        buf.truncate(n);
        buf
    }

    /// Toeplitz product of a real sample vector.
    pub fn apply(&self, k: &Kernel, f: &[f64]) -> Vec<f64> {
        let c: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.apply_c(k, &c).into_iter().map(|z| z.re).collect()
    }

    /// Two real products sharing one transform pair.
    pub fn apply2(&self, k: &Kernel, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let c: Vec<Complex64> = f.iter().zip(g).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let r = self.apply_c(k, &c);
        (r.iter().map(|z| z.re).collect(), r.iter().map(|z| z.im).collect())
    }
}

fn dummy() -> Kernel {
    Kernel {
        op: Op::IHilbert,
        n: 0,
        values: Vec::new(),
        spectrum: Vec::new(),
    }
}

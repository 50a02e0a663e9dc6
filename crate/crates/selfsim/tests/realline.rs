mod common;

use std::f64::consts::PI;

use common::{corpus, fourier_multiplier_even, pv_hilbert, sup_diff};
use num_complex::Complex64;
use proptest::prelude::*;
use selfsim::realline::*;
use selfsim::Error;

fn setup(l: f64, n: usize) -> (Grid, Spectral) {
    let g = Grid::new(l, n, 2).unwrap();
    let sp = Spectral::new(&g).unwrap();
    (g, sp)
}

#[test]
fn fft_and_direct_hilbert_agree_on_the_schwartz_corpus() {
    let (g, sp) = setup(50.0, 2048);
    for (name, f) in corpus() {
        let fld = Field::from_fn(g, DecayTag::SchwartzLike, |x| f(x));
        let a = ihilbert(&fld, Backend::Fft, &sp).unwrap();
        let b = ihilbert(&fld, Backend::Direct, &sp).unwrap();
        let d = sup_diff(&a.values, &b.values);
        assert!(d <= 1e-6, "{name}: fft vs direct {d:e}");
    }
}

#[test]
fn fft_hilbert_matches_principal_value_quadrature() {
    let (g, sp) = setup(50.0, 1024);
    for (name, f) in corpus() {
        let fld = Field::from_fn(g, DecayTag::SchwartzLike, |x| f(x));
        let a = ihilbert(&fld, Backend::Fft, &sp).unwrap();
        for j in (g.n / 2 - 64..g.n / 2 + 64).step_by(16) {
            let want = pv_hilbert(|x| f(x), g.x(j), 40.0);
            assert!((a.values[j] - want).abs() <= 1e-8, "{name} at x = {}: {} vs {want}", g.x(j), a.values[j]);
        }
    }
}

#[test]
fn lorentzian_hilbert_uses_the_algebraic_tail() {
    // iℍ[1/(1+x²)] = x/(1+x²)
    let (g, sp) = setup(50.0, 1024);
    let f = Field::from_fn(g, DecayTag::Algebraic(2.0), |x| 1.0 / (1.0 + x * x));
    let untagged = Field::new(g, f.values.clone(), DecayTag::SchwartzLike).unwrap();
    // 32 probes on the inner half; the last cells next to ±L carry the
    // leading-order tail model only
    let probes: Vec<usize> = (0..32).map(|k| g.n / 4 + k * (g.n / 2) / 32 + 3).collect();
    for backend in [Backend::Fft, Backend::Direct] {
        let got = ihilbert(&f, backend, &sp).unwrap();
        let plain = ihilbert(&untagged, backend, &sp).unwrap();
        let (mut d, mut d_plain) = (0.0f64, 0.0f64);
        for &j in &probes {
            let want = g.x(j) / (1.0 + g.x(j).powi(2));
            d = d.max((got.values[j] - want).abs());
            d_plain = d_plain.max((plain.values[j] - want).abs());
        }
        assert!(d <= 1e-6, "{backend:?}: {d:e}");
        assert!(d_plain > 10.0 * d, "{backend:?}: {d_plain:e} vs {d:e}");
    }
}

#[test]
fn hilbert_is_minus_i_times_ihilbert() {
    let (g, sp) = setup(20.0, 256);
    let f = Field::from_fn(g, DecayTag::SchwartzLike, |x| (-x * x).exp());
    let a = ihilbert(&f, Backend::Fft, &sp).unwrap();
    let h = hilbert(&f, Backend::Fft, &sp).unwrap();
    for (z, r) in h.values.iter().zip(&a.values) {
        assert!((z - Complex64::new(0.0, -r)).norm() == 0.0);
    }
}

#[test]
fn derivatives_of_a_gaussian() {
    let (g, sp) = setup(20.0, 512);
    let f = Field::from_fn(g, DecayTag::SchwartzLike, |x| (-x * x).exp());
    let exact: [fn(f64) -> f64; 4] = [
        |x| -2.0 * x * (-x * x).exp(),
        |x| (4.0 * x * x - 2.0) * (-x * x).exp(),
        |x| (12.0 * x - 8.0 * x.powi(3)) * (-x * x).exp(),
        |x| (16.0 * x.powi(4) - 48.0 * x * x + 12.0) * (-x * x).exp(),
    ];
    for (k, e) in exact.iter().enumerate() {
        let d = derivative(&f, k as u32 + 1, &sp).unwrap();
        let want: Vec<f64> = g.nodes().iter().map(|&x| e(x)).collect();
        let err = sup_diff(&d.values, &want);
        assert!(err <= 1e-9, "order {}: {err:e}", k + 1);
    }
    assert!(derivative(&f, 5, &sp).is_err());
    assert!(derivative(&f, 0, &sp).is_err());
}

#[test]
fn fractional_powers_match_the_fourier_integral() {
    // f = e^{-x²}, f̂ = e^{-ξ²/4}/√2; |D|f(0) = 2/√π
    let (g, sp) = setup(20.0, 512);
    let f = Field::from_fn(g, DecayTag::SchwartzLike, |x| (-x * x).exp());
    let fhat = |xi: f64| (-xi * xi / 4.0).exp() / 2f64.sqrt();
    let d1 = fractional_d(&f, 1.0, &sp).unwrap();
    assert!((d1.values[g.origin()] - 2.0 / PI.sqrt()).abs() <= 1e-10);
    for &s in &[0.5, 1.0, 1.5, 2.5, 3.0] {
        let d = fractional_d(&f, s, &sp).unwrap();
        for j in [g.origin(), g.origin() + 7, g.origin() - 20, g.origin() + 33] {
            let want = fourier_multiplier_even(fhat, s, g.x(j), 20.0);
            assert!((d.values[j] - want).abs() <= 1e-9, "s = {s}, x = {}: {} vs {want}", g.x(j), d.values[j]);
        }
    }
    let id = fractional_d(&f, 0.0, &sp).unwrap();
    assert_eq!(id.values, f.values);
    assert!(fractional_d(&f, 4.5, &sp).is_err());
}

#[test]
fn abs_d_cubed_is_minus_ihilbert_d_cubed() {
    let (g, sp) = setup(20.0, 512);
    let f = Field::from_fn(g, DecayTag::SchwartzLike, |x| (-x * x).exp() * (1.0 + x));
    let a = sp.apply(&sp.abs3, &f.values);
    let b = sp.apply(&sp.ih, &sp.apply(&sp.d3, &f.values));
    let inner: Vec<usize> = (g.n / 4..3 * g.n / 4).collect();
    let err = inner.iter().map(|&j| (a[j] + b[j]).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-9, "{err:e}");
}

#[test]
fn fractional_kernels_are_continuous_in_the_order() {
    for s in [1.0, 2.0, 3.0] {
        let a = kernel::kernel_values(Op::AbsD(s), 64, 0.1);
        let b = kernel::kernel_values(Op::AbsD(s - 1e-9), 64, 0.1);
        let scale = a.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(sup_diff(&a, &b) <= 1e-6 * scale, "s = {s}");
        let c = kernel::kernel_values(Op::IHilbertAbsD(s), 64, 0.1);
        let d = kernel::kernel_values(Op::IHilbertAbsD(s + 1e-9), 64, 0.1);
        let scale = c.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(sup_diff(&c, &d) <= 1e-6 * scale, "ih s = {s}");
    }
}

#[test]
fn gaussian_moments_and_cumulative_integral() {
    let (g, sp) = setup(20.0, 512);
    let f = Field::from_fn(g, DecayTag::SchwartzLike, |x| (-x * x).exp());
    let m2 = Field::from_fn(g, DecayTag::SchwartzLike, |x| x * x * (-x * x).exp());
    assert!((integrate(&f, &sp).unwrap() - PI.sqrt()).abs() <= 1e-13);
    assert!((integrate(&m2, &sp).unwrap() - PI.sqrt() / 2.0).abs() <= 1e-13);
    let c = cumulative_from_right(&f, &sp).unwrap();
    for j in (0..g.n).step_by(5) {
        let want = -PI.sqrt() / 2.0 * statrs::function::erf::erfc(g.x(j));
        assert!((c.values[j] - want).abs() <= 1e-10, "x = {}", g.x(j));
    }
}

#[test]
fn algebraic_tail_in_integrals() {
    let (g, sp) = setup(50.0, 1024);
    let f = Field::from_fn(g, DecayTag::Algebraic(2.0), |x| 1.0 / (1.0 + x * x));
    // the tail model f(L)·L/(p−1) is exact to O(L⁻³) per side
    let s = integrate(&f, &sp).unwrap();
    assert!((s - PI).abs() <= 2.0 / 50f64.powi(3), "{}", s - PI);
    let c = cumulative_from_right(&f, &sp).unwrap();
    for j in (g.n / 4..3 * g.n / 4).step_by(9) {
        let want = -(PI / 2.0 - g.x(j).atan());
        assert!((c.values[j] - want).abs() <= 1e-5);
    }
}

#[test]
fn homogeneous_sobolev_norms_of_a_gaussian() {
    // f = e^{-x²/2}: ‖f‖²_{Ḣ^s} = ∫|ξ|^{2s} e^{-ξ²} dξ = Γ(s + 1/2)
    let (g, _) = setup(40.0, 1024);
    let f: Vec<f64> = g.nodes().iter().map(|x| (-x * x / 2.0).exp()).collect();
    for s in [0.0, 1.0, 1.5, 3.0] {
        let got = homogeneous_sobolev_sq(&f, &g, s);
        let want = statrs::function::gamma::gamma(s + 0.5);
        // |ξ|^{2s} is not smooth at 0 for odd 2s, which limits the Riemann sum
        assert!((got - want).abs() <= 1e-7 * want, "s = {s}: {got} vs {want}");
    }
}

#[test]
fn smooth_window_and_spectral_tail() {
    let (g, _) = setup(40.0, 1024);
    let w = smooth_window(&g, 10.0, 20.0);
    assert_eq!(w[g.origin()], 1.0);
    assert_eq!(w[0], 0.0);
    assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
    let smooth: Vec<Complex64> = g.nodes().iter().map(|x| Complex64::new((-x * x).exp(), 0.0)).collect();
    assert!(spectral_tail(&smooth, &g) <= 1e-12);
    let kink: Vec<Complex64> = g.nodes().iter().map(|x| Complex64::new((-x.abs()).exp(), 0.0)).collect();
    assert!(spectral_tail(&kink, &g) > 1e-6);
}

#[test]
fn taper_is_flat_inside_and_zero_at_the_edge() {
    let (g, _) = setup(10.0, 200);
    let t = taper(&g, 0.1);
    for j in 0..g.n {
        if g.x(j).abs() <= 9.0 {
            assert_eq!(t[j], 1.0);
        }
    }
    assert!(t[0].abs() < 1e-12);
}

#[test]
fn construction_errors() {
    assert!(matches!(Grid::new(10.0, 15, 2), Err(Error::InvalidParams(_))));
    assert!(Grid::new(10.0, 8, 2).is_err());
    assert!(Grid::new(-1.0, 64, 2).is_err());
    let g = Grid::new(10.0, 64, 1).unwrap();
    assert!(Spectral::new(&g).is_err());
    let (g, sp) = setup(10.0, 64);
    assert!(matches!(Field::new(g, vec![0.0; 63], DecayTag::SchwartzLike), Err(Error::GridMismatch)));
    let mut v = vec![0.0; 64];
    v[3] = f64::NAN;
    assert!(matches!(Field::new(g, v, DecayTag::SchwartzLike), Err(Error::NonFiniteData(_))));
    let other = Grid::new(12.0, 64, 2).unwrap();
    let f = Field::from_fn(other, DecayTag::SchwartzLike, |x| (-x * x).exp());
    assert!(matches!(ihilbert(&f, Backend::Fft, &sp), Err(Error::GridMismatch)));
    let flat = Field::from_fn(g, DecayTag::BoundedNondecaying, |_| 1.0);
    assert!(matches!(integrate(&flat, &sp), Err(Error::NonDecayingInput)));
    assert!(matches!(ihilbert(&flat, Backend::Fft, &sp), Err(Error::NonDecayingInput)));
    let slow = Field::from_fn(g, DecayTag::Algebraic(1.0), |x| 1.0 / (1.0 + x.abs()));
    assert!(matches!(integrate(&slow, &sp), Err(Error::NonIntegrableTail(_))));
}

#[test]
fn refined_grid_shares_every_other_node() {
    let g = Grid::new(10.0, 64, 2).unwrap();
    let r = g.refined();
    for j in 0..g.n {
        assert!((r.x(2 * j) - g.x(j)).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kernel_entries_reproduce_apply(coef in proptest::collection::vec(-1.0f64..1.0, 32)) {
        let (_, sp) = setup(4.0, 32);
        for k in [&sp.ih, &sp.d1, &sp.d2, &sp.abs3, &sp.ih_d2] {
            let fast = sp.apply(k, &coef);
            for i in 0..32 {
                let slow: f64 = (0..32).map(|j| k.entry(i, j) * coef[j]).sum();
                prop_assert!((fast[i] - slow).abs() <= 1e-9 * (1.0 + slow.abs()));
            }
        }
    }

    #[test]
    fn ihilbert_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -2.0f64..2.0) {
        let (g, sp) = setup(20.0, 256);
        let f = Field::from_fn(g, DecayTag::SchwartzLike, |x| (-(x - c).powi(2)).exp());
        let h = Field::from_fn(g, DecayTag::SchwartzLike, |x| x * (-x * x).exp());
        let comb = Field::new(g, f.values.iter().zip(&h.values).map(|(x, y)| a * x + b * y).collect(), DecayTag::SchwartzLike).unwrap();
        let lhs = ihilbert(&comb, Backend::Fft, &sp).unwrap();
        let fa = ihilbert(&f, Backend::Fft, &sp).unwrap();
        let ha = ihilbert(&h, Backend::Fft, &sp).unwrap();
        for j in 0..g.n {
            prop_assert!((lhs.values[j] - a * fa.values[j] - b * ha.values[j]).abs() <= 1e-12);
        }
    }
}

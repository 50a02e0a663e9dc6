//! O(N²) principal-value quadrature for `iℍ`, independent of the FFT path.

use std::f64::consts::PI;

use super::Grid;

// Eighth-order central first derivative, zero extension past the ends.
fn fd8(f: &[f64], h: f64) -> Vec<f64> {
    const C: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let n = f.len() as isize;
    let at = |j: isize| if j < 0 || j >= n { 0.0 } else { f[j as usize] };
    (0..n)
        .map(|i| {
            C.iter()
                .enumerate()
                .map(|(k, c)| c * (at(i + k as isize + 1) - at(i - k as isize - 1)))
                .sum::<f64>()
                / h
        })
        .collect()
}

/// `(1/π) p.v.∫_{−L}^{L} f(y)/(x_i−y) dy` by singularity subtraction.
///
/// The smooth remainder `(f(y)−f(x))/(x−y)` is integrated by the trapezoid
/// rule over the nodes plus the virtual node `y = L` (where `f` is taken as 0),
/// with Euler–Maclaurin end terms from the decaying-`f` approximation.
pub fn direct_ihilbert(f: &[f64], grid: &Grid) -> Vec<f64> {
    let n = grid.n;
    let h = grid.h;
    let l = grid.half_width;
    let df = fd8(f, h);
    let x: Vec<f64> = grid.nodes();
    (0..n)
        .map(|i| {
            let xi = x[i];
            let fi = f[i];
            let mut s = 0.0;
            for j in 0..n {
                let g = if j == i { -df[i] } else { (f[j] - fi) / (xi - x[j]) };
                s += if j == 0 { 0.5 * g } else { g };
            }
            // virtual node y = L
            s += 0.5 * (-fi) / (xi - l);
            let mut total = h * s;
            if i != 0 {
                let e1 = |y: f64| -fi / (xi - y).powi(2);
                let e3 = |y: f64| -6.0 * fi / (xi - y).powi(4);
                total -= h * h / 12.0 * (e1(l) - e1(-l));
                total += h.powi(4) / 720.0 * (e3(l) - e3(-l));
            }
            let left = (xi + l).max(0.5 * h);
            total += fi * (left / (l - xi)).ln();
            total / PI
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::fd8;

    #[test]
    fn fd8_is_eighth_order_on_a_gaussian() {
        let err = |n: usize| {
            let h = 20.0 / n as f64;
            let x: Vec<f64> = (0..n).map(|j| -10.0 + j as f64 * h).collect();
            let f: Vec<f64> = x.iter().map(|x| (-x * x).exp()).collect();
            let d = fd8(&f, h);
            x.iter().zip(&d).map(|(x, d)| (d + 2.0 * x * (-x * x).exp()).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(200), err(400));
        assert!(e2 < 1e-6 && e1 / e2 > 150.0, "{e1:e} {e2:e}");
    }
}

//! Independent reference computations used by the test suites. Nothing here
//! calls into the library's numerical core.

use ndarray::{Array1, ArrayView1, ArrayView2};

/// 15-point Kronrod nodes on `[0, 1]` (symmetric about zero) and weights; the
/// embedded 7-point Gauss rule uses the odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7, 15) quadrature by recursive bisection.
pub fn adaptive_quad<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, abs_tol: f64, depth: usize) -> f64 {
    let (value, err) = gauss_kronrod(f, a, b);
    if err <= abs_tol.max(1e-15 * value.abs()) || depth == 0 {
        return value;
    }
    let m = 0.5 * (a + b);
    adaptive_quad(f, a, m, 0.5 * abs_tol, depth - 1) + adaptive_quad(f, m, b, 0.5 * abs_tol, depth - 1)
}

/// `log ψ(t) = −log(1 + e^{−t})`.
fn log_sigmoid(t: f64) -> f64 {
    -((-t).max(0.0) + (-t.abs()).exp().ln_1p())
}

/// Exact log marginal likelihood `log ∫ N(β; 0, γI₂) Π ψ(sᵢ zᵢᵀβ) dβ` for a
/// single frequency (`z` is `n × 2`, `sᵢ = 2yᵢ − 1`), by nested adaptive
/// quadrature over a box of half-width `12√γ`.
pub fn log_marginal_2d(z: ArrayView2<f64>, y: ArrayView1<u8>, gamma: f64) -> f64 {
    assert_eq!(z.ncols(), 2, "quadrature oracle handles one frequency");
    let signs: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let rows: Vec<(f64, f64)> = z.rows().into_iter().map(|r| (r[0], r[1])).collect();
    let half = 12.0 * gamma.sqrt();
    let log_norm = -(2.0 * std::f64::consts::PI * gamma).ln();
    let log_integrand = |b1: f64, b2: f64| -> f64 {
        let mut acc = log_norm - (b1 * b1 + b2 * b2) / (2.0 * gamma);
        for (&s, &(z1, z2)) in signs.iter().zip(&rows) {
            acc += log_sigmoid(s * (z1 * b1 + z2 * b2));
        }
        acc
    };
    // Shift by the integrand's value at the origin to keep magnitudes near one.
    let shift = log_integrand(0.0, 0.0);
    let mut outer = |b1: f64| {
        let mut inner = |b2: f64| (log_integrand(b1, b2) - shift).exp();
        adaptive_quad(&mut inner, -half, half, 1e-13, 18)
    };
    let integral = adaptive_quad(&mut outer, -half, half, 1e-12, 18);
    integral.ln() + shift
}

/// `Φ(2√2)`: accuracy of the Bayes rule for two identity-covariance Gaussians
/// centred at `±(2, 2)` with equal priors.
pub fn blobs_bayes_accuracy() -> f64 {
    // The optimal boundary is x₁ + x₂ = 0; the projected class means sit at
    // ±2√2 with unit variance, so the error is Φ(−2√2) = ½ erfc(2).
    1.0 - 0.5 * libm::erfc(2.0)
}

/// Central-difference gradient of `f` at `x`.
pub fn central_gradient<F: FnMut(ArrayView1<f64>) -> f64>(mut f: F, x: ArrayView1<f64>, h: f64) -> Array1<f64> {
    let mut probe = x.to_owned();
    Array1::from_iter((0..x.len()).map(|i| {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = f(probe.view());
        probe[i] = orig - h;
        let down = f(probe.view());
        probe[i] = orig;
        (up - down) / (2.0 * h)
    }))
}

/// Closed-form posterior for one frequency: with `P = [[a, b], [b, c]]` the
/// covariance is `[[c, −b], [−b, a]] / (ac − b²)` and `μ = Σ Zᵀv`.
pub fn posterior_2x2(z: ArrayView2<f64>, y: ArrayView1<u8>, gamma: f64, xi: ArrayView1<f64>) -> ([f64; 2], [[f64; 2]; 2]) {
    let (mut a, mut b, mut c) = (1.0 / gamma, 0.0, 1.0 / gamma);
    let (mut r1, mut r2) = (0.0, 0.0);
    for i in 0..z.nrows() {
        let t = xi[i].abs();
        let lam = if t < 1e-8 { 0.125 } else { (0.5 * t).tanh() / (4.0 * t) };
        let (z1, z2) = (z[[i, 0]], z[[i, 1]]);
        a += 2.0 * lam * z1 * z1;
        b += 2.0 * lam * z1 * z2;
        c += 2.0 * lam * z2 * z2;
        let v = f64::from(y[i]) - 0.5;
        r1 += v * z1;
        r2 += v * z2;
    }
    let det = a * c - b * b;
    let s = [[c / det, -b / det], [-b / det, a / det]];
    let mu = [s[0][0] * r1 + s[0][1] * r2, s[1][0] * r1 + s[1][1] * r2];
    (mu, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_integrates_a_gaussian() {
        let mut f = |x: f64| (-0.5 * x * x).exp();
        let v = adaptive_quad(&mut f, -12.0, 12.0, 1e-14, 30);
        assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn log_marginal_without_data_is_zero() {
        let z = ndarray::Array2::<f64>::zeros((0, 2));
        let y = Array1::<u8>::zeros(0);
        assert!(log_marginal_2d(z.view(), y.view(), 2.0).abs() < 1e-10);
    }

    #[test]
    fn single_point_marginal_is_one_half() {
        // By symmetry of the prior, ∫ N(β) ψ(zᵀβ) dβ = ½ for any z.
        let z = ndarray::array![[0.6, 0.8]];
        let v = log_marginal_2d(z.view(), ndarray::array![1u8].view(), 3.0);
        assert!((v - 0.5f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn bayes_rate() {
        assert!((blobs_bayes_accuracy() - 0.997_661_132_509_476_6).abs() < 1e-12);
    }
}

//! Seeded synthetic benchmark problems.

use ndarray::{Array1, Array2};

use super::Dataset;
use crate::rng::SeededRng;

fn build(x: Array2<f64>, y: Vec<u8>) -> Dataset {
    Dataset::new(x, Array1::from(y), None).expect("generators emit finite binary data")
}

/// Two unit-covariance Gaussians in 2-D centred at `(-2, -2)` (class 0) and
/// `(2, 2)` (class 1), alternating labels.
pub fn two_blobs(n: usize, seed: u64) -> Dataset {
    let mut rng = SeededRng::new(seed);
    let mut x = Array2::zeros((n, 2));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as u8;
        let c = if label == 1 { 2.0 } else { -2.0 };
        x[[i, 0]] = c + rng.normal();
        x[[i, 1]] = c + rng.normal();
        y.push(label);
    }
    build(x, y)
}

/// Concentric rings: radius 1 for class 0, radius 3 for class 1, with
/// Gaussian radial jitter of standard deviation `0.25`.
pub fn annulus(n: usize, seed: u64) -> Dataset {
    let mut rng = SeededRng::new(seed);
    let mut x = Array2::zeros((n, 2));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as u8;
        let radius = if label == 1 { 3.0 } else { 1.0 } + 0.25 * rng.normal();
        let angle = std::f64::consts::TAU * rng.uniform();
        x[[i, 0]] = radius * angle.cos();
        x[[i, 1]] = radius * angle.sin();
        y.push(label);
    }
    build(x, y)
}

/// Standard-normal inputs in `dim` dimensions whose class depends only on the
/// first two coordinates: class 1 inside the disc `x₀² + x₁² < 2 ln 2` (the
/// median radius), class 0 outside. Each label is then flipped with
/// probability `flip`.
pub fn anisotropic(n: usize, dim: usize, flip: f64, seed: u64) -> Dataset {
    assert!(dim >= 2, "anisotropic problem needs at least two dimensions");
    let mut rng = SeededRng::new(seed);
    let x = rng.normal_matrix(n, dim);
    let threshold = 2.0 * std::f64::consts::LN_2;
    let y = x
        .rows()
        .into_iter()
        .map(|r| {
            let inside = r[0] * r[0] + r[1] * r[1] < threshold;
            let flipped = rng.uniform() < flip;
            u8::from(inside != flipped)
        })
        .collect();
    build(x, y)
}

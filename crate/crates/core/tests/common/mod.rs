#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rffgpc::rng::SeededRng;
use rffgpc::FrequencyBasis;

/// Random small problem: inputs, labels with both classes, a basis and σ.
pub struct Instance {
    pub x: Array2<f64>,
    pub y: Array1<u8>,
    pub basis: FrequencyBasis,
    pub sigma: f64,
    pub gamma: f64,
}

pub fn instance(n: usize, d: usize, num_freqs: usize, seed: u64) -> Instance {
    let mut rng = SeededRng::new(seed);
    let x = rng.normal_matrix(n, d);
    let mut y = Array1::from_iter((0..n).map(|_| u8::from(rng.uniform() < 0.5)));
    y[0] = 0;
    if n > 1 {
        y[1] = 1;
    }
    let basis = FrequencyBasis::sample(num_freqs, d, seed.wrapping_add(1000)).unwrap();
    let sigma = 0.5 + 1.5 * rng.uniform();
    let gamma = 0.3 + 3.0 * rng.uniform();
    Instance { x, y, basis, sigma, gamma }
}

/// `|a − n| / max(|a|, |n|, floor)` over all coordinates.
pub fn max_rel_err(analytic: &Array1<f64>, numeric: &Array1<f64>, floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

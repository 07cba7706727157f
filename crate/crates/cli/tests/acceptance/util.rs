use ndarray::{Array1, Array2};
use rffgpc::data::overall_accuracy;
use rffgpc::rng::SeededRng;
use rffgpc::{Dataset, FrequencyBasis, TrainTrace, TrainedModel};

/// State shared between criteria.
#[derive(Default)]
pub struct Ctx {
    /// Every training trace produced so far, labeled by run.
    pub traces: Vec<(String, TrainTrace)>,
}

pub fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn within(secs: f64, limit: f64, what: &str) -> Result<(), String> {
    ensure(secs < limit, || format!("{what} took {secs:.1} s, limit {limit} s"))
}

pub fn oa(model: &TrainedModel, data: &Dataset) -> f64 {
    let pred = model.predict_label(data.x.view(), 0.5).expect("prediction");
    overall_accuracy(pred.view(), data.y.view()).expect("accuracy")
}

/// Small random classification problem with both classes present.
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
    let basis = FrequencyBasis::sample(num_freqs, d, seed.wrapping_add(7919)).expect("basis");
    let sigma = 0.5 + 1.5 * rng.uniform();
    let gamma = 0.3 + 3.0 * rng.uniform();
    Instance { x, y, basis, sigma, gamma }
}

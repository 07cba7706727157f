//! Alternating optimization of the local bound parameters `ξ` and the
//! hyperparameters (frequencies or length-scale, and `γ`).

use std::time::Instant;

use log::{debug, warn};
use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TransformSpec};
use crate::error::{Error, Result};
use crate::features::{FrequencyBasis, FrequencyMode};
use crate::linalg::blocked_sum;
use crate::model::{TrainMeta, TrainedModel};
use crate::optim::{cg_minimize, OptimStatus, OptimizerConfig};
use crate::rng::SeededRng;
use crate::variational::{
    compute_posterior, log_bound, split_vff_theta, update_xi, vff_theta, EvidenceObjective, Mode,
};

/// Stream offset so the σ subset draw does not share a generator with `W`.
const SUBSET_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: Mode,
    pub num_freqs: usize,
    pub seed: u64,
    pub max_outer_iters: usize,
    /// Stop when `|Δ log F| ≤ rel_tol · |log F|`.
    pub rel_tol: f64,
    /// Rows used for the mean-distance length-scale initialization.
    pub median_subset: usize,
    pub optimizer: OptimizerConfig,
    /// Adds `−½‖V‖²` to the VFF objective.
    pub ridge_on_v: bool,
}

impl TrainConfig {
    pub fn new(mode: Mode, num_freqs: usize, seed: u64) -> Self {
        Self {
            mode,
            num_freqs,
            seed,
            max_outer_iters: 50,
            rel_tol: 1e-5,
            median_subset: 1000,
            optimizer: OptimizerConfig::default(),
            ridge_on_v: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_freqs == 0 {
            return Err(Error::domain("number of frequencies must be at least 1"));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::domain("max_outer_iters must be at least 1"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::domain(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.median_subset < 2 {
            return Err(Error::domain("median_subset must be at least 2"));
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 0 is the initialization, before any update.
    pub iteration: usize,
    /// Bound value (penalized by `¼‖V‖²` when the ridge is on).
    pub log_f: f64,
    /// σ in RFF mode, `‖V‖_F` in VFF mode.
    pub scale: f64,
    pub gamma: f64,
    pub elapsed_seconds: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainStatus {
    Converged,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<IterationRecord>,
    pub status: TrainStatus,
    /// The training labels contain one class only.
    pub single_class: bool,
    /// The σ initialization found coincident points and fell back to 1.
    pub sigma_fallback: bool,
}

impl TrainTrace {
    pub fn log_f(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.log_f).collect()
    }

    pub fn outer_iters(&self) -> usize {
        self.records.last().map_or(0, |r| r.iteration)
    }

    /// True when every step satisfies `log F_k ≥ log F_{k−1} − slack·|log F_{k−1}|`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].log_f >= w[0].log_f - slack * w[0].log_f.abs())
    }
}

/// Mean pairwise Euclidean distance among `min(subset_size, n)` rows drawn
/// without replacement. Returns `(σ, fell_back)`; when every drawn row
/// coincides the result is `(1.0, true)`.
pub fn init_sigma(x: ArrayView2<f64>, subset_size: usize, seed: u64) -> Result<(f64, bool)> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::domain(format!("need at least two rows, got {n}")));
    }
    if subset_size < 2 {
        return Err(Error::domain("subset must hold at least two rows"));
    }
    let m = subset_size.min(n);
    let mut rows = SeededRng::new(seed).sample_indices(n, m);
    rows.sort_unstable();
    let sub = x.select(ndarray::Axis(0), &rows);
    let total = blocked_sum(m, 0.0f64, |range| {
        let mut acc = 0.0;
        for i in range {
            let xi = sub.row(i);
            for j in (i + 1)..m {
                let d2: f64 = xi.iter().zip(sub.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                acc += d2.sqrt();
            }
        }
        acc
    });
    let pairs = (m * (m - 1) / 2) as f64;
    let mean = total / pairs;
    if mean > 0.0 && mean.is_finite() {
        Ok((mean, false))
    } else {
        warn!("all subset rows coincide; length-scale initialized to 1");
        Ok((1.0, true))
    }
}

fn training_error(iteration: usize, source: Error) -> Error {
    match source {
        e @ Error::Training { .. } => e,
        e => Error::Training {
            iteration,
            source: Box::new(e),
        },
    }
}

/// Rows sorted lexicographically by features, then label. Training on this
/// order makes the fitted model independent of the input row order, down to
/// the last bit.
pub fn canonical_order(dataset: &Dataset) -> Vec<usize> {
    let (x, y) = (&dataset.x, &dataset.y);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.sort_by(|&a, &b| {
        x.row(a)
            .iter()
            .zip(x.row(b))
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| y[a].cmp(&y[b]))
    });
    order
}

/// Run the alternating scheme on `dataset` (inputs used as given; attach a
/// preprocessing transform to the returned model separately).
pub fn fit(dataset: &Dataset, config: &TrainConfig) -> Result<(TrainedModel, TrainTrace)> {
    config.validate()?;
    let sorted = dataset.select(&canonical_order(dataset));
    let dataset = &sorted;
    let (x, y) = (dataset.x.view(), dataset.y.view());
    let (n, d) = (dataset.len(), dataset.dim());
    if n < 2 {
        return Err(Error::domain(format!("need at least two training rows, got {n}")));
    }
    if d == 0 {
        return Err(Error::domain("training data has no feature columns"));
    }
    let (c0, c1) = dataset.class_counts();
    let single_class = c0 == 0 || c1 == 0;
    if single_class {
        warn!("training labels contain a single class");
    }

    let start = Instant::now();
    let (sigma_init, sigma_fallback) = init_sigma(x, config.median_subset, config.seed ^ SUBSET_STREAM)?;
    let basis = FrequencyBasis::sample(config.num_freqs, d, config.seed)?;
    let nf = config.num_freqs;
    let mut xi = Array1::<f64>::ones(n);
    let mut theta = match config.mode {
        Mode::Rff => Array1::from(vec![sigma_init.ln(), 0.0]),
        Mode::Vff => vff_theta((&basis.weights() / sigma_init).view(), 1.0),
    };

    let ridge = config.ridge_on_v && config.mode == Mode::Vff;
    // Current features, γ and the bound (penalized when the ridge is on).
    let state = |theta: &Array1<f64>, xi: &Array1<f64>| -> Result<(ndarray::Array2<f64>, f64, f64, f64)> {
        let (z, gamma, scale, penalty) = match config.mode {
            Mode::Rff => {
                let sigma = theta[0].exp();
                (basis.project(x, sigma)?, theta[1].exp(), sigma, 0.0)
            }
            Mode::Vff => {
                let (v, gamma) = split_vff_theta(theta.view(), nf);
                let vb = FrequencyBasis::from_matrix(v, FrequencyMode::Learnable, config.seed)?;
                let norm_sq = vb.weights().iter().map(|w| w * w).sum::<f64>();
                let penalty = if ridge { 0.25 * norm_sq } else { 0.0 };
                (vb.project(x, 1.0)?, gamma, norm_sq.sqrt(), penalty)
            }
        };
        let log_f = log_bound(z.view(), y, gamma, xi.view())?.log_f - penalty;
        Ok((z, gamma, scale, log_f))
    };

    let (mut z, mut gamma, scale, mut log_f) = state(&theta, &xi).map_err(|e| training_error(0, e))?;
    let mut records = vec![IterationRecord {
        iteration: 0,
        log_f,
        scale,
        gamma,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        evals: 0,
    }];
    let mut objective = match config.mode {
        Mode::Rff => EvidenceObjective::rff(x, y, xi.view(), &basis)?,
        Mode::Vff => EvidenceObjective::vff(x, y, xi.view(), nf, ridge)?,
    };

    let mut status = TrainStatus::BudgetExhausted;
    for iteration in 1..=config.max_outer_iters {
        let mut step = || -> Result<(Array1<f64>, Array1<f64>, usize)> {
            let posterior = compute_posterior(z.view(), y, gamma, xi.view())?;
            let new_xi = update_xi(z.view(), &posterior);
            objective.set_xi(new_xi.view())?;
            let mut last_error = None;
            let result = cg_minimize(
                |t| match objective.evaluate(t) {
                    Ok(fg) => fg,
                    Err(e) => {
                        last_error = Some(e);
                        (f64::INFINITY, Array1::from_elem(t.len(), f64::NAN))
                    }
                },
                theta.view(),
                &config.optimizer,
            );
            let result = match (result, last_error) {
                (Ok(r), _) => r,
                (Err(_), Some(e)) => return Err(e),
                (Err(e), None) => return Err(e),
            };
            if result.status == OptimStatus::LineSearchFailed {
                debug!("line search stalled at outer iteration {iteration}");
            }
            Ok((result.x, new_xi, result.evals))
        };
        let (new_theta, new_xi, evals) = step().map_err(|e| training_error(iteration, e))?;
        theta = new_theta;
        xi = new_xi;
        let (new_z, new_gamma, scale, new_log_f) =
            state(&theta, &xi).map_err(|e| training_error(iteration, e))?;
        z = new_z;
        gamma = new_gamma;
        records.push(IterationRecord {
            iteration,
            log_f: new_log_f,
            scale,
            gamma,
            elapsed_seconds: start.elapsed().as_secs_f64(),
            evals,
        });
        debug!("outer iteration {iteration}: log F = {new_log_f}, gamma = {gamma}, scale = {scale}");
        let change = (new_log_f - log_f).abs();
        log_f = new_log_f;
        if change <= config.rel_tol * log_f.abs() {
            status = TrainStatus::Converged;
            break;
        }
    }
    drop(objective);

    let outer_iters = records.last().map_or(0, |r| r.iteration);
    let posterior = compute_posterior(z.view(), y, gamma, xi.view()).map_err(|e| training_error(outer_iters, e))?;
    let (model_basis, sigma) = match config.mode {
        Mode::Rff => (basis, theta[0].exp()),
        Mode::Vff => {
            let (v, _) = split_vff_theta(theta.view(), nf);
            (FrequencyBasis::from_matrix(v, FrequencyMode::Learnable, config.seed)?, 1.0)
        }
    };
    let meta = TrainMeta {
        n_train: n,
        d,
        seed: config.seed,
        outer_iters,
        final_log_f: log_f,
        sigma_init,
    };
    let model = TrainedModel::new(
        config.mode,
        model_basis,
        sigma,
        gamma,
        posterior.mu,
        posterior.sigma,
        TransformSpec::identity(d),
        meta,
    )?;
    let trace = TrainTrace {
        records,
        status,
        single_class,
        sigma_fallback,
    };
    Ok((model, trace))
}

//! Gaussian-process binary classification with Fourier feature expansions.
//!
//! The squared-exponential kernel is replaced by `D` cos/sin feature pairs,
//! either on fixed random frequencies (RFF) or on frequencies optimized
//! jointly with the prior scale (VFF). The logistic likelihood is handled with
//! a local quadratic lower bound, which keeps the weight posterior Gaussian
//! and makes training cost `O(nD² + D³)` per iteration.

pub mod data;
pub mod error;
pub mod features;
pub mod linalg;
pub mod model;
pub mod optim;
pub mod rng;
pub mod trainer;
pub mod variational;

#[cfg(any(test, feature = "oracles"))]
pub mod oracles;

pub use data::{Dataset, TransformSpec};
pub use error::{Error, Result};
pub use features::{approx_kernel, se_kernel, FrequencyBasis, FrequencyMode};
pub use model::TrainedModel;
pub use optim::{cg_minimize, OptimizerConfig};
pub use trainer::{fit, TrainConfig, TrainTrace};
pub use variational::{compute_posterior, log_bound, update_xi, Mode, WeightPosterior};

//! Frozen classifier, the predictive probability and the model file format.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::data::{TransformKind, TransformSpec};
use crate::error::{Error, Result};
use crate::features::{FrequencyBasis, FrequencyMode};
use crate::linalg::{row_quadratic_forms, Cholesky};
use crate::variational::{sigmoid, Mode};

pub const FORMAT_VERSION: u64 = 1;

/// Largest probability below one that keeps `1 − p` exact and positive.
const P_MAX: f64 = 1.0 - f64::EPSILON / 2.0;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub n_train: usize,
    pub d: usize,
    pub seed: u64,
    pub outer_iters: usize,
    pub final_log_f: f64,
    /// Mean-distance initialization of σ, kept for provenance.
    pub sigma_init: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub format_version: u64,
    pub mode: Mode,
    /// `W` in RFF mode; the learned `V` (σ absorbed) in VFF mode.
    pub basis: FrequencyBasis,
    /// RFF length-scale; 1 in VFF mode.
    pub sigma: f64,
    pub gamma: f64,
    pub mu: Array1<f64>,
    pub sigma_matrix: Array2<f64>,
    pub preprocessing: TransformSpec,
    pub train_meta: TrainMeta,
}

/// `ψ(zᵀμ / sqrt(1 + π/8 · zᵀΣz))` per row, clamped inside `(0, 1)`.
pub fn predictive_probability(z: ArrayView2<f64>, mu: ArrayView1<f64>, sigma: ArrayView2<f64>) -> Array1<f64> {
    let mean = z.dot(&mu);
    let var = row_quadratic_forms(z, sigma);
    Zip::from(&mean).and(&var).par_map_collect(|&m, &v| {
        let scale = (1.0 + std::f64::consts::PI / 8.0 * v.max(0.0)).sqrt();
        sigmoid(m / scale).clamp(f64::MIN_POSITIVE, P_MAX)
    })
}

impl TrainedModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mode: Mode,
        basis: FrequencyBasis,
        sigma: f64,
        gamma: f64,
        mu: Array1<f64>,
        sigma_matrix: Array2<f64>,
        preprocessing: TransformSpec,
        train_meta: TrainMeta,
    ) -> Result<Self> {
        let model = Self {
            format_version: FORMAT_VERSION,
            mode,
            basis,
            sigma,
            gamma,
            mu,
            sigma_matrix,
            preprocessing,
            train_meta,
        };
        model.validate().map_err(|e| match e {
            Error::CorruptModel(msg) => Error::domain(msg),
            other => other,
        })?;
        Ok(model)
    }

    /// Replace the input transform; its output must match the basis input
    /// dimension.
    pub fn with_preprocessing(mut self, spec: TransformSpec) -> Result<Self> {
        spec.validate()?;
        if spec.output_dim() != self.basis.dim() {
            return Err(Error::domain(format!(
                "transform produces {} columns but the model expects {}",
                spec.output_dim(),
                self.basis.dim()
            )));
        }
        self.preprocessing = spec;
        Ok(self)
    }

    pub fn num_freqs(&self) -> usize {
        self.basis.num_freqs()
    }

    /// Raw input dimension (before preprocessing).
    pub fn input_dim(&self) -> usize {
        self.preprocessing.input_dim()
    }

    /// Features of raw inputs.
    pub fn features(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::domain(format!(
                "data has {} columns but the model expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        let xt = self.preprocessing.apply(x)?;
        self.basis.project(xt.view(), self.sigma)
    }

    /// Probability of class 1 for each row. `O(D² + Dd)` per row.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        let z = self.features(x)?;
        Ok(predictive_probability(z.view(), self.mu.view(), self.sigma_matrix.view()))
    }

    /// Label 1 when the probability is at least `threshold`.
    pub fn predict_label(&self, x: ArrayView2<f64>, threshold: f64) -> Result<Array1<u8>> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::domain(format!("threshold must lie in (0, 1), got {threshold}")));
        }
        Ok(self.predict_proba(x)?.mapv(|p| u8::from(p >= threshold)))
    }

    fn validate(&self) -> Result<()> {
        let corrupt = |m: String| Err(Error::CorruptModel(m));
        let m = 2 * self.basis.num_freqs();
        if self.mu.len() != m {
            return corrupt(format!("mu has {} entries, expected {m}", self.mu.len()));
        }
        if self.sigma_matrix.dim() != (m, m) {
            return corrupt(format!(
                "sigma_matrix is {:?}, expected {m}x{m}",
                self.sigma_matrix.dim()
            ));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) || !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return corrupt(format!("sigma {} and gamma {} must be positive", self.sigma, self.gamma));
        }
        if self.mu.iter().chain(self.sigma_matrix.iter()).any(|v| !v.is_finite()) {
            return corrupt("non-finite posterior entry".into());
        }
        let s = &self.sigma_matrix;
        let scale = s.diag().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..m {
            for j in 0..i {
                if (s[[i, j]] - s[[j, i]]).abs() > SYMMETRY_TOL * scale {
                    return corrupt(format!("sigma_matrix is not symmetric at ({i}, {j})"));
                }
            }
        }
        if let Err(e) = Cholesky::factor(s.view()) {
            return corrupt(format!("sigma_matrix is not positive definite: {e}"));
        }
        if let Err(e) = self.preprocessing.validate() {
            return corrupt(format!("preprocessing: {e}"));
        }
        if self.preprocessing.output_dim() != self.basis.dim() {
            return corrupt(format!(
                "preprocessing outputs {} columns but the basis expects {}",
                self.preprocessing.output_dim(),
                self.basis.dim()
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Document::from_model(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::CorruptModel("missing or invalid format_version".into()))?;
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        let doc: Document = serde_json::from_value(value).map_err(|e| Error::CorruptModel(e.to_string()))?;
        doc.into_model()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct Dims {
    n_train: usize,
    d: usize,
    #[serde(rename = "D")]
    num_freqs: usize,
}

#[derive(Serialize, Deserialize)]
struct PreprocessingDoc {
    kind: TransformKind,
    means: Vec<f64>,
    stds: Vec<f64>,
    /// Row-major `k × d`.
    pca_components: Option<Vec<f64>>,
    k: Option<usize>,
}

/// On-disk layout: every matrix is a flat row-major array, shapes come from
/// `dims` and `preprocessing.k`.
#[derive(Serialize, Deserialize)]
struct Document {
    format_version: u64,
    mode: Mode,
    dims: Dims,
    basis: Vec<f64>,
    basis_seed: u64,
    sigma: f64,
    gamma: f64,
    mu: Vec<f64>,
    sigma_matrix: Vec<f64>,
    preprocessing: PreprocessingDoc,
    train_meta: TrainMeta,
}

fn flat(a: ArrayView2<f64>) -> Vec<f64> {
    a.iter().copied().collect()
}

fn shaped(data: Vec<f64>, rows: usize, cols: usize, what: &str) -> Result<Array2<f64>> {
    Array2::from_shape_vec((rows, cols), data)
        .map_err(|_| Error::CorruptModel(format!("{what} does not have {rows}x{cols} entries")))
}

impl Document {
    fn from_model(m: &TrainedModel) -> Self {
        let p = &m.preprocessing;
        Self {
            format_version: m.format_version,
            mode: m.mode,
            dims: Dims {
                n_train: m.train_meta.n_train,
                d: m.basis.dim(),
                num_freqs: m.basis.num_freqs(),
            },
            basis: flat(m.basis.weights()),
            basis_seed: m.basis.seed(),
            sigma: m.sigma,
            gamma: m.gamma,
            mu: m.mu.to_vec(),
            sigma_matrix: flat(m.sigma_matrix.view()),
            preprocessing: PreprocessingDoc {
                kind: p.kind,
                means: p.means.to_vec(),
                stds: p.stds.to_vec(),
                pca_components: p.pca_components.as_ref().map(|c| flat(c.view())),
                k: p.k(),
            },
            train_meta: m.train_meta.clone(),
        }
    }

    fn into_model(self) -> Result<TrainedModel> {
        let Dims { d, num_freqs, n_train } = self.dims;
        if num_freqs == 0 || d == 0 {
            return Err(Error::CorruptModel("dims must be positive".into()));
        }
        if n_train != self.train_meta.n_train {
            return Err(Error::CorruptModel("dims.n_train disagrees with train_meta".into()));
        }
        let weights = shaped(self.basis, num_freqs, d, "basis")?;
        let mode = match self.mode {
            Mode::Rff => FrequencyMode::FixedRandom,
            Mode::Vff => FrequencyMode::Learnable,
        };
        let basis = FrequencyBasis::from_matrix(weights, mode, self.basis_seed)
            .map_err(|e| Error::CorruptModel(format!("basis: {e}")))?;
        let m = 2 * num_freqs;
        if self.mu.len() != m {
            return Err(Error::CorruptModel(format!("mu has {} entries, expected {m}", self.mu.len())));
        }
        let sigma_matrix = shaped(self.sigma_matrix, m, m, "sigma_matrix")?;
        let p = self.preprocessing;
        let input_dim = p.means.len();
        if p.stds.len() != input_dim {
            return Err(Error::CorruptModel("preprocessing means and stds differ in length".into()));
        }
        let pca_components = match (p.pca_components, p.k) {
            (Some(c), Some(k)) => Some(shaped(c, k, input_dim, "pca_components")?),
            (None, None) => None,
            _ => return Err(Error::CorruptModel("pca_components and k must appear together".into())),
        };
        let preprocessing = TransformSpec {
            kind: p.kind,
            means: Array1::from(p.means),
            stds: Array1::from(p.stds),
            pca_components,
        };
        let model = TrainedModel {
            format_version: self.format_version,
            mode: self.mode,
            basis,
            sigma: self.sigma,
            gamma: self.gamma,
            mu: Array1::from(self.mu),
            sigma_matrix,
            preprocessing,
            train_meta: self.train_meta,
        };
        model.validate()?;
        Ok(model)
    }
}

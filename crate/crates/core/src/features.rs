//! Fourier frequency bases and the cos/sin feature map.
//!
//! A sample `x` is mapped to
//! `z(x) = D^{-1/2} (cos(w₁ᵀx/σ), sin(w₁ᵀx/σ), …, cos(w_Dᵀx/σ), sin(w_Dᵀx/σ))`
//! so the layout is interleaved: columns `2j` and `2j + 1` hold the cosine and
//! sine of frequency `j`. Serialized weight vectors depend on this layout.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// `n × 2D` projected-data matrix.
pub type FeatureMatrix = Array2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyMode {
    /// Drawn once from `N(0, I)` and frozen.
    FixedRandom,
    /// Optimized jointly with the hyperparameters.
    Learnable,
}

/// `D × d` matrix of Fourier frequencies, one frequency per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyBasis {
    weights: Array2<f64>,
    mode: FrequencyMode,
    seed: u64,
}

impl FrequencyBasis {
    /// Draw `num_freqs × dim` i.i.d. standard normals from the seeded stream.
    pub fn sample(num_freqs: usize, dim: usize, seed: u64) -> Result<Self> {
        if num_freqs == 0 || dim == 0 {
            return Err(Error::domain(format!(
                "frequency basis needs D >= 1 and d >= 1 (got D={num_freqs}, d={dim})"
            )));
        }
        let weights = SeededRng::new(seed).normal_matrix(num_freqs, dim);
        Ok(Self {
            weights,
            mode: FrequencyMode::FixedRandom,
            seed,
        })
    }

    pub fn from_matrix(weights: Array2<f64>, mode: FrequencyMode, seed: u64) -> Result<Self> {
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::domain("frequency basis must be non-empty"));
        }
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("frequency basis has non-finite entries"));
        }
        Ok(Self {
            weights,
            mode,
            seed,
        })
    }

    pub fn num_freqs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    /// Width of the feature map, `2D`.
    pub fn feature_dim(&self) -> usize {
        2 * self.num_freqs()
    }

    pub fn weights(&self) -> ArrayView2<'_, f64> {
        self.weights.view()
    }

    pub fn mode(&self) -> FrequencyMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Feature matrix `Z` for the rows of `x` at length-scale `sigma`.
    pub fn project(&self, x: ArrayView2<f64>, sigma: f64) -> Result<FeatureMatrix> {
        let mut phases = Array2::zeros((0, 0));
        let mut z = Array2::zeros((0, 0));
        self.project_into(x, sigma, &mut phases, &mut z)?;
        Ok(z)
    }

    /// [`project`](Self::project) writing into caller-owned buffers, which are
    /// resized only when their shape is wrong. `phases` receives `X Wᵀ / σ`.
    pub fn project_into(
        &self,
        x: ArrayView2<f64>,
        sigma: f64,
        phases: &mut Array2<f64>,
        z: &mut Array2<f64>,
    ) -> Result<()> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain(format!("length-scale must be positive, got {sigma}")));
        }
        if x.ncols() != self.dim() {
            return Err(Error::domain(format!(
                "input has {} columns but the frequency basis expects {}",
                x.ncols(),
                self.dim()
            )));
        }
        let (n, nf) = (x.nrows(), self.num_freqs());
        if phases.dim() != (n, nf) {
            *phases = Array2::zeros((n, nf));
        }
        if z.dim() != (n, 2 * nf) {
            *z = Array2::zeros((n, 2 * nf));
        }
        ndarray::linalg::general_mat_mul(1.0, &x, &self.weights.t(), 0.0, phases);
        phases.mapv_inplace(|a| a / sigma);
        fill_features(phases.view(), z);
        Ok(())
    }
}

/// Fill `z` (`n × 2D`) from phases (`n × D`) in the interleaved layout.
pub(crate) fn fill_features(phases: ArrayView2<f64>, z: &mut Array2<f64>) {
    let scale = 1.0 / (phases.ncols() as f64).sqrt();
    Zip::from(z.rows_mut())
        .and(phases.rows())
        .par_for_each(|mut zr, pr| {
            for (j, &a) in pr.iter().enumerate() {
                let (s, c) = a.sin_cos();
                zr[2 * j] = scale * c;
                zr[2 * j + 1] = scale * s;
            }
        });
}

fn check_pair(x: ArrayView1<f64>, x2: ArrayView1<f64>, sigma: f64, gamma: f64) -> Result<()> {
    if x.len() != x2.len() {
        return Err(Error::domain(format!(
            "kernel arguments differ in dimension ({} vs {})",
            x.len(),
            x2.len()
        )));
    }
    if !(sigma > 0.0) || !(gamma > 0.0) {
        return Err(Error::domain(format!(
            "kernel needs sigma > 0 and gamma > 0 (got {sigma}, {gamma})"
        )));
    }
    Ok(())
}

/// Exact squared-exponential kernel `γ exp(-‖x − x₂‖² / 2σ²)`.
pub fn se_kernel(x: ArrayView1<f64>, x2: ArrayView1<f64>, sigma: f64, gamma: f64) -> Result<f64> {
    check_pair(x, x2, sigma, gamma)?;
    let sq: f64 = x.iter().zip(x2.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(gamma * (-sq / (2.0 * sigma * sigma)).exp())
}

/// Linear-kernel approximation `γ z(x)ᵀ z(x₂)`. Diagnostic only; training works
/// on `Z` directly and never materializes a kernel matrix.
pub fn approx_kernel(
    x: ArrayView1<f64>,
    x2: ArrayView1<f64>,
    basis: &FrequencyBasis,
    sigma: f64,
    gamma: f64,
) -> Result<f64> {
    check_pair(x, x2, sigma, gamma)?;
    let za = basis.project(x.insert_axis(Axis(0)), sigma)?;
    let zb = basis.project(x2.insert_axis(Axis(0)), sigma)?;
    Ok(gamma * za.row(0).dot(&zb.row(0)))
}

/// Squared row norms; each equals 1 up to rounding for a valid feature matrix.
pub fn row_norms_squared(z: ArrayView2<f64>) -> Array1<f64> {
    z.map_axis(Axis(1), |r| r.dot(&r))
}

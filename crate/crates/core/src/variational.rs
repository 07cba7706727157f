//! Variational treatment of the logistic likelihood.
//!
//! Each factor `log(1 + eˣ)` is bounded above by a quadratic in `x`
//! parameterized by a local variational parameter `ξ`, which makes the bound on
//! `p(y | β)` conjugate with the Gaussian prior `β ~ N(0, γI)`. With
//! `Λ = diag(λ(ξᵢ))` and `v = y − ½`:
//!
//! * precision `P = 2 ZᵀΛZ + γ⁻¹ I`, covariance `Σ = P⁻¹`, mean `μ = Σ Zᵀ v`;
//! * `log F = log C(ξ) + ½ log|γ⁻¹Σ| + ½ μᵀΣ⁻¹μ`;
//! * the hyperparameter objective `−log|2γZᵀΛZ + I| + vᵀZ P⁻¹ Zᵀv`, which
//!   equals `2 (log F − log C)`.
//!
//! Nothing here forms an `n × n` matrix; every product over training rows goes
//! through the blocked reductions in [`crate::linalg`].

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{fill_features, FrequencyBasis};
use crate::linalg::{blocked_sum, row_quadratic_forms, transpose_times, weighted_gram, Cholesky};

/// Below this magnitude `λ(ξ)` returns its limit `1/8`.
pub const LAMBDA_SMALL_XI: f64 = 1e-8;

/// Which hyperparameters the evidence objective is optimized over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Frozen random frequencies; optimizes `(log σ, log γ)`.
    Rff,
    /// Learned frequencies; optimizes `(V, log γ)` with `V = W / σ`.
    Vff,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Rff => "rff",
            Mode::Vff => "vff",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rff" => Ok(Mode::Rff),
            "vff" => Ok(Mode::Vff),
            other => Err(Error::domain(format!("unknown mode {other:?} (expected rff or vff)"))),
        }
    }
}

/// Logistic function, evaluated without overflow.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + eˣ)` as `max(x, 0) + log1p(e^{−|x|})`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `λ(ξ) = (ψ(ξ) − ½) / 2ξ`, evaluated as `tanh(|ξ|/2) / 4|ξ|`; even in `ξ`,
/// with value `1/8` at the origin.
pub fn lambda_of_xi(xi: f64) -> f64 {
    let a = xi.abs();
    if a < LAMBDA_SMALL_XI {
        0.125
    } else {
        (0.5 * a).tanh() / (4.0 * a)
    }
}

/// Right-hand side of `log(1 + eˣ) ≤ λ(ξ)(x² − ξ²) + (x − ξ)/2 + log(1 + e^ξ)`.
pub fn sigmoid_bound_rhs(x: f64, xi: f64) -> f64 {
    lambda_of_xi(xi) * (x * x - xi * xi) + 0.5 * (x - xi) + softplus(xi)
}

/// `log C(ξ) = Σᵢ λ(ξᵢ)ξᵢ² + ξᵢ/2 − log(1 + e^{ξᵢ})`.
pub fn log_c(xi: ArrayView1<f64>) -> f64 {
    xi.iter()
        .map(|&x| lambda_of_xi(x) * x * x + 0.5 * x - softplus(x))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub sigma: f64,
    pub gamma: f64,
    pub xi: Array1<f64>,
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be positive, got {}", self.sigma)));
        }
        check_gamma(self.gamma)?;
        check_xi(self.xi.view())
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("gamma must be positive and finite, got {gamma}")))
    }
}

fn check_xi(xi: ArrayView1<f64>) -> Result<()> {
    match xi.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        None => Ok(()),
        Some(i) => Err(Error::domain(format!("xi[{i}] = {} is not positive", xi[i]))),
    }
}

fn check_shapes(z: ArrayView2<f64>, y: ArrayView1<u8>, xi: ArrayView1<f64>) -> Result<()> {
    if z.nrows() != y.len() || z.nrows() != xi.len() {
        return Err(Error::domain(format!(
            "Z has {} rows but y has {} and xi has {} entries",
            z.nrows(),
            y.len(),
            xi.len()
        )));
    }
    if let Some(&bad) = y.iter().find(|&&l| l > 1) {
        return Err(Error::domain(format!("labels must be 0 or 1, found {bad}")));
    }
    Ok(())
}

/// `v = y − ½`.
pub fn centered_targets(y: ArrayView1<u8>) -> Array1<f64> {
    y.mapv(|l| f64::from(l) - 0.5)
}

/// Gaussian approximation `N(μ, Σ)` to the weight posterior.
#[derive(Debug, Clone)]
pub struct WeightPosterior {
    pub mu: Array1<f64>,
    pub sigma: Array2<f64>,
    /// Cholesky factor of the precision `Σ⁻¹` (including any jitter).
    pub precision_chol: Cholesky,
    /// Diagonal jitter added to the precision before factorization.
    pub jitter: f64,
}

/// Precision factor and the vectors derived from it.
struct PrecisionSolve {
    chol: Cholesky,
    jitter: f64,
    /// `Zᵀ v`
    ztv: Array1<f64>,
    mu: Array1<f64>,
}

fn solve_precision(
    z: ArrayView2<f64>,
    v: ArrayView1<f64>,
    two_lambda: ArrayView1<f64>,
    gamma: f64,
) -> Result<PrecisionSolve> {
    let mut precision = weighted_gram(z, two_lambda);
    precision.diag_mut().mapv_inplace(|d| d + 1.0 / gamma);
    let (chol, jitter) = Cholesky::factor_with_jitter(precision.view())?;
    let ztv = transpose_times(z, v);
    let mu = chol.solve(ztv.view());
    Ok(PrecisionSolve {
        chol,
        jitter,
        ztv,
        mu,
    })
}

/// Posterior over the feature weights for fixed `(γ, ξ)`.
/// Cost `O(nD² + D³)`.
pub fn compute_posterior(
    z: ArrayView2<f64>,
    y: ArrayView1<u8>,
    gamma: f64,
    xi: ArrayView1<f64>,
) -> Result<WeightPosterior> {
    check_shapes(z, y, xi)?;
    check_gamma(gamma)?;
    check_xi(xi)?;
    let two_lambda = xi.mapv(|x| 2.0 * lambda_of_xi(x));
    let v = centered_targets(y);
    let solved = solve_precision(z, v.view(), two_lambda.view(), gamma)?;
    let sigma = solved.chol.inverse();
    Ok(WeightPosterior {
        mu: solved.mu,
        sigma,
        precision_chol: solved.chol,
        jitter: solved.jitter,
    })
}

/// Optimal local parameters for the current posterior,
/// `ξᵢ = sqrt(zᵢᵀΣzᵢ + (zᵢᵀμ)²)`.
pub fn update_xi(z: ArrayView2<f64>, posterior: &WeightPosterior) -> Array1<f64> {
    let quad = row_quadratic_forms(z, posterior.sigma.view());
    let mean = z.dot(&posterior.mu);
    Zip::from(&quad)
        .and(&mean)
        .map_collect(|&q, &m| (q + m * m).sqrt().max(f64::MIN_POSITIVE))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundDiagnostics {
    pub log_f: f64,
    pub log_c: f64,
    /// `−log|2γZᵀΛZ + I| + vᵀZ(2ZᵀΛZ + γ⁻¹I)⁻¹Zᵀv`, computed through its own
    /// factorization of `2γZᵀΛZ + I`.
    pub objective: f64,
}

/// Evidence lower bound and the hyperparameter objective at `(γ, ξ)`.
pub fn log_bound(
    z: ArrayView2<f64>,
    y: ArrayView1<u8>,
    gamma: f64,
    xi: ArrayView1<f64>,
) -> Result<BoundDiagnostics> {
    check_shapes(z, y, xi)?;
    check_gamma(gamma)?;
    check_xi(xi)?;
    let m = z.ncols() as f64;
    let two_lambda = xi.mapv(|x| 2.0 * lambda_of_xi(x));
    let v = centered_targets(y);
    let gram = weighted_gram(z, two_lambda.view());

    let mut precision = gram.clone();
    precision.diag_mut().mapv_inplace(|d| d + 1.0 / gamma);
    let (chol, _) = Cholesky::factor_with_jitter(precision.view())?;
    let ztv = transpose_times(z, v.view());
    let mu = chol.solve(ztv.view());

    let log_c = log_c(xi);
    // log|γ⁻¹Σ| = −log|γP| and μᵀΣ⁻¹μ = μᵀ Zᵀv.
    let log_det_scaled_cov = -(m * gamma.ln() + chol.log_det());
    let log_f = log_c + 0.5 * log_det_scaled_cov + 0.5 * mu.dot(&ztv);

    let mut shifted = gram * gamma;
    shifted.diag_mut().mapv_inplace(|d| d + 1.0);
    let (chol_k, _) = Cholesky::factor_with_jitter(shifted.view())?;
    let white = chol_k.whiten(ztv.view());
    let objective = -chol_k.log_det() + gamma * white.dot(&white);

    Ok(BoundDiagnostics {
        log_f,
        log_c,
        objective,
    })
}

/// Negated hyperparameter objective and its analytic gradient, for a
/// minimizer.
///
/// Parameter layout:
/// * RFF: `[log σ, log γ]`, frequencies fixed to the basis `W`;
/// * VFF: `[V (D × d, row-major), log γ]` where `V = W / σ` is the collapsed
///   frequency matrix (features use `σ = 1`).
///
/// `ξ` is held fixed; it enters only through `Λ`. The feature buffers are
/// reused between evaluations.
pub struct EvidenceObjective<'a> {
    x: ArrayView2<'a, f64>,
    v: Array1<f64>,
    two_lambda: Array1<f64>,
    num_freqs: usize,
    mode: Mode,
    basis: Option<&'a FrequencyBasis>,
    ridge_on_v: bool,
    phases: Array2<f64>,
    z: Array2<f64>,
}

impl<'a> EvidenceObjective<'a> {
    pub fn rff(
        x: ArrayView2<'a, f64>,
        y: ArrayView1<u8>,
        xi: ArrayView1<f64>,
        basis: &'a FrequencyBasis,
    ) -> Result<Self> {
        if x.ncols() != basis.dim() {
            return Err(Error::domain(format!(
                "X has {} columns but the basis expects {}",
                x.ncols(),
                basis.dim()
            )));
        }
        Self::build(x, y, xi, basis.num_freqs(), Mode::Rff, Some(basis), false)
    }

    pub fn vff(
        x: ArrayView2<'a, f64>,
        y: ArrayView1<u8>,
        xi: ArrayView1<f64>,
        num_freqs: usize,
        ridge_on_v: bool,
    ) -> Result<Self> {
        if num_freqs == 0 {
            return Err(Error::domain("VFF needs at least one frequency"));
        }
        Self::build(x, y, xi, num_freqs, Mode::Vff, None, ridge_on_v)
    }

    fn build(
        x: ArrayView2<'a, f64>,
        y: ArrayView1<u8>,
        xi: ArrayView1<f64>,
        num_freqs: usize,
        mode: Mode,
        basis: Option<&'a FrequencyBasis>,
        ridge_on_v: bool,
    ) -> Result<Self> {
        if x.nrows() != y.len() || x.nrows() != xi.len() {
            return Err(Error::domain(format!(
                "X has {} rows but y has {} and xi has {} entries",
                x.nrows(),
                y.len(),
                xi.len()
            )));
        }
        check_xi(xi)?;
        Ok(Self {
            x,
            v: centered_targets(y),
            two_lambda: xi.mapv(|t| 2.0 * lambda_of_xi(t)),
            num_freqs,
            mode,
            basis,
            ridge_on_v,
            phases: Array2::zeros((0, 0)),
            z: Array2::zeros((0, 0)),
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn param_len(&self) -> usize {
        match self.mode {
            Mode::Rff => 2,
            Mode::Vff => self.num_freqs * self.x.ncols() + 1,
        }
    }

    /// Replace the local variational parameters held fixed during optimization.
    pub fn set_xi(&mut self, xi: ArrayView1<f64>) -> Result<()> {
        if xi.len() != self.x.nrows() {
            return Err(Error::domain("xi length does not match the data"));
        }
        check_xi(xi)?;
        self.two_lambda = xi.mapv(|t| 2.0 * lambda_of_xi(t));
        Ok(())
    }

    /// Feature matrix from the most recent evaluation.
    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.z.view()
    }

    fn refresh_features(&mut self, theta: ArrayView1<f64>) -> Result<()> {
        match self.mode {
            Mode::Rff => {
                let basis = self.basis.expect("RFF objective carries its basis");
                basis.project_into(self.x, theta[0].exp(), &mut self.phases, &mut self.z)
            }
            Mode::Vff => {
                let (n, nf, d) = (self.x.nrows(), self.num_freqs, self.x.ncols());
                let vmat = theta.slice(s![..nf * d]).into_shape_with_order((nf, d)).map_err(|e| {
                    Error::domain(format!("parameter vector does not reshape to V: {e}"))
                })?;
                if self.phases.dim() != (n, nf) {
                    self.phases = Array2::zeros((n, nf));
                }
                if self.z.dim() != (n, 2 * nf) {
                    self.z = Array2::zeros((n, 2 * nf));
                }
                ndarray::linalg::general_mat_mul(1.0, &self.x, &vmat.t(), 0.0, &mut self.phases);
                fill_features(self.phases.view(), &mut self.z);
                Ok(())
            }
        }
    }

    /// `(−O(θ), −∇O(θ))`. Cost `O(nD² + D³)`, plus `O(nDd)` in VFF mode.
    pub fn evaluate(&mut self, theta: ArrayView1<f64>) -> Result<(f64, Array1<f64>)> {
        if theta.len() != self.param_len() {
            return Err(Error::domain(format!(
                "expected {} parameters, got {}",
                self.param_len(),
                theta.len()
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::domain("non-finite parameter vector"));
        }
        let log_gamma = theta[theta.len() - 1];
        let gamma = log_gamma.exp();
        check_gamma(gamma)?;
        self.refresh_features(theta)?;

        let z = self.z.view();
        let m = z.ncols();
        let solved = solve_precision(z, self.v.view(), self.two_lambda.view(), gamma)?;
        let sigma = solved.chol.inverse();
        let mu = &solved.mu;
        let mu_sq = mu.dot(mu);
        let value = -(m as f64) * log_gamma - solved.chol.log_det() + mu.dot(&solved.ztv);

        let d_log_gamma = -(m as f64) + (sigma.diag().sum() + mu_sq) / gamma;

        // Second moment M = Σ + μμᵀ; ∂O/∂Z = 2vμᵀ − 2 (2Λ) Z M, chained into the
        // phases: ∂z_cos/∂a = −z_sin, ∂z_sin/∂a = z_cos.
        let mut second = sigma;
        for i in 0..m {
            for j in 0..m {
                second[[i, j]] += mu[i] * mu[j];
            }
        }
        let nf = self.num_freqs;
        let (v, two_lambda, phases) = (&self.v, &self.two_lambda, &self.phases);
        let phase_grad_block = |rows: std::ops::Range<usize>| -> Array2<f64> {
            let zb = z.slice(s![rows.clone(), ..]);
            let zm = zb.dot(&second);
            let mut ga = Array2::<f64>::zeros((zb.nrows(), nf));
            for (r, i) in rows.enumerate() {
                let (vi, li) = (v[i], two_lambda[i]);
                for j in 0..nf {
                    let gc = 2.0 * vi * mu[2 * j] - 2.0 * li * zm[[r, 2 * j]];
                    let gs = 2.0 * vi * mu[2 * j + 1] - 2.0 * li * zm[[r, 2 * j + 1]];
                    ga[[r, j]] = -gc * zb[[r, 2 * j + 1]] + gs * zb[[r, 2 * j]];
                }
            }
            ga
        };

        let n = z.nrows();
        let mut grad = Array1::<f64>::zeros(self.param_len());
        let mut objective = value;
        match self.mode {
            Mode::Rff => {
                // a = wᵀx / σ, so ∂a/∂log σ = −a.
                let d_log_sigma = blocked_sum(n, 0.0f64, |rows| {
                    let ga = phase_grad_block(rows.clone());
                    -(&ga * &phases.slice(s![rows, ..])).sum()
                });
                grad[0] = d_log_sigma;
            }
            Mode::Vff => {
                let x = self.x;
                let d = x.ncols();
                let mut gv = blocked_sum(n, Array2::<f64>::zeros((nf, d)), |rows| {
                    let ga = phase_grad_block(rows.clone());
                    ga.t().dot(&x.slice(s![rows, ..]))
                });
                if self.ridge_on_v {
                    let vmat = theta.slice(s![..nf * d]);
                    objective -= 0.5 * vmat.dot(&vmat);
                    Zip::from(&mut gv)
                        .and(&vmat.into_shape_with_order((nf, d)).expect("checked above"))
                        .for_each(|g, &w| *g -= w);
                }
                grad.slice_mut(s![..nf * d])
                    .assign(&gv.into_shape_with_order(nf * d).expect("contiguous"));
            }
        }
        let last = grad.len() - 1;
        grad[last] = d_log_gamma;
        Ok((-objective, -grad))
    }
}

/// One-shot form of [`EvidenceObjective::evaluate`]. In VFF mode `basis` only
/// supplies `D`; the frequencies come from `theta`.
pub fn objective_gradient(
    theta: ArrayView1<f64>,
    x: ArrayView2<f64>,
    y: ArrayView1<u8>,
    xi: ArrayView1<f64>,
    basis: &FrequencyBasis,
    mode: Mode,
) -> Result<(f64, Array1<f64>)> {
    let mut objective = match mode {
        Mode::Rff => EvidenceObjective::rff(x, y, xi, basis)?,
        Mode::Vff => EvidenceObjective::vff(x, y, xi, basis.num_freqs(), false)?,
    };
    objective.evaluate(theta)
}

/// `(V flattened, log γ)` for the VFF layout.
pub fn vff_theta(v: ArrayView2<f64>, gamma: f64) -> Array1<f64> {
    let mut theta: Vec<f64> = v.iter().copied().collect();
    theta.push(gamma.ln());
    Array1::from(theta)
}

/// Inverse of [`vff_theta`].
pub fn split_vff_theta(theta: ArrayView1<f64>, num_freqs: usize) -> (Array2<f64>, f64) {
    let d = (theta.len() - 1) / num_freqs;
    let v = theta
        .slice(s![..num_freqs * d])
        .to_owned()
        .into_shape_with_order((num_freqs, d))
        .expect("layout");
    (v, theta[theta.len() - 1].exp())
}

/// Numerically evaluated `log F` as a function of `ξ` for small problems
/// (helper for stationarity checks).
pub fn log_f_at(z: ArrayView2<f64>, y: ArrayView1<u8>, gamma: f64, xi: ArrayView1<f64>) -> Result<f64> {
    Ok(log_bound(z, y, gamma, xi)?.log_f)
}

/// Permutes rows consistently (used by invariance tests and the trainer's
/// data-order checks).
pub fn permute_rows<T: Clone>(a: ArrayView2<T>, order: &[usize]) -> Array2<T> {
    a.select(Axis(0), order)
}

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    None,
    Standardize,
    StandardizePca,
}

/// Fitted preprocessing: column z-scoring, optionally followed by projection
/// onto `k` orthonormal principal directions.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformSpec {
    pub kind: TransformKind,
    pub means: Array1<f64>,
    /// Strictly positive; constant columns carry 1.
    pub stds: Array1<f64>,
    /// `k × d`, orthonormal rows.
    pub pca_components: Option<Array2<f64>>,
}

impl TransformSpec {
    pub fn identity(dim: usize) -> Self {
        Self {
            kind: TransformKind::None,
            means: Array1::zeros(dim),
            stds: Array1::ones(dim),
            pca_components: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.means.len()
    }

    pub fn output_dim(&self) -> usize {
        self.pca_components.as_ref().map_or(self.input_dim(), Array2::nrows)
    }

    pub fn k(&self) -> Option<usize> {
        self.pca_components.as_ref().map(Array2::nrows)
    }

    pub fn validate(&self) -> Result<()> {
        if self.means.len() != self.stds.len() {
            return Err(Error::domain("transform means and stds differ in length"));
        }
        if self.means.iter().any(|m| !m.is_finite()) {
            return Err(Error::domain("transform means must be finite"));
        }
        if self.stds.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::domain("transform stds must be positive"));
        }
        match (&self.kind, &self.pca_components) {
            (TransformKind::StandardizePca, Some(c)) => {
                if c.ncols() != self.input_dim() || c.nrows() == 0 {
                    return Err(Error::domain("PCA components do not match the input dimension"));
                }
                let gram = c.dot(&c.t());
                for i in 0..gram.nrows() {
                    for j in 0..gram.ncols() {
                        let target = if i == j { 1.0 } else { 0.0 };
                        if (gram[[i, j]] - target).abs() > 1e-10 {
                            return Err(Error::domain("PCA components are not orthonormal"));
                        }
                    }
                }
                Ok(())
            }
            (TransformKind::StandardizePca, None) => Err(Error::domain("PCA transform without components")),
            (_, Some(_)) => Err(Error::domain("components present on a non-PCA transform")),
            _ => Ok(()),
        }
    }

    /// Apply the stored statistics to new rows.
    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::domain(format!(
                "data has {} columns but the transform expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        if self.kind == TransformKind::None {
            return Ok(x.to_owned());
        }
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.means).zip(&self.stds) {
                *v = (*v - m) / s;
            }
        }
        Ok(match &self.pca_components {
            Some(c) => out.dot(&c.t()),
            None => out,
        })
    }
}

/// Column means and population standard deviations.
pub fn fit_standardize(x: ArrayView2<f64>) -> TransformSpec {
    let n = x.nrows().max(1) as f64;
    let means = x.sum_axis(Axis(0)) / n;
    let stds = Array1::from_iter(x.columns().into_iter().zip(means.iter()).map(|(col, &m)| {
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        let s = var.sqrt();
        // Constant (dead) columns map to zero instead of dividing by ~0.
        if s <= 1e-12 * m.abs().max(1.0) {
            1.0
        } else {
            s
        }
    }));
    TransformSpec {
        kind: TransformKind::Standardize,
        means,
        stds,
        pca_components: None,
    }
}

fn to_nalgebra(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Top-`k` eigenvectors (columns) of a symmetric matrix, by decreasing
/// eigenvalue, along with the eigenvalues.
fn top_eigenvectors(sym: &Array2<f64>, k: usize) -> (Array2<f64>, Vec<f64>) {
    let eig = SymmetricEigen::new(to_nalgebra(sym));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let m = sym.nrows();
    let mut vecs = Array2::<f64>::zeros((m, k));
    let mut vals = Vec::with_capacity(k);
    for (c, &idx) in order.iter().take(k).enumerate() {
        for r in 0..m {
            vecs[[r, c]] = eig.eigenvectors[(r, idx)];
        }
        vals.push(eig.eigenvalues[idx]);
    }
    (vecs, vals)
}

/// Modified Gram-Schmidt over the rows; rows that collapse are replaced by
/// the first standard basis vector that completes the set.
fn orthonormalize_rows(c: &mut Array2<f64>) {
    let (k, d) = c.dim();
    for i in 0..k {
        for attempt in 0..=d {
            if attempt > 0 {
                c.row_mut(i).fill(0.0);
                c[[i, attempt - 1]] = 1.0;
            }
            for j in 0..i {
                let proj = c.row(i).dot(&c.row(j));
                let prev = c.row(j).to_owned();
                c.row_mut(i).scaled_add(-proj, &prev);
            }
            let norm = c.row(i).dot(&c.row(i)).sqrt();
            if norm > 1e-8 {
                c.row_mut(i).mapv_inplace(|v| v / norm);
                break;
            }
        }
    }
}

/// Flip each row so its largest-magnitude entry (first on ties) is positive.
fn fix_signs(c: &mut Array2<f64>) {
    for mut row in c.rows_mut() {
        let mut best = 0usize;
        for (j, v) in row.iter().enumerate() {
            if v.abs() > row[best].abs() {
                best = j;
            }
        }
        if row[best] < 0.0 {
            row.mapv_inplace(|v| -v);
        }
    }
}

/// Principal directions of already-standardized data. Uses the `d × d`
/// covariance when `d ≤ n` and the `n × n` Gram matrix otherwise.
pub fn fit_pca(x_standardized: ArrayView2<f64>, k: usize) -> Result<TransformSpec> {
    let (n, d) = x_standardized.dim();
    if k == 0 || k > n.min(d) {
        return Err(Error::domain(format!(
            "PCA needs 1 <= k <= min(n, d) = {} (got k = {k})",
            n.min(d)
        )));
    }
    let mean = x_standardized.sum_axis(Axis(0)) / n as f64;
    let centered = &x_standardized - &mean.insert_axis(Axis(0));
    let mut components = if d <= n {
        let cov = centered.t().dot(&centered) / (n.max(2) - 1) as f64;
        let (vecs, _) = top_eigenvectors(&cov, k);
        vecs.reversed_axes()
    } else {
        let gram = centered.dot(&centered.t());
        let (vecs, _) = top_eigenvectors(&gram, k);
        centered.t().dot(&vecs).reversed_axes()
    };
    orthonormalize_rows(&mut components);
    fix_signs(&mut components);
    Ok(TransformSpec {
        kind: TransformKind::StandardizePca,
        means: Array1::zeros(d),
        stds: Array1::ones(d),
        pca_components: Some(components),
    })
}

/// Standardize, then fit `k` principal directions on the standardized data.
pub fn fit_standardize_pca(x: ArrayView2<f64>, k: usize) -> Result<TransformSpec> {
    let standardize = fit_standardize(x);
    let standardized = standardize.apply(x)?;
    let pca = fit_pca(standardized.view(), k)?;
    Ok(TransformSpec {
        kind: TransformKind::StandardizePca,
        means: standardize.means,
        stds: standardize.stds,
        pca_components: pca.pca_components,
    })
}

/// Share of the total variance of `x_standardized` captured by the components.
pub fn explained_variance_ratio(spec: &TransformSpec, x_standardized: ArrayView2<f64>) -> Result<f64> {
    let components = spec
        .pca_components
        .as_ref()
        .ok_or_else(|| Error::domain("transform has no PCA components"))?;
    let n = x_standardized.nrows() as f64;
    let mean = x_standardized.sum_axis(Axis(0)) / n;
    let centered = &x_standardized - &mean.insert_axis(Axis(0));
    let total: f64 = centered.iter().map(|v| v * v).sum();
    let projected = centered.dot(&components.t());
    let kept: f64 = projected.iter().map(|v| v * v).sum();
    Ok(kept / total)
}

//! Dense symmetric positive-definite factorization and row-blocked
//! reductions over tall matrices.
//!
//! Reductions over the `n` rows of a feature matrix are evaluated in fixed
//! blocks of [`ROW_BLOCK`] rows and the block partials are summed in block
//! order. Blocks may run on different threads, but the association order never
//! depends on the thread count, so results are bit-reproducible.

use std::ops::{AddAssign, Range};

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const ROW_BLOCK: usize = 1024;
const BLOCKS_PER_BATCH: usize = 32;

/// Smallest and largest diagonal jitter (relative to `trace / size`) tried by
/// [`Cholesky::factor_with_jitter`].
const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

/// Lower-triangular factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: Array2<f64>,
}

impl Cholesky {
    /// Plain Cholesky-Banachiewicz factorization; no jitter.
    pub fn factor(a: ArrayView2<f64>) -> Result<Self> {
        let m = a.nrows();
        if a.ncols() != m {
            return Err(Error::domain(format!(
                "cannot factor a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut l = Array2::<f64>::zeros((m, m));
        {
            let lv = l.as_slice_mut().expect("fresh array is contiguous");
            for i in 0..m {
                for j in 0..=i {
                    let (row_i, row_j) = (&lv[i * m..i * m + j], &lv[j * m..j * m + j]);
                    let dot: f64 = row_i.iter().zip(row_j).map(|(x, y)| x * y).sum();
                    let value = a[[i, j]] - dot;
                    if i == j {
                        if !(value > 0.0) || !value.is_finite() {
                            return Err(Error::NotPositiveDefinite { pivot: i, value });
                        }
                        lv[i * m + i] = value.sqrt();
                    } else {
                        lv[i * m + j] = value / lv[j * m + j];
                    }
                }
            }
        }
        Ok(Self { lower: l })
    }

    /// Factor `a`, retrying with a growing diagonal jitter when the plain
    /// factorization fails. Returns the factor and the jitter that was added
    /// (0 when none was needed).
    pub fn factor_with_jitter(a: ArrayView2<f64>) -> Result<(Self, f64)> {
        if a.iter().any(|v| !v.is_finite()) {
            let pivot = a
                .diag()
                .iter()
                .position(|v| !v.is_finite())
                .unwrap_or(0);
            return Err(Error::NotPositiveDefinite {
                pivot,
                value: f64::NAN,
            });
        }
        let first_err = match Self::factor(a) {
            Ok(c) => return Ok((c, 0.0)),
            Err(e) => e,
        };
        let m = a.nrows().max(1);
        let scale = a.diag().sum().abs() / m as f64;
        let mut rel = JITTER_START;
        while rel <= JITTER_MAX * (1.0 + 1e-9) {
            let jitter = rel * scale;
            let mut shifted = a.to_owned();
            shifted.diag_mut().mapv_inplace(|v| v + jitter);
            if let Ok(c) = Self::factor(shifted.view()) {
                log::debug!("cholesky needed diagonal jitter {jitter:e}");
                return Ok((c, jitter));
            }
            rel *= 10.0;
        }
        Err(first_err)
    }

    pub fn size(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> ArrayView2<'_, f64> {
        self.lower.view()
    }

    /// `log |A|`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diag().iter().map(|v| v.ln()).sum::<f64>()
    }

    /// Solve `L y = b` in place.
    fn forward(&self, b: &mut [f64]) {
        let m = self.size();
        let l = self.lower.as_slice().expect("contiguous");
        for i in 0..m {
            let dot: f64 = l[i * m..i * m + i].iter().zip(&b[..i]).map(|(x, y)| x * y).sum();
            b[i] = (b[i] - dot) / l[i * m + i];
        }
    }

    /// Solve `Lᵀ x = y` in place.
    fn backward(&self, b: &mut [f64]) {
        let m = self.size();
        let l = self.lower.as_slice().expect("contiguous");
        for i in (0..m).rev() {
            let mut acc = b[i];
            for k in i + 1..m {
                acc -= l[k * m + i] * b[k];
            }
            b[i] = acc / l[i * m + i];
        }
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: ArrayView1<f64>) -> Array1<f64> {
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        Array1::from(x)
    }

    /// `L⁻¹ b`; `‖L⁻¹ b‖² = bᵀ A⁻¹ b`.
    pub fn whiten(&self, b: ArrayView1<f64>) -> Array1<f64> {
        let mut x = b.to_vec();
        self.forward(&mut x);
        Array1::from(x)
    }

    /// `A⁻¹`, symmetrized exactly.
    pub fn inverse(&self) -> Array2<f64> {
        let m = self.size();
        // Columns of L⁻¹ via forward substitution on unit vectors.
        let mut linv = Array2::<f64>::zeros((m, m));
        let mut e = vec![0.0; m];
        for j in 0..m {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            self.forward(&mut e);
            linv.column_mut(j).assign(&ArrayView1::from(&e[..]));
        }
        let mut inv = linv.t().dot(&linv);
        symmetrize(&mut inv);
        inv
    }
}

/// Replace `a` by `(a + aᵀ) / 2`.
pub fn symmetrize(a: &mut Array2<f64>) {
    let m = a.nrows();
    for i in 0..m {
        for j in 0..i {
            let v = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
}

fn row_blocks(n: usize) -> Vec<Range<usize>> {
    (0..n)
        .step_by(ROW_BLOCK)
        .map(|start| start..(start + ROW_BLOCK).min(n))
        .collect()
}

/// Sum `f(block)` over consecutive row blocks of `0..n` in block order.
/// Returns `init` when `n == 0`.
pub fn blocked_sum<T, F>(n: usize, init: T, f: F) -> T
where
    T: for<'a> AddAssign<&'a T> + Send,
    F: Fn(Range<usize>) -> T + Sync,
{
    let blocks = row_blocks(n);
    let mut total = init;
    for batch in blocks.chunks(BLOCKS_PER_BATCH) {
        let partials: Vec<T> = batch.par_iter().cloned().map(&f).collect();
        for p in &partials {
            total += p;
        }
    }
    total
}

/// `Zᵀ diag(w) Z`, exactly symmetric.
pub fn weighted_gram(z: ArrayView2<f64>, w: ArrayView1<f64>) -> Array2<f64> {
    assert_eq!(z.nrows(), w.len());
    let m = z.ncols();
    let mut gram = blocked_sum(z.nrows(), Array2::<f64>::zeros((m, m)), |rows| {
        let zb = z.slice(s![rows.clone(), ..]);
        let mut scaled = zb.to_owned();
        Zip::from(scaled.rows_mut())
            .and(w.slice(s![rows]))
            .for_each(|mut row, &wi| row *= wi);
        zb.t().dot(&scaled)
    });
    symmetrize(&mut gram);
    gram
}

/// `Zᵀ v`.
pub fn transpose_times(z: ArrayView2<f64>, v: ArrayView1<f64>) -> Array1<f64> {
    assert_eq!(z.nrows(), v.len());
    blocked_sum(z.nrows(), Array1::<f64>::zeros(z.ncols()), |rows| {
        z.slice(s![rows.clone(), ..]).t().dot(&v.slice(s![rows]))
    })
}

/// `Aᵀ B` for two tall matrices with the same row count.
pub fn transpose_product(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    assert_eq!(a.nrows(), b.nrows());
    blocked_sum(a.nrows(), Array2::<f64>::zeros((a.ncols(), b.ncols())), |rows| {
        a.slice(s![rows.clone(), ..]).t().dot(&b.slice(s![rows, ..]))
    })
}

/// Row-wise quadratic forms `zᵢᵀ M zᵢ` without forming `Z M Zᵀ`.
pub fn row_quadratic_forms(z: ArrayView2<f64>, m: ArrayView2<f64>) -> Array1<f64> {
    let mut out = Array1::<f64>::zeros(z.nrows());
    out.axis_chunks_iter_mut(Axis(0), ROW_BLOCK)
        .into_par_iter()
        .zip(z.axis_chunks_iter(Axis(0), ROW_BLOCK).into_par_iter())
        .for_each(|(mut out_block, z_block)| {
            let zm = z_block.dot(&m);
            Zip::from(&mut out_block)
                .and(zm.rows())
                .and(z_block.rows())
                .for_each(|o, a, b| *o = a.dot(&b));
        });
    out
}

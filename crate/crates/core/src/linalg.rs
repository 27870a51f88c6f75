//! Dense symmetric-matrix kernels used by the measures.
//!
//! Everything here works on small `d x d` matrices (d up to a few hundred).
//! Factorizations never form an explicit inverse; log-determinants are
//! accumulated from the Cholesky diagonal so they stay finite where the
//! determinant itself would overflow or underflow.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance for symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues down to `-PSD_CLAMP * |a|` are treated as rounding noise and clamped to zero.
pub const PSD_CLAMP: f64 = 1e-10;

/// Largest absolute entry.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Largest `|a[i][j] - a[j][i]|`.
pub fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let d = a.nrows();
    let mut worst = 0.0_f64;
    for j in 0..d {
        for i in (j + 1)..d {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Checks squareness and symmetry up to `SYMMETRY_TOL * max(1, max|a|)`.
pub fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let asymmetry = max_asymmetry(a);
    if asymmetry > SYMMETRY_TOL * max_abs(a).max(1.0) {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok(())
}

/// Replaces `a` by `(a + a^T) / 2`.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let d = a.nrows();
    for j in 0..d {
        for i in (j + 1)..d {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Lower-triangular Cholesky factor `L` with `L L^T = A`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    dim: usize,
    // row-major, only the lower triangle is meaningful
    data: Vec<f64>,
    // pivot_j = L_jj^2, kept so that diagonal inputs give ln det = sum(ln a_jj) exactly
    pivots: Vec<f64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// The factor as a dense matrix (upper triangle zero).
    pub fn l(&self) -> DMatrix<f64> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |i, j| if j <= i { self.at(i, j) } else { 0.0 })
    }

    pub fn diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim).map(move |i| self.at(i, i))
    }

    /// `ln det A = 2 * sum(ln L_ii)`, accumulated from the pivots `L_ii^2`.
    pub fn log_det(&self) -> f64 {
        self.pivots.iter().map(|p| p.ln()).sum()
    }

    /// Solves `L z = b` in place.
    pub fn forward_solve(&self, b: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let row = &self.data[i * d..i * d + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(l, z)| l * z).sum();
            b[i] = (b[i] - s) / self.at(i, i);
        }
    }

    /// Solves `L^T x = z` in place.
    pub fn backward_solve(&self, z: &mut [f64]) {
        let d = self.dim;
        for i in (0..d).rev() {
            let s: f64 = ((i + 1)..d).zip(&z[i + 1..]).map(|(k, x)| self.at(k, i) * x).sum();
            z[i] = (z[i] - s) / self.at(i, i);
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.as_slice().to_vec();
        self.forward_solve(&mut x);
        self.backward_solve(&mut x);
        DVector::from_vec(x)
    }

    /// `delta^T A^{-1} delta = |L^{-1} delta|^2`.
    pub fn mahalanobis_sq(&self, delta: &[f64]) -> f64 {
        let mut z = delta.to_vec();
        self.forward_solve(&mut z);
        z.iter().map(|v| v * v).sum()
    }

    /// `tr(A^{-1} B)` by solving against each column of `B`.
    pub fn trace_solve(&self, b: &DMatrix<f64>) -> f64 {
        let d = self.dim;
        let mut col = vec![0.0; d];
        let mut trace = 0.0;
        for j in 0..d {
            col.copy_from_slice(b.column(j).as_slice());
            self.forward_solve(&mut col);
            self.backward_solve(&mut col);
            trace += col[j];
        }
        trace
    }
}

/// Plain (unpivoted) Cholesky factorization.
///
/// Fails with the index of the first non-positive pivot when `a` is not
/// positive definite.
pub fn cholesky(a: &DMatrix<f64>) -> Result<CholeskyFactor> {
    check_symmetric(a)?;
    let d = a.nrows();
    let mut data = vec![0.0; d * d];
    let mut pivots = Vec::with_capacity(d);
    for j in 0..d {
        let row_j = &data[j * d..j * d + j];
        let pivot = a[(j, j)] - row_j.iter().map(|v| v * v).sum::<f64>();
        if pivot <= 0.0 || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let ljj = pivot.sqrt();
        pivots.push(pivot);
        data[j * d + j] = ljj;
        for i in (j + 1)..d {
            let (upper, lower) = data.split_at_mut(i * d);
            let row_j = &upper[j * d..j * d + j];
            let s: f64 = lower[..j].iter().zip(row_j).map(|(x, y)| x * y).sum();
            lower[j] = (a[(i, j)] - s) / ljj;
        }
    }
    Ok(CholeskyFactor {
        dim: d,
        data,
        pivots,
    })
}

/// `ln det a` for positive-definite `a`.
pub fn log_det_psd(a: &DMatrix<f64>) -> Result<f64> {
    Ok(cholesky(a)?.log_det())
}

/// `delta^T a^{-1} delta` by two triangular solves.
pub fn mahalanobis_sq(delta: &DVector<f64>, a: &DMatrix<f64>) -> Result<f64> {
    if delta.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            left: delta.len(),
            right: a.nrows(),
        });
    }
    Ok(cholesky(a)?.mahalanobis_sq(delta.as_slice()))
}

/// Upper bound on `ln det a` from the Hadamard inequality: `sum(ln a_ii)`.
pub fn hadamard_log_det_bound(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    diagonal_log_sum(a.diagonal().iter().copied())
}

pub(crate) fn diagonal_log_sum(diag: impl Iterator<Item = f64>) -> Result<f64> {
    let mut sum = 0.0;
    for (index, value) in diag.enumerate() {
        if value <= 0.0 || value.is_nan() {
            return Err(Error::NonPositiveDiagonal { index, value });
        }
        sum += value.ln();
    }
    Ok(sum)
}

/// Symmetric eigendecomposition by cyclic Jacobi sweeps.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_symmetric(a)?;
    let d = a.nrows();
    let mut m: Vec<f64> = (0..d * d).map(|k| a[(k / d, k % d)]).collect();
    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-12 * norm;

    const MAX_SWEEPS: usize = 100;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                off += 2.0 * m[p * d + q] * m[p * d + q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * d + q] - m[p * d + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = m[k * d + p];
                    let akq = m[k * d + q];
                    m[k * d + p] = c * akp - s * akq;
                    m[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = m[p * d + k];
                    let aqk = m[q * d + k];
                    m[p * d + k] = c * apk - s * aqk;
                    m[q * d + k] = s * apk + c * aqk;
                }
                m[p * d + q] = 0.0;
                m[q * d + p] = 0.0;
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| m[i * d + i].total_cmp(&m[j * d + j]));
    let values = DVector::from_iterator(d, order.iter().map(|&i| m[i * d + i]));
    let vectors = DMatrix::from_fn(d, d, |r, c| v[r * d + order[c]]);
    Ok((values, vectors))
}

/// Symmetric square root of a positive semi-definite matrix.
pub fn psd_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (values, vectors) = symmetric_eigen(a)?;
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut roots = DVector::zeros(values.len());
    for (r, &lambda) in roots.iter_mut().zip(values.iter()) {
        if lambda < -PSD_CLAMP * scale {
            return Err(Error::NotPositiveSemiDefinite { eigenvalue: lambda });
        }
        *r = lambda.max(0.0).sqrt();
    }
    let mut s = &vectors * DMatrix::from_diagonal(&roots) * vectors.transpose();
    symmetrize(&mut s);
    Ok(s)
}

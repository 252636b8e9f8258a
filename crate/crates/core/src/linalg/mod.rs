//! Dense real linear algebra.
//!
//! Everything here works on [`Mat`], a small row-major matrix type. The
//! orthonormalization routines accept a [`Metric`] so the same code serves
//! plain Euclidean vectors and quadrature-weighted function samples.

mod eig;
mod gram_schmidt;

pub use eig::{symmetric_eig, EigResult, EIG_MAX_SWEEPS, EIG_OFFDIAG_TOL};
pub use gram_schmidt::{
    gram_schmidt, gram_schmidt_in, gram_schmidt_network, gram_schmidt_network_in, qr_decompose,
    smoothed_normalize, GramSchmidtResult, DEPENDENCE_TOL, REORTHOGONALIZE_TOL,
};

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major dense matrix of finite doubles.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite matrix entry {bad}")));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Mat::from_row_major(rows.len(), cols, rows.concat())
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_cols(cols: &[Vec<f64>]) -> Result<Self> {
        let rows = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("columns of unequal length".into()));
        }
        let mut m = Mat::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            m.set_col(j, c);
        }
        if m.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite matrix entry".into()));
        }
        Ok(m)
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Mat::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols + j])
            .collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.col(j)).collect()
    }

    pub fn set_col(&mut self, j: usize, values: &[f64]) {
        assert_eq!(values.len(), self.rows, "column length mismatch");
        for (i, v) in values.iter().enumerate() {
            self.data[i * self.cols + j] = *v;
        }
    }

    /// Copy of the leading `cols` columns.
    pub fn leading_cols(&self, cols: usize) -> Mat {
        let cols = cols.min(self.cols);
        let mut out = Mat::zeros(self.rows, cols);
        for i in 0..self.rows {
            out.data[i * cols..(i + 1) * cols].copy_from_slice(&self.row(i)[..cols]);
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ · y`
    pub fn tr_matvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, y.len(), "matvec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            axpy(*yi, self.row(i), &mut out);
        }
        out
    }

    pub fn scale(&self, alpha: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Inner product on ℝⁿ given by a positive diagonal weight.
///
/// Quadrature-discretized function spaces use `Diagonal` so that the
/// discrete inner product approximates the continuous one.
#[derive(Clone, Debug, PartialEq)]
pub enum Metric {
    Euclidean,
    Diagonal(Vec<f64>),
}

impl Metric {
    pub fn diagonal(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Invalid(
                "metric weights must be positive and finite".into(),
            ));
        }
        Ok(Metric::Diagonal(weights))
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::Euclidean => dot(a, b),
            Metric::Diagonal(w) => {
                debug_assert_eq!(w.len(), a.len());
                a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum()
            }
        }
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    /// Checks that the metric can be applied to vectors of length `n`.
    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self {
            Metric::Diagonal(w) if w.len() != n => Err(Error::DimensionMismatch(format!(
                "metric has {} weights, vectors have length {n}",
                w.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Gram matrix `Aᵀ M B` of the columns of two matrices.
    pub fn gram(&self, a: &Mat, b: &Mat) -> Mat {
        let ac = a.columns();
        let bc = b.columns();
        let mut g = Mat::zeros(ac.len(), bc.len());
        for (i, x) in ac.iter().enumerate() {
            for (j, y) in bc.iter().enumerate() {
                g[(i, j)] = self.inner(x, y);
            }
        }
        g
    }

    /// Weights as a dense vector of length `n`.
    pub fn weights(&self, n: usize) -> Vec<f64> {
        match self {
            Metric::Euclidean => vec![1.0; n],
            Metric::Diagonal(w) => w.clone(),
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha · x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Maximum entrywise deviation of `QᵀMQ` from the identity.
pub fn orthonormality_defect(q: &Mat, metric: &Metric) -> f64 {
    metric.gram(q, q).max_abs_diff(&Mat::identity(q.cols()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_rejects_bad_shapes_and_nan() {
        assert!(Mat::from_row_major(2, 2, vec![1.0; 3]).is_err());
        assert!(Mat::from_row_major(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Mat::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn matmul_and_transpose_agree() {
        let a = Mat::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let ata = a.transpose().matmul(&a);
        assert_eq!(ata[(0, 0)], 17.0);
        assert_eq!(ata[(1, 2)], 36.0);
        assert_eq!(a.tr_matvec(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
        assert_eq!(a.matvec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
    }

    #[test]
    fn diagonal_metric_weights_inner_product() {
        let m = Metric::diagonal(vec![2.0, 0.5]).unwrap();
        assert_eq!(m.inner(&[1.0, 2.0], &[3.0, 4.0]), 2.0 * 3.0 + 0.5 * 8.0);
        assert!(Metric::diagonal(vec![1.0, 0.0]).is_err());
        assert!(m.check_dim(3).is_err());
    }
}

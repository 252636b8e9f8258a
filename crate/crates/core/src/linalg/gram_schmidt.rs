//! Gram-Schmidt orthonormalization, its smoothed "network" form, and QR.
//!
//! Column `j` of the input is processed as one layer:
//!
//! ```text
//! ρ(x_j) = x_j − Σ_{i<j} ⟨x_j, x̄_i⟩ x̄_i,      x̄_j = σ(ρ(x_j))
//! ```
//!
//! with `σ(x) = x/‖x‖` for the exact recursion and
//! `σ_ε(x) = x/√(‖x‖² + ε²)` for the network form. The layer weights are
//! the inner products `⟨x_j, x̄_i⟩` and the divisor, which are recorded in
//! the upper-triangular `coeffs` so that the same recursion can later be
//! replayed on any other family of vectors (see `learner::encode`).

use super::{axpy, Mat, Metric};
use crate::error::{Error, Result};

/// Residuals below `DEPENDENCE_TOL · ‖x_j‖` count as linear dependence.
pub const DEPENDENCE_TOL: f64 = 1e-10;

/// Orthogonality loss above which one extra projection pass is made.
pub const REORTHOGONALIZE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct GramSchmidtResult {
    /// Orthonormal columns `x̄_j`.
    pub basis: Mat,
    /// Upper-triangular `R` with `x_j = Σ_{i≤j} R_ij x̄_i`: above the
    /// diagonal `R_ij = ⟨x_j, x̄_i⟩`, on it the divisor applied to `ρ(x_j)`
    /// (`‖ρ(x_j)‖` for exact Gram-Schmidt).
    pub coeffs: Mat,
    /// `‖ρ(x_j)‖` per column.
    pub residual_norms: Vec<f64>,
}

impl GramSchmidtResult {
    /// Applies the recorded recursion to other vectors `z_j`:
    /// `z̄_j = (z_j − Σ_{i<j} R_ij z̄_i) / R_jj`.
    ///
    /// If `z_j = F x_j` for a linear `F`, the result is `F x̄_j`.
    pub fn replay(&self, vectors: &Mat) -> Result<Mat> {
        let n = self.coeffs.cols();
        if vectors.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "replay needs {n} columns, got {}",
                vectors.cols()
            )));
        }
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
        for j in 0..n {
            let mut z = vectors.col(j);
            for (i, zi) in out.iter().enumerate() {
                axpy(-self.coeffs[(i, j)], zi, &mut z);
            }
            let d = self.coeffs[(j, j)];
            z.iter_mut().for_each(|v| *v /= d);
            out.push(z);
        }
        Mat::from_cols(&out)
    }
}

/// `x / √(‖x‖² + ε²)`.
pub fn smoothed_normalize(x: &[f64], eps: f64) -> Result<Vec<f64>> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Invalid(format!(
            "epsilon must be nonnegative, got {eps}"
        )));
    }
    let denom = (super::dot(x, x) + eps * eps).sqrt();
    if denom == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(x.iter().map(|v| v / denom).collect())
}

/// Exact (classical) Gram-Schmidt on the columns of `vectors`.
pub fn gram_schmidt(vectors: &Mat) -> Result<GramSchmidtResult> {
    gram_schmidt_in(vectors, &Metric::Euclidean)
}

/// Exact Gram-Schmidt with respect to `metric`.
///
/// Classical projections are used; if the new column is still off by more
/// than [`REORTHOGONALIZE_TOL`] from the previous ones, a single modified
/// Gram-Schmidt pass is applied and its coefficients are folded into `R`.
pub fn gram_schmidt_in(vectors: &Mat, metric: &Metric) -> Result<GramSchmidtResult> {
    check_input(vectors, metric)?;
    let n = vectors.cols();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut coeffs = Mat::zeros(n, n);
    let mut residual_norms = Vec::with_capacity(n);

    for j in 0..n {
        let x = vectors.col(j);
        let x_norm = metric.norm(&x);
        let mut rho = x.clone();
        for (i, q) in basis.iter().enumerate() {
            let r = metric.inner(&x, q);
            coeffs[(i, j)] = r;
            axpy(-r, q, &mut rho);
        }

        let mut rho_norm = metric.norm(&rho);
        if rho_norm > 0.0 && !basis.is_empty() {
            let loss = basis
                .iter()
                .map(|q| metric.inner(&rho, q).abs())
                .fold(0.0, f64::max)
                / rho_norm;
            if loss > REORTHOGONALIZE_TOL {
                for (i, q) in basis.iter().enumerate() {
                    let r = metric.inner(&rho, q);
                    coeffs[(i, j)] += r;
                    axpy(-r, q, &mut rho);
                }
                rho_norm = metric.norm(&rho);
            }
        }

        if x_norm == 0.0 || rho_norm <= DEPENDENCE_TOL * x_norm {
            return Err(Error::DependentInput {
                column: j,
                residual: rho_norm,
            });
        }
        rho.iter_mut().for_each(|v| *v /= rho_norm);
        coeffs[(j, j)] = rho_norm;
        residual_norms.push(rho_norm);
        basis.push(rho);
    }

    Ok(GramSchmidtResult {
        basis: Mat::from_cols(&basis)?.with_rows(vectors.rows()),
        coeffs,
        residual_norms,
    })
}

/// Gram-Schmidt network: the same recursion with `σ_ε` as activation.
///
/// Never fails on dependent input; a dependent column produces an output
/// of norm at most `‖ρ‖/ε`.
pub fn gram_schmidt_network(vectors: &Mat, eps: f64) -> Result<GramSchmidtResult> {
    gram_schmidt_network_in(vectors, eps, &Metric::Euclidean)
}

pub fn gram_schmidt_network_in(
    vectors: &Mat,
    eps: f64,
    metric: &Metric,
) -> Result<GramSchmidtResult> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Invalid(format!(
            "network epsilon must be positive, got {eps}"
        )));
    }
    check_input(vectors, metric)?;
    let n = vectors.cols();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut coeffs = Mat::zeros(n, n);
    let mut residual_norms = Vec::with_capacity(n);

    for j in 0..n {
        let x = vectors.col(j);
        let mut rho = x.clone();
        for (i, q) in basis.iter().enumerate() {
            let r = metric.inner(&x, q);
            coeffs[(i, j)] = r;
            axpy(-r, q, &mut rho);
        }
        let rho_norm = metric.norm(&rho);
        let divisor = (rho_norm * rho_norm + eps * eps).sqrt();
        rho.iter_mut().for_each(|v| *v /= divisor);
        coeffs[(j, j)] = divisor;
        residual_norms.push(rho_norm);
        basis.push(rho);
    }

    Ok(GramSchmidtResult {
        basis: Mat::from_cols(&basis)?.with_rows(vectors.rows()),
        coeffs,
        residual_norms,
    })
}

/// `A = QR` in Gram-Schmidt form: `Q` is exactly the Gram-Schmidt basis of
/// the columns of `A` and `R` its coefficient matrix.
pub fn qr_decompose(a: &Mat) -> Result<(Mat, Mat)> {
    let gs = gram_schmidt(a)?;
    Ok((gs.basis, gs.coeffs))
}

fn check_input(vectors: &Mat, metric: &Metric) -> Result<()> {
    if vectors.cols() > vectors.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} vectors cannot be independent in dimension {}",
            vectors.cols(),
            vectors.rows()
        )));
    }
    metric.check_dim(vectors.rows())
}

impl Mat {
    // `from_cols` on an empty list yields a 0x0 matrix; keep the row count.
    fn with_rows(self, rows: usize) -> Mat {
        if self.cols() == 0 {
            Mat::zeros(rows, 0)
        } else {
            self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormality_defect;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn orthonormal_input_is_unchanged() {
        let x = Mat::from_cols(&[e(3, 0), e(3, 1)]).unwrap();
        let gs = gram_schmidt(&x).unwrap();
        assert_eq!(gs.basis, x);
        assert_eq!(gs.residual_norms, vec![1.0, 1.0]);
    }

    #[test]
    fn one_projection_step() {
        let x = Mat::from_cols(&[e(3, 0), vec![1.0, 1.0, 0.0]]).unwrap();
        let gs = gram_schmidt(&x).unwrap();
        assert_eq!(gs.basis.col(1), e(3, 1));
        assert_eq!(gs.coeffs.col(1), vec![1.0, 1.0]);
        assert_eq!(gs.coeffs[(1, 0)], 0.0);
    }

    #[test]
    fn dependent_pair_is_rejected() {
        let x = Mat::from_cols(&[e(3, 0), vec![2.0, 0.0, 0.0]]).unwrap();
        match gram_schmidt(&x) {
            Err(Error::DependentInput { column: 1, .. }) => {}
            other => panic!("expected DependentInput, got {other:?}"),
        }
        let zero = Mat::from_cols(&[vec![0.0; 3]]).unwrap();
        assert!(matches!(
            gram_schmidt(&zero),
            Err(Error::DependentInput { column: 0, .. })
        ));
    }

    #[test]
    fn too_many_columns_rejected() {
        let x = Mat::from_cols(&[e(2, 0), e(2, 1), e(2, 0)]).unwrap();
        assert!(matches!(gram_schmidt(&x), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn smoothed_normalize_cases() {
        let y = smoothed_normalize(&[3.0, 4.0], 0.0).unwrap();
        assert_eq!(y, vec![0.6, 0.8]);
        assert_eq!(
            smoothed_normalize(&[0.0, 0.0], 0.1).unwrap(),
            vec![0.0, 0.0]
        );
        assert!(matches!(
            smoothed_normalize(&[0.0], 0.0),
            Err(Error::ZeroVector)
        ));

        let eps = 0.25;
        let x = [0.15, 0.2];
        let y = smoothed_normalize(&x, eps).unwrap();
        let expected = x.map(|v| v / (eps * 2f64.sqrt()));
        for (a, b) in y.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn network_tolerates_dependent_input() {
        let x = Mat::from_cols(&[e(3, 0), vec![2.0, 0.0, 0.0]]).unwrap();
        let eps = 0.1;
        let gs = gram_schmidt_network(&x, eps).unwrap();
        // x̄₁ = e₁/√(1+ε²) is not unit length, so ρ(x₂) = 2(1 − 1/(1+ε²)) e₁.
        let expected = 2.0 * (1.0 - 1.0 / (1.0 + eps * eps));
        assert!((gs.residual_norms[1] - expected).abs() < 1e-14);
        assert!(gs.basis.col(1)[1..].iter().all(|v| *v == 0.0));

        let tiny = gram_schmidt_network(&x, 1e-6).unwrap();
        assert!(tiny.basis.col(1).iter().all(|v| v.abs() < 1e-5));
    }

    #[test]
    fn network_limit_matches_exact() {
        let x = Mat::from_cols(&[vec![1.0, 2.0, 0.5], vec![0.0, 1.0, 3.0]]).unwrap();
        let exact = gram_schmidt(&x).unwrap();
        let net = gram_schmidt_network(&x, 1e-12).unwrap();
        assert!(exact.basis.max_abs_diff(&net.basis) < 1e-8);
        assert!(gram_schmidt_network(&x, 0.0).is_err());
    }

    #[test]
    fn qr_of_upper_triangular() {
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let (q, r) = qr_decompose(&a).unwrap();
        assert_eq!(q, Mat::identity(2));
        assert_eq!(r, a);
        let (q, r) = qr_decompose(&Mat::identity(3)).unwrap();
        assert_eq!(q, Mat::identity(3));
        assert_eq!(r, Mat::identity(3));
    }

    #[test]
    fn weighted_basis_is_metric_orthonormal() {
        let m = Metric::diagonal(vec![1.0, 4.0, 0.25]).unwrap();
        let x = Mat::from_cols(&[vec![1.0, 1.0, 1.0], vec![0.0, 1.0, 2.0]]).unwrap();
        let gs = gram_schmidt_in(&x, &m).unwrap();
        assert!(orthonormality_defect(&gs.basis, &m) < 1e-14);
        let back = gs.basis.matmul(&gs.coeffs);
        assert!(back.max_abs_diff(&x) < 1e-14);
    }

    #[test]
    fn replay_reproduces_linear_images() {
        let x = Mat::from_cols(&[vec![1.0, 2.0, 0.5], vec![0.0, 1.0, 3.0]]).unwrap();
        let f = Mat::from_rows(&[vec![1.0, 0.0, 2.0], vec![0.0, -1.0, 1.0]]).unwrap();
        let gs = gram_schmidt(&x).unwrap();
        let replayed = gs.replay(&f.matmul(&x)).unwrap();
        assert!(replayed.max_abs_diff(&f.matmul(&gs.basis)) < 1e-14);
    }
}

//! Operator-free learning of a singular system from training pairs.
//!
//! The images `x_i` are orthonormalized by Gram-Schmidt and the recorded
//! recursion is replayed on the data `y_i = F x_i`, which yields
//! `ȳ_i = F x̄_i` without ever applying `F`. Principal component analysis
//! of the `ȳ_i` then gives the left singular vectors `ψ_l` and the squared
//! singular values `λ_l` of `F` restricted to the span of the images.
//!
//! Image and data spaces carry their own [`Metric`]; inner products,
//! orthonormality and the covariance all refer to them.

use crate::error::{Error, Result};
use crate::linalg::{
    axpy, gram_schmidt_in, gram_schmidt_network_in, symmetric_eig, GramSchmidtResult, Mat, Metric,
};

/// Relative eigenvalue floor: `λ < LAMBDA_CUTOFF · λ_max` counts as zero.
pub const LAMBDA_CUTOFF: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct TrainingSet {
    /// Columns `x_i`.
    pub images: Mat,
    /// Columns `y_i = F x_i`.
    pub data: Mat,
    pub image_metric: Metric,
    pub data_metric: Metric,
}

impl TrainingSet {
    /// Training pairs with Euclidean inner products on both sides.
    pub fn new(images: Mat, data: Mat) -> Result<Self> {
        Self::with_metrics(images, data, Metric::Euclidean, Metric::Euclidean)
    }

    pub fn with_metrics(
        images: Mat,
        data: Mat,
        image_metric: Metric,
        data_metric: Metric,
    ) -> Result<Self> {
        if images.cols() != data.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} images but {} data columns",
                images.cols(),
                data.cols()
            )));
        }
        let n = images.cols();
        if n > images.rows() || n > data.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{n} training pairs exceed the dimensions {}x{}",
                images.rows(),
                data.rows()
            )));
        }
        image_metric.check_dim(images.rows())?;
        data_metric.check_dim(data.rows())?;
        Ok(TrainingSet {
            images,
            data,
            image_metric,
            data_metric,
        })
    }

    pub fn len(&self) -> usize {
        self.images.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum EncodeMode {
    Exact,
    /// Gram-Schmidt network with smoothing parameter `ε`.
    Smoothed(f64),
}

#[derive(Clone, Debug)]
pub struct LearnedSpectrum {
    /// Columns `ψ_l`, orthonormal in the data metric.
    pub psis: Mat,
    /// `λ_l`, descending.
    pub lambdas: Vec<f64>,
    /// `√λ_l`.
    pub gammas_learned: Vec<f64>,
    /// Columns `c_l` with `ψ_l = Ȳ c_l`.
    pub coeffs_c: Mat,
    /// Orthonormalized images `x̄_i` and the recorded recursion.
    pub ortho_images: GramSchmidtResult,
    /// Columns `ȳ_i = F x̄_i`.
    pub ortho_data: Mat,
    pub image_metric: Metric,
    pub data_metric: Metric,
}

impl LearnedSpectrum {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn psi(&self, l: usize) -> Vec<f64> {
        self.psis.col(l)
    }

    /// Image-side singular vector `X̄ c_l`, the preimage of `ψ_l`.
    pub fn image_mode(&self, l: usize) -> Vec<f64> {
        self.ortho_images.basis.matvec(&self.coeffs_c.col(l))
    }

    /// `Σ ⟨x, x̄_i⟩ ȳ_i`, which equals `F x` for `x` in the span of the
    /// training images.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let basis = &self.ortho_images.basis;
        if x.len() != basis.rows() {
            return Err(Error::DimensionMismatch(format!(
                "image has length {}, expected {}",
                x.len(),
                basis.rows()
            )));
        }
        let mut y = vec![0.0; self.ortho_data.rows()];
        for i in 0..basis.cols() {
            axpy(
                self.image_metric.inner(x, &basis.col(i)),
                &self.ortho_data.col(i),
                &mut y,
            );
        }
        Ok(y)
    }
}

/// Learns the singular system of the operator behind `training`.
///
/// The covariance `A = Ȳ Ȳᵀ M` (with `M` the data metric) is never formed;
/// its nonzero spectrum is read off the `N × N` Gram matrix
/// `G = Ȳᵀ M Ȳ`: if `G w = λ w` with `|w| = 1`, then `c = w/√λ` solves
/// `G c = Ȳᵀ M ψ` for `ψ = Ȳ c`, and `ψ` is a unit eigenvector of `A`.
///
/// In exact mode any eigenvalue below the cutoff is an error, because it
/// means some combination of training images is mapped to zero. In
/// smoothed mode such pairs are dropped.
pub fn encode(training: &TrainingSet, mode: EncodeMode) -> Result<LearnedSpectrum> {
    let ortho_images = match mode {
        EncodeMode::Exact => gram_schmidt_in(&training.images, &training.image_metric)?,
        EncodeMode::Smoothed(eps) => {
            gram_schmidt_network_in(&training.images, eps, &training.image_metric)?
        }
    };
    let ortho_data = ortho_images.replay(&training.data)?;
    let gram = training.data_metric.gram(&ortho_data, &ortho_data);
    let eig = symmetric_eig(&gram)?;

    let lambda_max = eig.values.first().copied().unwrap_or(0.0);
    let cutoff = LAMBDA_CUTOFF * lambda_max;
    let mut psis = Vec::new();
    let mut coeffs = Vec::new();
    let mut lambdas = Vec::new();
    for (l, &lambda) in eig.values.iter().enumerate() {
        if lambda.is_nan() || lambda <= cutoff {
            match mode {
                EncodeMode::Exact => return Err(Error::DegenerateData { lambda, cutoff }),
                EncodeMode::Smoothed(_) => continue,
            }
        }
        let scale = 1.0 / lambda.sqrt();
        let mut c: Vec<f64> = eig.vectors.col(l).iter().map(|w| w * scale).collect();
        let mut psi = ortho_data.matvec(&c);
        if orient_flip(&psi) {
            psi.iter_mut().for_each(|x| *x = -*x);
            c.iter_mut().for_each(|x| *x = -*x);
        }
        psis.push(psi);
        coeffs.push(c);
        lambdas.push(lambda);
    }
    if lambdas.is_empty() {
        return Err(Error::DegenerateData {
            lambda: lambda_max,
            cutoff,
        });
    }

    Ok(LearnedSpectrum {
        psis: Mat::from_cols(&psis)?,
        gammas_learned: lambdas.iter().map(|l| l.sqrt()).collect(),
        lambdas,
        coeffs_c: Mat::from_cols(&coeffs)?,
        ortho_images,
        ortho_data,
        image_metric: training.image_metric.clone(),
        data_metric: training.data_metric.clone(),
    })
}

/// True if the largest-magnitude entry of `v` is negative.
fn orient_flip(v: &[f64]) -> bool {
    let mut pivot = 0.0f64;
    for x in v {
        if x.abs() > pivot.abs() {
            pivot = *x;
        }
    }
    pivot < 0.0
}

/// One reference eigenspace: basis vectors sharing a singular value.
#[derive(Clone, Debug)]
pub struct ReferenceEigenspace {
    /// 1-based eigenspace label.
    pub label: usize,
    pub gamma: f64,
    /// Display names of the basis vectors.
    pub members: Vec<String>,
    /// Basis vectors as columns.
    pub basis: Mat,
}

/// Known eigenspaces of a reference operator, in a common data metric.
#[derive(Clone, Debug)]
pub struct ReferenceSpectrum {
    pub groups: Vec<ReferenceEigenspace>,
    pub metric: Metric,
}

impl ReferenceSpectrum {
    pub fn group(&self, label: usize) -> Option<&ReferenceEigenspace> {
        self.groups.iter().find(|g| g.label == label)
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct Regression {
    pub label: usize,
    /// Least-squares coefficients `ν_j` over the eigenspace basis.
    pub coefficients: Vec<f64>,
    /// `ψ − Σ ν_j v_j`.
    #[serde(skip)]
    pub residual: Vec<f64>,
    /// `‖ψ − Σ ν_j v_j‖ / ‖ψ‖` in the reference metric.
    pub relative_residual: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct Assignment {
    /// 0-based position of `ψ_h` in the learned spectrum.
    pub h: usize,
    /// Label of the best-fitting eigenspace.
    pub label: usize,
    /// Relative projection residual onto that eigenspace, in `[0, 1]`.
    pub score: f64,
    /// Regression onto the assigned eigenspace.
    pub regression: Regression,
    /// `(label, relative residual)` for every candidate.
    pub candidates: Vec<(usize, f64)>,
}

/// Least-squares fit of `psi` by the basis of eigenspace `label`.
pub fn regress(psi: &[f64], label: usize, reference: &ReferenceSpectrum) -> Result<Regression> {
    let group = reference
        .group(label)
        .ok_or_else(|| Error::Invalid(format!("no reference eigenspace {label}")))?;
    let projector = Projector::new(group, &reference.metric)?;
    projector.fit(psi, &reference.metric)
}

/// Assigns every learned `ψ_h` to the reference eigenspace with the
/// smallest relative projection residual.
pub fn classify(
    learned: &LearnedSpectrum,
    reference: &ReferenceSpectrum,
) -> Result<Vec<Assignment>> {
    classify_vectors(&learned.psis, reference)
}

/// [`classify`] for arbitrary columns.
pub fn classify_vectors(psis: &Mat, reference: &ReferenceSpectrum) -> Result<Vec<Assignment>> {
    if reference.groups.is_empty() {
        return Err(Error::Invalid(
            "reference spectrum has no eigenspaces".into(),
        ));
    }
    let projectors = reference
        .groups
        .iter()
        .map(|g| Projector::new(g, &reference.metric))
        .collect::<Result<Vec<_>>>()?;

    (0..psis.cols())
        .map(|h| {
            let psi = psis.col(h);
            let fits = projectors
                .iter()
                .map(|p| p.fit(&psi, &reference.metric))
                .collect::<Result<Vec<_>>>()?;
            let candidates: Vec<(usize, f64)> = fits
                .iter()
                .map(|f| (f.label, f.relative_residual))
                .collect();
            let best = fits
                .into_iter()
                .min_by(|a, b| a.relative_residual.total_cmp(&b.relative_residual))
                .expect("at least one eigenspace");
            Ok(Assignment {
                h,
                label: best.label,
                score: best.relative_residual,
                regression: best,
                candidates,
            })
        })
        .collect()
}

/// Orthogonal projection onto one eigenspace, through `V = Q R`.
struct Projector {
    label: usize,
    gs: GramSchmidtResult,
}

impl Projector {
    fn new(group: &ReferenceEigenspace, metric: &Metric) -> Result<Self> {
        metric.check_dim(group.basis.rows())?;
        Ok(Projector {
            label: group.label,
            gs: gram_schmidt_in(&group.basis, metric)?,
        })
    }

    fn fit(&self, psi: &[f64], metric: &Metric) -> Result<Regression> {
        let q = &self.gs.basis;
        if psi.len() != q.rows() {
            return Err(Error::DimensionMismatch(format!(
                "vector has length {}, eigenspace basis has {} rows",
                psi.len(),
                q.rows()
            )));
        }
        let n = q.cols();
        let qt_psi: Vec<f64> = (0..n).map(|i| metric.inner(&q.col(i), psi)).collect();
        let mut residual = psi.to_vec();
        for (i, a) in qt_psi.iter().enumerate() {
            axpy(-a, &q.col(i), &mut residual);
        }

        // Back substitution R ν = Qᵀ M ψ.
        let r = &self.gs.coeffs;
        let mut nu = vec![0.0; n];
        for i in (0..n).rev() {
            let tail: f64 = (i + 1..n).map(|j| r[(i, j)] * nu[j]).sum();
            nu[i] = (qt_psi[i] - tail) / r[(i, i)];
        }

        let psi_norm = metric.norm(psi);
        let relative_residual = if psi_norm > 0.0 {
            (metric.norm(&residual) / psi_norm).min(1.0)
        } else {
            0.0
        };
        Ok(Regression {
            label: self.label,
            coefficients: nu,
            residual,
            relative_residual,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_training(d: &[f64]) -> TrainingSet {
        let n = d.len();
        TrainingSet::new(Mat::identity(n), Mat::diag(d)).unwrap()
    }

    #[test]
    fn identity_operator() {
        let x = Mat::identity(4).scale(2.0);
        let spec = encode(&TrainingSet::new(x.clone(), x).unwrap(), EncodeMode::Exact).unwrap();
        assert!(spec.lambdas.iter().all(|l| (l - 1.0).abs() < 1e-12));
        assert!(
            spec.psis
                .transpose()
                .matmul(&spec.psis)
                .max_abs_diff(&Mat::identity(4))
                < 1e-12
        );
    }

    #[test]
    fn diagonal_operator() {
        let spec = encode(&diag_training(&[1.0, 3.0]), EncodeMode::Exact).unwrap();
        assert!((spec.gammas_learned[0] - 3.0).abs() < 1e-12);
        assert!((spec.gammas_learned[1] - 1.0).abs() < 1e-12);
        assert!((spec.psi(0)[1] - 1.0).abs() < 1e-12);
        assert!((spec.psi(1)[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nullspace_is_degenerate_in_exact_mode_and_dropped_when_smoothed() {
        let t = diag_training(&[2.0, 0.0, 1.0]);
        assert!(matches!(
            encode(&t, EncodeMode::Exact),
            Err(Error::DegenerateData { .. })
        ));
        let spec = encode(&t, EncodeMode::Smoothed(1e-12)).unwrap();
        assert_eq!(spec.len(), 2);
    }

    #[test]
    fn mismatched_training_rejected() {
        assert!(TrainingSet::new(Mat::identity(3), Mat::zeros(3, 2)).is_err());
        assert!(TrainingSet::new(Mat::zeros(2, 3), Mat::zeros(4, 3)).is_err());
    }

    #[test]
    fn regression_on_constructed_combination() {
        let reference = ReferenceSpectrum {
            groups: vec![
                ReferenceEigenspace {
                    label: 1,
                    gamma: 2.0,
                    members: vec!["e0".into()],
                    basis: Mat::from_cols(&[vec![1.0, 0.0, 0.0]]).unwrap(),
                },
                ReferenceEigenspace {
                    label: 2,
                    gamma: 1.0,
                    members: vec!["a".into(), "b".into()],
                    basis: Mat::from_cols(&[vec![0.0, 1.0, 1.0], vec![0.0, 0.0, 2.0]]).unwrap(),
                },
            ],
            metric: Metric::Euclidean,
        };
        let fit = regress(&[0.0, 1.0, 3.0], 2, &reference).unwrap();
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 1.0).abs() < 1e-12);
        assert!(fit.relative_residual < 1e-12);

        let half = regress(&[0.5, 0.0, 0.0], 1, &reference).unwrap();
        assert!((half.coefficients[0] - 0.5).abs() < 1e-15);
        assert!(regress(&[0.0; 3], 7, &reference).is_err());
    }
}

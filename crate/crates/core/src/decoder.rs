//! Minimum-norm decoding from a learned spectrum.
//!
//! Data `y` is projected onto the learned left singular vectors,
//! `y_ls = Σ ⟨y, ψ_l⟩ ψ_l`, and mapped back through the image-side modes:
//!
//! ```text
//! x_ls = Σ_l ⟨y, ψ_l⟩ / λ_l · F*ψ_l = Σ_l ⟨y, ψ_l⟩ · X̄ c_l
//! ```
//!
//! The second form uses `F*ψ_l = λ_l X̄ c_l`, which holds because
//! `ψ_l = F X̄ c_l` is a singular vector; no access to `F*` is needed.

use crate::error::{Error, Result};
use crate::learner::{LearnedSpectrum, LAMBDA_CUTOFF};
use crate::linalg::axpy;

#[derive(Clone, Debug, serde::Serialize)]
pub struct DecodeResult {
    pub x_ls: Vec<f64>,
    pub y_ls: Vec<f64>,
    /// `⟨y, ψ_l⟩` per retained mode.
    pub coefficients: Vec<f64>,
}

/// Number of modes used when at most `top_k` are requested.
fn retained(spectrum: &LearnedSpectrum, top_k: Option<usize>) -> usize {
    top_k.map_or(spectrum.len(), |k| k.min(spectrum.len()))
}

fn check_data(y: &[f64], spectrum: &LearnedSpectrum) -> Result<()> {
    if y.len() != spectrum.psis.rows() {
        return Err(Error::DimensionMismatch(format!(
            "data has length {}, spectrum expects {}",
            y.len(),
            spectrum.psis.rows()
        )));
    }
    Ok(())
}

/// `(y_ls, ⟨y, ψ_l⟩)` over the leading `top_k` modes (all if `None`).
pub fn project_data(
    y: &[f64],
    spectrum: &LearnedSpectrum,
    top_k: Option<usize>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_data(y, spectrum)?;
    let n = retained(spectrum, top_k);
    let mut y_ls = vec![0.0; y.len()];
    let mut coefficients = Vec::with_capacity(n);
    for l in 0..n {
        let psi = spectrum.psi(l);
        let a = spectrum.data_metric.inner(y, &psi);
        axpy(a, &psi, &mut y_ls);
        coefficients.push(a);
    }
    Ok((y_ls, coefficients))
}

/// Minimum-norm solution of `F x = y_ls`.
pub fn decode(y: &[f64], spectrum: &LearnedSpectrum, top_k: Option<usize>) -> Result<DecodeResult> {
    check_data(y, spectrum)?;
    let n = retained(spectrum, top_k);
    let lambda_max = spectrum.lambdas.first().copied().unwrap_or(0.0);
    if let Some(&lambda) = spectrum.lambdas[..n]
        .iter()
        .find(|&&l| l.is_nan() || l <= LAMBDA_CUTOFF * lambda_max)
    {
        return Err(Error::DegenerateSpectrum { lambda });
    }
    let (y_ls, coefficients) = project_data(y, spectrum, top_k)?;
    let mut x_ls = vec![0.0; spectrum.ortho_images.basis.rows()];
    for (l, a) in coefficients.iter().enumerate() {
        axpy(*a, &spectrum.image_mode(l), &mut x_ls);
    }
    Ok(DecodeResult {
        x_ls,
        y_ls,
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::{encode, EncodeMode, TrainingSet};
    use crate::linalg::Mat;

    fn diag_spectrum() -> LearnedSpectrum {
        let t = TrainingSet::new(Mat::identity(2), Mat::diag(&[3.0, 1.0])).unwrap();
        encode(&t, EncodeMode::Exact).unwrap()
    }

    #[test]
    fn inverts_diagonal_operator() {
        let r = decode(&[3.0, 0.0], &diag_spectrum(), None).unwrap();
        assert!((r.x_ls[0] - 1.0).abs() < 1e-12 && r.x_ls[1].abs() < 1e-12);
        let r = decode(&[0.0, 0.0], &diag_spectrum(), None).unwrap();
        assert_eq!(r.x_ls, vec![0.0, 0.0]);
        assert_eq!(r.y_ls, vec![0.0, 0.0]);
    }

    #[test]
    fn truncation_and_projection() {
        let s = diag_spectrum();
        let (y_ls, c) = project_data(&[2.0, 5.0], &s, Some(1)).unwrap();
        assert_eq!(c.len(), 1);
        assert!((y_ls[0] - 2.0).abs() < 1e-12 && y_ls[1].abs() < 1e-12);
        let (y_ls, c) = project_data(&s.psi(0), &s, None).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-12);
        assert!((y_ls[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_length() {
        assert!(matches!(
            decode(&[1.0], &diag_spectrum(), None),
            Err(Error::DimensionMismatch(_))
        ));
    }
}

//! Symmetric eigensolver by shifted QR iteration.
//!
//! Each step factors `A_k − μI = QR` with the Gram-Schmidt QR of this
//! module and continues with `A_{k+1} = RQ + μI`, a similarity transform.
//! The shift is Wilkinson's, taken from the trailing 2×2 block of the
//! active window; the window shrinks whenever its last row has decoupled.
//! Eigenvectors are the accumulated products of the `Q` factors.

use super::{qr_decompose, Mat};
use crate::error::{Error, Result};

/// Off-diagonal entries below `EIG_OFFDIAG_TOL · trace` count as zero.
pub const EIG_OFFDIAG_TOL: f64 = 1e-12;
pub const EIG_MAX_SWEEPS: usize = 10_000;

/// Relative asymmetry accepted on input.
const SYMMETRY_TOL: f64 = 1e-10;

/// Shift perturbations tried when `A − μI` is numerically singular, i.e.
/// when the shift already hit an eigenvalue.
const SHIFT_NUDGES: [f64; 4] = [1e-7, -3e-7, 1e-5, -3e-5];

#[derive(Clone, Debug, PartialEq)]
pub struct EigResult {
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: Mat,
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// QR steps taken.
    pub sweeps: usize,
}

pub fn symmetric_eig(a: &Mat) -> Result<EigResult> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let scale = a.max_abs();
    let asymmetry = a.sub(&a.transpose()).max_abs();
    if asymmetry > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric { asymmetry });
    }

    // Symmetrize exactly so that round-off asymmetry cannot accumulate.
    let mut work = a.clone();
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            work[(i, j)] = m;
            work[(j, i)] = m;
        }
    }

    let diag_mass: f64 = (0..n).map(|i| work[(i, i)].abs()).sum();
    let reference = if diag_mass > 0.0 {
        diag_mass
    } else {
        work.frobenius_norm()
    };
    let tol = EIG_OFFDIAG_TOL * reference;
    let mut vectors = Mat::identity(n);
    let mut sweeps = 0;

    let mut active = n;
    while active > 1 {
        let last = active - 1;
        let coupling = (0..last).fold(0.0, |m: f64, j| m.max(work[(last, j)].abs()));
        if coupling <= tol {
            for j in 0..last {
                work[(last, j)] = 0.0;
                work[(j, last)] = 0.0;
            }
            active = last;
            continue;
        }
        if sweeps == EIG_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;

        let block = leading_block(&work, active);
        let mu = wilkinson_shift(
            block[(last - 1, last - 1)],
            block[(last - 1, last)],
            block[(last, last)],
        );
        let (q, r, shift) = shifted_qr(&block, mu, reference)?;

        let mut next = r.matmul(&q);
        for i in 0..active {
            next[(i, i)] += shift;
        }
        for i in 0..active {
            for j in 0..=i {
                let m = 0.5 * (next[(i, j)] + next[(j, i)]);
                work[(i, j)] = m;
                work[(j, i)] = m;
            }
        }
        rotate_leading_cols(&mut vectors, &q);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| work[(j, j)].total_cmp(&work[(i, i)]));
    let values = order.iter().map(|&i| work[(i, i)]).collect();
    let mut sorted = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = vectors.col(src);
        orient(&mut v);
        sorted.set_col(dst, &v);
    }

    Ok(EigResult {
        vectors: sorted,
        values,
        sweeps,
    })
}

/// Flips `v` so that its largest-magnitude entry is positive.
pub(crate) fn orient(v: &mut [f64]) {
    let mut pivot = 0.0f64;
    for x in v.iter() {
        if x.abs() > pivot.abs() {
            pivot = *x;
        }
    }
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn wilkinson_shift(a: f64, b: f64, c: f64) -> f64 {
    let d = 0.5 * (a - c);
    if b == 0.0 {
        return c;
    }
    let sign = if d >= 0.0 { 1.0 } else { -1.0 };
    c - sign * b * b / (d.abs() + d.hypot(b))
}

fn shifted_qr(block: &Mat, mu: f64, scale: f64) -> Result<(Mat, Mat, f64)> {
    let mut last_err = None;
    for shift in std::iter::once(mu).chain(SHIFT_NUDGES.iter().map(|d| mu + d * scale)) {
        let mut shifted = block.clone();
        for i in 0..block.rows() {
            shifted[(i, i)] -= shift;
        }
        match qr_decompose(&shifted) {
            Ok((q, r)) => return Ok((q, r, shift)),
            Err(e @ Error::DependentInput { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one shift attempted"))
}

fn leading_block(a: &Mat, k: usize) -> Mat {
    let mut b = Mat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            b[(i, j)] = a[(i, j)];
        }
    }
    b
}

/// `V[:, ..k] ← V[:, ..k] · Q` for a k×k `Q`.
fn rotate_leading_cols(v: &mut Mat, q: &Mat) {
    let k = q.rows();
    let mut row_buf = vec![0.0; k];
    for i in 0..v.rows() {
        row_buf.iter_mut().for_each(|x| *x = 0.0);
        for l in 0..k {
            let vil = v[(i, l)];
            if vil == 0.0 {
                continue;
            }
            for (j, out) in row_buf.iter_mut().enumerate() {
                *out += vil * q[(l, j)];
            }
        }
        for (j, x) in row_buf.iter().enumerate() {
            v[(i, j)] = *x;
        }
    }
}

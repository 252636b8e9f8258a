//! Test-only reference implementations, independent of the library's
//! Gram-Schmidt code path.

#![allow(dead_code, clippy::needless_range_loop)]

use oplearn::linalg::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_mat(rows: usize, cols: usize, seed: u64) -> Mat {
    let mut r = rng(seed);
    let data = (0..rows * cols).map(|_| r.gen_range(-1.0..1.0)).collect();
    Mat::from_row_major(rows, cols, data).unwrap()
}

/// Householder QR of a tall matrix; returns thin `Q` (rows × cols) and `R`.
pub fn householder_qr(a: &Mat) -> (Mat, Mat) {
    let (m, n) = (a.rows(), a.cols());
    let mut r: Vec<Vec<f64>> = (0..m).map(|i| a.row(i).to_vec()).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::new();
    for k in 0..n {
        let norm: f64 = (k..m).map(|i| r[i][k] * r[i][k]).sum::<f64>().sqrt();
        let alpha = if r[k][k] > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; m];
        for i in k..m {
            v[i] = r[i][k];
        }
        v[k] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in 0..n {
                let s: f64 = (k..m).map(|i| v[i] * r[i][j]).sum::<f64>() * 2.0 / vnorm2;
                for i in k..m {
                    r[i][j] -= s * v[i];
                }
            }
        }
        reflectors.push(v);
    }
    // Q = H_0 H_1 ... H_{n-1} applied to the first n unit vectors.
    let mut q = vec![vec![0.0; n]; m];
    for j in 0..n {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        for v in reflectors.iter().rev() {
            let vnorm2: f64 = v.iter().map(|x| x * x).sum();
            if vnorm2 == 0.0 {
                continue;
            }
            let s: f64 = v.iter().zip(&e).map(|(a, b)| a * b).sum::<f64>() * 2.0 / vnorm2;
            for i in 0..m {
                e[i] -= s * v[i];
            }
        }
        for i in 0..m {
            q[i][j] = e[i];
        }
    }
    let r_top: Vec<Vec<f64>> = r.into_iter().take(n).collect();
    (Mat::from_rows(&q).unwrap(), Mat::from_rows(&r_top).unwrap())
}

/// Cyclic Jacobi eigensolver for symmetric matrices. Eigenvalues descending.
pub fn jacobi_eig(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]));
    let values = order.iter().map(|&i| m[i][i]).collect();
    let cols: Vec<Vec<f64>> = order
        .iter()
        .map(|&j| (0..n).map(|i| v[i][j]).collect())
        .collect();
    (values, Mat::from_cols(&cols).unwrap())
}

/// Largest deviation between columns of `a` and `b` after matching signs.
pub fn max_col_diff_up_to_sign(a: &Mat, b: &Mat) -> f64 {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    (0..a.cols())
        .map(|j| {
            let (x, y) = (a.col(j), b.col(j));
            let plus = x
                .iter()
                .zip(&y)
                .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            let minus = x
                .iter()
                .zip(&y)
                .fold(0.0f64, |m, (p, q)| m.max((p + q).abs()));
            plus.min(minus)
        })
        .fold(0.0, f64::max)
}

/// Random symmetric positive semidefinite matrix `BᵀB`.
pub fn random_psd(n: usize, seed: u64) -> Mat {
    let b = random_mat(n, n, seed);
    b.transpose().matmul(&b)
}

pub fn to_na(a: &Mat) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

pub fn from_na(a: &nalgebra::DMatrix<f64>) -> Mat {
    let rows: Vec<Vec<f64>> = (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect();
    Mat::from_rows(&rows).unwrap()
}

/// Random square operator `U diag(sigma) Vᵀ` with prescribed singular
/// values; also returns the left singular vectors as columns.
pub fn operator_with_singular_values(sigma: &[f64], seed: u64) -> (Mat, Mat, Mat) {
    let n = sigma.len();
    let (u, _) = householder_qr(&random_mat(n, n, seed));
    let (v, _) = householder_qr(&random_mat(n, n, seed.wrapping_add(0x9e37_79b9)));
    let f = u.matmul(&Mat::diag(sigma)).matmul(&v.transpose());
    (f, u, v)
}

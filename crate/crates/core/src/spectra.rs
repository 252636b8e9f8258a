//! Analytical singular system of the Radon transform on the unit disk.
//!
//! For `(k, l)` with `0 ≤ l ≤ k` and `k + l` even,
//!
//! ```text
//! v_{k,l}(φ, s) = c(k) · w(s) · C_k(s) · Y_{k−2l}(φ),   u_{k,l} = R*[v_{k,l}] / γ_k,
//! γ_k² = 4π / (k + 1),
//! ```
//!
//! where `C_k` is the Chebyshev polynomial of the second kind and `Y_n` a
//! real circular harmonic. Singular functions sharing `k` span one
//! eigenspace, labelled `E^{k+1}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::learner::{ReferenceEigenspace, ReferenceSpectrum};
use crate::linalg::Mat;
use crate::radon::{self, weight, RadonGeometry};

/// Member `(k, l)` of the index set: `l ≤ k` and `k + l` even.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct SpectralIndex {
    pub k: usize,
    pub l: usize,
}

impl SpectralIndex {
    pub fn new(k: usize, l: usize) -> Result<Self> {
        if l > k || !(k + l).is_multiple_of(2) {
            return Err(Error::Invalid(format!(
                "({k}, {l}) is not a singular index"
            )));
        }
        Ok(SpectralIndex { k, l })
    }

    /// Angular order `k − 2l` of the circular harmonic.
    pub fn harmonic_order(&self) -> i64 {
        self.k as i64 - 2 * self.l as i64
    }

    /// 1-based eigenspace label `k + 1`.
    pub fn eigenspace(&self) -> usize {
        self.k + 1
    }
}

/// All singular indices with `k ≤ k_max`, ordered by `(k, l)`.
pub fn indices_up_to(k_max: usize) -> Vec<SpectralIndex> {
    (0..=k_max)
        .flat_map(|k| {
            (0..=k)
                .filter(move |l| (k + l) % 2 == 0)
                .map(move |l| SpectralIndex { k, l })
        })
        .collect()
}

/// `C_k(s) = sin((k+1) arccos s) / sin(arccos s)` by the three-term
/// recurrence `C₀ = 1`, `C₁ = 2s`, `C_{k+1} = 2s C_k − C_{k−1}`.
pub fn chebyshev_u(k: usize, s: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 2.0 * s);
    if k == 0 {
        return prev;
    }
    for _ in 1..k {
        let next = 2.0 * s * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Real circular harmonic, orthonormal on `[0, 2π)`:
/// `cos(nφ)/√π` for `n > 0`, `sin(|n|φ)/√π` for `n < 0`, `1/√(2π)` for 0.
pub fn circular_harmonic(n: i64, phi: f64) -> f64 {
    match n {
        0 => 1.0 / (2.0 * PI).sqrt(),
        n if n > 0 => (n as f64 * phi).cos() / PI.sqrt(),
        n => ((-n) as f64 * phi).sin() / PI.sqrt(),
    }
}

/// `γ_k = √(4π / (k + 1))`.
pub fn gamma_value(k: usize) -> f64 {
    (4.0 * PI / (k as f64 + 1.0)).sqrt()
}

/// Number of singular indices with `k ≤ k_max`: `Σ_k (⌊k/2⌋ + 1)`.
pub fn index_count(k_max: usize) -> usize {
    (0..=k_max).map(|k| k / 2 + 1).sum()
}

#[derive(Clone, Debug)]
pub struct AnalyticalSpectrum {
    pub geometry: RadonGeometry,
    pub indices: Vec<SpectralIndex>,
    /// `γ_k` per index.
    pub gammas: Vec<f64>,
    /// Discretized `v_{k,l}` per index, weighted-normalized.
    pub v_funcs: Vec<Vec<f64>>,
    /// `R*[v_{k,l}] / γ_k` per index.
    pub u_funcs: Vec<Vec<f64>>,
    /// Normalization `c(k)` used per index.
    pub norm_consts: Vec<f64>,
    /// Eigenspace label `k + 1` → positions in `indices`.
    pub eigenspaces: BTreeMap<usize, Vec<usize>>,
}

impl AnalyticalSpectrum {
    /// Distinct singular values, one per eigenspace, descending.
    pub fn distinct_values(&self) -> Vec<f64> {
        self.eigenspaces
            .values()
            .map(|members| self.gammas[members[0]])
            .collect()
    }

    pub fn position(&self, index: SpectralIndex) -> Option<usize> {
        self.indices.iter().position(|i| *i == index)
    }

    pub fn v(&self, k: usize, l: usize) -> Option<&[f64]> {
        let pos = self.position(SpectralIndex::new(k, l).ok()?)?;
        Some(&self.v_funcs[pos])
    }

    pub fn u(&self, k: usize, l: usize) -> Option<&[f64]> {
        let pos = self.position(SpectralIndex::new(k, l).ok()?)?;
        Some(&self.u_funcs[pos])
    }

    /// Image functions as columns (`m̲ × count`).
    pub fn u_matrix(&self) -> Mat {
        Mat::from_cols(&self.u_funcs).expect("u functions share the image grid")
    }

    /// Data functions as columns (`m̄ × count`).
    pub fn v_matrix(&self) -> Mat {
        Mat::from_cols(&self.v_funcs).expect("v functions share the sinogram grid")
    }

    /// Eigenspace bases in the form the learner classifies against.
    pub fn reference(&self) -> ReferenceSpectrum {
        let groups = self
            .eigenspaces
            .iter()
            .map(|(&label, members)| ReferenceEigenspace {
                label,
                gamma: self.gammas[members[0]],
                members: members
                    .iter()
                    .map(|&m| format!("v_{{{},{}}}", self.indices[m].k, self.indices[m].l))
                    .collect(),
                basis: Mat::from_cols(
                    &members
                        .iter()
                        .map(|&m| self.v_funcs[m].clone())
                        .collect::<Vec<_>>(),
                )
                .expect("eigenspace members share the sinogram grid"),
            })
            .collect();
        ReferenceSpectrum {
            groups,
            metric: self.geometry.data_metric(),
        }
    }
}

/// Discretizes the singular system for all `k ≤ k_max` on `geom`.
///
/// `c(k)` is fixed numerically so that each discrete `v_{k,l}` has unit
/// weighted norm on the grid.
pub fn build_spectrum(k_max: usize, geom: &RadonGeometry) -> Result<AnalyticalSpectrum> {
    geom.validate()?;
    let indices = indices_up_to(k_max);
    let mut gammas = Vec::with_capacity(indices.len());
    let mut v_funcs = Vec::with_capacity(indices.len());
    let mut u_funcs = Vec::with_capacity(indices.len());
    let mut norm_consts = Vec::with_capacity(indices.len());
    let mut eigenspaces: BTreeMap<usize, Vec<usize>> = BTreeMap::new();

    for (pos, idx) in indices.iter().enumerate() {
        let order = idx.harmonic_order();
        let raw = geom.sample_sinogram(|phi, s| {
            weight(s) * chebyshev_u(idx.k, s) * circular_harmonic(order, phi)
        });
        let c = 1.0 / radon::weighted_inner(&raw, &raw, geom)?.sqrt();
        let v: Vec<f64> = raw.iter().map(|x| x * c).collect();
        let gamma = gamma_value(idx.k);
        let u: Vec<f64> = radon::radon_adjoint(&v, geom)?
            .into_iter()
            .map(|x| x / gamma)
            .collect();
        gammas.push(gamma);
        v_funcs.push(v);
        u_funcs.push(u);
        norm_consts.push(c);
        eigenspaces.entry(idx.eigenspace()).or_default().push(pos);
    }

    Ok(AnalyticalSpectrum {
        geometry: *geom,
        indices,
        gammas,
        v_funcs,
        u_funcs,
        norm_consts,
        eigenspaces,
    })
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SingularResidual {
    pub index: SpectralIndex,
    /// `‖R u − γ v‖_w / γ`.
    pub residual: f64,
}

/// Checks `R u_{k,l} = γ_k v_{k,l}` with the discrete forward transform.
pub fn verify_singular_relation(spectrum: &AnalyticalSpectrum) -> Result<Vec<SingularResidual>> {
    let geom = &spectrum.geometry;
    spectrum
        .indices
        .iter()
        .enumerate()
        .map(|(pos, idx)| {
            let ru = radon::radon_forward(&spectrum.u_funcs[pos], geom)?;
            let gamma = spectrum.gammas[pos];
            let diff: Vec<f64> = ru
                .iter()
                .zip(&spectrum.v_funcs[pos])
                .map(|(a, b)| a - gamma * b)
                .collect();
            Ok(SingularResidual {
                index: *idx,
                residual: radon::weighted_inner(&diff, &diff, geom)?.sqrt() / gamma,
            })
        })
        .collect()
}

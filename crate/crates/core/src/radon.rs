//! Radon transform on the unit disk, discretized.
//!
//! Images live on an `n_pix × n_pix` grid of pixel centers over `[−1,1]²`
//! (row-major, row 0 at `y ≈ −1`, column 0 at `x ≈ −1`); pixels whose
//! center lies outside the unit disk are treated as zero. Sinograms are
//! indexed angle-major: entry `i·n_offsets + j` holds the line integral
//! along `{s_j ω(φ_i) + t ω(φ_i)^⊥}` with `ω(φ) = (cos φ, sin φ)`,
//! `φ_i = 2πi/n_angles` and cell-centered offsets
//! `s_j = −1 + (j + ½)·2/n_offsets`, which stay away from `s = ±1`, where
//! `w(s) = √(1−s²)` vanishes.
//!
//! Image space carries the `L²` inner product (pixel area weights), data
//! space the `L²(Z, w⁻¹)` inner product with midpoint weights
//! `Δφ Δs / w(s_j)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{dot, Metric};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RadonGeometry {
    pub n_pix: usize,
    pub n_angles: usize,
    pub n_offsets: usize,
    /// Midpoint samples along each chord.
    pub t_samples: usize,
}

impl Default for RadonGeometry {
    fn default() -> Self {
        RadonGeometry::new(50, 50, 50).expect("default geometry is valid")
    }
}

impl RadonGeometry {
    /// Geometry with `t_samples = 2·n_pix`.
    pub fn new(n_pix: usize, n_angles: usize, n_offsets: usize) -> Result<Self> {
        let geom = RadonGeometry {
            n_pix,
            n_angles,
            n_offsets,
            t_samples: 2 * n_pix,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pix < 2 || self.n_angles < 2 || self.n_offsets < 2 || self.t_samples < 2 {
            return Err(Error::Invalid(format!(
                "all geometry counts must be at least 2: {self:?}"
            )));
        }
        Ok(())
    }

    /// Image dimension `n_pix²`.
    pub fn image_len(&self) -> usize {
        self.n_pix * self.n_pix
    }

    /// Data dimension `n_angles · n_offsets`.
    pub fn data_len(&self) -> usize {
        self.n_angles * self.n_offsets
    }

    pub fn pixel_size(&self) -> f64 {
        2.0 / self.n_pix as f64
    }

    pub fn pixel_center(&self, index: usize) -> (f64, f64) {
        let h = self.pixel_size();
        let (r, c) = (index / self.n_pix, index % self.n_pix);
        (-1.0 + (c as f64 + 0.5) * h, -1.0 + (r as f64 + 0.5) * h)
    }

    pub fn inside_disk(&self, index: usize) -> bool {
        let (x, y) = self.pixel_center(index);
        x * x + y * y < 1.0
    }

    pub fn angle(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.n_angles as f64
    }

    pub fn angle_step(&self) -> f64 {
        2.0 * PI / self.n_angles as f64
    }

    pub fn offset(&self, j: usize) -> f64 {
        -1.0 + (j as f64 + 0.5) * self.offset_step()
    }

    pub fn offset_step(&self) -> f64 {
        2.0 / self.n_offsets as f64
    }

    pub fn image_metric(&self) -> Metric {
        let h = self.pixel_size();
        Metric::Diagonal(vec![h * h; self.image_len()])
    }

    pub fn data_metric(&self) -> Metric {
        Metric::Diagonal(self.data_weights())
    }

    /// Quadrature weights `Δφ Δs / w(s_j)` in sinogram order.
    pub fn data_weights(&self) -> Vec<f64> {
        let base = self.angle_step() * self.offset_step();
        let per_offset: Vec<f64> = (0..self.n_offsets)
            .map(|j| base / weight(self.offset(j)))
            .collect();
        per_offset
            .iter()
            .copied()
            .cycle()
            .take(self.data_len())
            .collect()
    }

    /// Evaluates `f(x, y)` at pixel centers, zero outside the disk.
    pub fn sample_image(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.image_len())
            .map(|p| {
                if self.inside_disk(p) {
                    let (x, y) = self.pixel_center(p);
                    f(x, y)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Evaluates `g(φ, s)` on the sinogram grid.
    pub fn sample_sinogram(&self, g: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data_len());
        for i in 0..self.n_angles {
            let phi = self.angle(i);
            for j in 0..self.n_offsets {
                out.push(g(phi, self.offset(j)));
            }
        }
        out
    }

    /// Zeroes pixels outside the unit disk.
    pub fn mask_image(&self, f: &mut [f64]) {
        for (p, v) in f.iter_mut().enumerate() {
            if !self.inside_disk(p) {
                *v = 0.0;
            }
        }
    }

    pub fn check_image(&self, f: &[f64]) -> Result<()> {
        check_len(self.image_len(), f.len())
    }

    pub fn check_sinogram(&self, g: &[f64]) -> Result<()> {
        check_len(self.data_len(), g.len())
    }

    /// `key=value` lines, one per field.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n_pix={}", self.n_pix);
        let _ = writeln!(s, "n_angles={}", self.n_angles);
        let _ = writeln!(s, "n_offsets={}", self.n_offsets);
        let _ = writeln!(s, "t_samples={}", self.t_samples);
        s
    }

    /// Parses `key=value` lines; `#` starts a comment. Missing keys keep
    /// their defaults, and `t_samples` defaults to `2·n_pix`.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut geom = RadonGeometry::default();
        let mut t_samples = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            let value: usize = value.trim().parse().map_err(|_| {
                Error::Parse(format!(
                    "line {}: bad integer {:?}",
                    lineno + 1,
                    value.trim()
                ))
            })?;
            match key.trim() {
                "n_pix" => geom.n_pix = value,
                "n_angles" => geom.n_angles = value,
                "n_offsets" => geom.n_offsets = value,
                "t_samples" => t_samples = Some(value),
                other => {
                    return Err(Error::Parse(format!(
                        "line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        geom.t_samples = t_samples.unwrap_or(2 * geom.n_pix);
        geom.validate()?;
        Ok(geom)
    }

    /// Bilinear interpolation of a pixel image at `(x, y)`.
    fn interpolate(&self, f: &[f64], x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for_each_bilinear(self, x, y, |p, w| acc += w * f[p]);
        acc
    }

    /// Linear interpolation stencil `(offset index, weight)` at `s`,
    /// extrapolating from the outermost pair beyond the first and last node.
    fn offset_stencil(&self, s: f64) -> [(usize, f64); 2] {
        let pos = (s + 1.0) / self.offset_step() - 0.5;
        let j0 = (pos.floor().max(0.0) as usize).min(self.n_offsets - 2);
        let t = pos - j0 as f64;
        [(j0, 1.0 - t), (j0 + 1, t)]
    }
}

/// `w(s) = √(1 − s²)`.
pub fn weight(s: f64) -> f64 {
    (1.0 - s * s).max(0.0).sqrt()
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::GeometryMismatch { expected, actual })
    }
}

/// Calls `visit(pixel, weight)` for the in-disk pixels of the bilinear
/// stencil around `(x, y)`. Near the rim the weights are renormalized over
/// the in-disk pixels, so that the zero padding outside the disk does not
/// leak into the interpolant.
fn for_each_bilinear(geom: &RadonGeometry, x: f64, y: f64, mut visit: impl FnMut(usize, f64)) {
    let n = geom.n_pix as isize;
    let h = geom.pixel_size();
    let u = (x + 1.0) / h - 0.5;
    let v = (y + 1.0) / h - 0.5;
    let (c0, r0) = (u.floor(), v.floor());
    let (fx, fy) = (u - c0, v - r0);
    let (c0, r0) = (c0 as isize, r0 as isize);
    let mut stencil = [(0usize, 0.0f64); 4];
    let mut count = 0;
    let mut total = 0.0;
    for (dr, wy) in [(0, 1.0 - fy), (1, fy)] {
        let r = r0 + dr;
        if r < 0 || r >= n {
            continue;
        }
        for (dc, wx) in [(0, 1.0 - fx), (1, fx)] {
            let c = c0 + dc;
            if c < 0 || c >= n {
                continue;
            }
            let p = (r * n + c) as usize;
            if geom.inside_disk(p) {
                stencil[count] = (p, wx * wy);
                count += 1;
                total += wx * wy;
            }
        }
    }
    if total > 0.0 {
        for &(p, w) in &stencil[..count] {
            visit(p, w / total);
        }
    }
}

/// Chord geometry for sinogram entry `(i, j)`: start point, step vector,
/// and step length.
fn chord(geom: &RadonGeometry, i: usize, j: usize) -> ((f64, f64), (f64, f64), f64) {
    let (sin, cos) = geom.angle(i).sin_cos();
    let s = geom.offset(j);
    let half = weight(s);
    let dt = 2.0 * half / geom.t_samples as f64;
    let t0 = -half + 0.5 * dt;
    // s·ω + t·ω^⊥ with ω^⊥ = (−sin φ, cos φ)
    let start = (s * cos - t0 * sin, s * sin + t0 * cos);
    ((start.0, start.1), (-dt * sin, dt * cos), dt)
}

/// `R[f](φ_i, s_j) ≈ Σ_k f(s_j ω + t_k ω^⊥) Δt` by the composite midpoint
/// rule along the chord with bilinear interpolation of `f`.
pub fn radon_forward(f: &[f64], geom: &RadonGeometry) -> Result<Vec<f64>> {
    geom.check_image(f)?;
    let mut out = vec![0.0; geom.data_len()];
    out.par_chunks_mut(geom.n_offsets)
        .enumerate()
        .for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                let ((mut x, mut y), (dx, dy), dt) = chord(geom, i, j);
                let mut acc = 0.0;
                for _ in 0..geom.t_samples {
                    acc += geom.interpolate(f, x, y);
                    x += dx;
                    y += dy;
                }
                *slot = acc * dt;
            }
        });
    Ok(out)
}

/// `R*[g](x) ≈ Σ_i Δφ · (g/w)(φ_i, x·ω_i)`: trapezoid rule over the
/// periodic angle grid with linear interpolation in the offset of the
/// samples `g(φ_i, s_j)/w(s_j)`. Zero outside the disk.
pub fn radon_adjoint(g: &[f64], geom: &RadonGeometry) -> Result<Vec<f64>> {
    geom.check_sinogram(g)?;
    let n_off = geom.n_offsets;
    let scaled: Vec<f64> = g
        .iter()
        .enumerate()
        .map(|(k, v)| v / weight(geom.offset(k % n_off)))
        .collect();
    let trig: Vec<(f64, f64)> = (0..geom.n_angles)
        .map(|i| geom.angle(i).sin_cos())
        .collect();
    let dphi = geom.angle_step();

    let mut out = vec![0.0; geom.image_len()];
    out.par_chunks_mut(geom.n_pix)
        .enumerate()
        .for_each(|(r, row)| {
            for (c, slot) in row.iter_mut().enumerate() {
                let p = r * geom.n_pix + c;
                if !geom.inside_disk(p) {
                    continue;
                }
                let (x, y) = geom.pixel_center(p);
                let mut acc = 0.0;
                for (i, (sin, cos)) in trig.iter().enumerate() {
                    let row = &scaled[i * n_off..(i + 1) * n_off];
                    for (j, w) in geom.offset_stencil(x * cos + y * sin) {
                        acc += w * row[j];
                    }
                }
                *slot = acc * dphi;
            }
        });
    Ok(out)
}

/// Exact adjoint of [`radon_forward`] with respect to the image and data
/// metrics: `⟨R f, g⟩_w = ⟨f, Rᵀ_M g⟩_{L²}` holds to round-off.
pub fn radon_forward_transpose(g: &[f64], geom: &RadonGeometry) -> Result<Vec<f64>> {
    geom.check_sinogram(g)?;
    let weights = geom.data_weights();
    let h = geom.pixel_size();
    let mut out = vec![0.0; geom.image_len()];
    for i in 0..geom.n_angles {
        for j in 0..geom.n_offsets {
            let k = i * geom.n_offsets + j;
            let ((mut x, mut y), (dx, dy), dt) = chord(geom, i, j);
            let coef = g[k] * weights[k] * dt / (h * h);
            if coef == 0.0 {
                continue;
            }
            for _ in 0..geom.t_samples {
                for_each_bilinear(geom, x, y, |p, w| out[p] += coef * w);
                x += dx;
                y += dy;
            }
        }
    }
    Ok(out)
}

/// `⟨g₁, g₂⟩_{L²(Z, w⁻¹)} ≈ Σ g₁ g₂ Δφ Δs / w(s)`.
pub fn weighted_inner(g1: &[f64], g2: &[f64], geom: &RadonGeometry) -> Result<f64> {
    geom.check_sinogram(g1)?;
    geom.check_sinogram(g2)?;
    Ok(geom.data_metric().inner(g1, g2))
}

/// `⟨f₁, f₂⟩_{L²}` with pixel-area weights.
pub fn image_inner(f1: &[f64], f2: &[f64], geom: &RadonGeometry) -> Result<f64> {
    geom.check_image(f1)?;
    geom.check_image(f2)?;
    let h = geom.pixel_size();
    Ok(dot(f1, f2) * h * h)
}

/// Operator norm of the discrete transform from `L²` to `L²(Z, w⁻¹)`,
/// estimated by power iteration on `Rᵀ_M R`.
pub fn operator_norm_estimate(geom: &RadonGeometry, iterations: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f: Vec<f64> = (0..geom.image_len())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    geom.mask_image(&mut f);
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let nf = image_inner(&f, &f, geom)?.sqrt();
        if nf == 0.0 {
            return Ok(0.0);
        }
        f.iter_mut().for_each(|v| *v /= nf);
        let g = radon_forward(&f, geom)?;
        estimate = weighted_inner(&g, &g, geom)?.sqrt();
        f = radon_forward_transpose(&g, geom)?;
    }
    Ok(estimate)
}

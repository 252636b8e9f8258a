//! Random ellipse phantoms in the style of Shepp-Logan.
//!
//! Every image draws its ellipses from its own ChaCha8 stream: the
//! generator is seeded with `PhantomSpec::seed` and switched to stream
//! `image_index`, so images are independent of each other and of the
//! number of images requested.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::radon::RadonGeometry;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Ellipse {
    pub intensity: f64,
    /// Semi-axis along the ellipse's own x direction.
    pub semi_major: f64,
    /// Semi-axis along the ellipse's own y direction.
    pub semi_minor: f64,
    pub cx: f64,
    pub cy: f64,
    /// Counter-clockwise rotation in degrees.
    pub angle_deg: f64,
}

impl Ellipse {
    /// Whether `(x, y)` lies in the closed ellipse.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (sin, cos) = self.angle_deg.to_radians().sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        let along = cos * dx + sin * dy;
        let across = -sin * dx + cos * dy;
        (along / self.semi_major).powi(2) + (across / self.semi_minor).powi(2) <= 1.0
    }
}

/// Closed sampling interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        self.lo + (self.hi - self.lo) * rng.gen::<f64>()
    }

    fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EllipseRanges {
    pub intensity: Range,
    pub semi_major: Range,
    pub semi_minor: Range,
    pub cx: Range,
    pub cy: Range,
    pub angle_deg: Range,
}

impl Default for EllipseRanges {
    fn default() -> Self {
        EllipseRanges {
            intensity: Range::new(0.01, 2.0),
            semi_major: Range::new(0.1, 0.7),
            semi_minor: Range::new(0.1, 0.7),
            cx: Range::new(-0.6, 0.6),
            cy: Range::new(-0.6, 0.6),
            angle_deg: Range::new(-45.0, 134.0),
        }
    }
}

impl EllipseRanges {
    fn all(&self) -> [Range; 6] {
        [
            self.intensity,
            self.semi_major,
            self.semi_minor,
            self.cx,
            self.cy,
            self.angle_deg,
        ]
    }

    /// Draws one ellipse, parameters in declaration order.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Ellipse {
        Ellipse {
            intensity: self.intensity.sample(rng),
            semi_major: self.semi_major.sample(rng),
            semi_minor: self.semi_minor.sample(rng),
            cx: self.cx.sample(rng),
            cy: self.cy.sample(rng),
            angle_deg: self.angle_deg.sample(rng),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhantomSpec {
    pub n_images: usize,
    pub ellipses_per_image: usize,
    pub seed: u64,
    pub ranges: EllipseRanges,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            n_images: 20,
            ellipses_per_image: 10,
            seed: 42,
            ranges: EllipseRanges::default(),
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_images == 0 {
            return Err(Error::Invalid(
                "phantom set needs at least one image".into(),
            ));
        }
        if !self.ranges.all().iter().all(Range::is_valid) {
            return Err(Error::Invalid(
                "ellipse parameter ranges must be finite with lo <= hi".into(),
            ));
        }
        let axes = [self.ranges.semi_major, self.ranges.semi_minor];
        if axes.iter().any(|r| r.lo <= 0.0) {
            return Err(Error::Invalid("semi-axes must be positive".into()));
        }
        Ok(())
    }

    pub fn rng_for_image(&self, image: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(image as u64);
        rng
    }

    /// Ellipse parameters of image `image`.
    pub fn ellipses(&self, image: usize) -> Vec<Ellipse> {
        let mut rng = self.rng_for_image(image);
        (0..self.ellipses_per_image)
            .map(|_| self.ranges.sample(&mut rng))
            .collect()
    }
}

/// `intensity` at pixel centers covered by the ellipse, zero elsewhere and
/// outside the unit disk.
pub fn rasterize_ellipse(e: &Ellipse, geom: &RadonGeometry) -> Vec<f64> {
    geom.sample_image(|x, y| if e.contains(x, y) { e.intensity } else { 0.0 })
}

/// Sum of the rasterized ellipses of one image.
pub fn render(ellipses: &[Ellipse], geom: &RadonGeometry) -> Vec<f64> {
    geom.sample_image(|x, y| {
        ellipses
            .iter()
            .filter(|e| e.contains(x, y))
            .map(|e| e.intensity)
            .sum()
    })
}

/// All images of `spec`, in index order.
pub fn generate(spec: &PhantomSpec, geom: &RadonGeometry) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    geom.validate()?;
    Ok((0..spec.n_images)
        .into_par_iter()
        .map(|i| render(&spec.ellipses(i), geom))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(r: f64) -> Ellipse {
        Ellipse {
            intensity: 1.0,
            semi_major: r,
            semi_minor: r,
            cx: 0.0,
            cy: 0.0,
            angle_deg: 0.0,
        }
    }

    #[test]
    fn no_ellipses_gives_zero_images() {
        let spec = PhantomSpec {
            n_images: 3,
            ellipses_per_image: 0,
            ..Default::default()
        };
        let images = generate(&spec, &RadonGeometry::new(10, 4, 4).unwrap()).unwrap();
        assert_eq!(images.len(), 3);
        assert!(images.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn circle_membership() {
        let c = circle(0.5);
        assert!(c.contains(0.0, 0.0));
        assert!(!c.contains(0.9, 0.0));
        assert!(!c.contains(3.0, 3.0));
        let geom = RadonGeometry::new(11, 4, 4).unwrap();
        let img = rasterize_ellipse(&c, &geom);
        assert_eq!(geom.pixel_center(5 * 11 + 5), (0.0, 0.0));
        assert_eq!(img[5 * 11 + 5], 1.0);
        let (x, y) = geom.pixel_center(5 * 11 + 10);
        assert!((x - 10.0 / 11.0).abs() < 1e-12 && y.abs() < 1e-12);
        assert!(geom.inside_disk(5 * 11 + 10));
        assert_eq!(img[5 * 11 + 10], 0.0);
    }

    #[test]
    fn quarter_turn_swaps_axes() {
        let a = Ellipse {
            intensity: 1.0,
            semi_major: 0.6,
            semi_minor: 0.2,
            cx: 0.0,
            cy: 0.0,
            angle_deg: 90.0,
        };
        let b = Ellipse {
            semi_major: 0.2,
            semi_minor: 0.6,
            angle_deg: 0.0,
            ..a
        };
        let geom = RadonGeometry::new(40, 4, 4).unwrap();
        assert_eq!(rasterize_ellipse(&a, &geom), rasterize_ellipse(&b, &geom));
    }

    #[test]
    fn invalid_spec_rejected() {
        let mut spec = PhantomSpec::default();
        spec.ranges.semi_minor = Range::new(0.0, 0.5);
        assert!(spec.validate().is_err());
        spec = PhantomSpec {
            n_images: 0,
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }
}

//! Transmission maps and the estimators that produce them.

pub mod prior;

use crate::error::{Error, Result};
use crate::image::PlanarImage;

/// Lower clamp applied by every transmission estimator, keeping `1 / t` finite.
pub const T_FLOOR: f64 = 0.05;

/// Per-pixel fraction of scene radiance reaching the camera.
#[derive(Clone, Debug, PartialEq)]
pub struct TransmissionMap {
    width: usize,
    height: usize,
    t: Vec<f64>,
}

impl TransmissionMap {
    /// Takes values as given; they must be finite and within `[0, 1]`.
    pub fn new(width: usize, height: usize, t: Vec<f64>) -> Result<Self> {
        if t.len() != width * height {
            return Err(Error::Shape(format!("transmission length {} != {width}x{height}", t.len())));
        }
        if let Some(i) = t.iter().position(|v| !(v.is_finite() && (0.0..=1.0).contains(v))) {
            return Err(Error::Argument(format!("transmission sample {i} is {}", t[i])));
        }
        Ok(Self { width, height, t })
    }

    /// Clamps raw estimates into `[T_FLOOR, 1]`.
    pub fn clamped(width: usize, height: usize, raw: Vec<f64>) -> Result<Self> {
        Self::clamped_to(width, height, raw, T_FLOOR)
    }

    /// Clamps raw estimates into `[floor, 1]`.
    pub fn clamped_to(width: usize, height: usize, raw: Vec<f64>, floor: f64) -> Result<Self> {
        if let Some(i) = raw.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("transmission sample {i}")));
        }
        Self::new(width, height, raw.into_iter().map(|v| v.clamp(floor, 1.0)).collect())
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.t
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.t[y * self.width + x]
    }

    pub fn to_image(&self) -> PlanarImage {
        PlanarImage::from_data(self.width, self.height, 1, self.t.clone()).expect("valid map")
    }

    pub fn mean_abs_error(&self, other: &TransmissionMap) -> Result<f64> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Shape("transmission maps differ in size".into()));
        }
        Ok(self.t.iter().zip(&other.t).map(|(a, b)| (a - b).abs()).sum::<f64>() / self.t.len() as f64)
    }

    pub(crate) fn check_matches(&self, img: &PlanarImage) -> Result<()> {
        if self.width == img.width() && self.height == img.height() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "transmission {}x{} vs image {}x{}",
                self.width,
                self.height,
                img.width(),
                img.height()
            )))
        }
    }
}

//! Weighted guided image filter and the base/detail decomposition built on it.
//!
//! The filter is self-guided per channel: window statistics come from the
//! filtered channel itself, and the luminance guide only contributes the
//! edge-aware weight that scales the regularization per pixel.

use crate::error::{Error, Result};
use crate::filter::box_mean;
use crate::image::{luminance, PlanarImage};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WgifParams {
    /// Window radius; the window is `(2 * radius + 1)²`.
    pub radius: usize,
    /// Regularization, in squared intensity units.
    pub lambda: f64,
    /// Variance floor of the edge-aware weight, squared intensity units.
    pub epsilon: f64,
}

impl Default for WgifParams {
    fn default() -> Self {
        Self {
            radius: 16,
            lambda: 2e-2,
            epsilon: 1e-6,
        }
    }
}

impl WgifParams {
    pub fn validate(&self) -> Result<()> {
        if self.radius < 1 {
            return Err(Error::Argument("wgif radius must be >= 1".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Argument(format!("wgif lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Argument(format!("wgif epsilon must be > 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Base and detail layers; `base + detail` reproduces the input.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerPair {
    pub base: PlanarImage,
    /// Signed residual, roughly in `[-1, 1]`.
    pub detail: PlanarImage,
}

impl LayerPair {
    pub fn reconstruct(&self) -> PlanarImage {
        self.base.zip_map(&self.detail, |b, d| b + d).expect("layers share a shape")
    }

    /// Detail mapped to `0.5 + detail / 2` for display.
    pub fn detail_visualization(&self) -> PlanarImage {
        self.detail.map(|d| (0.5 + 0.5 * d).clamp(0.0, 1.0))
    }
}

/// Local variance over the `(2r+1)²` window, clamped at zero.
pub(crate) fn local_variance(plane: &[f64], width: usize, height: usize, radius: usize) -> (Vec<f64>, Vec<f64>) {
    let mean = box_mean(plane, width, height, radius);
    let sq: Vec<f64> = plane.iter().map(|v| v * v).collect();
    let mean_sq = box_mean(&sq, width, height, radius);
    let var = mean_sq.iter().zip(&mean).map(|(s, m)| (s - m * m).max(0.0)).collect();
    (mean, var)
}

/// Edge-aware weight: `(v(p) + eps) * mean_q 1 / (v(q) + eps)` where `v` is
/// the 3x3 local variance of the guide. Averages to about 1, exceeds 1 on
/// edges and drops below 1 in flat areas.
pub fn edge_weight(guide: &PlanarImage, epsilon: f64) -> Result<PlanarImage> {
    if guide.channels() != 1 {
        return Err(Error::Shape(format!(
            "edge weight guide must be single-channel, got {}",
            guide.channels()
        )));
    }
    let (_, var) = local_variance(guide.data(), guide.width(), guide.height(), 1);
    let n = var.len() as f64;
    let mean_inverse = var.iter().map(|v| 1.0 / (v + epsilon)).sum::<f64>() / n;
    let weight = var.iter().map(|v| (v + epsilon) * mean_inverse).collect();
    PlanarImage::from_data(guide.width(), guide.height(), 1, weight)
}

/// Weighted guided filter of `img` (1 or 3 channels) with weights taken from
/// the single-channel `guide`. The result is clamped to `[0, 1]`.
pub fn wgif_filter(img: &PlanarImage, guide: &PlanarImage, params: &WgifParams) -> Result<PlanarImage> {
    params.validate()?;
    img.check_same_size(guide, "wgif guide")?;
    let weight = edge_weight(guide, params.epsilon)?;
    wgif_filter_with_weight(img, weight.data(), params)
}

/// The filter with an explicit per-pixel weight in place of the edge-aware one.
/// A weight of 1 everywhere gives the plain self-guided filter.
pub fn wgif_filter_with_weight(img: &PlanarImage, weight: &[f64], params: &WgifParams) -> Result<PlanarImage> {
    params.validate()?;
    if weight.len() != img.pixel_count() {
        return Err(Error::Shape(format!(
            "weight has {} samples for a {}x{} image",
            weight.len(),
            img.width(),
            img.height()
        )));
    }
    let (w, h, r) = (img.width(), img.height(), params.radius);
    let mut out = img.clone();
    for c in 0..img.channels() {
        let z = img.plane(c);
        let (mean, var) = local_variance(z, w, h, r);
        let mut a = vec![0.0; z.len()];
        let mut b = vec![0.0; z.len()];
        for i in 0..z.len() {
            a[i] = var[i] / (var[i] + params.lambda / weight[i]);
            b[i] = (1.0 - a[i]) * mean[i];
        }
        let a_mean = box_mean(&a, w, h, r);
        let b_mean = box_mean(&b, w, h, r);
        for (i, o) in out.plane_mut(c).iter_mut().enumerate() {
            *o = (a_mean[i] * z[i] + b_mean[i]).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}

/// Splits a 3-channel image into an edge-preserving base layer and the
/// signed detail residual.
pub fn decompose(img: &PlanarImage, params: &WgifParams) -> Result<LayerPair> {
    if img.channels() != 3 {
        return Err(Error::Shape(format!("decompose needs 3 channels, got {}", img.channels())));
    }
    let guide = luminance(img)?;
    let base = wgif_filter(img, &guide, params)?;
    let detail = img.zip_map(&base, |z, b| z - b)?;
    Ok(LayerPair { base, detail })
}

//! Dark-channel-prior transmission.

use crate::airlight::Airlight;
use crate::error::{Error, Result};
use crate::filter::min_filter;
use crate::image::{luminance, PlanarImage};
use crate::transmission::{TransmissionMap, T_FLOOR};
use crate::wgif::{wgif_filter, WgifParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorParams {
    /// Fraction of haze removed, `0 < omega <= 1`.
    pub omega: f64,
    pub patch_radius: usize,
    /// Edge-preserving refinement of the raw map; `None` skips it.
    pub refine: Option<WgifParams>,
    pub t_floor: f64,
}

impl Default for PriorParams {
    fn default() -> Self {
        Self {
            omega: 0.95,
            patch_radius: 7,
            refine: Some(WgifParams::default()),
            t_floor: T_FLOOR,
        }
    }
}

/// Minimum over channels and over the `(2r+1)²` patch.
pub fn dark_channel(img: &PlanarImage, patch_radius: usize) -> PlanarImage {
    let n = img.pixel_count();
    let mut channel_min = img.plane(0).to_vec();
    for c in 1..img.channels() {
        for (m, v) in channel_min.iter_mut().zip(img.plane(c)) {
            *m = m.min(*v);
        }
    }
    debug_assert_eq!(channel_min.len(), n);
    let data = min_filter(&channel_min, img.width(), img.height(), patch_radius);
    PlanarImage::from_data(img.width(), img.height(), 1, data).expect("same size")
}

/// `1 - omega * dark_channel(base / A)`, before refinement and clamping.
pub fn raw_transmission(base: &PlanarImage, airlight: &Airlight, omega: f64, patch_radius: usize) -> Result<Vec<f64>> {
    if base.channels() != 3 {
        return Err(Error::Shape(format!(
            "prior transmission needs 3 channels, got {}",
            base.channels()
        )));
    }
    if airlight.rgb.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::Argument(format!("airlight channel is zero: {airlight}")));
    }
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::Argument(format!("omega must be in (0, 1], got {omega}")));
    }
    let mut normalized = base.clone();
    for c in 0..3 {
        let a = airlight.rgb[c];
        normalized.plane_mut(c).iter_mut().for_each(|v| *v /= a);
    }
    // ratios above 1 are legal here, so skip the [0, 1] image contract
    let dark = dark_channel(&normalized, patch_radius);
    Ok(dark.data().iter().map(|d| 1.0 - omega * d).collect())
}

pub fn estimate_t_prior(base: &PlanarImage, airlight: &Airlight, params: &PriorParams) -> Result<TransmissionMap> {
    let raw = raw_transmission(base, airlight, params.omega, params.patch_radius)?;
    let (w, h) = (base.width(), base.height());
    let t = match &params.refine {
        Some(wgif) => {
            let raw_img = PlanarImage::from_data(w, h, 1, raw.iter().map(|v| v.clamp(0.0, 1.0)).collect())?;
            wgif_filter(&raw_img, &luminance(base)?, wgif)?.into_data()
        }
        None => raw,
    };
    TransmissionMap::clamped_to(w, h, t, params.t_floor)
}

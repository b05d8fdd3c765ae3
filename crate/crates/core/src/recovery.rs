//! Scene radiance recovery from a transmission map and airlight.
//!
//! Classic recovery inverts the scattering model directly and therefore
//! amplifies noise by `1 / max(t, t0)`. Fused recovery gates the detail
//! layer with a steep sigmoid of `t`: where the haze is dense only the base
//! layer is inverted and the detail is added back unamplified.
//!
//! Output clamping to `[0, 1]` happens once at the end; the `*_unclamped`
//! variants expose the raw algebra.

use crate::airlight::Airlight;
use crate::error::{Error, Result};
use crate::image::PlanarImage;
use crate::transmission::TransmissionMap;
use crate::wgif::LayerPair;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryParams {
    /// Floor of the transmission in the denominator.
    pub t0: f64,
    /// Gate midpoint sits at `t = 1 / eta`.
    pub eta: f64,
    pub slope: f64,
}

impl Default for RecoveryParams {
    fn default() -> Self {
        Self {
            t0: 0.1,
            eta: 4.0,
            slope: 32.0,
        }
    }
}

impl RecoveryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.t0 < 1.0) {
            return Err(Error::Argument(format!("t0 must be in (0, 1), got {}", self.t0)));
        }
        if !(self.eta > 1.0 && self.eta.is_finite()) {
            return Err(Error::Argument(format!("eta must be > 1, got {}", self.eta)));
        }
        if !(self.slope > 0.0 && self.slope.is_finite()) {
            return Err(Error::Argument(format!("gate slope must be > 0, got {}", self.slope)));
        }
        Ok(())
    }
}

/// `psi(t) = 1 / (1 + exp(slope * (1 - eta * t)))`.
#[inline]
pub fn gate(t: f64, eta: f64, slope: f64) -> f64 {
    1.0 / (1.0 + (slope * (1.0 - eta * t)).exp())
}

/// `d psi / d t = slope * eta * psi * (1 - psi)`.
#[inline]
pub fn gate_derivative(t: f64, eta: f64, slope: f64) -> f64 {
    let psi = gate(t, eta, slope);
    slope * eta * psi * (1.0 - psi)
}

fn check_inputs(img: &PlanarImage, t: &TransmissionMap) -> Result<()> {
    if img.channels() != 3 {
        return Err(Error::Shape(format!("recovery needs 3 channels, got {}", img.channels())));
    }
    t.check_matches(img)
}

pub fn recover_classic_unclamped(hazy: &PlanarImage, t: &TransmissionMap, airlight: &Airlight, t0: f64) -> Result<PlanarImage> {
    check_inputs(hazy, t)?;
    let mut out = hazy.clone();
    for c in 0..3 {
        let a = airlight.rgb[c];
        for (o, &tv) in out.plane_mut(c).iter_mut().zip(t.values()) {
            *o = (*o - a) / tv.max(t0) + a;
        }
    }
    Ok(out)
}

/// `I = (Z - A) / max(t, t0) + A`, clamped to `[0, 1]`.
pub fn recover_classic(hazy: &PlanarImage, t: &TransmissionMap, airlight: &Airlight, t0: f64) -> Result<PlanarImage> {
    Ok(recover_classic_unclamped(hazy, t, airlight, t0)?.clamped())
}

/// Fused recovery with an arbitrary gate function, before clamping.
pub fn recover_fused_with_gate(
    layers: &LayerPair,
    t: &TransmissionMap,
    airlight: &Airlight,
    t0: f64,
    gate_fn: impl Fn(f64) -> f64,
) -> Result<PlanarImage> {
    check_inputs(&layers.base, t)?;
    layers.base.check_same_shape(&layers.detail, "base vs detail")?;
    let psi: Vec<f64> = t.values().iter().map(|&tv| gate_fn(tv)).collect();
    let mut out = layers.base.clone();
    for c in 0..3 {
        let a = airlight.rgb[c];
        let detail = layers.detail.plane(c);
        for (i, o) in out.plane_mut(c).iter_mut().enumerate() {
            let denom = t.values()[i].max(t0);
            *o = (*o + psi[i] * detail[i] - a) / denom + (1.0 - psi[i]) * detail[i] + a;
        }
    }
    Ok(out)
}

pub fn recover_fused_unclamped(
    layers: &LayerPair,
    t: &TransmissionMap,
    airlight: &Airlight,
    params: &RecoveryParams,
) -> Result<PlanarImage> {
    params.validate()?;
    recover_fused_with_gate(layers, t, airlight, params.t0, |tv| gate(tv, params.eta, params.slope))
}

/// `I = (Zb + psi Ze - A) / max(t, t0) + (1 - psi) Ze + A`, clamped to `[0, 1]`.
pub fn recover_fused(
    layers: &LayerPair,
    t: &TransmissionMap,
    airlight: &Airlight,
    params: &RecoveryParams,
) -> Result<PlanarImage> {
    Ok(recover_fused_unclamped(layers, t, airlight, params)?.clamped())
}

/// Pre-clamp fused recovery together with `dI/dt` for every sample
/// (planar, same layout as the image). Where `t < t0` the denominator is
/// constant and only the gate contributes.
pub fn recover_fused_with_grad(
    layers: &LayerPair,
    t: &[f64],
    airlight: &Airlight,
    params: &RecoveryParams,
) -> (PlanarImage, Vec<f64>) {
    let n = layers.base.pixel_count();
    debug_assert_eq!(t.len(), n);
    let mut out = layers.base.clone();
    let mut grad = vec![0.0; 3 * n];
    for c in 0..3 {
        let a = airlight.rgb[c];
        let detail = layers.detail.plane(c);
        let base = layers.base.plane(c).to_vec();
        let plane = out.plane_mut(c);
        for i in 0..n {
            let tv = t[i];
            let psi = gate(tv, params.eta, params.slope);
            let dpsi = gate_derivative(tv, params.eta, params.slope);
            let denom = tv.max(params.t0);
            let numer = base[i] + psi * detail[i] - a;
            plane[i] = numer / denom + (1.0 - psi) * detail[i] + a;
            let d_denom = if tv > params.t0 { 1.0 } else { 0.0 };
            grad[c * n + i] = dpsi * detail[i] / denom - numer * d_denom / (denom * denom) - dpsi * detail[i];
        }
    }
    (out, grad)
}

/// Per-pixel noise gain `1 / max(t, t0)`.
pub fn noise_gain(t: &TransmissionMap, t0: f64) -> Vec<f64> {
    t.values().iter().map(|&v| 1.0 / v.max(t0)).collect()
}

/// Noise gain divided by its maximum `1 / t0`, for display.
pub fn noise_amplification_map(t: &TransmissionMap, t0: f64) -> Result<PlanarImage> {
    if !(t0 > 0.0 && t0 < 1.0) {
        return Err(Error::Argument(format!("t0 must be in (0, 1), got {t0}")));
    }
    let data = noise_gain(t, t0).into_iter().map(|g| g * t0).collect();
    PlanarImage::from_data(t.width(), t.height(), 1, data)
}

//! Noise amplification experiment: a flat hazy scene with additive
//! Gaussian noise, recovered with the true transmission and airlight by
//! classic inversion and by fused recovery. Classic recovery scales the
//! noise variance by `1 / t²`; fused recovery keeps it near the input level
//! wherever the gate is closed.

use crate::airlight::Airlight;
use crate::error::{Error, Result};
use crate::image::PlanarImage;
use crate::recovery::{recover_classic_unclamped, recover_fused_unclamped, RecoveryParams};
use crate::synthesis::{add_noise, apply_haze};
use crate::transmission::TransmissionMap;
use crate::wgif::{decompose, WgifParams};

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseExperiment {
    pub size: usize,
    pub sigma: f64,
    pub seeds: u64,
    /// Clean scene intensity.
    pub level: f64,
    pub airlight: f64,
    pub transmissions: Vec<f64>,
    pub wgif: WgifParams,
    pub recovery: RecoveryParams,
}

impl Default for NoiseExperiment {
    fn default() -> Self {
        Self {
            size: 96,
            sigma: 0.02,
            seeds: 20,
            level: 0.5,
            airlight: 0.9,
            transmissions: vec![0.1, 0.15, 0.2, 0.3, 0.5, 0.8],
            wgif: WgifParams::default(),
            recovery: RecoveryParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseRow {
    pub t: f64,
    /// `sigma² / max(t, t0)²`.
    pub predicted_classic: f64,
    pub classic_variance: f64,
    pub fused_variance: f64,
}

impl NoiseRow {
    pub fn ratio(&self) -> f64 {
        self.fused_variance / self.classic_variance
    }
}

/// Sample variance over the interior (one filter radius in from the border)
/// of every channel, pre-clamp.
fn interior_variance(img: &PlanarImage, margin: usize) -> f64 {
    let (mut sum, mut sum_sq, mut n) = (0.0, 0.0, 0.0);
    for c in 0..img.channels() {
        for y in margin..img.height() - margin {
            for x in margin..img.width() - margin {
                let v = img.get(x, y, c);
                sum += v;
                sum_sq += v * v;
                n += 1.0;
            }
        }
    }
    let mean = sum / n;
    (sum_sq - n * mean * mean) / (n - 1.0)
}

pub fn run_noise_experiment(exp: &NoiseExperiment) -> Result<Vec<NoiseRow>> {
    exp.recovery.validate()?;
    let margin = exp.wgif.radius;
    if exp.size <= 2 * margin + 1 {
        return Err(Error::Argument(format!(
            "experiment size {} leaves no interior for radius {margin}",
            exp.size
        )));
    }
    if exp.seeds == 0 {
        return Err(Error::Argument("at least one seed is required".into()));
    }
    let airlight = Airlight::gray(exp.airlight)?;
    let clean = PlanarImage::filled(exp.size, exp.size, 3, exp.level);
    exp.transmissions
        .iter()
        .map(|&t| {
            let tmap = TransmissionMap::constant(exp.size, exp.size, t)?;
            let hazy = apply_haze(&clean, &tmap, &airlight)?;
            let (mut classic, mut fused) = (0.0, 0.0);
            for seed in 0..exp.seeds {
                let noisy = add_noise(&hazy, exp.sigma, seed)?;
                let layers = decompose(&noisy, &exp.wgif)?;
                let c = recover_classic_unclamped(&noisy, &tmap, &airlight, exp.recovery.t0)?;
                let f = recover_fused_unclamped(&layers, &tmap, &airlight, &exp.recovery)?;
                classic += interior_variance(&c, margin);
                fused += interior_variance(&f, margin);
            }
            let seeds = exp.seeds as f64;
            Ok(NoiseRow {
                t,
                predicted_classic: exp.sigma * exp.sigma / t.max(exp.recovery.t0).powi(2),
                classic_variance: classic / seeds,
                fused_variance: fused / seeds,
            })
        })
        .collect()
}

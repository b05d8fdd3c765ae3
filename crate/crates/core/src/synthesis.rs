//! Forward haze model: Beer-Lambert transmission from depth, the scattering
//! composition `Z = I t + A (1 - t)`, additive Gaussian noise, and procedural
//! scenes for tests and dataset generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::airlight::Airlight;
use crate::error::{Error, Result};
use crate::image::{DepthMap, PlanarImage};
use crate::transmission::TransmissionMap;

/// `t = exp(-beta * depth)`, clamped to `[T_FLOOR, 1]`.
pub fn t_from_depth(depth: &DepthMap, beta: f64) -> Result<TransmissionMap> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Argument(format!("beta must be > 0, got {beta}")));
    }
    TransmissionMap::clamped(
        depth.width(),
        depth.height(),
        depth.values().iter().map(|d| (-beta * d).exp()).collect(),
    )
}

/// Hazy image `Z = I t + A (1 - t)` per channel.
pub fn apply_haze(clean: &PlanarImage, t: &TransmissionMap, airlight: &Airlight) -> Result<PlanarImage> {
    if clean.channels() != 3 {
        return Err(Error::Shape(format!("haze needs 3 channels, got {}", clean.channels())));
    }
    t.check_matches(clean)?;
    let mut out = clean.clone();
    for c in 0..3 {
        let a = airlight.rgb[c];
        for (v, &tv) in out.plane_mut(c).iter_mut().zip(t.values()) {
            *v = *v * tv + a * (1.0 - tv);
        }
    }
    Ok(out)
}

/// Standard normal pairs by Box-Muller over a seeded ChaCha8 stream.
pub struct GaussianNoise {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianNoise {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the log finite
        let u1 = 1.0 - self.rng.random::<f64>();
        let u2 = self.rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Adds i.i.d. `N(0, sigma²)` noise and clamps to `[0, 1]`.
pub fn add_noise(img: &PlanarImage, sigma: f64, seed: u64) -> Result<PlanarImage> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Argument(format!("noise sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let mut noise = GaussianNoise::new(seed);
    let mut out = img.clone();
    for v in out.data_mut() {
        *v = (*v + sigma * noise.sample()).clamp(0.0, 1.0);
    }
    Ok(out)
}

/// A synthetic haze example with its ground truth.
#[derive(Clone, Debug)]
pub struct HazeScene {
    pub clean: PlanarImage,
    pub depth: DepthMap,
    pub t: TransmissionMap,
    pub airlight: Airlight,
    pub hazy: PlanarImage,
}

/// Procedural haze-free scene: a patchwork of saturated colour blocks
/// with fine texture, so every neighbourhood holds a dark channel near zero.
pub fn random_scene(width: usize, height: usize, seed: u64) -> PlanarImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = (width.min(height) / 6).max(4);
    let bx = width.div_ceil(block);
    let by = height.div_ceil(block);
    let colors: Vec<[f64; 3]> = (0..bx * by)
        .map(|_| {
            let mut rgb = [0.0; 3];
            for v in &mut rgb {
                *v = rng.random_range(0.15..0.85);
            }
            // one channel near zero, as in natural haze-free outdoor patches
            rgb[rng.random_range(0..3)] = rng.random_range(0.0..0.04);
            rgb
        })
        .collect();
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    PlanarImage::from_fn(width, height, 3, |x, y, c| {
        let rgb = colors[(y / block) * bx + x / block];
        let texture = 1.0 + 0.15 * ((x as f64 * 0.9 + phase).sin() * (y as f64 * 0.7 + phase).cos());
        (rgb[c] * texture).clamp(0.0, 1.0)
    })
}

/// Depth in `[0, 1]`: a far band (depth 1) across the top `sky_fraction`
/// of the rows and a ground plane below it receding from 1 to `near`.
pub fn layered_depth(width: usize, height: usize, sky_fraction: f64, near: f64) -> Result<DepthMap> {
    let horizon = (height as f64 * sky_fraction).round() as usize;
    DepthMap::from_fn(width, height, |_, y| {
        if y < horizon {
            1.0
        } else {
            let s = (y - horizon) as f64 / (height - horizon).max(1) as f64;
            1.0 - (1.0 - near) * s
        }
    })
}

/// Scattering coefficient from `U[0.5, 2.5]` and airlight from
/// `U[0.7, 1.0]³`, seeded.
pub fn sample_conditions(seed: u64) -> (f64, Airlight) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta = rng.random_range(0.5..2.5);
    let rgb = [
        rng.random_range(0.7..1.0),
        rng.random_range(0.7..1.0),
        rng.random_range(0.7..1.0),
    ];
    (beta, Airlight::new(rgb).expect("positive airlight"))
}

/// Random scene, depth, scattering coefficient and airlight, composed with
/// the scattering model. `beta` and the airlight are drawn from
/// `U[0.5, 2.5]` and `U[0.7, 1.0]³` unless given.
pub fn generate_scene(
    width: usize,
    height: usize,
    seed: u64,
    beta: Option<f64>,
    airlight: Option<Airlight>,
) -> Result<HazeScene> {
    compose_scene(width, height, seed, beta, airlight, false)
}

/// Like [`generate_scene`], but the far band is open sky: its clean
/// radiance is the airlight colour, darkening by up to 8% towards the
/// horizon, instead of textured colour blocks.
pub fn generate_sky_scene(
    width: usize,
    height: usize,
    seed: u64,
    beta: Option<f64>,
    airlight: Option<Airlight>,
) -> Result<HazeScene> {
    compose_scene(width, height, seed, beta, airlight, true)
}

fn compose_scene(
    width: usize,
    height: usize,
    seed: u64,
    beta: Option<f64>,
    airlight: Option<Airlight>,
    sky: bool,
) -> Result<HazeScene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let beta = beta.unwrap_or_else(|| rng.random_range(0.5..2.5));
    let airlight = match airlight {
        Some(a) => a,
        None => Airlight::new([
            rng.random_range(0.7..1.0),
            rng.random_range(0.7..1.0),
            rng.random_range(0.7..1.0),
        ])?,
    };
    let sky_fraction = rng.random_range(0.25..0.45);
    let near = rng.random_range(0.0..0.3);
    let mut clean = random_scene(width, height, seed);
    let horizon = (height as f64 * sky_fraction).round() as usize;
    if sky {
        for c in 0..3 {
            for y in 0..horizon {
                let shade = 1.0 - 0.08 * y as f64 / horizon as f64;
                for x in 0..width {
                    clean.set(x, y, c, airlight.rgb[c] * shade);
                }
            }
        }
    }
    let depth = layered_depth(width, height, sky_fraction, near)?;
    let t = t_from_depth(&depth, beta)?;
    let hazy = apply_haze(&clean, &t, &airlight)?;
    Ok(HazeScene {
        clean,
        depth,
        t,
        airlight,
        hazy,
    })
}

//! PSNR and SSIM on `[0, 1]` data.

use crate::error::Result;
use crate::filter::separable_correlate;
use crate::image::{gray, PlanarImage};

const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_RADIUS: usize = 5;

pub fn mse(a: &PlanarImage, b: &PlanarImage) -> Result<f64> {
    a.check_same_shape(b, "mse")?;
    let sum: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / a.data().len() as f64)
}

/// `10 log10(1 / MSE)`; identical images give `f64::INFINITY`.
pub fn psnr(a: &PlanarImage, b: &PlanarImage) -> Result<f64> {
    let e = mse(a, b)?;
    Ok(if e == 0.0 { f64::INFINITY } else { -10.0 * e.log10() })
}

fn gaussian_window(radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let w: Vec<f64> = (-r..=r)
        .map(|k| (-(k * k) as f64 / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Mean SSIM of the luminance (or the single channel) with an 11x11
/// Gaussian window, sigma 1.5, averaged over window positions that fit
/// inside the image. Images smaller than the window use a shrunken window.
pub fn ssim(a: &PlanarImage, b: &PlanarImage) -> Result<f64> {
    a.check_same_shape(b, "ssim")?;
    let (x, y) = (gray(a), gray(b));
    let (w, h) = (x.width(), x.height());
    let radius = SSIM_RADIUS.min((w.min(h).max(1) - 1) / 2);
    let win = gaussian_window(radius);
    let filt = |p: &[f64]| separable_correlate(p, w, h, &win, &win);
    let xx: Vec<f64> = x.data().iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.data().iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.data().iter().zip(y.data()).map(|(p, q)| p * q).collect();
    let (mx, my) = (filt(x.data()), filt(y.data()));
    let (sxx, syy, sxy) = (filt(&xx), filt(&yy), filt(&xy));
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let (mut total, mut count) = (0.0, 0usize);
    for j in radius..h - radius {
        for i in radius..w - radius {
            let k = j * w + i;
            let (ux, uy) = (mx[k], my[k]);
            let vx = sxx[k] - ux * ux;
            let vy = syy[k] - uy * uy;
            let cov = sxy[k] - ux * uy;
            total += ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_reference_values() {
        let a = PlanarImage::filled(8, 8, 3, 0.0);
        let b = PlanarImage::filled(8, 8, 3, 0.1);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn ssim_of_identical_images_is_one() {
        let a = PlanarImage::from_fn(20, 16, 3, |x, y, c| ((x * 3 + y * 5 + c) % 11) as f64 / 10.0);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn ssim_of_constants_is_luminance_term() {
        let a = PlanarImage::filled(16, 16, 1, 0.4);
        let b = PlanarImage::filled(16, 16, 1, 0.5);
        let c1 = 1e-4;
        let expected = (2.0 * 0.4 * 0.5 + c1) / (0.16 + 0.25 + c1);
        assert!((ssim(&a, &b).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = PlanarImage::filled(4, 4, 1, 0.4);
        let b = PlanarImage::filled(4, 5, 1, 0.4);
        assert!(psnr(&a, &b).is_err());
        assert!(ssim(&a, &b).is_err());
    }
}

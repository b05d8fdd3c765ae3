//! Training objective: squared restoration error plus a colour term that
//! sums the angles between blurred RGB vectors. Each loss returns its value
//! together with the gradient w.r.t. the prediction (planar layout).

use crate::error::{Error, Result};
use crate::filter::{separable_correlate, separable_correlate_adjoint};
use crate::image::PlanarImage;

/// Colour-loss weight in `L = L_r + w_c L_c`.
pub const DEFAULT_COLOR_WEIGHT: f64 = 0.01;

/// Vectors shorter than this contribute no angle.
const MIN_NORM: f64 = 1e-8;
/// Cosines are kept this far from ±1 so the arccos derivative stays finite.
const COS_MARGIN: f64 = 1e-12;

/// `G(k, l) = amplitude * exp(-(k - mu_x)² / (2 sigma_x) - (l - mu_y)² / (2 sigma_y))`.
///
/// The exponent divides by `2 sigma`, not `2 sigma²`; with `amplitude = 0.053`
/// and `sigma = 3` the 19x19 kernel sums to very nearly one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianKernel {
    pub amplitude: f64,
    pub mu_x: f64,
    pub mu_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub radius: usize,
}

impl Default for GaussianKernel {
    fn default() -> Self {
        Self {
            amplitude: 0.053,
            mu_x: 0.0,
            mu_y: 0.0,
            sigma_x: 3.0,
            sigma_y: 3.0,
            radius: 9,
        }
    }
}

impl GaussianKernel {
    /// Row and column factors; their outer product is the 2-D kernel, with
    /// the amplitude folded into the row factor.
    pub fn factors(&self) -> (Vec<f64>, Vec<f64>) {
        let r = self.radius as isize;
        let row = (-r..=r)
            .map(|k| self.amplitude * (-(k as f64 - self.mu_x).powi(2) / (2.0 * self.sigma_x)).exp())
            .collect();
        let col = (-r..=r)
            .map(|l| (-(l as f64 - self.mu_y).powi(2) / (2.0 * self.sigma_y)).exp())
            .collect();
        (row, col)
    }

    /// Value at offset `(k, l)`: `k` runs along x, `l` along y.
    pub fn at(&self, k: isize, l: isize) -> f64 {
        self.amplitude
            * (-(k as f64 - self.mu_x).powi(2) / (2.0 * self.sigma_x) - (l as f64 - self.mu_y).powi(2) / (2.0 * self.sigma_y))
                .exp()
    }

    pub fn sum(&self) -> f64 {
        let (row, col) = self.factors();
        row.iter().sum::<f64>() * col.iter().sum::<f64>()
    }
}

/// Correlation of every channel with the kernel, replicate padding.
/// No clamping: the kernel need not sum to one.
pub fn gaussian_blur(img: &PlanarImage, kernel: &GaussianKernel) -> PlanarImage {
    let (row, col) = kernel.factors();
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    for c in 0..img.channels() {
        let blurred = separable_correlate(img.plane(c), w, h, &row, &col);
        out.plane_mut(c).copy_from_slice(&blurred);
    }
    out
}

fn gaussian_blur_adjoint(grad: &[f64], w: usize, h: usize, channels: usize, kernel: &GaussianKernel) -> Vec<f64> {
    let (row, col) = kernel.factors();
    let n = w * h;
    let mut out = Vec::with_capacity(grad.len());
    for c in 0..channels {
        out.extend(separable_correlate_adjoint(&grad[c * n..(c + 1) * n], w, h, &row, &col));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub value: f64,
    /// dL/dpred, planar like the prediction.
    pub grad: Vec<f64>,
    /// Per-sample (restoration) or per-pixel (colour) summands of `value`.
    pub terms: Vec<f64>,
}

/// `sum (truth - pred)²`.
pub fn restoration_loss(pred: &PlanarImage, truth: &PlanarImage) -> Result<LossValue> {
    pred.check_same_shape(truth, "restoration loss")?;
    let mut terms = Vec::with_capacity(pred.data().len());
    let grad = pred
        .data()
        .iter()
        .zip(truth.data())
        .map(|(p, t)| {
            let d = t - p;
            terms.push(d * d);
            -2.0 * d
        })
        .collect();
    Ok(LossValue {
        value: terms.iter().sum(),
        grad,
        terms,
    })
}

/// Sum over pixels of the angle between blurred prediction and blurred truth.
pub fn color_loss(pred: &PlanarImage, truth: &PlanarImage, kernel: &GaussianKernel) -> Result<LossValue> {
    pred.check_same_shape(truth, "color loss")?;
    if pred.channels() != 3 {
        return Err(Error::Shape(format!("color loss needs 3 channels, got {}", pred.channels())));
    }
    let x = gaussian_blur(pred, kernel);
    let y = gaussian_blur(truth, kernel);
    let n = pred.pixel_count();
    let mut terms = vec![0.0; n];
    let mut grad_blurred = vec![0.0; 3 * n];
    for i in 0..n {
        let u = [x.data()[i], x.data()[n + i], x.data()[2 * n + i]];
        let v = [y.data()[i], y.data()[n + i], y.data()[2 * n + i]];
        let nu = norm(&u);
        let nv = norm(&v);
        if nu < MIN_NORM || nv < MIN_NORM {
            continue;
        }
        let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        let cross = [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ];
        // atan2 form is exact for parallel vectors; the derivative uses the arccos form
        terms[i] = norm(&cross).atan2(dot);
        let cos = (dot / (nu * nv)).clamp(-1.0 + COS_MARGIN, 1.0 - COS_MARGIN);
        // d acos(cos)/du = -1/sqrt(1 - cos²) * (v / (|u||v|) - cos u / |u|²)
        let scale = -1.0 / (1.0 - cos * cos).sqrt();
        for c in 0..3 {
            grad_blurred[c * n + i] = scale * (v[c] / (nu * nv) - cos * u[c] / (nu * nu));
        }
    }
    let grad = gaussian_blur_adjoint(&grad_blurred, pred.width(), pred.height(), 3, kernel);
    Ok(LossValue {
        value: terms.iter().sum(),
        grad,
        terms,
    })
}

fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TotalLoss {
    pub restoration: f64,
    pub color: f64,
    pub value: f64,
    pub grad: Vec<f64>,
    /// Restoration summands followed by weighted colour summands. Differencing
    /// these termwise avoids the cancellation of subtracting two large sums.
    pub terms: Vec<f64>,
}

/// `L_r + w_c L_c` with the summed gradient. The colour term is skipped
/// entirely when `w_c == 0`.
pub fn total_loss(pred: &PlanarImage, truth: &PlanarImage, color_weight: f64, kernel: &GaussianKernel) -> Result<TotalLoss> {
    if !(color_weight >= 0.0 && color_weight.is_finite()) {
        return Err(Error::Argument(format!("color weight must be >= 0, got {color_weight}")));
    }
    let r = restoration_loss(pred, truth)?;
    let c = color_loss(pred, truth, kernel)?;
    let mut grad = r.grad;
    if color_weight > 0.0 {
        for (g, gc) in grad.iter_mut().zip(&c.grad) {
            *g += color_weight * gc;
        }
    }
    let mut terms = r.terms;
    terms.extend(c.terms.iter().map(|v| color_weight * v));
    Ok(TotalLoss {
        restoration: r.value,
        color: c.value,
        value: r.value + color_weight * c.value,
        grad,
        terms,
    })
}

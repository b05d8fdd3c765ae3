//! Direct, slow reference implementations used as test oracles.
#![allow(dead_code)]

use hazekit::image::PlanarImage;
use hazekit::learned::AffineGrid;
use hazekit::wgif::WgifParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(w: usize, h: usize, c: usize, seed: u64) -> PlanarImage {
    let mut r = rng(seed);
    let data = (0..w * h * c).map(|_| r.random::<f64>()).collect();
    PlanarImage::from_data(w, h, c, data).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn clamp_idx(v: isize, n: usize) -> usize {
    v.clamp(0, n as isize - 1) as usize
}

/// Replicate-padded window samples around `(x, y)`.
pub fn window(plane: &[f64], w: usize, h: usize, x: usize, y: usize, r: usize) -> Vec<f64> {
    let r = r as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            let xx = clamp_idx(x as isize + dx, w);
            let yy = clamp_idx(y as isize + dy, h);
            out.push(plane[yy * w + xx]);
        }
    }
    out
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

pub fn naive_box_mean(plane: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| mean(&window(plane, w, h, x, y, r)))
        .collect()
}

/// Edge weight evaluated pixel pair by pixel pair.
pub fn naive_edge_weight(guide: &[f64], w: usize, h: usize, eps: f64) -> Vec<f64> {
    let var: Vec<f64> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| variance(&window(guide, w, h, x, y, 1)))
        .collect();
    let n = var.len() as f64;
    var.iter()
        .map(|&vp| var.iter().map(|&vq| (vp + eps) / (vq + eps)).sum::<f64>() / n)
        .collect()
}

/// Per-pixel coefficients from explicit windows, then explicit window
/// averages of the coefficients.
pub fn naive_weighted_filter(plane: &[f64], w: usize, h: usize, weight: &[f64], params: &WgifParams) -> Vec<f64> {
    let r = params.radius;
    let mut a = vec![0.0; w * h];
    let mut b = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let win = window(plane, w, h, x, y, r);
            let (m, v) = (mean(&win), variance(&win));
            let i = y * w + x;
            a[i] = v / (v + params.lambda / weight[i]);
            b[i] = (1.0 - a[i]) * m;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let am = mean(&window(&a, w, h, x, y, r));
            let bm = mean(&window(&b, w, h, x, y, r));
            out[y * w + x] = (am * plane[y * w + x] + bm).clamp(0.0, 1.0);
        }
    }
    out
}

pub fn naive_wgif(img: &PlanarImage, guide: &PlanarImage, params: &WgifParams) -> PlanarImage {
    let (w, h) = (img.width(), img.height());
    let weight = naive_edge_weight(guide.data(), w, h, params.epsilon);
    let planes: Vec<f64> = (0..img.channels())
        .flat_map(|c| naive_weighted_filter(img.plane(c), w, h, &weight, params))
        .collect();
    PlanarImage::from_data(w, h, img.channels(), planes).unwrap()
}

/// Classic guided filter in covariance form with guide `i` and input `p`:
/// `a = cov(i, p) / (var(i) + lambda)`, `b = mean(p) - a mean(i)`.
pub fn guided_filter(i: &[f64], p: &[f64], w: usize, h: usize, r: usize, lambda: f64) -> Vec<f64> {
    let ip: Vec<f64> = i.iter().zip(p).map(|(a, b)| a * b).collect();
    let ii: Vec<f64> = i.iter().map(|a| a * a).collect();
    let mi = naive_box_mean(i, w, h, r);
    let mp = naive_box_mean(p, w, h, r);
    let mip = naive_box_mean(&ip, w, h, r);
    let mii = naive_box_mean(&ii, w, h, r);
    let a: Vec<f64> = (0..w * h)
        .map(|k| (mip[k] - mi[k] * mp[k]) / (mii[k] - mi[k] * mi[k] + lambda))
        .collect();
    let b: Vec<f64> = (0..w * h).map(|k| mp[k] - a[k] * mi[k]).collect();
    let ma = naive_box_mean(&a, w, h, r);
    let mb = naive_box_mean(&b, w, h, r);
    (0..w * h).map(|k| (ma[k] * i[k] + mb[k]).clamp(0.0, 1.0)).collect()
}

pub fn brute_min_filter(plane: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| window(plane, w, h, x, y, r).into_iter().fold(f64::INFINITY, f64::min))
        .collect()
}

/// Trilinear interpolation written as a weighted sum over all cells with
/// hat-function weights `max(0, 1 - |coord - center|)` after clamping the
/// coordinate into the center range.
pub fn trilinear_slice(grid: &AffineGrid, guidance: &PlanarImage) -> Vec<f64> {
    let s = grid.spec;
    let (w, h) = (guidance.width(), guidance.height());
    let hat = |coord: f64, cells: usize, i: usize| {
        let c = coord.clamp(0.0, (cells - 1) as f64);
        (1.0 - (c - i as f64).abs()).max(0.0)
    };
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let g = guidance.get(x, y, 0);
            let u = (x as f64 + 0.5) / w as f64 * s.grid_x as f64 - 0.5;
            let v = (y as f64 + 0.5) / h as f64 * s.grid_y as f64 - 0.5;
            let d = g * s.depth as f64 - 0.5;
            let (mut a, mut b) = (0.0, 0.0);
            for gy in 0..s.grid_y {
                for gx in 0..s.grid_x {
                    for gd in 0..s.depth {
                        let wt = hat(u, s.grid_x, gx) * hat(v, s.grid_y, gy) * hat(d, s.depth, gd);
                        a += wt * grid.slope(gx, gy, gd);
                        b += wt * grid.offset(gx, gy, gd);
                    }
                }
            }
            out.push(a * g + b);
        }
    }
    out
}

/// Central difference of `f` along coordinate `i` of `x`.
pub fn central_difference(x: &mut [f64], i: usize, delta: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    x[i] = orig + delta;
    let plus = f(x);
    x[i] = orig - delta;
    let minus = f(x);
    x[i] = orig;
    (plus - minus) / (2.0 * delta)
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn rel_err(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Sample variance with the `n - 1` denominator.
pub fn sample_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// `sum(plus - minus)` taken term by term, so the difference of two large
/// loss sums does not cancel away the small change being measured.
pub fn termwise_difference(plus: &[f64], minus: &[f64]) -> f64 {
    assert_eq!(plus.len(), minus.len());
    plus.iter().zip(minus).map(|(p, m)| p - m).sum()
}

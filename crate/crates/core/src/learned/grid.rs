//! Bilateral grid of local affine coefficients and its slicing operator.
//!
//! The grid is a coarse `grid_y x grid_x x depth` lattice over (y, x,
//! guidance). Cell centers sit at `(i + 0.5) * W / grid_x` along x and at
//! guidance `(d + 0.5) / depth`; coordinates outside the outermost centers
//! clamp to the border cell.

use crate::error::{Error, Result};
use crate::image::PlanarImage;
use crate::transmission::TransmissionMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub grid_x: usize,
    pub grid_y: usize,
    pub depth: usize,
}

impl GridSpec {
    pub fn cells(&self) -> usize {
        self.grid_x * self.grid_y * self.depth
    }
}

/// Per-cell `(slope, offset)` pairs, laid out `[gy][gx][d][2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineGrid {
    pub spec: GridSpec,
    pub coeffs: Vec<f64>,
}

impl AffineGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            coeffs: vec![0.0; spec.cells() * 2],
        }
    }

    pub fn constant(spec: GridSpec, slope: f64, offset: f64) -> Self {
        let mut g = Self::zeros(spec);
        for cell in g.coeffs.chunks_exact_mut(2) {
            cell[0] = slope;
            cell[1] = offset;
        }
        g
    }

    #[inline]
    pub fn index(&self, gx: usize, gy: usize, d: usize) -> usize {
        ((gy * self.spec.grid_x + gx) * self.spec.depth + d) * 2
    }

    pub fn slope(&self, gx: usize, gy: usize, d: usize) -> f64 {
        self.coeffs[self.index(gx, gy, d)]
    }

    pub fn offset(&self, gx: usize, gy: usize, d: usize) -> f64 {
        self.coeffs[self.index(gx, gy, d) + 1]
    }
}

/// Linear interpolation taps `(i0, i1, frac)` for a cell-centered coordinate.
#[inline]
fn taps(coord: f64, cells: usize) -> (usize, usize, f64) {
    let c = coord.clamp(0.0, (cells - 1) as f64);
    let i0 = (c.floor() as usize).min(cells - 1);
    let i1 = (i0 + 1).min(cells - 1);
    (i0, i1, c - i0 as f64)
}

/// The eight trilinear corners of one pixel: `(coefficient index, weight)`.
pub(crate) fn corners(
    spec: &GridSpec,
    x: usize,
    y: usize,
    width: usize,
    height: usize,
    g: f64,
    grid: &AffineGrid,
) -> [(usize, f64); 8] {
    let u = (x as f64 + 0.5) * spec.grid_x as f64 / width as f64 - 0.5;
    let v = (y as f64 + 0.5) * spec.grid_y as f64 / height as f64 - 0.5;
    let w = g * spec.depth as f64 - 0.5;
    let (x0, x1, fx) = taps(u, spec.grid_x);
    let (y0, y1, fy) = taps(v, spec.grid_y);
    let (d0, d1, fd) = taps(w, spec.depth);
    let mut out = [(0, 0.0); 8];
    let mut k = 0;
    for (gy, wy) in [(y0, 1.0 - fy), (y1, fy)] {
        for (gx, wx) in [(x0, 1.0 - fx), (x1, fx)] {
            for (d, wd) in [(d0, 1.0 - fd), (d1, fd)] {
                out[k] = (grid.index(gx, gy, d), wy * wx * wd);
                k += 1;
            }
        }
    }
    out
}

fn check_guidance(guidance: &PlanarImage) -> Result<()> {
    if guidance.channels() != 1 {
        return Err(Error::Shape(format!(
            "guidance must be single-channel, got {}",
            guidance.channels()
        )));
    }
    Ok(())
}

/// Unclamped `a(p) g(p) + b(p)` with trilinearly interpolated `a`, `b`.
pub fn slice_raw(grid: &AffineGrid, guidance: &PlanarImage) -> Result<Vec<f64>> {
    check_guidance(guidance)?;
    let (w, h) = (guidance.width(), guidance.height());
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let g = guidance.get(x, y, 0);
            let (mut a, mut b) = (0.0, 0.0);
            for (idx, wt) in corners(&grid.spec, x, y, w, h, g, grid) {
                a += wt * grid.coeffs[idx];
                b += wt * grid.coeffs[idx + 1];
            }
            out.push(a * g + b);
        }
    }
    Ok(out)
}

/// Full-resolution transmission `clamp(a g + b, t_floor, 1)`.
pub fn slice(grid: &AffineGrid, guidance: &PlanarImage, t_floor: f64) -> Result<TransmissionMap> {
    let raw = slice_raw(grid, guidance)?;
    TransmissionMap::new(
        guidance.width(),
        guidance.height(),
        raw.into_iter().map(|t| t.clamp(t_floor, 1.0)).collect(),
    )
}

/// Gradient w.r.t. the grid coefficients given `dL/d(raw t)` per pixel.
pub fn slice_backward(grid: &AffineGrid, guidance: &PlanarImage, grad_t: &[f64]) -> Vec<f64> {
    let (w, h) = (guidance.width(), guidance.height());
    let mut out = vec![0.0; grid.coeffs.len()];
    for y in 0..h {
        for x in 0..w {
            let dt = grad_t[y * w + x];
            if dt == 0.0 {
                continue;
            }
            let g = guidance.get(x, y, 0);
            for (idx, wt) in corners(&grid.spec, x, y, w, h, g, grid) {
                out[idx] += wt * dt * g;
                out[idx + 1] += wt * dt;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: GridSpec = GridSpec {
        grid_x: 4,
        grid_y: 3,
        depth: 5,
    };

    #[test]
    fn weights_sum_to_one() {
        let grid = AffineGrid::zeros(SPEC);
        for y in 0..13 {
            for x in 0..11 {
                for g in [0.0, 0.05, 0.33, 0.5, 0.91, 1.0] {
                    let s: f64 = corners(&SPEC, x, y, 11, 13, g, &grid).iter().map(|c| c.1).sum();
                    assert!((s - 1.0).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn constant_and_identity_grids() {
        let guide = PlanarImage::from_fn(9, 7, 1, |x, y, _| ((x * 7 + y * 3) % 10) as f64 / 9.0);
        let t = slice(&AffineGrid::constant(SPEC, 0.0, 0.6), &guide, 0.05).unwrap();
        assert!(t.values().iter().all(|v| (v - 0.6).abs() < 1e-12));
        let t = slice(&AffineGrid::constant(SPEC, 1.0, 0.0), &guide, 0.05).unwrap();
        for (tv, g) in t.values().iter().zip(guide.data()) {
            assert!((tv - g.clamp(0.05, 1.0)).abs() < 1e-12);
        }
        let t = slice(&AffineGrid::zeros(SPEC), &guide, 0.05).unwrap();
        assert!(t.values().iter().all(|&v| v == 0.05));
    }

    #[test]
    fn backward_is_adjoint_of_raw_slice() {
        let guide = PlanarImage::from_fn(10, 6, 1, |x, y, _| ((x * 5 + y * 11) % 13) as f64 / 12.0);
        let mut grid = AffineGrid::zeros(SPEC);
        for (i, c) in grid.coeffs.iter_mut().enumerate() {
            *c = ((i * 37) % 17) as f64 / 17.0 - 0.4;
        }
        let dt: Vec<f64> = (0..60).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        let back = slice_backward(&grid, &guide, &dt);
        // slicing is linear in the coefficients: <dt, S c> = <S^T dt, c>
        let raw = slice_raw(&grid, &guide).unwrap();
        let lhs: f64 = raw.iter().zip(&dt).map(|(a, b)| a * b).sum();
        let rhs: f64 = back.iter().zip(&grid.coeffs).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }
}

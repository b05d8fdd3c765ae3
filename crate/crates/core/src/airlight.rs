//! Global atmospheric light by hierarchical quad-tree search.
//!
//! Starting from the whole image, the region is split into four quadrants
//! and the search descends into the one with the highest
//! `mean(gray) - stddev(gray)`, i.e. the brightest and flattest. Inside the
//! final block the pixel closest to pure white is taken as the airlight.

use std::fmt;

use crate::error::{Error, Result};
use crate::image::{gray, PlanarImage};

/// Smallest channel value an estimate is allowed to take, so that the
/// `1 / A` ratios downstream stay finite.
const MIN_CHANNEL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Airlight {
    pub rgb: [f64; 3],
}

impl Airlight {
    pub fn new(rgb: [f64; 3]) -> Result<Self> {
        if rgb.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::Argument(format!("airlight channels must be in (0, 1], got {rgb:?}")));
        }
        Ok(Self { rgb })
    }

    pub fn gray(v: f64) -> Result<Self> {
        Self::new([v; 3])
    }

    pub fn max_abs_diff(&self, other: &Airlight) -> f64 {
        (0..3).map(|c| (self.rgb[c] - other.rgb[c]).abs()).fold(0.0, f64::max)
    }
}

impl fmt::Display for Airlight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.4}, {:.4}, {:.4})", self.rgb[0], self.rgb[1], self.rgb[2])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Region {
    fn quadrants(&self) -> [Region; 4] {
        let (w0, h0) = (self.width / 2, self.height / 2);
        let (w1, h1) = (self.width - w0, self.height - h0);
        [
            Region {
                x: self.x,
                y: self.y,
                width: w0,
                height: h0,
            },
            Region {
                x: self.x + w0,
                y: self.y,
                width: w1,
                height: h0,
            },
            Region {
                x: self.x,
                y: self.y + h0,
                width: w0,
                height: h1,
            },
            Region {
                x: self.x + w0,
                y: self.y + h0,
                width: w1,
                height: h1,
            },
        ]
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }
}

/// Stopping rule of the recursion: a block stops being split once its shorter
/// side drops below `min_block` or its area below `min_area_fraction` of the image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AirlightParams {
    pub min_block: usize,
    pub min_area_fraction: f64,
}

impl Default for AirlightParams {
    fn default() -> Self {
        Self {
            min_block: 16,
            min_area_fraction: 0.005,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadTreeSearch {
    pub airlight: Airlight,
    /// Selected pixel `(x, y)`.
    pub pixel: (usize, usize),
    /// Regions visited, from the whole image down to the final block.
    pub path: Vec<Region>,
}

impl QuadTreeSearch {
    pub fn final_block(&self) -> Region {
        *self.path.last().expect("path holds at least the whole image")
    }
}

fn score(gray: &PlanarImage, r: &Region) -> f64 {
    let n = (r.width * r.height) as f64;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for y in r.y..r.y + r.height {
        for x in r.x..r.x + r.width {
            let v = gray.get(x, y, 0);
            sum += v;
            sum_sq += v * v;
        }
    }
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    mean - var.sqrt()
}

/// Quad-tree airlight search with the default area rule and the given minimum block side.
pub fn estimate_airlight(base: &PlanarImage, min_block: usize) -> Result<Airlight> {
    let params = AirlightParams {
        min_block,
        ..Default::default()
    };
    Ok(quad_tree_search(base, &params)?.airlight)
}

pub fn quad_tree_search(base: &PlanarImage, params: &AirlightParams) -> Result<QuadTreeSearch> {
    if base.channels() != 3 {
        return Err(Error::Shape(format!("airlight needs 3 channels, got {}", base.channels())));
    }
    if base.pixel_count() == 0 {
        return Err(Error::Argument("airlight of an empty image".into()));
    }
    let g = gray(base);
    let total_area = base.pixel_count() as f64;
    let mut region = Region {
        x: 0,
        y: 0,
        width: base.width(),
        height: base.height(),
    };
    let mut path = vec![region];
    loop {
        let splittable = region.width >= 2 && region.height >= 2;
        let large_enough = region.width.min(region.height) >= params.min_block
            && (region.width * region.height) as f64 >= params.min_area_fraction * total_area;
        if !(splittable && large_enough) {
            break;
        }
        // ties keep the earlier quadrant: TL, TR, BL, BR
        let mut best = region.quadrants()[0];
        let mut best_score = score(&g, &best);
        for q in &region.quadrants()[1..] {
            let s = score(&g, q);
            if s > best_score {
                best = *q;
                best_score = s;
            }
        }
        region = best;
        path.push(region);
    }

    let mut pixel = (region.x, region.y);
    let mut best_dist = f64::INFINITY;
    for y in region.y..region.y + region.height {
        for x in region.x..region.x + region.width {
            let p = base.pixel(x, y);
            let d: f64 = p.iter().map(|v| (1.0 - v) * (1.0 - v)).sum();
            if d < best_dist {
                best_dist = d;
                pixel = (x, y);
            }
        }
    }
    let rgb = base.pixel(pixel.0, pixel.1).map(|v| v.clamp(MIN_CHANNEL, 1.0));
    Ok(QuadTreeSearch {
        airlight: Airlight { rgb },
        pixel,
        path,
    })
}

/// Copy of `img` with every visited region outlined in red and the chosen
/// pixel marked in green.
pub fn draw_search_path(img: &PlanarImage, search: &QuadTreeSearch) -> PlanarImage {
    let mut out = if img.channels() == 3 {
        img.clone()
    } else {
        PlanarImage::from_planes(&[img, img, img]).expect("single-channel input")
    };
    let mut paint = |x: usize, y: usize, rgb: [f64; 3]| {
        for (c, v) in rgb.into_iter().enumerate() {
            out.set(x, y, c, v);
        }
    };
    for r in &search.path {
        let (x1, y1) = (r.x + r.width - 1, r.y + r.height - 1);
        for x in r.x..=x1 {
            paint(x, r.y, [1.0, 0.0, 0.0]);
            paint(x, y1, [1.0, 0.0, 0.0]);
        }
        for y in r.y..=y1 {
            paint(r.x, y, [1.0, 0.0, 0.0]);
            paint(x1, y, [1.0, 0.0, 0.0]);
        }
    }
    paint(search.pixel.0, search.pixel.1, [0.0, 1.0, 0.0]);
    out
}

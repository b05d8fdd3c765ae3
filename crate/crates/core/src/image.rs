//! Planar floating-point rasters, resampling and file I/O.
//!
//! Samples are stored plane by plane (`c * width * height + y * width + x`)
//! in double precision. Every public operation that produces an image in
//! this module returns samples in `[0, 1]`; the only signed images in the
//! crate are detail layers produced by [`crate::wgif::decompose`].

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageReader, Luma, Rgb};

use crate::error::{Error, Result};

/// BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Clone, Debug, PartialEq)]
pub struct PlanarImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl PlanarImage {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        assert!(channels == 1 || channels == 3, "channels must be 1 or 3");
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    /// Builds an image from planar data; fails if the length does not match
    /// or a sample is not finite.
    pub fn from_data(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Shape(format!("{channels} channels, expected 1 or 3")));
        }
        if data.len() != width * height * channels {
            return Err(Error::Shape(format!(
                "data length {} != {width}x{height}x{channels}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i} of image data")));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Evaluates `f(x, y, c)` for every sample.
    pub fn from_fn(width: usize, height: usize, channels: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut img = Self::new(width, height, channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    img.set(x, y, c, f(x, y, c));
                }
            }
        }
        img
    }

    /// Stacks single-channel planes (1 or 3 of them) into one image.
    pub fn from_planes(planes: &[&PlanarImage]) -> Result<Self> {
        let first = planes.first().ok_or_else(|| Error::Argument("no planes given".into()))?;
        if planes.len() != 1 && planes.len() != 3 {
            return Err(Error::Shape(format!("{} planes, expected 1 or 3", planes.len())));
        }
        let mut data = Vec::with_capacity(first.pixel_count() * planes.len());
        for p in planes {
            if p.channels != 1 || !p.same_size(first) {
                return Err(Error::Shape("planes must be single-channel and equally sized".into()));
            }
            data.extend_from_slice(&p.data);
        }
        Self::from_data(first.width, first.height, planes.len(), data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.pixel_count();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.pixel_count();
        &mut self.data[c * n..(c + 1) * n]
    }

    /// Copies channel `c` out as a single-channel image.
    pub fn channel(&self, c: usize) -> PlanarImage {
        PlanarImage {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.plane(c).to_vec(),
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    /// RGB (or gray) vector of one pixel.
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        if self.channels == 1 {
            let v = self.get(x, y, 0);
            [v, v, v]
        } else {
            [self.get(x, y, 0), self.get(x, y, 1), self.get(x, y, 2)]
        }
    }

    pub fn same_size(&self, other: &PlanarImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn same_shape(&self, other: &PlanarImage) -> bool {
        self.same_size(other) && self.channels == other.channels
    }

    pub(crate) fn check_same_shape(&self, other: &PlanarImage, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )))
        }
    }

    pub(crate) fn check_same_size(&self, other: &PlanarImage, what: &str) -> Result<()> {
        if self.same_size(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PlanarImage {
        PlanarImage {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two images of identical shape.
    pub fn zip_map(&self, other: &PlanarImage, f: impl Fn(f64, f64) -> f64) -> Result<PlanarImage> {
        self.check_same_shape(other, "zip_map")?;
        Ok(PlanarImage {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn clamped(&self) -> PlanarImage {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len().max(1) as f64
    }

    /// Rectangular sub-image.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<PlanarImage> {
        if width == 0 || height == 0 || x0 + width > self.width || y0 + height > self.height {
            return Err(Error::Argument(format!(
                "crop {width}x{height}+{x0}+{y0} outside {}x{}",
                self.width, self.height
            )));
        }
        Ok(PlanarImage::from_fn(width, height, self.channels, |x, y, c| {
            self.get(x0 + x, y0 + y, c)
        }))
    }

    /// Centered square-or-rectangular crop; sizes larger than the image are
    /// truncated to the image size.
    pub fn center_crop(&self, width: usize, height: usize) -> Result<PlanarImage> {
        let w = width.min(self.width);
        let h = height.min(self.height);
        self.crop((self.width - w) / 2, (self.height - h) / 2, w, h)
    }

    pub fn mirror_horizontal(&self) -> PlanarImage {
        PlanarImage::from_fn(self.width, self.height, self.channels, |x, y, c| {
            self.get(self.width - 1 - x, y, c)
        })
    }
}

/// BT.601 luminance of a 3-channel image.
pub fn luminance(img: &PlanarImage) -> Result<PlanarImage> {
    if img.channels() != 3 {
        return Err(Error::Shape(format!("luminance needs 3 channels, got {}", img.channels())));
    }
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let data = (0..img.pixel_count())
        .map(|i| (LUMA_WEIGHTS[0] * r[i] + LUMA_WEIGHTS[1] * g[i] + LUMA_WEIGHTS[2] * b[i]).clamp(0.0, 1.0))
        .collect();
    PlanarImage::from_data(img.width(), img.height(), 1, data)
}

/// Luminance for 3-channel input, the image itself for 1-channel input.
pub fn gray(img: &PlanarImage) -> PlanarImage {
    if img.channels() == 1 {
        img.clone()
    } else {
        luminance(img).expect("three channels")
    }
}

/// Bilinear resampling (pixel-center aligned). Axes shrunk by more than 2x
/// are first area-averaged down to twice the target length.
pub fn resize(img: &PlanarImage, new_w: usize, new_h: usize) -> Result<PlanarImage> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::Argument(format!("resize to {new_w}x{new_h}")));
    }
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::Argument("resize of an empty image".into()));
    }
    let horizontal = resize_axis(img, new_w, Axis::X);
    let mut out = resize_axis(&horizontal, new_h, Axis::Y);
    out.data_mut().iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    Ok(out)
}

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

fn resize_axis(img: &PlanarImage, new_len: usize, axis: Axis) -> PlanarImage {
    let len = match axis {
        Axis::X => img.width(),
        Axis::Y => img.height(),
    };
    if len == new_len {
        return img.clone();
    }
    let mut taps = if len > 2 * new_len {
        let mid = 2 * new_len;
        compose_taps(&area_taps(len, mid), &bilinear_taps(mid, new_len))
    } else {
        bilinear_taps(len, new_len)
    };
    // normalize so constants survive bit-exactly up to rounding
    for row in &mut taps {
        let s: f64 = row.iter().map(|t| t.1).sum();
        row.iter_mut().for_each(|t| t.1 /= s);
    }
    let (w, h) = match axis {
        Axis::X => (new_len, img.height()),
        Axis::Y => (img.width(), new_len),
    };
    PlanarImage::from_fn(w, h, img.channels(), |x, y, c| match axis {
        Axis::X => taps[x].iter().map(|&(i, wt)| wt * img.get(i, y, c)).sum(),
        Axis::Y => taps[y].iter().map(|&(i, wt)| wt * img.get(x, i, c)).sum(),
    })
}

type Taps = Vec<Vec<(usize, f64)>>;

fn bilinear_taps(len: usize, new_len: usize) -> Taps {
    let scale = len as f64 / new_len as f64;
    (0..new_len)
        .map(|o| {
            let src = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
            let i0 = src.floor() as usize;
            let i1 = (i0 + 1).min(len - 1);
            let f = src - i0 as f64;
            if i1 == i0 || f == 0.0 {
                vec![(i0, 1.0)]
            } else {
                vec![(i0, 1.0 - f), (i1, f)]
            }
        })
        .collect()
}

/// Exact overlap weights of output cells over input cells.
fn area_taps(len: usize, new_len: usize) -> Taps {
    let scale = len as f64 / new_len as f64;
    (0..new_len)
        .map(|o| {
            let lo = o as f64 * scale;
            let hi = lo + scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(len);
            (first..last)
                .filter_map(|i| {
                    let overlap = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
                    (overlap > 0.0).then_some((i, overlap / scale))
                })
                .collect()
        })
        .collect()
}

fn compose_taps(first: &Taps, second: &Taps) -> Taps {
    second
        .iter()
        .map(|row| {
            let mut acc: Vec<(usize, f64)> = Vec::new();
            for &(mid, w2) in row {
                for &(src, w1) in &first[mid] {
                    match acc.iter_mut().find(|t| t.0 == src) {
                        Some(t) => t.1 += w1 * w2,
                        None => acc.push((src, w1 * w2)),
                    }
                }
            }
            acc
        })
        .collect()
}

/// Loads an 8/16-bit PNG or binary PPM/PGM, normalized by the format's max value.
/// Alpha is dropped; gray formats give a 1-channel image.
pub fn load_image(path: impl AsRef<Path>) -> Result<PlanarImage> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let decoded = reader.decode().map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    })?;
    from_dynamic(decoded).map_err(|msg| Error::format(path, msg))
}

fn from_dynamic(img: DynamicImage) -> std::result::Result<PlanarImage, String> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let interleaved =
        |raw: Vec<f64>, step: usize, channels: usize| PlanarImage::from_fn(w, h, channels, |x, y, c| raw[(y * w + x) * step + c]);
    let norm8 = |v: &[u8]| v.iter().map(|&b| b as f64 / 255.0).collect::<Vec<_>>();
    let norm16 = |v: &[u16]| v.iter().map(|&b| b as f64 / 65535.0).collect::<Vec<_>>();
    Ok(match img {
        DynamicImage::ImageLuma8(b) => interleaved(norm8(b.as_raw()), 1, 1),
        DynamicImage::ImageLumaA8(b) => interleaved(norm8(b.as_raw()), 2, 1),
        DynamicImage::ImageRgb8(b) => interleaved(norm8(b.as_raw()), 3, 3),
        DynamicImage::ImageRgba8(b) => interleaved(norm8(b.as_raw()), 4, 3),
        DynamicImage::ImageLuma16(b) => interleaved(norm16(b.as_raw()), 1, 1),
        DynamicImage::ImageLumaA16(b) => interleaved(norm16(b.as_raw()), 2, 1),
        DynamicImage::ImageRgb16(b) => interleaved(norm16(b.as_raw()), 3, 3),
        DynamicImage::ImageRgba16(b) => interleaved(norm16(b.as_raw()), 4, 3),
        other => return Err(format!("unsupported sample format {:?}", other.color())),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

/// Saves as 8-bit PNG, or binary PPM/PGM when the extension says so.
pub fn save_image(img: &PlanarImage, path: impl AsRef<Path>) -> Result<()> {
    save_image_with_depth(img, path, BitDepth::Eight)
}

/// Samples are clamped to `[0, 1]` and rounded to the nearest code value.
pub fn save_image_with_depth(img: &PlanarImage, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (img.width() as u32, img.height() as u32);
    let quantize = |max: f64| move |x: u32, y: u32, c: usize| (img.get(x as usize, y as usize, c).clamp(0.0, 1.0) * max).round();
    let dynamic = match (img.channels(), depth) {
        (1, BitDepth::Eight) => {
            let q = quantize(255.0);
            DynamicImage::ImageLuma8(ImageBuffer::from_fn(w, h, |x, y| Luma([q(x, y, 0) as u8])))
        }
        (1, BitDepth::Sixteen) => {
            let q = quantize(65535.0);
            DynamicImage::ImageLuma16(ImageBuffer::from_fn(w, h, |x, y| Luma([q(x, y, 0) as u16])))
        }
        (_, BitDepth::Eight) => {
            let q = quantize(255.0);
            DynamicImage::ImageRgb8(ImageBuffer::from_fn(w, h, |x, y| {
                Rgb([q(x, y, 0) as u8, q(x, y, 1) as u8, q(x, y, 2) as u8])
            }))
        }
        (_, BitDepth::Sixteen) => {
            let q = quantize(65535.0);
            DynamicImage::ImageRgb16(ImageBuffer::from_fn(w, h, |x, y| {
                Rgb([q(x, y, 0) as u16, q(x, y, 1) as u16, q(x, y, 2) as u16])
            }))
        }
    };
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let format = match ext.as_str() {
        "ppm" | "pgm" | "pnm" => image::ImageFormat::Pnm,
        _ => image::ImageFormat::Png,
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    dynamic.write_to(&mut out, format).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    })?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Scene depth, finite and nonnegative.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    depth: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, depth: Vec<f64>) -> Result<Self> {
        if depth.len() != width * height {
            return Err(Error::Shape(format!("depth length {} != {width}x{height}", depth.len())));
        }
        if let Some(i) = depth.iter().position(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::Argument(format!("depth sample {i} is {}", depth[i])));
        }
        Ok(Self { width, height, depth })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let depth = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, depth)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.depth
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.depth[y * self.width + x]
    }

    /// Rescales so the maximum depth becomes 1; an all-zero map is returned as is.
    pub fn normalized(&self) -> DepthMap {
        let max = self.depth.iter().cloned().fold(0.0, f64::max);
        if max <= 0.0 {
            return self.clone();
        }
        DepthMap {
            width: self.width,
            height: self.height,
            depth: self.depth.iter().map(|d| d / max).collect(),
        }
    }

    pub fn resized(&self, new_w: usize, new_h: usize) -> Result<DepthMap> {
        let max = self.depth.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let img = PlanarImage::from_data(self.width, self.height, 1, self.depth.iter().map(|d| d / max).collect())?;
        let r = resize(&img, new_w, new_h)?;
        DepthMap::new(new_w, new_h, r.data().iter().map(|v| v * max).collect())
    }

    pub fn center_crop(&self, width: usize, height: usize) -> Result<DepthMap> {
        let w = width.min(self.width);
        let h = height.min(self.height);
        let (x0, y0) = ((self.width - w) / 2, (self.height - h) / 2);
        DepthMap::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y))
    }
}

/// Loads a depth map: 16-bit (or 8-bit) grayscale PNG read as `value / max`,
/// or a single-channel PFM in its native units.
pub fn load_depth(path: impl AsRef<Path>) -> Result<DepthMap> {
    let path = path.as_ref();
    let is_pfm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pfm"));
    if is_pfm {
        return read_pfm(path);
    }
    let img = load_image(path)?;
    if img.channels() != 1 {
        return Err(Error::format(path, "depth PNG must be single-channel"));
    }
    DepthMap::new(img.width(), img.height(), img.into_data())
}

fn read_pfm(path: &Path) -> Result<DepthMap> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        let mut line = String::new();
        if reader.read_line(&mut line).map_err(|e| Error::io(path, e))? == 0 {
            return Err(Error::format(path, "truncated PFM header"));
        }
        tokens.extend(line.split_whitespace().map(str::to_owned));
    }
    if tokens[0] != "Pf" {
        return Err(Error::format(path, "only single-channel PFM (Pf) depth is supported"));
    }
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::format(path, format!("bad PFM header field {s:?}")))
    };
    let width = parse(&tokens[1])? as usize;
    let height = parse(&tokens[2])? as usize;
    let little_endian = parse(&tokens[3])? < 0.0;
    let mut raw = vec![0u8; width * height * 4];
    reader.read_exact(&mut raw).map_err(|e| Error::io(path, e))?;
    let values: Vec<f32> = raw
        .chunks_exact(4)
        .map(|b| {
            let b = [b[0], b[1], b[2], b[3]];
            if little_endian {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();
    // PFM rows run bottom to top
    DepthMap::from_fn(width, height, |x, y| values[(height - 1 - y) * width + x] as f64)
}

/// Writes a little-endian single-channel PFM.
pub fn save_depth_pfm(depth: &DepthMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(out, "Pf\n{} {}\n-1.0\n", depth.width, depth.height).map_err(io)?;
    for y in (0..depth.height).rev() {
        for x in 0..depth.width {
            out.write_all(&(depth.get(x, y) as f32).to_le_bytes()).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

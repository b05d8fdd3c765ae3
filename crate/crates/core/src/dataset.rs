//! Paired dataset directories: `hazy/<stem>.png` next to `clean/<stem>.png`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::{load_image, resize, save_image, PlanarImage};
use crate::learned::TrainingPair;

const IMAGE_EXTENSIONS: &[&str] = &["png", "ppm", "pgm", "pnm"];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PairListing {
    /// `(stem, hazy, clean)`, sorted by stem.
    pub matched: Vec<(String, PathBuf, PathBuf)>,
    /// Stems present on only one side.
    pub unmatched: Vec<String>,
}

fn images_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if !ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_owned(), path);
        }
    }
    Ok(out)
}

pub fn list_pairs(root: impl AsRef<Path>) -> Result<PairListing> {
    let root = root.as_ref();
    let hazy = images_by_stem(&root.join("hazy"))?;
    let clean = images_by_stem(&root.join("clean"))?;
    let mut listing = PairListing::default();
    for (stem, h) in &hazy {
        match clean.get(stem) {
            Some(c) => listing.matched.push((stem.clone(), h.clone(), c.clone())),
            None => listing.unmatched.push(stem.clone()),
        }
    }
    listing
        .unmatched
        .extend(clean.keys().filter(|s| !hazy.contains_key(*s)).cloned());
    listing.unmatched.sort();
    Ok(listing)
}

/// Loads every matched pair; unmatched stems are returned alongside.
pub fn load_pairs(root: impl AsRef<Path>) -> Result<(Vec<TrainingPair>, Vec<String>)> {
    let listing = list_pairs(root)?;
    let pairs = listing
        .matched
        .iter()
        .map(|(stem, h, c)| {
            Ok(TrainingPair {
                name: stem.clone(),
                hazy: load_image(h)?,
                clean: load_image(c)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((pairs, listing.unmatched))
}

/// Center crop to `crop x crop`, then resize to `down x down`.
pub fn crop_and_downsample(img: &PlanarImage, crop: usize, down: usize) -> Result<PlanarImage> {
    if crop == 0 || down == 0 {
        return Err(Error::Argument("crop and output sizes must be >= 1".into()));
    }
    resize(&img.center_crop(crop, crop)?, down, down)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrepareOptions {
    pub crop: usize,
    pub down: usize,
    /// Also write a horizontally mirrored copy of every pair.
    pub mirror: bool,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        Self {
            crop: 480,
            down: 256,
            mirror: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PrepareReport {
    pub written: Vec<String>,
    pub skipped: Vec<String>,
}

/// Writes the cropped, downsampled (and optionally mirrored) pairs of `src`
/// into `dst/hazy` and `dst/clean` as PNG. Mirrored copies get a `_m` suffix.
pub fn prepare_dataset(src: impl AsRef<Path>, dst: impl AsRef<Path>, opts: &PrepareOptions) -> Result<PrepareReport> {
    let listing = list_pairs(src)?;
    let dst = dst.as_ref();
    for side in ["hazy", "clean"] {
        let d = dst.join(side);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let mut report = PrepareReport {
        skipped: listing.unmatched.clone(),
        ..Default::default()
    };
    for (stem, h, c) in &listing.matched {
        let hazy = crop_and_downsample(&load_image(h)?, opts.crop, opts.down)?;
        let clean = crop_and_downsample(&load_image(c)?, opts.crop, opts.down)?;
        let mut outputs = vec![(stem.clone(), hazy.clone(), clean.clone())];
        if opts.mirror {
            outputs.push((format!("{stem}_m"), hazy.mirror_horizontal(), clean.mirror_horizontal()));
        }
        for (name, hz, cl) in outputs {
            save_image(&hz, dst.join("hazy").join(format!("{name}.png")))?;
            save_image(&cl, dst.join("clean").join(format!("{name}.png")))?;
            report.written.push(name);
        }
    }
    Ok(report)
}

//! Flat binary model files.
//!
//! Layout, all integers little-endian `u32`:
//!
//! ```text
//! b"HZKGRID1"
//! grid_x grid_y depth
//! stages base_channels
//! layer_count, then (in, out) per layer (convolutions, then head)
//! param_count (u64), then param_count little-endian f64
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::learned::grid::GridSpec;
use crate::learned::model::{BilateralGridModel, ModelConfig};

const MAGIC: &[u8; 8] = b"HZKGRID1";

pub fn model_to_bytes(model: &BilateralGridModel) -> Vec<u8> {
    let c = model.config();
    let shapes = c.layer_shapes();
    let mut out = Vec::with_capacity(64 + model.param_count() * 8);
    out.extend_from_slice(MAGIC);
    let mut put = |v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
    put(c.grid.grid_x);
    put(c.grid.grid_y);
    put(c.grid.depth);
    put(c.stages);
    put(c.base_channels);
    put(shapes.len());
    for (i, o) in shapes {
        put(i);
        put(o);
    }
    out.extend_from_slice(&(model.param_count() as u64).to_le_bytes());
    for p in model.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos + n;
        let s = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| format!("truncated model file at byte {}", self.pos))?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<usize, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> std::result::Result<BilateralGridModel, String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err("not a model file (bad magic)".into());
    }
    let grid = GridSpec {
        grid_x: r.u32()?,
        grid_y: r.u32()?,
        depth: r.u32()?,
    };
    let config = ModelConfig {
        stages: r.u32()?,
        base_channels: r.u32()?,
        grid,
    };
    config.validate().map_err(|e| e.to_string())?;
    let layers = r.u32()?;
    let mut shapes = Vec::with_capacity(layers.min(64));
    for _ in 0..layers {
        shapes.push((r.u32()?, r.u32()?));
    }
    if shapes != config.layer_shapes() {
        return Err(format!("layer shapes {shapes:?} do not match the header"));
    }
    let count = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes")) as usize;
    let mut params = Vec::with_capacity(count.min(1 << 24));
    for _ in 0..count {
        params.push(f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes")));
    }
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    BilateralGridModel::from_params(config, params).map_err(|e| e.to_string())
}

pub fn save_model(model: &BilateralGridModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<BilateralGridModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes).map_err(|msg| Error::format(path, msg))
}

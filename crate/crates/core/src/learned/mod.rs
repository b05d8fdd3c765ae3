//! Learned transmission: a small network predicts a low-resolution
//! bilateral grid of affine coefficients from the downsampled base layer,
//! and the grid is sliced at full resolution against the base-layer
//! luminance.

pub mod grid;
pub mod io;
pub mod model;
pub mod train;

pub use grid::{slice, AffineGrid, GridSpec};
pub use io::{load_model, save_model};
pub use model::{BilateralGridModel, ModelConfig};
pub use train::{train, PreparedPair, StepRecord, TrainConfig, TrainingPair};

use crate::error::Result;
use crate::image::{luminance, resize, PlanarImage};
use crate::transmission::TransmissionMap;

/// Downsample the base layer, predict the grid, slice it against the
/// full-resolution base luminance.
pub fn estimate_t_learned(model: &BilateralGridModel, base: &PlanarImage, t_floor: f64) -> Result<TransmissionMap> {
    let c = model.config();
    let lowres = resize(base, c.input_width(), c.input_height())?;
    let grid = model.predict_grid(&lowres)?;
    slice(&grid, &luminance(base)?, t_floor)
}

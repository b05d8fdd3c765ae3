//! Single-image dehazing toolkit.
//!
//! The pipeline splits a hazy image into an edge-preserving base layer and
//! a detail layer, estimates airlight and transmission from the base layer
//! only, and recovers the scene with a transmission-gated blend that keeps
//! noise in the detail layer from being amplified in dense haze.

pub mod airlight;
pub mod config;
pub mod dataset;
pub mod error;
pub mod filter;
pub mod image;
pub mod learned;
pub mod losses;
pub mod metrics;
pub mod noise;
pub mod pipeline;
pub mod recovery;
pub mod synthesis;
pub mod transmission;
pub mod wgif;

pub use airlight::Airlight;
pub use error::{Error, Result};
pub use image::{DepthMap, PlanarImage};
pub use learned::{BilateralGridModel, ModelConfig};
pub use recovery::RecoveryParams;
pub use transmission::{TransmissionMap, T_FLOOR};
pub use wgif::{LayerPair, WgifParams};

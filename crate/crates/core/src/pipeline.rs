//! End-to-end dehazing: decompose, estimate airlight and transmission from
//! the base layer, recover.

use crate::airlight::{quad_tree_search, Airlight, AirlightParams};
use crate::error::Result;
use crate::image::PlanarImage;
use crate::learned::{estimate_t_learned, BilateralGridModel};
use crate::recovery::{recover_classic, recover_fused, RecoveryParams};
use crate::transmission::prior::{estimate_t_prior, PriorParams};
use crate::transmission::{TransmissionMap, T_FLOOR};
use crate::wgif::{decompose, LayerPair, WgifParams};

#[derive(Clone, Copy, Debug)]
pub enum Estimator<'a> {
    Prior,
    Learned(&'a BilateralGridModel),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DehazeOptions {
    pub wgif: WgifParams,
    pub airlight: AirlightParams,
    pub prior: PriorParams,
    pub recovery: RecoveryParams,
    pub t_floor: f64,
    /// Invert the full hazy image instead of the gated base/detail blend.
    pub classic: bool,
}

impl Default for DehazeOptions {
    fn default() -> Self {
        Self {
            wgif: WgifParams::default(),
            airlight: AirlightParams::default(),
            prior: PriorParams::default(),
            recovery: RecoveryParams::default(),
            t_floor: T_FLOOR,
            classic: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Dehazed {
    pub recovered: PlanarImage,
    pub layers: LayerPair,
    pub airlight: Airlight,
    pub transmission: TransmissionMap,
}

pub fn dehaze(hazy: &PlanarImage, estimator: Estimator<'_>, opts: &DehazeOptions) -> Result<Dehazed> {
    opts.recovery.validate()?;
    let layers = decompose(hazy, &opts.wgif)?;
    let airlight = quad_tree_search(&layers.base, &opts.airlight)?.airlight;
    let transmission = match estimator {
        Estimator::Prior => {
            let prior = PriorParams {
                t_floor: opts.t_floor,
                ..opts.prior
            };
            estimate_t_prior(&layers.base, &airlight, &prior)?
        }
        Estimator::Learned(model) => estimate_t_learned(model, &layers.base, opts.t_floor)?,
    };
    let recovered = if opts.classic {
        recover_classic(hazy, &transmission, &airlight, opts.recovery.t0)?
    } else {
        recover_fused(&layers, &transmission, &airlight, &opts.recovery)?
    };
    Ok(Dehazed {
        recovered,
        layers,
        airlight,
        transmission,
    })
}

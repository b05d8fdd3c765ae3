//! Every pipeline tunable in one place, loadable from `key = value` files.
//!
//! Lines are `key = value`; blank lines and lines starting with `#` are
//! ignored. Unknown keys are rejected.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::airlight::AirlightParams;
use crate::error::{Error, Result};
use crate::learned::{GridSpec, ModelConfig, TrainConfig};
use crate::losses::{GaussianKernel, DEFAULT_COLOR_WEIGHT};
use crate::pipeline::DehazeOptions;
use crate::recovery::RecoveryParams;
use crate::transmission::prior::PriorParams;
use crate::transmission::T_FLOOR;
use crate::wgif::WgifParams;

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub radius: usize,
    pub lambda: f64,
    pub eps: f64,
    pub omega: f64,
    pub patch_radius: usize,
    pub min_block: usize,
    pub eta: f64,
    pub t0: f64,
    pub slope: f64,
    pub t_floor: f64,
    pub wc: f64,
    pub lr: f64,
    pub steps: usize,
    pub seed: u64,
    pub batch: usize,
    pub stages: usize,
    pub grid_x: usize,
    pub grid_y: usize,
    pub grid_depth: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let wgif = WgifParams::default();
        let prior = PriorParams::default();
        let rec = RecoveryParams::default();
        let model = ModelConfig::default();
        Self {
            radius: wgif.radius,
            lambda: wgif.lambda,
            eps: wgif.epsilon,
            omega: prior.omega,
            patch_radius: prior.patch_radius,
            min_block: AirlightParams::default().min_block,
            eta: rec.eta,
            t0: rec.t0,
            slope: rec.slope,
            t_floor: T_FLOOR,
            wc: DEFAULT_COLOR_WEIGHT,
            lr: 1e-3,
            steps: 1000,
            seed: 0,
            batch: 1,
            stages: model.stages,
            grid_x: model.grid.grid_x,
            grid_y: model.grid.grid_y,
            grid_depth: model.grid.depth,
        }
    }
}

pub const KEYS: &[&str] = &[
    "radius",
    "lambda",
    "eps",
    "omega",
    "patch_radius",
    "min_block",
    "eta",
    "t0",
    "slope",
    "t_floor",
    "wc",
    "lr",
    "steps",
    "seed",
    "batch",
    "stages",
    "grid_x",
    "grid_y",
    "grid_depth",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Argument(format!("bad value {value:?} for {key}")))
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "radius" => self.radius = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "eps" => self.eps = parse(key, value)?,
            "omega" => self.omega = parse(key, value)?,
            "patch_radius" => self.patch_radius = parse(key, value)?,
            "min_block" => self.min_block = parse(key, value)?,
            "eta" => self.eta = parse(key, value)?,
            "t0" => self.t0 = parse(key, value)?,
            "slope" => self.slope = parse(key, value)?,
            "t_floor" => self.t_floor = parse(key, value)?,
            "wc" => self.wc = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "batch" => self.batch = parse(key, value)?,
            "stages" => self.stages = parse(key, value)?,
            "grid_x" => self.grid_x = parse(key, value)?,
            "grid_y" => self.grid_y = parse(key, value)?,
            "grid_depth" => self.grid_depth = parse(key, value)?,
            other => return Err(Error::Argument(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Argument(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| Error::Argument(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.merge_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_config_string(&self) -> String {
        KEYS.iter().map(|k| format!("{k} = {}\n", self.value_of(k))).collect()
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "radius" => self.radius.to_string(),
            "lambda" => self.lambda.to_string(),
            "eps" => self.eps.to_string(),
            "omega" => self.omega.to_string(),
            "patch_radius" => self.patch_radius.to_string(),
            "min_block" => self.min_block.to_string(),
            "eta" => self.eta.to_string(),
            "t0" => self.t0.to_string(),
            "slope" => self.slope.to_string(),
            "t_floor" => self.t_floor.to_string(),
            "wc" => self.wc.to_string(),
            "lr" => self.lr.to_string(),
            "steps" => self.steps.to_string(),
            "seed" => self.seed.to_string(),
            "batch" => self.batch.to_string(),
            "stages" => self.stages.to_string(),
            "grid_x" => self.grid_x.to_string(),
            "grid_y" => self.grid_y.to_string(),
            "grid_depth" => self.grid_depth.to_string(),
            _ => unreachable!("key list and accessor out of sync"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.wgif().validate()?;
        self.recovery().validate()?;
        self.train_config().validate()?;
        self.model_config().validate()?;
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::Argument(format!("omega must be in (0, 1], got {}", self.omega)));
        }
        if self.min_block == 0 {
            return Err(Error::Argument("min_block must be >= 1".into()));
        }
        Ok(())
    }

    pub fn wgif(&self) -> WgifParams {
        WgifParams {
            radius: self.radius,
            lambda: self.lambda,
            epsilon: self.eps,
        }
    }

    pub fn recovery(&self) -> RecoveryParams {
        RecoveryParams {
            t0: self.t0,
            eta: self.eta,
            slope: self.slope,
        }
    }

    pub fn airlight(&self) -> AirlightParams {
        AirlightParams {
            min_block: self.min_block,
            ..Default::default()
        }
    }

    pub fn prior(&self) -> PriorParams {
        PriorParams {
            omega: self.omega,
            patch_radius: self.patch_radius,
            refine: Some(self.wgif()),
            t_floor: self.t_floor,
        }
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            stages: self.stages,
            base_channels: ModelConfig::default().base_channels,
            grid: GridSpec {
                grid_x: self.grid_x,
                grid_y: self.grid_y,
                depth: self.grid_depth,
            },
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr,
            steps: self.steps,
            color_weight: self.wc,
            seed: self.seed,
            batch: self.batch,
            wgif: self.wgif(),
            airlight: self.airlight(),
            recovery: self.recovery(),
            t_floor: self.t_floor,
            kernel: GaussianKernel::default(),
        }
    }

    pub fn dehaze_options(&self, classic: bool) -> DehazeOptions {
        DehazeOptions {
            wgif: self.wgif(),
            airlight: self.airlight(),
            prior: self.prior(),
            recovery: self.recovery(),
            t_floor: self.t_floor,
            classic,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let mut cfg = PipelineConfig::default();
        cfg.merge_str("# comment\nlambda = 0.05\n\n eta=3.5 \nsteps = 12\n").unwrap();
        assert_eq!(cfg.lambda, 0.05);
        assert_eq!(cfg.eta, 3.5);
        assert_eq!(cfg.steps, 12);
        let mut again = PipelineConfig::default();
        again.merge_str(&cfg.to_config_string()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut cfg = PipelineConfig::default();
        assert!(cfg.merge_str("lamda = 0.1").is_err());
        assert!(cfg.merge_str("steps = -3").is_err());
        assert!(cfg.merge_str("no equals sign").is_err());
        cfg.merge_str("eta = 0.5").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn defaults_are_valid() {
        PipelineConfig::default().validate().unwrap();
    }
}

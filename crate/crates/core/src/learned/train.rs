//! End-to-end training of the grid predictor through fused recovery.
//!
//! Per pair, the WGIF layers, airlight and guidance map are computed once
//! and treated as constants; only the transmission path carries gradient:
//! `loss <- clamp(I) <- fused recovery <- clamp(t) <- slice <- grid <- network`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::airlight::{quad_tree_search, Airlight, AirlightParams};
use crate::error::{Error, Result};
use crate::image::{luminance, resize, PlanarImage};
use crate::learned::grid::{slice_backward, slice_raw};
use crate::learned::model::BilateralGridModel;
use crate::losses::{total_loss, GaussianKernel, DEFAULT_COLOR_WEIGHT};
use crate::recovery::{recover_fused_with_grad, RecoveryParams};
use crate::transmission::T_FLOOR;
use crate::wgif::{decompose, LayerPair, WgifParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub color_weight: f64,
    pub seed: u64,
    /// Pairs per step; gradients are averaged over the batch.
    pub batch: usize,
    pub wgif: WgifParams,
    pub airlight: AirlightParams,
    pub recovery: RecoveryParams,
    pub t_floor: f64,
    pub kernel: GaussianKernel,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            steps: 1000,
            color_weight: DEFAULT_COLOR_WEIGHT,
            seed: 0,
            batch: 1,
            wgif: WgifParams::default(),
            airlight: AirlightParams::default(),
            recovery: RecoveryParams::default(),
            t_floor: T_FLOOR,
            kernel: GaussianKernel::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if !(self.color_weight >= 0.0 && self.color_weight.is_finite()) {
            return Err(Error::Argument(format!(
                "color weight must be >= 0, got {}",
                self.color_weight
            )));
        }
        if self.batch == 0 {
            return Err(Error::Argument("batch must be >= 1".into()));
        }
        if !(self.t_floor > 0.0 && self.t_floor < 1.0) {
            return Err(Error::Argument(format!("t_floor must be in (0, 1), got {}", self.t_floor)));
        }
        self.wgif.validate()?;
        self.recovery.validate()
    }
}

/// A hazy image with its clean ground truth.
#[derive(Clone, Debug)]
pub struct TrainingPair {
    pub name: String,
    pub hazy: PlanarImage,
    pub clean: PlanarImage,
}

/// Everything about a pair that does not depend on the network parameters.
#[derive(Clone, Debug)]
pub struct PreparedPair {
    pub layers: LayerPair,
    pub airlight: Airlight,
    pub clean: PlanarImage,
    pub guidance: PlanarImage,
    pub lowres: PlanarImage,
}

impl PreparedPair {
    pub fn new(model: &BilateralGridModel, pair: &TrainingPair, cfg: &TrainConfig) -> Result<Self> {
        pair.hazy.check_same_shape(&pair.clean, &format!("pair {}", pair.name))?;
        let layers = decompose(&pair.hazy, &cfg.wgif)?;
        let airlight = quad_tree_search(&layers.base, &cfg.airlight)?.airlight;
        let guidance = luminance(&layers.base)?;
        let c = model.config();
        let lowres = resize(&layers.base, c.input_width(), c.input_height())?;
        Ok(Self {
            layers,
            airlight,
            clean: pair.clean.clone(),
            guidance,
            lowres,
        })
    }
}

/// Loss, parameter gradient and the on/off state of every kink
/// (ReLU, transmission clamp, `t0` floor, output clamp) for one pair.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub loss: f64,
    pub restoration: f64,
    pub color: f64,
    pub grad: Vec<f64>,
    /// Summands of `loss`, see [`crate::losses::TotalLoss::terms`].
    pub terms: Vec<f64>,
    pub kink_pattern: Vec<bool>,
}

pub fn evaluate(model: &BilateralGridModel, pair: &PreparedPair, cfg: &TrainConfig) -> Result<Evaluation> {
    let input = model.network_input(&pair.lowres)?;
    let cache = model.forward(&input);
    let t_raw = slice_raw(&cache.grid, &pair.guidance)?;
    let t: Vec<f64> = t_raw.iter().map(|v| v.clamp(cfg.t_floor, 1.0)).collect();
    let (pred_raw, d_pred_dt) = recover_fused_with_grad(&pair.layers, &t, &pair.airlight, &cfg.recovery);
    let pred = pred_raw.clamped();
    let loss = total_loss(&pred, &pair.clean, cfg.color_weight, &cfg.kernel)?;
    if !loss.value.is_finite() {
        return Err(Error::NonFinite(format!(
            "loss is {} (restoration {}, color {})",
            loss.value, loss.restoration, loss.color
        )));
    }

    let n = t.len();
    let mut grad_t = vec![0.0; n];
    for c in 0..3 {
        for i in 0..n {
            let p = pred_raw.data()[c * n + i];
            if p > 0.0 && p < 1.0 {
                grad_t[i] += loss.grad[c * n + i] * d_pred_dt[c * n + i];
            }
        }
    }
    for (g, raw) in grad_t.iter_mut().zip(&t_raw) {
        if !(*raw > cfg.t_floor && *raw < 1.0) {
            *g = 0.0;
        }
    }
    let grad_grid = slice_backward(&cache.grid, &pair.guidance, &grad_t);
    let grad = model.backward(&cache, &grad_grid);

    let mut kink_pattern: Vec<bool> = BilateralGridModel::relu_pattern(&cache).collect();
    for (raw, tv) in t_raw.iter().zip(&t) {
        kink_pattern.push(*raw > cfg.t_floor);
        kink_pattern.push(*raw < 1.0);
        kink_pattern.push(*tv > cfg.recovery.t0);
    }
    for p in pred_raw.data() {
        kink_pattern.push(*p > 0.0);
        kink_pattern.push(*p < 1.0);
    }
    Ok(Evaluation {
        loss: loss.value,
        restoration: loss.restoration,
        color: loss.color,
        grad,
        terms: loss.terms,
        kink_pattern,
    })
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub loss: f64,
    pub restoration: f64,
    pub color: f64,
}

pub fn train(
    model: BilateralGridModel,
    pairs: &[TrainingPair],
    cfg: &TrainConfig,
) -> Result<(BilateralGridModel, Vec<StepRecord>)> {
    train_with_progress(model, pairs, cfg, |_| {})
}

/// Runs `cfg.steps` Adam steps; the records hold the loss measured before
/// each update. Pairs are visited in a seeded shuffled order, reshuffled
/// every pass.
pub fn train_with_progress(
    mut model: BilateralGridModel,
    pairs: &[TrainingPair],
    cfg: &TrainConfig,
    mut on_step: impl FnMut(&StepRecord),
) -> Result<(BilateralGridModel, Vec<StepRecord>)> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    let prepared = pairs
        .iter()
        .map(|p| PreparedPair::new(&model, p, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut cursor = order.len();
    let mut adam = Adam::new(model.param_count(), cfg.learning_rate);
    let mut trace = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let mut grad = vec![0.0; model.param_count()];
        let mut record = StepRecord {
            step,
            loss: 0.0,
            restoration: 0.0,
            color: 0.0,
        };
        for _ in 0..cfg.batch {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let pair = &prepared[order[cursor]];
            cursor += 1;
            let eval = evaluate(&model, pair, cfg).map_err(|e| Error::NonFinite(format!("training step {step}: {e}")))?;
            for (g, e) in grad.iter_mut().zip(&eval.grad) {
                *g += e;
            }
            record.loss += eval.loss;
            record.restoration += eval.restoration;
            record.color += eval.color;
        }
        let scale = 1.0 / cfg.batch as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        record.loss *= scale;
        record.restoration *= scale;
        record.color *= scale;
        adam.step(model.params_mut(), &grad);
        on_step(&record);
        trace.push(record);
    }
    Ok((model, trace))
}

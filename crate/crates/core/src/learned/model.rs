//! Low-resolution coefficient predictor: a stack of stride-2 3x3
//! convolutions with ReLU, then a per-cell linear head emitting
//! `(slope, offset)` for every guidance bin of the bilateral grid.
//!
//! All parameters live in one flat vector so the optimizer, serializer and
//! gradient checks can treat the model uniformly.

use crate::error::{Error, Result};
use crate::image::{luminance, PlanarImage};
use crate::learned::grid::{AffineGrid, GridSpec};
use crate::synthesis::GaussianNoise;

/// RGB plus luminance.
pub const INPUT_CHANNELS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    /// Number of stride-2 convolutions.
    pub stages: usize,
    /// Output channels of the first convolution; doubled at every stage.
    pub base_channels: usize,
    pub grid: GridSpec,
}

impl Default for ModelConfig {
    /// 256x256 input, 8-16-32-64 channels, 16x16x8 grid.
    fn default() -> Self {
        Self {
            stages: 4,
            base_channels: 8,
            grid: GridSpec {
                grid_x: 16,
                grid_y: 16,
                depth: 8,
            },
        }
    }
}

impl ModelConfig {
    /// Two stages and a 4x4x4 grid over a 16x16 input.
    pub fn reduced() -> Self {
        Self {
            stages: 2,
            base_channels: 8,
            grid: GridSpec {
                grid_x: 4,
                grid_y: 4,
                depth: 4,
            },
        }
    }

    pub fn input_width(&self) -> usize {
        self.grid.grid_x << self.stages
    }

    pub fn input_height(&self) -> usize {
        self.grid.grid_y << self.stages
    }

    pub fn channels(&self, stage: usize) -> usize {
        self.base_channels << stage
    }

    /// `(in, out)` channels of every convolution, then of the head.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.stages + 1);
        let mut input = INPUT_CHANNELS;
        for s in 0..self.stages {
            shapes.push((input, self.channels(s)));
            input = self.channels(s);
        }
        shapes.push((input, 2 * self.grid.depth));
        shapes
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages == 0 || self.base_channels == 0 {
            return Err(Error::Argument("model needs at least one stage and one channel".into()));
        }
        let g = self.grid;
        if g.grid_x == 0 || g.grid_y == 0 || g.depth == 0 {
            return Err(Error::Argument(format!("degenerate grid {g:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct ParamRange {
    weights: usize,
    bias: usize,
    end: usize,
}

fn param_layout(config: &ModelConfig) -> Vec<ParamRange> {
    let mut offset = 0;
    let shapes = config.layer_shapes();
    let last = shapes.len() - 1;
    shapes
        .iter()
        .enumerate()
        .map(|(k, &(i, o))| {
            let taps = if k == last { 1 } else { 9 };
            let weights = offset;
            let bias = weights + o * i * taps;
            offset = bias + o;
            ParamRange {
                weights,
                bias,
                end: offset,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BilateralGridModel {
    config: ModelConfig,
    params: Vec<f64>,
}

/// Head bias given to every offset output at initialization, so the first
/// predicted transmission sits mid-range rather than on the clamp floor.
pub const INITIAL_OFFSET: f64 = 0.5;

impl BilateralGridModel {
    /// All-zero parameters.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let len = param_layout(&config).last().expect("head layer").end;
        Ok(Self {
            config,
            params: vec![0.0; len],
        })
    }

    /// He-normal convolutions, zero conv biases, `N(0, 0.01²)` slope rows and
    /// zero offset rows in the head, offset biases at [`INITIAL_OFFSET`].
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        let mut noise = GaussianNoise::new(seed);
        let layout = param_layout(&config);
        let shapes = config.layer_shapes();
        let (head, convs) = layout.split_last().expect("head layer");
        for (range, &(inputs, _)) in convs.iter().zip(&shapes) {
            let std = (2.0 / (inputs * 9) as f64).sqrt();
            for w in &mut model.params[range.weights..range.bias] {
                *w = std * noise.sample();
            }
        }
        let (inputs, outputs) = *shapes.last().expect("head shape");
        for o in 0..outputs {
            let row = head.weights + o * inputs;
            if o % 2 == 0 {
                for w in &mut model.params[row..row + inputs] {
                    *w = 0.01 * noise.sample();
                }
            } else {
                model.params[head.bias + o] = INITIAL_OFFSET;
            }
        }
        Ok(model)
    }

    pub fn from_params(config: ModelConfig, params: Vec<f64>) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        if params.len() != model.params.len() {
            return Err(Error::Shape(format!(
                "{} parameters for a model that needs {}",
                params.len(),
                model.params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("model parameter".into()));
        }
        model.params = params;
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Builds the 4-channel low-res network input from a 3-channel image of
    /// exactly the model's input size.
    pub fn network_input(&self, lowres: &PlanarImage) -> Result<Vec<f64>> {
        let (w, h) = (self.config.input_width(), self.config.input_height());
        if lowres.channels() != 3 || lowres.width() != w || lowres.height() != h {
            return Err(Error::Shape(format!(
                "network input must be {w}x{h}x3, got {}x{}x{}",
                lowres.width(),
                lowres.height(),
                lowres.channels()
            )));
        }
        let mut input = lowres.data().to_vec();
        input.extend_from_slice(luminance(lowres)?.data());
        Ok(input)
    }

    /// Forward pass to the affine grid.
    pub fn predict_grid(&self, lowres: &PlanarImage) -> Result<AffineGrid> {
        let input = self.network_input(lowres)?;
        Ok(self.forward(&input).grid)
    }

    /// Vector-Jacobian product: the parameter gradient of `<grad_grid, grid>`.
    pub fn grid_vjp(&self, lowres: &PlanarImage, grad_grid: &[f64]) -> Result<Vec<f64>> {
        let cache = self.forward(&self.network_input(lowres)?);
        if grad_grid.len() != cache.grid.coeffs.len() {
            return Err(Error::Shape(format!(
                "grid gradient has {} entries, grid has {}",
                grad_grid.len(),
                cache.grid.coeffs.len()
            )));
        }
        Ok(self.backward(&cache, grad_grid))
    }

    pub(crate) fn forward(&self, input: &[f64]) -> ForwardCache {
        let layout = param_layout(&self.config);
        let shapes = self.config.layer_shapes();
        let (mut w, mut h) = (self.config.input_width(), self.config.input_height());
        let mut activations = vec![input.to_vec()];
        let mut pre_activations = Vec::with_capacity(self.config.stages);
        for (range, &(cin, cout)) in layout.iter().zip(&shapes).take(self.config.stages) {
            let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));
            let z = conv_forward(
                activations.last().expect("input"),
                (w, h, cin),
                cout,
                &self.params[range.weights..range.bias],
                &self.params[range.bias..range.end],
            );
            activations.push(z.iter().map(|v| v.max(0.0)).collect());
            pre_activations.push(z);
            (w, h) = (ow, oh);
        }
        let head = layout.last().expect("head");
        let (cin, cout) = *shapes.last().expect("head");
        let spec = self.config.grid;
        debug_assert_eq!((w, h), (spec.grid_x, spec.grid_y));
        let features = activations.last().expect("features");
        let cells = w * h;
        let mut grid = AffineGrid::zeros(spec);
        for cell in 0..cells {
            let (gx, gy) = (cell % w, cell / w);
            for o in 0..cout {
                let row = &self.params[head.weights + o * cin..head.weights + (o + 1) * cin];
                let mut acc = self.params[head.bias + o];
                for (i, wt) in row.iter().enumerate() {
                    acc += wt * features[i * cells + cell];
                }
                let idx = grid.index(gx, gy, o / 2) + o % 2;
                grid.coeffs[idx] = acc;
            }
        }
        ForwardCache {
            activations,
            pre_activations,
            grid,
        }
    }

    /// Back-propagates `dL/dgrid` to a flat parameter gradient.
    pub(crate) fn backward(&self, cache: &ForwardCache, grad_grid: &[f64]) -> Vec<f64> {
        let layout = param_layout(&self.config);
        let shapes = self.config.layer_shapes();
        let mut grad = vec![0.0; self.params.len()];
        let spec = self.config.grid;
        let cells = spec.grid_x * spec.grid_y;
        let head = layout.last().expect("head");
        let (cin, cout) = *shapes.last().expect("head");
        let features = cache.activations.last().expect("features");
        let mut d_act = vec![0.0; features.len()];
        for cell in 0..cells {
            let (gx, gy) = (cell % spec.grid_x, cell / spec.grid_x);
            for o in 0..cout {
                let idx = cache.grid.index(gx, gy, o / 2) + o % 2;
                let g = grad_grid[idx];
                if g == 0.0 {
                    continue;
                }
                grad[head.bias + o] += g;
                let wrow = head.weights + o * cin;
                for i in 0..cin {
                    grad[wrow + i] += g * features[i * cells + cell];
                    d_act[i * cells + cell] += g * self.params[wrow + i];
                }
            }
        }
        let mut dims = Vec::with_capacity(self.config.stages + 1);
        let (mut w, mut h) = (self.config.input_width(), self.config.input_height());
        for _ in 0..=self.config.stages {
            dims.push((w, h));
            (w, h) = (w.div_ceil(2), h.div_ceil(2));
        }
        for s in (0..self.config.stages).rev() {
            let (cin, cout) = shapes[s];
            let range = layout[s];
            let d_pre: Vec<f64> = d_act
                .iter()
                .zip(&cache.pre_activations[s])
                .map(|(g, z)| if *z > 0.0 { *g } else { 0.0 })
                .collect();
            let (gw, rest) = grad[range.weights..range.end].split_at_mut(range.bias - range.weights);
            d_act = conv_backward(
                &cache.activations[s],
                (dims[s].0, dims[s].1, cin),
                cout,
                &self.params[range.weights..range.bias],
                &d_pre,
                gw,
                rest,
                s > 0,
            );
        }
        grad
    }

    /// Signs of every ReLU pre-activation, for kink detection in gradient checks.
    pub(crate) fn relu_pattern(cache: &ForwardCache) -> impl Iterator<Item = bool> + '_ {
        cache.pre_activations.iter().flatten().map(|z| *z > 0.0)
    }
}

pub(crate) struct ForwardCache {
    /// Input followed by the post-ReLU output of every stage.
    pub activations: Vec<Vec<f64>>,
    pub pre_activations: Vec<Vec<f64>>,
    pub grid: AffineGrid,
}

/// Stride-2, zero-padded 3x3 convolution; planar `[c][y][x]` tensors.
fn conv_forward(input: &[f64], (w, h, cin): (usize, usize, usize), cout: usize, weights: &[f64], bias: &[f64]) -> Vec<f64> {
    let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));
    let mut out = vec![0.0; cout * ow * oh];
    for o in 0..cout {
        let plane = &mut out[o * ow * oh..(o + 1) * ow * oh];
        plane.iter_mut().for_each(|v| *v = bias[o]);
        for i in 0..cin {
            let src = &input[i * w * h..(i + 1) * w * h];
            let k = &weights[(o * cin + i) * 9..(o * cin + i + 1) * 9];
            for oy in 0..oh {
                for ky in 0..3 {
                    let y = (2 * oy + ky) as isize - 1;
                    if y < 0 || y >= h as isize {
                        continue;
                    }
                    let row = &src[y as usize * w..(y as usize + 1) * w];
                    for ox in 0..ow {
                        let mut acc = 0.0;
                        for kx in 0..3 {
                            let x = (2 * ox + kx) as isize - 1;
                            if x >= 0 && x < w as isize {
                                acc += k[ky * 3 + kx] * row[x as usize];
                            }
                        }
                        plane[oy * ow + ox] += acc;
                    }
                }
            }
        }
    }
    out
}

/// Accumulates weight and bias gradients; returns `dL/dinput` when asked.
#[allow(clippy::too_many_arguments)]
fn conv_backward(
    input: &[f64],
    (w, h, cin): (usize, usize, usize),
    cout: usize,
    weights: &[f64],
    d_out: &[f64],
    d_weights: &mut [f64],
    d_bias: &mut [f64],
    want_input_grad: bool,
) -> Vec<f64> {
    let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));
    let mut d_in = if want_input_grad { vec![0.0; cin * w * h] } else { Vec::new() };
    for o in 0..cout {
        let g_plane = &d_out[o * ow * oh..(o + 1) * ow * oh];
        d_bias[o] += g_plane.iter().sum::<f64>();
        for i in 0..cin {
            let src = &input[i * w * h..(i + 1) * w * h];
            let kbase = (o * cin + i) * 9;
            for oy in 0..oh {
                for ox in 0..ow {
                    let g = g_plane[oy * ow + ox];
                    if g == 0.0 {
                        continue;
                    }
                    for ky in 0..3 {
                        let y = (2 * oy + ky) as isize - 1;
                        if y < 0 || y >= h as isize {
                            continue;
                        }
                        for kx in 0..3 {
                            let x = (2 * ox + kx) as isize - 1;
                            if x < 0 || x >= w as isize {
                                continue;
                            }
                            let at = i * w * h + y as usize * w + x as usize;
                            d_weights[kbase + ky * 3 + kx] += g * src[y as usize * w + x as usize];
                            if want_input_grad {
                                d_in[at] += g * weights[kbase + ky * 3 + kx];
                            }
                        }
                    }
                }
            }
        }
    }
    d_in
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_shapes_follow_channel_doubling() {
        let c = ModelConfig::default();
        assert_eq!(c.layer_shapes(), vec![(4, 8), (8, 16), (16, 32), (32, 64), (64, 16)]);
        assert_eq!((c.input_width(), c.input_height()), (256, 256));
        let r = ModelConfig::reduced();
        assert_eq!(r.layer_shapes(), vec![(4, 8), (8, 16), (16, 8)]);
        assert_eq!(r.input_width(), 16);
    }

    #[test]
    fn zero_model_predicts_zero_grid() {
        let m = BilateralGridModel::zeros(ModelConfig::reduced()).unwrap();
        let img = PlanarImage::filled(16, 16, 3, 0.7);
        let g = m.predict_grid(&img).unwrap();
        assert!(g.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn wrong_input_size_is_rejected() {
        let m = BilateralGridModel::zeros(ModelConfig::reduced()).unwrap();
        let img = PlanarImage::filled(15, 16, 3, 0.7);
        assert!(matches!(m.predict_grid(&img), Err(Error::Shape(_))));
    }

    #[test]
    fn init_is_seeded() {
        let a = BilateralGridModel::init(ModelConfig::reduced(), 3).unwrap();
        let b = BilateralGridModel::init(ModelConfig::reduced(), 3).unwrap();
        let c = BilateralGridModel::init(ModelConfig::reduced(), 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn conv_backward_is_adjoint_of_forward() {
        let (w, h, cin, cout) = (7, 6, 2, 3);
        let input: Vec<f64> = (0..w * h * cin).map(|i| ((i * 31) % 11) as f64 / 11.0 - 0.3).collect();
        let weights: Vec<f64> = (0..cout * cin * 9).map(|i| ((i * 17) % 13) as f64 / 13.0 - 0.5).collect();
        let zero_bias = vec![0.0; cout];
        let out = conv_forward(&input, (w, h, cin), cout, &weights, &zero_bias);
        let probe: Vec<f64> = (0..out.len()).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let mut dw = vec![0.0; weights.len()];
        let mut db = vec![0.0; cout];
        let d_in = conv_backward(&input, (w, h, cin), cout, &weights, &probe, &mut dw, &mut db, true);
        let lhs: f64 = out.iter().zip(&probe).map(|(a, b)| a * b).sum();
        let via_input: f64 = d_in.iter().zip(&input).map(|(a, b)| a * b).sum();
        let via_weights: f64 = dw.iter().zip(&weights).map(|(a, b)| a * b).sum();
        assert!((lhs - via_input).abs() < 1e-10);
        assert!((lhs - via_weights).abs() < 1e-10);
    }
}

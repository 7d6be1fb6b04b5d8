//! A small feed-forward classifier: optional stacked 2D convolutions
//! followed by dense layers and a softmax head. Gradients are exact and
//! checked against finite differences in the test suites.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::similarity::{loss_gradient, weighted_loss, PredictionDistribution, TargetDistribution};

use super::data::FeatureFrame;
use super::LearnerError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative with respect to the pre-activation `z`.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

/// A bank of single-channel 2D kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvKernelSet {
    count: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ConvKernelSet {
    pub fn new(count: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self, LearnerError> {
        if count == 0 || height == 0 || width == 0 || data.len() != count * height * width {
            return Err(LearnerError::Shape(format!(
                "kernel set {count}x{height}x{width} does not match {} values",
                data.len()
            )));
        }
        Ok(Self {
            count,
            height,
            width,
            data,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn kernel(&self, m: usize) -> &[f64] {
        let size = self.height * self.width;
        &self.data[m * size..(m + 1) * size]
    }
}

/// Full 2D discrete convolution of `x` with one kernel, accumulated into
/// `out` (shape `(rows + ku - 1) x (cols + kv - 1)`).
fn conv_full_accumulate(x: &FeatureFrame, kernel: &[f64], ku: usize, kv: usize, out: &mut FeatureFrame) {
    debug_assert_eq!(out.rows(), x.rows() + ku - 1);
    debug_assert_eq!(out.cols(), x.cols() + kv - 1);
    let (rows, cols) = (x.rows(), x.cols());
    let out_cols = out.cols();
    let out_data = out.data_mut();
    for i in 0..rows + ku - 1 {
        for j in 0..cols + kv - 1 {
            let mut acc = 0.0;
            let u_lo = (i + 1).saturating_sub(rows);
            let u_hi = ku.min(i + 1);
            for u in u_lo..u_hi {
                let r = i - u;
                let v_lo = (j + 1).saturating_sub(cols);
                let v_hi = kv.min(j + 1);
                for v in v_lo..v_hi {
                    acc += kernel[u * kv + v] * x.get(r, j - v);
                }
            }
            out_data[i * out_cols + j] += acc;
        }
    }
}

/// Full 2D convolution of the input with each kernel in the set, one output
/// feature map per kernel, each of shape `(T + U - 1) x (F + V - 1)`.
pub fn conv2d(input: &FeatureFrame, kernels: &ConvKernelSet) -> Vec<FeatureFrame> {
    (0..kernels.count())
        .map(|m| {
            let mut out = FeatureFrame::zeros(
                input.rows() + kernels.height() - 1,
                input.cols() + kernels.width() - 1,
            );
            conv_full_accumulate(input, kernels.kernel(m), kernels.height(), kernels.width(), &mut out);
            out
        })
        .collect()
}

/// Multi-channel convolution layer. Each output channel is the sum over
/// input channels of a full 2D convolution; with one input channel this is
/// exactly the per-kernel operation of `conv2d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvLayer {
    out_channels: usize,
    in_channels: usize,
    height: usize,
    width: usize,
    // Row-major over [out][in][u][v].
    kernels: Vec<f64>,
    activation: Activation,
}

impl ConvLayer {
    fn kernel(&self, o: usize, i: usize) -> &[f64] {
        let size = self.height * self.width;
        let base = (o * self.in_channels + i) * size;
        &self.kernels[base..base + size]
    }

    fn output_shape(&self, in_rows: usize, in_cols: usize) -> (usize, usize) {
        (in_rows + self.height - 1, in_cols + self.width - 1)
    }

    fn forward(&self, inputs: &[FeatureFrame]) -> Vec<FeatureFrame> {
        let (out_rows, out_cols) = self.output_shape(inputs[0].rows(), inputs[0].cols());
        (0..self.out_channels)
            .map(|o| {
                let mut pre = FeatureFrame::zeros(out_rows, out_cols);
                for (i, input) in inputs.iter().enumerate() {
                    conv_full_accumulate(input, self.kernel(o, i), self.height, self.width, &mut pre);
                }
                pre
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    // Row-major out_dim x in_dim.
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    fn forward(&self, input: &[f64]) -> Vec<f64> {
        (0..self.out_dim)
            .map(|o| {
                let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
                self.bias[o]
                    + row
                        .iter()
                        .zip(input.iter())
                        .map(|(&w, &x)| w * x)
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Per-feature affine normalization fitted on a dataset (zero mean, unit
/// variance on the training features). Applied to the flattened input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputNorm {
    mean: Vec<f64>,
    inv_std: Vec<f64>,
}

impl InputNorm {
    pub fn fit(frames: &[FeatureFrame]) -> Self {
        let dim = frames.first().map(|f| f.len()).unwrap_or(0);
        let n = frames.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for f in frames {
            for (m, &x) in mean.iter_mut().zip(f.data()) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; dim];
        for f in frames {
            for ((v, &x), &m) in var.iter_mut().zip(f.data()).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let inv_std = var
            .into_iter()
            .map(|v| 1.0 / ((v / n).sqrt() + 1e-8))
            .collect();
        Self { mean, inv_std }
    }

    fn apply(&self, input: &mut [f64]) {
        for ((x, &m), &s) in input.iter_mut().zip(&self.mean).zip(&self.inv_std) {
            *x = (*x - m) * s;
        }
    }
}

/// Training-time stochastic regularization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub input_noise_std: f64,
    pub dropout: f64,
}

impl NoiseConfig {
    pub fn none() -> Self {
        Self {
            input_noise_std: 0.0,
            dropout: 0.0,
        }
    }

    fn is_active(&self) -> bool {
        self.input_noise_std > 0.0 || self.dropout > 0.0
    }
}

/// Feed-forward classifier. The last dense layer produces logits whose
/// width equals the class count of the target alphabet.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    input_rows: usize,
    input_cols: usize,
    input_norm: Option<InputNorm>,
    conv_layers: Vec<ConvLayer>,
    dense_layers: Vec<DenseLayer>,
}

struct Trace {
    conv_inputs: Vec<Vec<FeatureFrame>>,
    conv_pre: Vec<Vec<FeatureFrame>>,
    conv_masks: Vec<Option<Vec<f64>>>,
    dense_inputs: Vec<Vec<f64>>,
    dense_pre: Vec<Vec<f64>>,
    dense_masks: Vec<Option<Vec<f64>>>,
}

impl Network {
    /// Dense classifier over single-row frames.
    pub fn dense_classifier(
        input_dim: usize,
        hidden: &[usize],
        classes: usize,
        activation: Activation,
        seed: u64,
    ) -> Self {
        Self::build(1, input_dim, &[], hidden, classes, activation, seed)
    }

    /// Classifier with stacked full-convolution layers in front of the
    /// dense stack. `conv` lists `(kernel_count, height, width)` per layer.
    pub fn conv_classifier(
        input_rows: usize,
        input_cols: usize,
        conv: &[(usize, usize, usize)],
        hidden: &[usize],
        classes: usize,
        activation: Activation,
        seed: u64,
    ) -> Self {
        Self::build(input_rows, input_cols, conv, hidden, classes, activation, seed)
    }

    /// The reference architecture shape: three convolution layers followed
    /// by two fully-connected layers. Kernel counts and sizes are defaults,
    /// not reported values.
    pub fn reference_preset(input_rows: usize, input_cols: usize, classes: usize, seed: u64) -> Self {
        Self::build(
            input_rows,
            input_cols,
            &[(4, 3, 3), (4, 3, 3), (4, 3, 3)],
            &[64],
            classes,
            Activation::Tanh,
            seed,
        )
    }

    fn build(
        input_rows: usize,
        input_cols: usize,
        conv: &[(usize, usize, usize)],
        hidden: &[usize],
        classes: usize,
        activation: Activation,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut conv_layers = Vec::new();
        let mut channels = 1;
        let (mut rows, mut cols) = (input_rows, input_cols);
        for &(count, height, width) in conv {
            let fan_in = (channels * height * width) as f64;
            let scale = (2.0 / fan_in).sqrt();
            let normal = Normal::new(0.0, scale).unwrap();
            let kernels = (0..count * channels * height * width)
                .map(|_| normal.sample(&mut rng))
                .collect();
            conv_layers.push(ConvLayer {
                out_channels: count,
                in_channels: channels,
                height,
                width,
                kernels,
                activation,
            });
            channels = count;
            rows = rows + height - 1;
            cols = cols + width - 1;
        }
        let mut dense_layers = Vec::new();
        let mut in_dim = channels * rows * cols;
        for (pos, &out_dim) in hidden.iter().chain(std::iter::once(&classes)).enumerate() {
            let is_logits = pos == hidden.len();
            let scale = (2.0 / (in_dim + out_dim) as f64).sqrt();
            let normal = Normal::new(0.0, scale).unwrap();
            dense_layers.push(DenseLayer {
                in_dim,
                out_dim,
                weights: (0..out_dim * in_dim).map(|_| normal.sample(&mut rng)).collect(),
                bias: vec![0.0; out_dim],
                activation: if is_logits { Activation::Identity } else { activation },
            });
            in_dim = out_dim;
        }
        Self {
            input_rows,
            input_cols,
            input_norm: None,
            conv_layers,
            dense_layers,
        }
    }

    pub fn set_input_norm(&mut self, norm: Option<InputNorm>) {
        self.input_norm = norm;
    }

    pub fn input_shape(&self) -> (usize, usize) {
        (self.input_rows, self.input_cols)
    }

    pub fn output_dim(&self) -> usize {
        self.dense_layers.last().map(|l| l.out_dim).unwrap_or(0)
    }

    pub fn param_count(&self) -> usize {
        let conv: usize = self.conv_layers.iter().map(|l| l.kernels.len()).sum();
        let dense: usize = self
            .dense_layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum();
        conv + dense
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.conv_layers {
            out.extend_from_slice(&layer.kernels);
        }
        for layer in &self.dense_layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count());
        let mut cursor = 0;
        for layer in &mut self.conv_layers {
            let n = layer.kernels.len();
            layer.kernels.copy_from_slice(&params[cursor..cursor + n]);
            cursor += n;
        }
        for layer in &mut self.dense_layers {
            let n = layer.weights.len();
            layer.weights.copy_from_slice(&params[cursor..cursor + n]);
            cursor += n;
            let n = layer.bias.len();
            layer.bias.copy_from_slice(&params[cursor..cursor + n]);
            cursor += n;
        }
    }

    fn check_input(&self, frame: &FeatureFrame) -> Result<(), LearnerError> {
        if frame.rows() != self.input_rows || frame.cols() != self.input_cols {
            return Err(LearnerError::Shape(format!(
                "input frame {}x{} does not match model input {}x{}",
                frame.rows(),
                frame.cols(),
                self.input_rows,
                self.input_cols
            )));
        }
        Ok(())
    }

    fn trace(
        &self,
        frame: &FeatureFrame,
        noise: Option<(&NoiseConfig, &mut ChaCha8Rng)>,
    ) -> Result<Trace, LearnerError> {
        self.check_input(frame)?;
        let mut input = frame.data().to_vec();
        let mut rng_and_cfg = noise.filter(|(cfg, _)| cfg.is_active());
        if let Some((cfg, rng)) = rng_and_cfg.as_mut() {
            if cfg.input_noise_std > 0.0 {
                let normal = Normal::new(0.0, cfg.input_noise_std).unwrap();
                for x in &mut input {
                    *x += normal.sample(*rng);
                }
            }
        }
        if let Some(norm) = &self.input_norm {
            norm.apply(&mut input);
        }

        let mut trace = Trace {
            conv_inputs: Vec::new(),
            conv_pre: Vec::new(),
            conv_masks: Vec::new(),
            dense_inputs: Vec::new(),
            dense_pre: Vec::new(),
            dense_masks: Vec::new(),
        };

        let mut maps = vec![FeatureFrame::new(self.input_rows, self.input_cols, input)?];
        for layer in &self.conv_layers {
            trace.conv_inputs.push(maps.clone());
            let pre = layer.forward(&maps);
            let mut post: Vec<FeatureFrame> = pre
                .iter()
                .map(|m| {
                    let data = m.data().iter().map(|&z| layer.activation.apply(z)).collect();
                    FeatureFrame::new(m.rows(), m.cols(), data).unwrap()
                })
                .collect();
            let mask = Self::sample_mask(
                post.iter().map(|m| m.len()).sum(),
                &mut rng_and_cfg,
            );
            if let Some(mask) = &mask {
                let mut k = 0;
                for map in &mut post {
                    for x in map.data_mut() {
                        *x *= mask[k];
                        k += 1;
                    }
                }
            }
            trace.conv_pre.push(pre);
            trace.conv_masks.push(mask);
            maps = post;
        }

        let mut vector: Vec<f64> = maps.iter().flat_map(|m| m.data().iter().copied()).collect();
        let last = self.dense_layers.len() - 1;
        for (i, layer) in self.dense_layers.iter().enumerate() {
            trace.dense_inputs.push(vector.clone());
            let pre = layer.forward(&vector);
            let mut post: Vec<f64> = pre.iter().map(|&z| layer.activation.apply(z)).collect();
            // No dropout on the logits layer.
            let mask = if i < last {
                Self::sample_mask(post.len(), &mut rng_and_cfg)
            } else {
                None
            };
            if let Some(mask) = &mask {
                for (x, &m) in post.iter_mut().zip(mask) {
                    *x *= m;
                }
            }
            trace.dense_pre.push(pre);
            trace.dense_masks.push(mask);
            vector = post;
        }
        Ok(trace)
    }

    fn sample_mask(
        len: usize,
        rng_and_cfg: &mut Option<(&NoiseConfig, &mut ChaCha8Rng)>,
    ) -> Option<Vec<f64>> {
        let (cfg, rng) = rng_and_cfg.as_mut()?;
        if cfg.dropout <= 0.0 {
            return None;
        }
        let keep = 1.0 - cfg.dropout;
        Some(
            (0..len)
                .map(|_| {
                    if rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
                .collect(),
        )
    }

    /// Logits for one frame (deterministic path).
    pub fn forward(&self, frame: &FeatureFrame) -> Result<Vec<f64>, LearnerError> {
        Ok(self.trace(frame, None)?.dense_pre.last().unwrap().clone())
    }

    /// Softmax output for one frame.
    pub fn predict(&self, frame: &FeatureFrame) -> Result<PredictionDistribution, LearnerError> {
        Ok(PredictionDistribution::from_logits(&self.forward(frame)?))
    }

    /// Softmax outputs for a batch of frames.
    pub fn predict_batch(
        &self,
        frames: &[FeatureFrame],
    ) -> Result<Vec<PredictionDistribution>, LearnerError> {
        frames.iter().map(|f| self.predict(f)).collect()
    }

    /// Loss and the flat parameter gradient for one (frame, target) pair on
    /// the deterministic path.
    pub fn loss_and_gradient(
        &self,
        frame: &FeatureFrame,
        target: &TargetDistribution,
    ) -> Result<(f64, Vec<f64>), LearnerError> {
        self.loss_and_gradient_noisy(frame, target, &NoiseConfig::none(), None)
    }

    /// As `loss_and_gradient`, with optional input noise and dropout. The
    /// returned gradient is exact for the sampled noise realization.
    pub fn loss_and_gradient_noisy(
        &self,
        frame: &FeatureFrame,
        target: &TargetDistribution,
        noise: &NoiseConfig,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(f64, Vec<f64>), LearnerError> {
        let trace = self.trace(frame, rng.map(|r| (noise, r)))?;
        let logits = trace.dense_pre.last().unwrap();
        let pred = PredictionDistribution::from_logits(logits);
        let loss = weighted_loss(target, &pred).map_err(|e| LearnerError::Shape(e.to_string()))?;
        let mut grad = vec![0.0; self.param_count()];

        // Gradient w.r.t. logits, then backward through the dense stack.
        let mut upstream =
            loss_gradient(target, logits).map_err(|e| LearnerError::Shape(e.to_string()))?;
        let dense_param_base: usize = self.conv_layers.iter().map(|l| l.kernels.len()).sum();
        let mut offsets = Vec::with_capacity(self.dense_layers.len());
        let mut cursor = dense_param_base;
        for layer in &self.dense_layers {
            offsets.push(cursor);
            cursor += layer.weights.len() + layer.bias.len();
        }
        for (i, layer) in self.dense_layers.iter().enumerate().rev() {
            // upstream currently holds dL/d(post-activation output of layer i),
            // including the dropout factor of this layer if any.
            if let Some(mask) = &trace.dense_masks[i] {
                for (g, &m) in upstream.iter_mut().zip(mask) {
                    *g *= m;
                }
            }
            let pre = &trace.dense_pre[i];
            let delta: Vec<f64> = upstream
                .iter()
                .zip(pre.iter())
                .map(|(&g, &z)| g * layer.activation.derivative(z))
                .collect();
            let input = &trace.dense_inputs[i];
            let base = offsets[i];
            for o in 0..layer.out_dim {
                let row = base + o * layer.in_dim;
                for (k, &x) in input.iter().enumerate() {
                    grad[row + k] += delta[o] * x;
                }
            }
            let bias_base = base + layer.weights.len();
            for (o, &d) in delta.iter().enumerate() {
                grad[bias_base + o] += d;
            }
            // Propagate to the layer input.
            let mut next = vec![0.0; layer.in_dim];
            for o in 0..layer.out_dim {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (k, &w) in row.iter().enumerate() {
                    next[k] += w * delta[o];
                }
            }
            upstream = next;
        }

        // Reshape the flat gradient into the last conv layer's output maps
        // and walk the conv stack backwards.
        if !self.conv_layers.is_empty() {
            let mut conv_offsets = Vec::with_capacity(self.conv_layers.len());
            let mut cursor = 0;
            for layer in &self.conv_layers {
                conv_offsets.push(cursor);
                cursor += layer.kernels.len();
            }
            for (i, layer) in self.conv_layers.iter().enumerate().rev() {
                let pre = &trace.conv_pre[i];
                let inputs = &trace.conv_inputs[i];
                let (out_rows, out_cols) = (pre[0].rows(), pre[0].cols());
                let map_len = out_rows * out_cols;
                if let Some(mask) = &trace.conv_masks[i] {
                    for (g, &m) in upstream.iter_mut().zip(mask) {
                        *g *= m;
                    }
                }
                // Per-channel delta = upstream * act'(pre).
                let mut delta = upstream.clone();
                for o in 0..layer.out_channels {
                    let z = pre[o].data();
                    for k in 0..map_len {
                        delta[o * map_len + k] *= layer.activation.derivative(z[k]);
                    }
                }
                let base = conv_offsets[i];
                let ksize = layer.height * layer.width;
                let (in_rows, in_cols) = (inputs[0].rows(), inputs[0].cols());
                let mut next = vec![0.0; layer.in_channels * in_rows * in_cols];
                for o in 0..layer.out_channels {
                    let g = &delta[o * map_len..(o + 1) * map_len];
                    for (c, input) in inputs.iter().enumerate() {
                        let kbase = base + (o * layer.in_channels + c) * ksize;
                        let kernel = layer.kernel(o, c);
                        for r in 0..in_rows {
                            for s in 0..in_cols {
                                let x = input.get(r, s);
                                let nbase = c * in_rows * in_cols + r * in_cols + s;
                                for u in 0..layer.height {
                                    let grow = (r + u) * out_cols;
                                    for v in 0..layer.width {
                                        let gval = g[grow + s + v];
                                        grad[kbase + u * layer.width + v] += x * gval;
                                        next[nbase] += kernel[u * layer.width + v] * gval;
                                    }
                                }
                            }
                        }
                    }
                }
                upstream = next;
            }
        }

        Ok((loss, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(rows: usize, cols: usize, data: Vec<f64>) -> FeatureFrame {
        FeatureFrame::new(rows, cols, data).unwrap()
    }

    #[test]
    fn conv_identity_size_case() {
        let x = frame(1, 1, vec![1.0]);
        let k = ConvKernelSet::new(1, 1, 1, vec![3.5]).unwrap();
        let out = conv2d(&x, &k);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].data(), &[3.5]);
    }

    #[test]
    fn conv_impulse_reproduces_kernel() {
        let mut data = vec![0.0; 12];
        data[0] = 1.0;
        let x = frame(3, 4, data);
        let k = ConvKernelSet::new(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let out = &conv2d(&x, &k)[0];
        assert_eq!(out.rows(), 4);
        assert_eq!(out.cols(), 5);
        assert_eq!(out.get(0, 0), 1.0);
        assert_eq!(out.get(0, 1), 2.0);
        assert_eq!(out.get(1, 0), 3.0);
        assert_eq!(out.get(1, 1), 4.0);
        // everywhere else zero
        let sum: f64 = out.data().iter().sum();
        assert_eq!(sum, 10.0);
    }

    // Direct scatter-form evaluation of the convolution definition, used as
    // an in-module oracle; the acceptance suite carries its own copy.
    fn conv_oracle(x: &FeatureFrame, kernel: &[f64], ku: usize, kv: usize) -> FeatureFrame {
        let mut out = FeatureFrame::zeros(x.rows() + ku - 1, x.cols() + kv - 1);
        for r in 0..x.rows() {
            for s in 0..x.cols() {
                for u in 0..ku {
                    for v in 0..kv {
                        let current = out.get(r + u, s + v);
                        out.data_mut()[(r + u) * (x.cols() + kv - 1) + (s + v)] =
                            current + x.get(r, s) * kernel[u * kv + v];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn conv_matches_scatter_oracle() {
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        for (rows, cols, ku, kv) in [(3, 4, 2, 2), (1, 12, 1, 3), (5, 5, 3, 3), (2, 2, 4, 1)] {
            let x = frame(rows, cols, (0..rows * cols).map(|_| next()).collect());
            let kdata: Vec<f64> = (0..ku * kv).map(|_| next()).collect();
            let k = ConvKernelSet::new(1, ku, kv, kdata.clone()).unwrap();
            let got = &conv2d(&x, &k)[0];
            let want = conv_oracle(&x, &kdata, ku, kv);
            for (a, b) in got.data().iter().zip(want.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_weight_model_is_uniform() {
        let mut net = Network::dense_classifier(12, &[], 25, Activation::Identity, 0);
        net.set_params(&vec![0.0; net.param_count()]);
        let pred = net.predict(&frame(1, 12, vec![0.3; 12])).unwrap();
        assert_eq!(pred.len(), 25);
        for &p in pred.probabilities() {
            assert!((p - 1.0 / 25.0).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_is_bitwise_reproducible() {
        let input = frame(1, 12, (0..12).map(|i| i as f64 / 12.0).collect());
        let a = Network::dense_classifier(12, &[16], 25, Activation::Tanh, 9)
            .forward(&input)
            .unwrap();
        let b = Network::dense_classifier(12, &[16], 25, Activation::Tanh, 9)
            .forward(&input)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let net = Network::dense_classifier(12, &[8], 25, Activation::Tanh, 3);
        let pred = net.predict(&frame(1, 12, vec![0.5; 12])).unwrap();
        let sum: f64 = pred.probabilities().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn input_shape_mismatch_is_error() {
        let net = Network::dense_classifier(12, &[], 25, Activation::Identity, 0);
        assert!(net.forward(&frame(1, 11, vec![0.0; 11])).is_err());
    }

    fn finite_diff_check(net: &Network, input: &FeatureFrame, target: &TargetDistribution) {
        let (_, analytic) = net.loss_and_gradient(input, target).unwrap();
        let params = net.params();
        let h = 1e-5;
        let mut probe = net.clone();
        for i in 0..params.len() {
            let mut plus = params.clone();
            plus[i] += h;
            probe.set_params(&plus);
            let (lp, _) = probe.loss_and_gradient(input, target).unwrap();
            let mut minus = params.clone();
            minus[i] -= h;
            probe.set_params(&minus);
            let (lm, _) = probe.loss_and_gradient(input, target).unwrap();
            let numeric = (lp - lm) / (2.0 * h);
            let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
            assert!(
                ((analytic[i] - numeric) / denom).abs() < 1e-5,
                "param {i}: analytic {} vs numeric {numeric}",
                analytic[i]
            );
        }
    }

    #[test]
    fn dense_gradient_matches_finite_differences() {
        let net = Network::dense_classifier(6, &[5], 4, Activation::Tanh, 11);
        let input = frame(1, 6, vec![0.2, -0.4, 0.9, 0.0, 1.3, -1.1]);
        let target = TargetDistribution::from_weights(vec![0.9, 0.2, 0.6, 0.1], 0);
        finite_diff_check(&net, &input, &target);
    }

    #[test]
    fn conv_gradient_matches_finite_differences() {
        let net = Network::conv_classifier(3, 4, &[(2, 2, 2)], &[6], 3, Activation::Tanh, 13);
        let input = frame(3, 4, (0..12).map(|i| (i as f64) * 0.13 - 0.7).collect());
        let target = TargetDistribution::from_weights(vec![0.5, 1.0, 0.25], 1);
        finite_diff_check(&net, &input, &target);
    }

    #[test]
    fn stacked_conv_gradient_matches_finite_differences() {
        let net =
            Network::conv_classifier(2, 5, &[(2, 2, 2), (3, 1, 2)], &[4], 3, Activation::Tanh, 17);
        let input = frame(2, 5, (0..10).map(|i| ((i * 7) % 5) as f64 * 0.21 - 0.4).collect());
        let target = TargetDistribution::one_hot(3, 2);
        finite_diff_check(&net, &input, &target);
    }

    #[test]
    fn reference_preset_has_three_conv_and_two_dense() {
        let net = Network::reference_preset(4, 12, 25, 0);
        assert_eq!(net.conv_layers.len(), 3);
        assert_eq!(net.dense_layers.len(), 2);
        assert_eq!(net.output_dim(), 25);
        let input = frame(4, 12, vec![0.1; 48]);
        let pred = net.predict(&input).unwrap();
        assert_eq!(pred.len(), 25);
    }

    #[test]
    fn params_round_trip() {
        let mut net = Network::conv_classifier(2, 3, &[(2, 2, 2)], &[4], 3, Activation::Relu, 5);
        let params = net.params();
        assert_eq!(params.len(), net.param_count());
        let doubled: Vec<f64> = params.iter().map(|p| p * 2.0).collect();
        net.set_params(&doubled);
        assert_eq!(net.params(), doubled);
    }

    #[test]
    fn input_norm_standardizes_features() {
        let frames = vec![
            frame(1, 2, vec![1.0, 10.0]),
            frame(1, 2, vec![3.0, 30.0]),
        ];
        let norm = InputNorm::fit(&frames);
        let mut x = vec![2.0, 20.0];
        norm.apply(&mut x);
        assert!(x[0].abs() < 1e-9 && x[1].abs() < 1e-9);
    }

    #[test]
    fn dropout_gradient_matches_for_fixed_mask() {
        // With a fixed seed the sampled mask is deterministic, so the
        // gradient must match finite differences for the same realization.
        let net = Network::dense_classifier(4, &[6], 3, Activation::Tanh, 23);
        let input = frame(1, 4, vec![0.4, -0.2, 0.8, 0.1]);
        let target = TargetDistribution::one_hot(3, 1);
        let noise = NoiseConfig {
            input_noise_std: 0.0,
            dropout: 0.5,
        };
        let grad_for = |params: &[f64]| {
            let mut n = net.clone();
            n.set_params(params);
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            n.loss_and_gradient_noisy(&input, &target, &noise, Some(&mut rng))
                .unwrap()
        };
        let params = net.params();
        let (_, analytic) = grad_for(&params);
        let h = 1e-5;
        for i in (0..params.len()).step_by(7) {
            let mut plus = params.clone();
            plus[i] += h;
            let (lp, _) = grad_for(&plus);
            let mut minus = params.clone();
            minus[i] -= h;
            let (lm, _) = grad_for(&minus);
            let numeric = (lp - lm) / (2.0 * h);
            let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
            assert!(((analytic[i] - numeric) / denom).abs() < 1e-5);
        }
    }
}

//! Minimal dense-network substrate: forward evaluation, reverse-mode
//! gradients, and the numerically checked primitives every learner builds on.
//!
//! Networks are stacks of affine layers with tanh hidden activations and one
//! of three output heads. All math is `f64` with a fixed left-to-right
//! summation order, so identical seeds and inputs reproduce identical bits.

mod adam;
mod batch;
mod checkpoint;
mod sample;

pub use adam::{adam_step, soft_update, AdamState};
pub use batch::BatchWorkspace;
pub use checkpoint::{load_network, save_network};
pub use sample::{argmax_tie_low, sample_categorical};

use crate::error::{Error, Result};
use crate::rng::Rng;
use rand::Rng as _;

/// Clamp range for gaussian-head log standard deviations.
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Output transform applied after the final affine layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputHead {
    /// Raw affine output.
    Linear,
    /// Probability vector over the output entries.
    Softmax,
    /// First `action_dim` outputs are means, the rest are log standard
    /// deviations clamped to `[LOG_STD_MIN, LOG_STD_MAX]`.
    SquashedGaussian { action_dim: usize },
}

#[derive(Debug, Clone)]
struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    /// Transposed layout: `weights[k * out_dim + o]` is the weight from
    /// input `k` to output `o`. Keeps each output's accumulation strictly
    /// left-to-right in `k` while the inner loop runs over contiguous `o`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl DenseLayer {
    fn affine_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.biases);
        for (k, &xk) in x.iter().enumerate() {
            let row = &self.weights[k * self.out_dim..(k + 1) * self.out_dim];
            for (o, &w) in out.iter_mut().zip(row.iter()) {
                *o = w.mul_add(xk, *o);
            }
        }
    }
}

/// Dense feed-forward network with tanh hidden activations.
#[derive(Debug, Clone)]
pub struct MlpNetwork {
    dims: Vec<usize>,
    layers: Vec<DenseLayer>,
    head: OutputHead,
}

/// Per-parameter gradients, shaped exactly like the network parameters.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub(crate) layers: Vec<LayerGrad>,
}

#[derive(Debug, Clone)]
pub(crate) struct LayerGrad {
    pub(crate) d_weights: Vec<f64>,
    pub(crate) d_biases: Vec<f64>,
}

#[derive(Debug, Clone)]
enum HeadTrace {
    Linear,
    Softmax { probs: Vec<f64> },
    SquashedGaussian { raw_log_std: Vec<f64> },
}

/// Recording of one traced forward pass, sufficient for one reverse pass.
#[derive(Debug, Clone)]
pub struct GradientTape {
    /// Input seen by each affine layer.
    layer_inputs: Vec<Vec<f64>>,
    /// Post-activation output of each layer (raw affine for the last).
    layer_outputs: Vec<Vec<f64>>,
    head: HeadTrace,
    consumed: bool,
}

impl MlpNetwork {
    /// Builds a network with weights uniform in `[-1/sqrt(fan_in), +1/sqrt(fan_in)]`
    /// and zero biases.
    pub fn new(dims: &[usize], head: OutputHead, rng: &mut Rng) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidArgument(
                "network needs at least an input and an output dimension".into(),
            ));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument("layer dimensions must be positive".into()));
        }
        if let OutputHead::SquashedGaussian { action_dim } = head {
            if *dims.last().unwrap() != 2 * action_dim {
                return Err(Error::InvalidArgument(format!(
                    "squashed-gaussian head needs output dim {}, got {}",
                    2 * action_dim,
                    dims.last().unwrap()
                )));
            }
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let (in_dim, out_dim) = (w[0], w[1]);
            let limit = 1.0 / (in_dim as f64).sqrt();
            let weights = (0..in_dim * out_dim)
                .map(|_| rng.gen_range(-limit..=limit))
                .collect();
            layers.push(DenseLayer {
                in_dim,
                out_dim,
                weights,
                biases: vec![0.0; out_dim],
            });
        }
        Ok(Self {
            dims: dims.to_vec(),
            layers,
            head,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn head(&self) -> OutputHead {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Inference-mode forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut cur = input.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = vec![0.0; layer.out_dim];
            layer.affine_into(&cur, &mut z);
            if i < last {
                for v in &mut z {
                    *v = v.tanh();
                }
            }
            cur = z;
        }
        Ok(self.apply_head(cur, None).0)
    }

    /// Forward pass that records a tape for one reverse pass.
    pub fn forward_traced(&self, input: &[f64]) -> Result<(Vec<f64>, GradientTape)> {
        self.forward_traced_impl(input, None)
    }

    /// Masked softmax forward: entries with `mask[i] == false` get
    /// probability exactly zero; the rest normalize to one.
    pub fn forward_masked(&self, input: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
        self.check_mask(mask)?;
        self.check_input(input)?;
        let mut cur = input.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = vec![0.0; layer.out_dim];
            layer.affine_into(&cur, &mut z);
            if i < last {
                for v in &mut z {
                    *v = v.tanh();
                }
            }
            cur = z;
        }
        Ok(self.apply_head(cur, Some(mask)).0)
    }

    /// Traced variant of [`forward_masked`](Self::forward_masked).
    pub fn forward_masked_traced(
        &self,
        input: &[f64],
        mask: &[bool],
    ) -> Result<(Vec<f64>, GradientTape)> {
        self.check_mask(mask)?;
        self.forward_traced_impl(input, Some(mask))
    }

    fn check_mask(&self, mask: &[bool]) -> Result<()> {
        if self.head != OutputHead::Softmax {
            return Err(Error::InvalidState(
                "masked forward is only defined for softmax heads".into(),
            ));
        }
        if mask.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "softmax mask",
                expected: self.output_dim(),
                got: mask.len(),
            });
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::InvalidArgument("softmax mask excludes every entry".into()));
        }
        Ok(())
    }

    fn forward_traced_impl(
        &self,
        input: &[f64],
        mask: Option<&[bool]>,
    ) -> Result<(Vec<f64>, GradientTape)> {
        self.check_input(input)?;
        let n = self.layers.len();
        let mut layer_inputs = Vec::with_capacity(n);
        let mut layer_outputs = Vec::with_capacity(n);
        let mut cur = input.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = vec![0.0; layer.out_dim];
            layer.affine_into(&cur, &mut z);
            if i < n - 1 {
                for v in &mut z {
                    *v = v.tanh();
                }
            }
            layer_inputs.push(std::mem::replace(&mut cur, z.clone()));
            layer_outputs.push(z);
        }
        let (out, head) = self.apply_head(cur, mask);
        Ok((
            out,
            GradientTape {
                layer_inputs,
                layer_outputs,
                head,
                consumed: false,
            },
        ))
    }

    fn apply_head(&self, raw: Vec<f64>, mask: Option<&[bool]>) -> (Vec<f64>, HeadTrace) {
        match self.head {
            OutputHead::Linear => (raw, HeadTrace::Linear),
            OutputHead::Softmax => {
                let probs = match mask {
                    Some(m) => masked_softmax(&raw, m),
                    None => softmax(&raw),
                };
                (probs.clone(), HeadTrace::Softmax { probs })
            }
            OutputHead::SquashedGaussian { action_dim } => {
                let mut out = raw;
                let raw_log_std = out[action_dim..].to_vec();
                for v in &mut out[action_dim..] {
                    *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
                }
                (out, HeadTrace::SquashedGaussian { raw_log_std })
            }
        }
    }

    /// Reverse pass. `output_grad` is the loss gradient with respect to the
    /// head output. The tape is consumed; a second call is an error.
    pub fn backward(&self, tape: &mut GradientTape, output_grad: &[f64]) -> Result<Gradients> {
        Ok(self.backward_impl(tape, output_grad, false)?.0)
    }

    /// Reverse pass that also returns the gradient with respect to the
    /// network input (needed when a network feeds another computation).
    pub fn backward_with_input_grad(
        &self,
        tape: &mut GradientTape,
        output_grad: &[f64],
    ) -> Result<(Gradients, Vec<f64>)> {
        let (grads, d_in) = self.backward_impl(tape, output_grad, true)?;
        Ok((grads, d_in.unwrap()))
    }

    fn backward_impl(
        &self,
        tape: &mut GradientTape,
        output_grad: &[f64],
        want_input_grad: bool,
    ) -> Result<(Gradients, Option<Vec<f64>>)> {
        if tape.consumed {
            return Err(Error::InvalidState("gradient tape already consumed".into()));
        }
        if output_grad.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "output gradient",
                expected: self.output_dim(),
                got: output_grad.len(),
            });
        }
        if tape.layer_inputs.len() != self.layers.len() {
            return Err(Error::InvalidState("tape does not match this network".into()));
        }
        tape.consumed = true;

        let mut d = head_backward(&tape.head, output_grad);
        let mut grads = self.zeros_gradients();
        let n = self.layers.len();
        let mut d_input = None;
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            // Gradient w.r.t. this layer's pre-activation.
            let dz: Vec<f64> = if i < n - 1 {
                tape.layer_outputs[i]
                    .iter()
                    .zip(d.iter())
                    .map(|(&a, &g)| g * (1.0 - a * a))
                    .collect()
            } else {
                d
            };
            let x = &tape.layer_inputs[i];
            let lg = &mut grads.layers[i];
            lg.d_biases.copy_from_slice(&dz);
            for (k, &xk) in x.iter().enumerate() {
                let row = &mut lg.d_weights[k * layer.out_dim..(k + 1) * layer.out_dim];
                for (w, &g) in row.iter_mut().zip(dz.iter()) {
                    *w = g * xk;
                }
            }
            if i > 0 || want_input_grad {
                let mut dx = vec![0.0; layer.in_dim];
                for (k, dxk) in dx.iter_mut().enumerate() {
                    let row = &layer.weights[k * layer.out_dim..(k + 1) * layer.out_dim];
                    let mut acc = 0.0;
                    for (&w, &g) in row.iter().zip(dz.iter()) {
                        acc = w.mul_add(g, acc);
                    }
                    *dxk = acc;
                }
                if i == 0 {
                    d_input = Some(dx);
                    break;
                }
                d = dx;
            } else {
                break;
            }
        }
        Ok((grads, if want_input_grad { d_input } else { None }))
    }

    pub fn zeros_gradients(&self) -> Gradients {
        Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| LayerGrad {
                    d_weights: vec![0.0; l.weights.len()],
                    d_biases: vec![0.0; l.out_dim],
                })
                .collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.out_dim).sum()
    }

    /// Flat parameter order: per layer, weights (transposed storage order)
    /// then biases. Shared with [`Gradients::flat`] and the Adam state.
    pub fn get_param(&self, idx: usize) -> f64 {
        let mut i = idx;
        for l in &self.layers {
            if i < l.weights.len() {
                return l.weights[i];
            }
            i -= l.weights.len();
            if i < l.out_dim {
                return l.biases[i];
            }
            i -= l.out_dim;
        }
        panic!("parameter index {idx} out of range");
    }

    pub fn set_param(&mut self, idx: usize, value: f64) {
        let mut i = idx;
        for l in &mut self.layers {
            if i < l.weights.len() {
                l.weights[i] = value;
                return;
            }
            i -= l.weights.len();
            if i < l.out_dim {
                l.biases[i] = value;
                return;
            }
            i -= l.out_dim;
        }
        panic!("parameter index {idx} out of range");
    }

    /// Weight matrix of one layer in row-major `(out, in)` order, as used by
    /// the checkpoint format.
    pub fn weights_row_major(&self, layer: usize) -> Vec<f64> {
        let l = &self.layers[layer];
        let mut out = Vec::with_capacity(l.weights.len());
        for o in 0..l.out_dim {
            for k in 0..l.in_dim {
                out.push(l.weights[k * l.out_dim + o]);
            }
        }
        out
    }

    pub fn set_weights_row_major(&mut self, layer: usize, values: &[f64]) -> Result<()> {
        let l = &mut self.layers[layer];
        if values.len() != l.weights.len() {
            return Err(Error::DimensionMismatch {
                context: "layer weights",
                expected: l.weights.len(),
                got: values.len(),
            });
        }
        for o in 0..l.out_dim {
            for k in 0..l.in_dim {
                l.weights[k * l.out_dim + o] = values[o * l.in_dim + k];
            }
        }
        Ok(())
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.layers[layer].biases
    }

    pub fn set_biases(&mut self, layer: usize, values: &[f64]) -> Result<()> {
        let l = &mut self.layers[layer];
        if values.len() != l.out_dim {
            return Err(Error::DimensionMismatch {
                context: "layer biases",
                expected: l.out_dim,
                got: values.len(),
            });
        }
        l.biases.copy_from_slice(values);
        Ok(())
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }
}

impl Gradients {
    /// Flat view in the shared parameter order.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.d_weights);
            out.extend_from_slice(&l.d_biases);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.d_weights.iter().all(|v| v.is_finite()) && l.d_biases.iter().all(|v| v.is_finite()))
    }

    /// Elementwise `self += other * scale`.
    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, &y) in a.d_weights.iter_mut().zip(&b.d_weights) {
                *x = y.mul_add(scale, *x);
            }
            for (x, &y) in a.d_biases.iter_mut().zip(&b.d_biases) {
                *x = y.mul_add(scale, *x);
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            for v in &mut l.d_weights {
                *v *= s;
            }
            for v in &mut l.d_biases {
                *v *= s;
            }
        }
    }

    pub fn zero(&mut self) {
        for l in &mut self.layers {
            l.d_weights.fill(0.0);
            l.d_biases.fill(0.0);
        }
    }
}

fn head_backward(head: &HeadTrace, g: &[f64]) -> Vec<f64> {
    match head {
        HeadTrace::Linear => g.to_vec(),
        HeadTrace::Softmax { probs } => {
            // Jacobian of softmax: dz_j = p_j * (g_j - <g, p>).
            let mut dot = 0.0;
            for (&gi, &pi) in g.iter().zip(probs.iter()) {
                dot = gi.mul_add(pi, dot);
            }
            probs
                .iter()
                .zip(g.iter())
                .map(|(&p, &gi)| p * (gi - dot))
                .collect()
        }
        HeadTrace::SquashedGaussian { raw_log_std } => {
            let a = raw_log_std.len();
            let mut d = g.to_vec();
            for (v, &raw) in d[a..].iter_mut().zip(raw_log_std.iter()) {
                if !(LOG_STD_MIN..LOG_STD_MAX).contains(&raw) {
                    *v = 0.0;
                }
            }
            d
        }
    }
}

/// Numerically stable softmax with left-to-right summation.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let mut sum = 0.0;
    for &v in &out {
        sum += v;
    }
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// Softmax restricted to `mask`; excluded entries get probability zero.
pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    let max = logits
        .iter()
        .zip(mask.iter())
        .filter(|(_, &m)| m)
        .map(|(&z, _)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![0.0; logits.len()];
    let mut sum = 0.0;
    for ((v, &z), &m) in out.iter_mut().zip(logits.iter()).zip(mask.iter()) {
        if m {
            *v = (z - max).exp();
            sum += *v;
        }
    }
    for v in &mut out {
        *v /= sum;
    }
    out
}

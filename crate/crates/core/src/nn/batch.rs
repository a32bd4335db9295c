//! Batched forward/backward passes over sample slabs.
//!
//! Training updates push whole batches through the network at once; the
//! per-sample math is identical (bit for bit) to the single-sample path,
//! and gradient accumulation runs in fixed sample order.

use super::{masked_softmax, softmax, Gradients, MlpNetwork, OutputHead, LOG_STD_MAX, LOG_STD_MIN};
use crate::error::{Error, Result};

/// Reusable activation buffers for batched passes.
#[derive(Debug, Default)]
pub struct BatchWorkspace {
    batch: usize,
    /// `acts[0]` is the input slab; `acts[i + 1]` is layer `i`'s
    /// post-activation output (raw affine for the last layer).
    acts: Vec<Vec<f64>>,
    head_out: Vec<f64>,
    masks: Vec<bool>,
    masked: bool,
}

impl BatchWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare(&mut self, net: &MlpNetwork, batch: usize) {
        self.batch = batch;
        self.acts.resize(net.dims.len(), Vec::new());
        for (slab, &dim) in self.acts.iter_mut().zip(net.dims.iter()) {
            slab.clear();
            slab.resize(batch * dim, 0.0);
        }
        self.head_out.clear();
        self.head_out.resize(batch * net.output_dim(), 0.0);
        self.masked = false;
    }

    /// Head output slab of the last forward pass (`batch x output_dim`).
    pub fn outputs(&self) -> &[f64] {
        &self.head_out
    }
}

impl MlpNetwork {
    /// Runs `batch` samples (row-major slab) through the network.
    pub fn batch_forward<'a>(
        &self,
        input: &[f64],
        batch: usize,
        ws: &'a mut BatchWorkspace,
    ) -> Result<&'a [f64]> {
        self.batch_forward_impl(input, batch, None, ws)
    }

    /// Masked-softmax variant; `masks` is a `batch x output_dim` slab.
    pub fn batch_forward_masked<'a>(
        &self,
        input: &[f64],
        masks: &[bool],
        batch: usize,
        ws: &'a mut BatchWorkspace,
    ) -> Result<&'a [f64]> {
        if self.head != OutputHead::Softmax {
            return Err(Error::InvalidState(
                "masked forward is only defined for softmax heads".into(),
            ));
        }
        if masks.len() != batch * self.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "batch softmax masks",
                expected: batch * self.output_dim(),
                got: masks.len(),
            });
        }
        self.batch_forward_impl(input, batch, Some(masks), ws)
    }

    fn batch_forward_impl<'a>(
        &self,
        input: &[f64],
        batch: usize,
        masks: Option<&[bool]>,
        ws: &'a mut BatchWorkspace,
    ) -> Result<&'a [f64]> {
        if input.len() != batch * self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "batch input slab",
                expected: batch * self.input_dim(),
                got: input.len(),
            });
        }
        ws.prepare(self, batch);
        ws.acts[0].copy_from_slice(input);
        let n = self.layers.len();
        for (i, layer) in self.layers.iter().enumerate() {
            let (lo, hi) = split_pair(&mut ws.acts, i);
            for s in 0..batch {
                let x = &lo[s * layer.in_dim..(s + 1) * layer.in_dim];
                let z = &mut hi[s * layer.out_dim..(s + 1) * layer.out_dim];
                layer.affine_into(x, z);
                if i < n - 1 {
                    for v in z.iter_mut() {
                        *v = v.tanh();
                    }
                }
            }
        }
        let out_dim = self.output_dim();
        let raw = ws.acts.last().unwrap();
        match self.head {
            OutputHead::Linear => ws.head_out.copy_from_slice(raw),
            OutputHead::Softmax => {
                if let Some(m) = masks {
                    ws.masks.clear();
                    ws.masks.extend_from_slice(m);
                    ws.masked = true;
                    for s in 0..batch {
                        let p = masked_softmax(
                            &raw[s * out_dim..(s + 1) * out_dim],
                            &m[s * out_dim..(s + 1) * out_dim],
                        );
                        ws.head_out[s * out_dim..(s + 1) * out_dim].copy_from_slice(&p);
                    }
                } else {
                    for s in 0..batch {
                        let p = softmax(&raw[s * out_dim..(s + 1) * out_dim]);
                        ws.head_out[s * out_dim..(s + 1) * out_dim].copy_from_slice(&p);
                    }
                }
            }
            OutputHead::SquashedGaussian { action_dim } => {
                ws.head_out.copy_from_slice(raw);
                for s in 0..batch {
                    let row = &mut ws.head_out[s * out_dim..(s + 1) * out_dim];
                    for v in &mut row[action_dim..] {
                        *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
                    }
                }
            }
        }
        Ok(&ws.head_out)
    }

    /// Reverse pass over the workspace of the latest batch forward.
    /// Gradients are **summed** over the batch in sample order; callers
    /// scale `d_out` by `1/batch` for means. Returns the input-gradient
    /// slab when `want_input_grad` is set.
    pub fn batch_backward(
        &self,
        ws: &BatchWorkspace,
        d_out: &[f64],
        grads: &mut Gradients,
        want_input_grad: bool,
    ) -> Result<Option<Vec<f64>>> {
        let batch = ws.batch;
        let out_dim = self.output_dim();
        if d_out.len() != batch * out_dim {
            return Err(Error::DimensionMismatch {
                context: "batch output gradient",
                expected: batch * out_dim,
                got: d_out.len(),
            });
        }
        grads.zero();
        let n = self.layers.len();
        let mut d_input = if want_input_grad {
            Some(vec![0.0; batch * self.input_dim()])
        } else {
            None
        };
        // Per-sample scratch, reused across the batch.
        let mut d: Vec<f64> = Vec::new();
        let mut dz: Vec<f64> = Vec::new();
        let raw = ws.acts.last().unwrap();
        for s in 0..batch {
            let g = &d_out[s * out_dim..(s + 1) * out_dim];
            d.clear();
            match self.head {
                OutputHead::Linear => d.extend_from_slice(g),
                OutputHead::Softmax => {
                    let p = &ws.head_out[s * out_dim..(s + 1) * out_dim];
                    let mut dot = 0.0;
                    for (&gi, &pi) in g.iter().zip(p.iter()) {
                        dot = gi.mul_add(pi, dot);
                    }
                    d.extend(p.iter().zip(g.iter()).map(|(&pi, &gi)| pi * (gi - dot)));
                }
                OutputHead::SquashedGaussian { action_dim } => {
                    d.extend_from_slice(g);
                    let raw_row = &raw[s * out_dim..(s + 1) * out_dim];
                    for (v, &r) in d[action_dim..].iter_mut().zip(&raw_row[action_dim..]) {
                        if !(LOG_STD_MIN..LOG_STD_MAX).contains(&r) {
                            *v = 0.0;
                        }
                    }
                }
            }
            for i in (0..n).rev() {
                let layer = &self.layers[i];
                dz.clear();
                if i < n - 1 {
                    let a = &ws.acts[i + 1][s * layer.out_dim..(s + 1) * layer.out_dim];
                    dz.extend(a.iter().zip(d.iter()).map(|(&ai, &gi)| gi * (1.0 - ai * ai)));
                } else {
                    dz.extend_from_slice(&d);
                }
                let x = &ws.acts[i][s * layer.in_dim..(s + 1) * layer.in_dim];
                let lg = &mut grads.layers[i];
                for (b, &g) in lg.d_biases.iter_mut().zip(dz.iter()) {
                    *b += g;
                }
                // Plain mul-then-add keeps this bitwise identical to the
                // single-sample backward path.
                for (k, &xk) in x.iter().enumerate() {
                    let row = &mut lg.d_weights[k * layer.out_dim..(k + 1) * layer.out_dim];
                    for (w, &g) in row.iter_mut().zip(dz.iter()) {
                        *w += g * xk;
                    }
                }
                let need_dx = i > 0 || d_input.is_some();
                if need_dx {
                    d.clear();
                    d.resize(layer.in_dim, 0.0);
                    for (k, dxk) in d.iter_mut().enumerate() {
                        let row = &layer.weights[k * layer.out_dim..(k + 1) * layer.out_dim];
                        let mut acc = 0.0;
                        for (&w, &g) in row.iter().zip(dz.iter()) {
                            acc = w.mul_add(g, acc);
                        }
                        *dxk = acc;
                    }
                    if i == 0 {
                        if let Some(di) = d_input.as_mut() {
                            di[s * layer.in_dim..(s + 1) * layer.in_dim].copy_from_slice(&d);
                        }
                    }
                } else {
                    break;
                }
            }
        }
        Ok(d_input)
    }
}

fn split_pair(acts: &mut [Vec<f64>], i: usize) -> (&[f64], &mut [f64]) {
    let (a, b) = acts.split_at_mut(i + 1);
    (&a[i], &mut b[0])
}

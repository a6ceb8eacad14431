//! Batched forward and backward passes of the fully-connected predictor.

use alloc::vec;
use alloc::vec::Vec;

use super::gemm::{gemm, View};
use crate::nn::{Network, Scalar};

/// Activation buffers reused across steps.
pub(crate) struct Workspace<T> {
    batch: usize,
    /// Pre-activations per layer, `batch x outputs`.
    pre: Vec<Vec<T>>,
    /// Post-activations per layer; the last one is the prediction.
    post: Vec<Vec<T>>,
    delta: Vec<T>,
    delta_prev: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    pub fn new(net: &Network<T>, batch: usize) -> Self {
        let widest = net.layers.iter().map(|l| l.outputs.max(l.inputs)).max().unwrap_or(0);
        Workspace {
            batch,
            pre: net.layers.iter().map(|l| vec![T::ZERO; batch * l.outputs]).collect(),
            post: net.layers.iter().map(|l| vec![T::ZERO; batch * l.outputs]).collect(),
            delta: vec![T::ZERO; batch * widest],
            delta_prev: vec![T::ZERO; batch * widest],
        }
    }

    pub fn prediction(&self) -> &[T] {
        self.post.last().map_or(&[], |v| v.as_slice())
    }
}

pub(crate) fn forward_batch<T: Scalar>(net: &Network<T>, inputs: &[T], ws: &mut Workspace<T>) {
    let batch = ws.batch;
    let slope = T::from_f64(net.leaky_slope);
    let last = net.layers.len() - 1;
    for (li, layer) in net.layers.iter().enumerate() {
        let (done, rest) = ws.post.split_at_mut(li);
        let input: &[T] = if li == 0 { inputs } else { &done[li - 1] };
        let pre = &mut ws.pre[li];
        for row in pre.chunks_exact_mut(layer.outputs) {
            row.copy_from_slice(&layer.biases);
        }
        gemm(
            T::ONE,
            View::new(input, batch, layer.inputs),
            View::new(&layer.weights, layer.outputs, layer.inputs).t(),
            T::ONE,
            pre,
        );
        let post = &mut rest[0];
        post.copy_from_slice(pre);
        if li != last {
            for v in post.iter_mut() {
                if *v < T::ZERO {
                    *v *= slope;
                }
            }
        }
    }
}

/// Sum over the batch of `||target - prediction||_2`, accumulated in f64.
pub(crate) fn data_term_sum<T: Scalar>(prediction: &[T], targets: &[T], outputs: usize) -> f64 {
    prediction
        .chunks_exact(outputs)
        .zip(targets.chunks_exact(outputs))
        .map(|(p, t)| residual_norm(p, t).to_f64())
        .sum()
}

fn residual_norm<T: Scalar>(p: &[T], t: &[T]) -> T {
    let mut s = T::ZERO;
    for (&a, &b) in p.iter().zip(t) {
        let d = b - a;
        s += d * d;
    }
    s.sqrt()
}

/// `lambda * sum of squared weights` (biases excluded).
pub(crate) fn decay_term<T: Scalar>(net: &Network<T>, lambda: f64) -> f64 {
    let sum: f64 = net
        .layers
        .iter()
        .flat_map(|l| &l.weights)
        .map(|&w| {
            let w = w.to_f64();
            w * w
        })
        .sum();
    lambda * sum
}

/// Runs forward and backward over one batch, writing the gradient of the
/// mean-norm loss plus weight decay into `grad`. Returns the loss.
pub(crate) fn loss_and_gradient<T: Scalar>(
    net: &Network<T>,
    inputs: &[T],
    targets: &[T],
    lambda: f64,
    ws: &mut Workspace<T>,
    grad: &mut Network<T>,
) -> f64 {
    let batch = ws.batch;
    forward_batch(net, inputs, ws);
    let outputs = net.output_len();
    let inv_batch = T::from_f64(1.0 / batch as f64);

    // dL/dprediction: -(t - p) / ||t - p|| / batch, zero at a perfect fit.
    let mut data = 0.0f64;
    {
        let pred = ws.post.last().map_or(&[][..], |v| v.as_slice());
        let delta = &mut ws.delta[..batch * outputs];
        for ((d, p), t) in delta
            .chunks_exact_mut(outputs)
            .zip(pred.chunks_exact(outputs))
            .zip(targets.chunks_exact(outputs))
        {
            let norm = residual_norm(p, t);
            data += norm.to_f64();
            if norm > T::ZERO {
                let scale = inv_batch / norm;
                for ((dv, &pv), &tv) in d.iter_mut().zip(p).zip(t) {
                    *dv = (pv - tv) * scale;
                }
            } else {
                d.fill(T::ZERO);
            }
        }
    }

    let slope = T::from_f64(net.leaky_slope);
    let two_lambda = T::from_f64(2.0 * lambda);
    for li in (0..net.layers.len()).rev() {
        let layer = &net.layers[li];
        let g = &mut grad.layers[li];
        let input: &[T] = if li == 0 { inputs } else { &ws.post[li - 1] };
        let delta = &ws.delta[..batch * layer.outputs];

        // dW = delta^T * input + 2 lambda W
        g.weights.copy_from_slice(&layer.weights);
        gemm(
            T::ONE,
            View::new(delta, batch, layer.outputs).t(),
            View::new(input, batch, layer.inputs),
            two_lambda,
            &mut g.weights,
        );
        g.biases.fill(T::ZERO);
        for row in delta.chunks_exact(layer.outputs) {
            for (b, &d) in g.biases.iter_mut().zip(row) {
                *b += d;
            }
        }

        if li > 0 {
            let prev = &mut ws.delta_prev[..batch * layer.inputs];
            gemm(
                T::ONE,
                View::new(delta, batch, layer.outputs),
                View::new(&layer.weights, layer.outputs, layer.inputs),
                T::ZERO,
                prev,
            );
            // LeakyReLU'(z) is 1 for z > 0 and the slope otherwise.
            for (d, &z) in prev.iter_mut().zip(&ws.pre[li - 1]) {
                if z <= T::ZERO {
                    *d *= slope;
                }
            }
            core::mem::swap(&mut ws.delta, &mut ws.delta_prev);
        }
    }

    data / batch as f64 + decay_term(net, lambda)
}

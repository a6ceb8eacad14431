use alloc::vec;
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use super::context::{extract_context, preprocess, ContextGeometry};
use super::scalar::Scalar;
use crate::frame::{BlockSize, LumaPlane};
use crate::{Error, Result};

pub const HIDDEN_WIDTH: usize = 1200;
pub const HIDDEN_LAYERS: usize = 3;
pub const LEAKY_SLOPE: f64 = 0.1;

/// Layer widths of a per-size predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkDims {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

impl NetworkDims {
    /// The standard architecture: context length in, three hidden layers of
    /// 1200 units, `h * w` outputs.
    pub fn for_block(size: BlockSize) -> Self {
        Self::with_hidden(size, HIDDEN_WIDTH)
    }

    pub fn with_hidden(size: BlockSize, hidden: usize) -> Self {
        NetworkDims {
            input: ContextGeometry::new(size).len(),
            hidden,
            output: size.area(),
        }
    }

    /// `[input, hidden, hidden, hidden, output]`.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input];
        sizes.extend(core::iter::repeat(self.hidden).take(HIDDEN_LAYERS));
        sizes.push(self.output);
        sizes
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_sizes()
            .windows(2)
            .map(|p| p[0] * p[1] + p[1])
            .sum()
    }
}

/// One fully-connected layer. `weights` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T = f32> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![T::ZERO; inputs * outputs],
            biases: vec![T::ZERO; outputs],
        }
    }

    pub fn weight(&self, out: usize, input: usize) -> T {
        self.weights[out * self.inputs + input]
    }
}

/// Parameters of the predictor for one block size: affine layers with
/// LeakyReLU between them and a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T = f32> {
    pub size: BlockSize,
    pub layers: Vec<Layer<T>>,
    pub leaky_slope: f64,
}

pub type NetworkParams = Network<f32>;

impl<T: Scalar> Network<T> {
    pub fn zeros(size: BlockSize, dims: NetworkDims) -> Self {
        let layers = dims
            .layer_sizes()
            .windows(2)
            .map(|p| Layer::zeros(p[0], p[1]))
            .collect();
        Network {
            size,
            layers,
            leaky_slope: LEAKY_SLOPE,
        }
    }

    pub fn input_len(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Same parameters in another element type.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            size: self.size,
            leaky_slope: self.leaky_slope,
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    weights: l.weights.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
                    biases: l.biases.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
                })
                .collect(),
        }
    }

    /// Visits every parameter, weights of all layers first, then biases.
    pub fn for_each_param(&self, mut f: impl FnMut(T)) {
        self.layers.iter().flat_map(|l| &l.weights).for_each(|&v| f(v));
        self.layers.iter().flat_map(|l| &l.biases).for_each(|&v| f(v));
    }
}

impl NetworkParams {
    /// SHA-256 over the layer sizes and the little-endian parameter bits.
    pub fn digest(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update((self.size.h as u32).to_le_bytes());
        hasher.update((self.size.w as u32).to_le_bytes());
        for l in &self.layers {
            hasher.update((l.inputs as u32).to_le_bytes());
            hasher.update((l.outputs as u32).to_le_bytes());
        }
        self.for_each_param(|v| hasher.update(v.to_le_bytes()));
        hasher.finalize().into()
    }
}

#[inline]
fn dot(weights: &[f32], x: &[f64]) -> f64 {
    // Eight fixed lanes, summed pairwise at the end.
    let mut acc = [0.0f64; 8];
    let chunks = weights.len() / 8 * 8;
    for (w, v) in weights[..chunks].chunks_exact(8).zip(x[..chunks].chunks_exact(8)) {
        for lane in 0..8 {
            acc[lane] += f64::from(w[lane]) * v[lane];
        }
    }
    let mut tail = 0.0;
    for (w, v) in weights[chunks..].iter().zip(&x[chunks..]) {
        tail += f64::from(*w) * v;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Inference: f32 parameters, f64 activations and accumulation.
pub fn forward(params: &NetworkParams, x_c: &[f64]) -> Result<Vec<f64>> {
    if x_c.len() != params.input_len() {
        return Err(Error::LengthMismatch {
            expected: params.input_len(),
            actual: x_c.len(),
        });
    }
    let last = params.layers.len() - 1;
    let mut act = x_c.to_vec();
    for (i, layer) in params.layers.iter().enumerate() {
        let mut next: Vec<f64> = layer
            .weights
            .chunks_exact(layer.inputs)
            .zip(&layer.biases)
            .map(|(row, &b)| f64::from(b) + dot(row, &act))
            .collect();
        if i != last {
            for v in &mut next {
                if *v < 0.0 {
                    *v *= params.leaky_slope;
                }
            }
        }
        act = next;
    }
    Ok(act)
}

/// Adds `mu` back, rescales to `bitdepth`, clips to `[0, 2^b - 1]` and rounds
/// half away from zero.
pub fn postprocess(y_hat_c: &[f64], mu: f64, bitdepth: u32) -> Vec<u16> {
    let scale = f64::from(1u32 << (bitdepth - 8));
    let max = f64::from((1u32 << bitdepth) - 1);
    y_hat_c
        .iter()
        .map(|&v| libm::round((scale * (v + mu)).clamp(0.0, max)) as u16)
        .collect()
}

/// Predicts the block at `(x, y)` from a partially decoded reconstruction.
/// Returns the 8-bit prediction, row-major.
pub fn predict_block(
    params: &NetworkParams,
    recon: &LumaPlane,
    decoded: &[bool],
    x: usize,
    y: usize,
) -> Result<Vec<u8>> {
    let raw = extract_context(recon, decoded, x, y, params.size)?;
    let pre = preprocess(&raw);
    let y_hat = forward(params, &pre.x_c)?;
    Ok(postprocess(&y_hat, pre.mu, crate::BITDEPTH)
        .into_iter()
        .map(|v| v as u8)
        .collect())
}

//! Training of the per-size predictors: the mean l2-norm loss with weight
//! decay, its exact gradient, Xavier initialization and a staged
//! momentum-SGD loop.

mod backprop;
mod gemm;

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::frame::BlockSize;
use crate::hash::{self, TAG_INIT, TAG_TRAIN};
use crate::nn::{ContextGeometry, Network, NetworkDims, NetworkParams, Scalar};
use crate::{Error, Result};

use backprop::Workspace;

/// Weight decay of the training objective.
pub const WEIGHT_DECAY: f64 = 0.0005;

/// A preprocessed context and the matching centered block.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub x_c: Vec<f32>,
    pub y_c: Vec<f32>,
}

/// Training pairs for one block size, stored as two row-major matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    size: BlockSize,
    input_len: usize,
    output_len: usize,
    inputs: Vec<f32>,
    targets: Vec<f32>,
}

impl TrainingSet {
    pub fn new(size: BlockSize) -> Self {
        TrainingSet {
            size,
            input_len: ContextGeometry::new(size).len(),
            output_len: size.area(),
            inputs: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn size(&self) -> BlockSize {
        self.size
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn len(&self) -> usize {
        self.targets.len() / self.output_len
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn push(&mut self, pair: &TrainingPair) -> Result<()> {
        self.push_slices(&pair.x_c, &pair.y_c)
    }

    pub fn push_slices(&mut self, x_c: &[f32], y_c: &[f32]) -> Result<()> {
        if x_c.len() != self.input_len {
            return Err(Error::LengthMismatch {
                expected: self.input_len,
                actual: x_c.len(),
            });
        }
        if y_c.len() != self.output_len {
            return Err(Error::LengthMismatch {
                expected: self.output_len,
                actual: y_c.len(),
            });
        }
        self.inputs.extend_from_slice(x_c);
        self.targets.extend_from_slice(y_c);
        Ok(())
    }

    /// Context and block of pair `i`.
    pub fn get(&self, i: usize) -> (&[f32], &[f32]) {
        (
            &self.inputs[i * self.input_len..(i + 1) * self.input_len],
            &self.targets[i * self.output_len..(i + 1) * self.output_len],
        )
    }

    pub fn pair(&self, i: usize) -> TrainingPair {
        let (x, y) = self.get(i);
        TrainingPair {
            x_c: x.to_vec(),
            y_c: y.to_vec(),
        }
    }

    pub fn extend(&mut self, other: &TrainingSet) {
        assert_eq!(self.size, other.size, "training sets of different sizes");
        self.inputs.extend_from_slice(&other.inputs);
        self.targets.extend_from_slice(&other.targets);
    }
}

/// One stage of the learning-rate schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub steps: usize,
    pub lr_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingHyperparams {
    pub weight_decay: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub stages: Vec<Stage>,
    /// Multiplies the step count of every stage.
    pub stage_multiplier: usize,
    pub seed: u64,
}

impl Default for TrainingHyperparams {
    fn default() -> Self {
        TrainingHyperparams {
            weight_decay: WEIGHT_DECAY,
            batch_size: 32,
            learning_rate: 1e-4,
            momentum: 0.9,
            stages: vec![
                Stage {
                    steps: 2000,
                    lr_multiplier: 1.0,
                },
                Stage {
                    steps: 1000,
                    lr_multiplier: 0.1,
                },
                Stage {
                    steps: 500,
                    lr_multiplier: 0.01,
                },
            ],
            stage_multiplier: 1,
            seed: 0,
        }
    }
}

impl TrainingHyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.stage_multiplier == 0 {
            return bad("stage multiplier p must be at least 1");
        }
        if self.batch_size == 0 || self.stages.is_empty() || self.stages.iter().any(|s| s.steps == 0) {
            return bad("batch size and stage step counts must be positive");
        }
        if !(self.learning_rate > 0.0) || !(self.weight_decay >= 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return bad("learning rate must be positive, weight decay non-negative, momentum in [0, 1)");
        }
        Ok(())
    }

    /// Optimizer steps the schedule runs.
    pub fn total_steps(&self) -> usize {
        self.stages.iter().map(|s| s.steps).sum::<usize>() * self.stage_multiplier
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: NetworkParams,
    /// Mini-batch loss before each optimizer step.
    pub losses: Vec<f64>,
    pub steps: usize,
}

fn stack_batch<T: Scalar>(batch: &[TrainingPair]) -> Result<(Vec<T>, Vec<T>)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let (d_in, d_out) = (batch[0].x_c.len(), batch[0].y_c.len());
    let mut inputs = Vec::with_capacity(batch.len() * d_in);
    let mut targets = Vec::with_capacity(batch.len() * d_out);
    for pair in batch {
        if pair.x_c.len() != d_in || pair.y_c.len() != d_out {
            return Err(Error::LengthMismatch {
                expected: d_in + d_out,
                actual: pair.x_c.len() + pair.y_c.len(),
            });
        }
        inputs.extend(pair.x_c.iter().map(|&v| T::from_f32(v)));
        targets.extend(pair.y_c.iter().map(|&v| T::from_f32(v)));
    }
    Ok((inputs, targets))
}

fn check_shapes<T: Scalar>(batch: &[TrainingPair], params: &Network<T>) -> Result<()> {
    let pair = &batch[0];
    if pair.x_c.len() != params.input_len() {
        return Err(Error::LengthMismatch {
            expected: params.input_len(),
            actual: pair.x_c.len(),
        });
    }
    if pair.y_c.len() != params.output_len() {
        return Err(Error::LengthMismatch {
            expected: params.output_len(),
            actual: pair.y_c.len(),
        });
    }
    Ok(())
}

/// Mean over the batch of `||y_c - f(x_c)||_2` plus `lambda` times the sum
/// of squared weights.
pub fn loss<T: Scalar>(batch: &[TrainingPair], params: &Network<T>, lambda: f64) -> Result<f64> {
    let (inputs, targets) = stack_batch::<T>(batch)?;
    check_shapes(batch, params)?;
    let mut ws = Workspace::new(params, batch.len());
    backprop::forward_batch(params, &inputs, &mut ws);
    let data = backprop::data_term_sum(ws.prediction(), &targets, params.output_len());
    Ok(data / batch.len() as f64 + backprop::decay_term(params, lambda))
}

/// Exact gradient of [`loss`], in the shape of the parameters.
///
/// The norm's subgradient at a zero residual is taken as zero and
/// LeakyReLU's derivative at zero as its slope.
pub fn gradient<T: Scalar>(batch: &[TrainingPair], params: &Network<T>, lambda: f64) -> Result<Network<T>> {
    let (inputs, targets) = stack_batch::<T>(batch)?;
    check_shapes(batch, params)?;
    let mut ws = Workspace::new(params, batch.len());
    let mut grad = params.clone();
    backprop::loss_and_gradient(params, &inputs, &targets, lambda, &mut ws, &mut grad);
    Ok(grad)
}

/// Xavier-uniform weights, zero biases, deterministic in `seed`.
pub fn init_params(seed: u64, size: BlockSize, dims: NetworkDims) -> NetworkParams {
    let mut net = NetworkParams::zeros(size, dims);
    for (i, layer) in net.layers.iter_mut().enumerate() {
        let bound = libm::sqrt(6.0 / (layer.inputs + layer.outputs) as f64);
        let mut rng = hash::rng(seed, &[TAG_INIT, i as u64]);
        for w in &mut layer.weights {
            *w = rng.random_range(-bound..bound) as f32;
        }
    }
    net
}

/// Minimizes the loss on `set` from `init` with momentum SGD over the staged
/// schedule. Fully deterministic for a given seed.
pub fn train(set: &TrainingSet, init: &NetworkParams, hp: &TrainingHyperparams) -> Result<TrainOutcome> {
    hp.validate()?;
    if set.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if set.input_len() != init.input_len() || set.output_len() != init.output_len() {
        return Err(Error::LengthMismatch {
            expected: init.input_len() + init.output_len(),
            actual: set.input_len() + set.output_len(),
        });
    }

    let batch = hp.batch_size.min(set.len());
    let mut params = init.clone();
    let mut grad = params.clone();
    let mut velocity = NetworkParams {
        size: params.size,
        leaky_slope: params.leaky_slope,
        layers: params
            .layers
            .iter()
            .map(|l| crate::nn::Layer::zeros(l.inputs, l.outputs))
            .collect(),
    };
    let mut ws = Workspace::new(&params, batch);
    let mut inputs = vec![0.0f32; batch * set.input_len()];
    let mut targets = vec![0.0f32; batch * set.output_len()];

    let mut rng = hash::rng(hp.seed, &[TAG_TRAIN]);
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut cursor = order.len();
    let mut losses = Vec::with_capacity(hp.total_steps());
    let momentum = hp.momentum as f32;

    for stage in &hp.stages {
        let lr = (hp.learning_rate * stage.lr_multiplier) as f32;
        for _ in 0..stage.steps * hp.stage_multiplier {
            for slot in 0..batch {
                if cursor == order.len() {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                let (x, y) = set.get(order[cursor]);
                cursor += 1;
                inputs[slot * x.len()..(slot + 1) * x.len()].copy_from_slice(x);
                targets[slot * y.len()..(slot + 1) * y.len()].copy_from_slice(y);
            }
            let loss = backprop::loss_and_gradient(&params, &inputs, &targets, hp.weight_decay, &mut ws, &mut grad);
            if !loss.is_finite() {
                return Err(Error::Diverged { step: losses.len() });
            }
            losses.push(loss);

            for ((p, g), v) in params
                .layers
                .iter_mut()
                .zip(&grad.layers)
                .zip(&mut velocity.layers)
            {
                sgd_update(&mut p.weights, &g.weights, &mut v.weights, lr, momentum);
                sgd_update(&mut p.biases, &g.biases, &mut v.biases, lr, momentum);
            }
        }
    }

    let steps = losses.len();
    Ok(TrainOutcome { params, losses, steps })
}

fn sgd_update(params: &mut [f32], grad: &[f32], velocity: &mut [f32], lr: f32, momentum: f32) {
    for ((p, &g), v) in params.iter_mut().zip(grad).zip(velocity.iter_mut()) {
        *v = momentum * *v + g;
        *p -= lr * *v;
    }
}

#[cfg(test)]
mod tests;

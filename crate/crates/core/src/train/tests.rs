use super::*;
use crate::hash::splitmix64;
use proptest::prelude::*;

fn uniform(state: &mut u64) -> f64 {
    *state = splitmix64(*state);
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

fn random_net(size: BlockSize, hidden: usize, seed: u64, scale: f64) -> Network<f64> {
    let mut net = Network::<f64>::zeros(size, NetworkDims::with_hidden(size, hidden));
    let mut s = seed;
    for l in &mut net.layers {
        let bound = scale * libm::sqrt(6.0 / (l.inputs + l.outputs) as f64);
        for w in &mut l.weights {
            *w = (uniform(&mut s) * 2.0 - 1.0) * bound;
        }
        for b in &mut l.biases {
            *b = (uniform(&mut s) * 2.0 - 1.0) * 0.5;
        }
    }
    net
}

fn random_batch(size: BlockSize, n: usize, seed: u64) -> Vec<TrainingPair> {
    let d_in = ContextGeometry::new(size).len();
    let mut s = seed;
    (0..n)
        .map(|_| TrainingPair {
            x_c: (0..d_in).map(|_| ((uniform(&mut s) - 0.5) * 4.0) as f32).collect(),
            y_c: (0..size.area()).map(|_| ((uniform(&mut s) - 0.5) * 4.0) as f32).collect(),
        })
        .collect()
}

fn tiny_dims(size: BlockSize) -> NetworkDims {
    NetworkDims::with_hidden(size, 8)
}

#[test]
fn loss_examples() {
    let size = BlockSize::square(4);
    let zero = Network::<f64>::zeros(size, tiny_dims(size));
    let pair = TrainingPair {
        x_c: vec![1.0; 80],
        y_c: vec![0.0; 16],
    };
    assert_eq!(loss(&[pair.clone()], &zero, WEIGHT_DECAY).unwrap(), 0.0);

    let mut y = vec![0.0; 16];
    y[0] = 3.0;
    y[1] = 4.0;
    let pair34 = TrainingPair { x_c: vec![0.0; 80], y_c: y };
    assert!((loss(&[pair34], &zero, 0.0).unwrap() - 5.0).abs() < 1e-12);

    let mut one = zero.clone();
    one.layers[1].weights[0] = 2.0;
    let got = loss(&[TrainingPair { x_c: vec![0.0; 80], y_c: vec![0.0; 16] }], &one, 0.0005).unwrap();
    assert!((got - 0.002).abs() < 1e-15);

    assert_eq!(loss::<f64>(&[], &zero, 0.0), Err(Error::EmptyBatch));
    assert!(gradient::<f64>(&[], &zero, 0.0).is_err());
}

/// Smallest |pre-activation| over the hidden units, by a plain loop.
fn kink_margin(net: &Network<f64>, batch: &[TrainingPair]) -> f64 {
    let mut margin = f64::INFINITY;
    for pair in batch {
        let mut act: Vec<f64> = pair.x_c.iter().map(|&v| f64::from(v)).collect();
        for l in &net.layers[..net.layers.len() - 1] {
            act = (0..l.outputs)
                .map(|o| {
                    let z = l.biases[o] + (0..l.inputs).map(|i| l.weights[o * l.inputs + i] * act[i]).sum::<f64>();
                    margin = margin.min(z.abs());
                    if z < 0.0 { 0.1 * z } else { z }
                })
                .collect();
        }
    }
    margin
}

/// Central differences on sampled coordinates of every layer, at three
/// random parameter points. Points where a hidden pre-activation lies close
/// enough to zero for a perturbation to cross the LeakyReLU corner are
/// skipped, since the loss is not differentiable there.
#[test]
fn gradient_matches_finite_differences() {
    let size = BlockSize::square(4);
    let batch = random_batch(size, 4, 11);
    let mut seed = 100;
    for point in 0..3u64 {
        let net = loop {
            seed += 1;
            let net = random_net(size, 24, seed, 1.0);
            if kink_margin(&net, &batch) > 5e-3 {
                break net;
            }
        };
        let grad = gradient(&batch, &net, WEIGHT_DECAY).unwrap();
        let mut s = 7 + point;
        let eps = 1e-4;
        for li in 0..net.layers.len() {
            let n_w = net.layers[li].weights.len();
            let n_b = net.layers[li].biases.len();
            let mut worst = 0.0f64;
            for _ in 0..200 {
                let coord = (uniform(&mut s) * (n_w + n_b) as f64) as usize;
                let is_bias = coord >= n_w;
                let mut plus = net.clone();
                let mut minus = net.clone();
                let (analytic, p, m) = if is_bias {
                    let i = coord - n_w;
                    plus.layers[li].biases[i] += eps;
                    minus.layers[li].biases[i] -= eps;
                    (grad.layers[li].biases[i], &plus, &minus)
                } else {
                    plus.layers[li].weights[coord] += eps;
                    minus.layers[li].weights[coord] -= eps;
                    (grad.layers[li].weights[coord], &plus, &minus)
                };
                let numeric = (loss(&batch, p, WEIGHT_DECAY).unwrap() - loss(&batch, m, WEIGHT_DECAY).unwrap()) / (2.0 * eps);
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(rel);
            }
            assert!(worst <= 1e-4, "layer {li} point {point}: rel error {worst}");
        }
    }
}

#[test]
fn decay_gradient_at_perfect_fit() {
    // Zero output weights and zero output biases predict zero, matching
    // zero targets, so only the decay term remains.
    let size = BlockSize::square(4);
    let mut net = random_net(size, 8, 3, 1.0);
    let last = net.layers.len() - 1;
    net.layers[last].weights.fill(0.0);
    net.layers[last].biases.fill(0.0);
    let batch = vec![TrainingPair { x_c: vec![0.5; 80], y_c: vec![0.0; 16] }];
    let lambda = 0.0005;
    let grad = gradient(&batch, &net, lambda).unwrap();
    for (g, p) in grad.layers.iter().zip(&net.layers) {
        for (gw, w) in g.weights.iter().zip(&p.weights) {
            assert!((gw - 2.0 * lambda * w).abs() < 1e-15);
        }
        assert!(g.biases.iter().all(|&b| b == 0.0));
    }
    let flat = gradient(&batch, &net, 0.0).unwrap();
    flat.for_each_param(|v| assert_eq!(v, 0.0));
}

#[test]
fn init_is_seeded_xavier() {
    let size = BlockSize::square(4);
    let dims = NetworkDims::for_block(size);
    let a = init_params(9, size, dims);
    assert_eq!(a, init_params(9, size, dims));
    assert_ne!(a.digest(), init_params(10, size, dims).digest());
    assert!(a.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));

    let l = &a.layers[1];
    let n = l.weights.len() as f64;
    let mean = l.weights.iter().map(|&w| f64::from(w)).sum::<f64>() / n;
    let var = l.weights.iter().map(|&w| (f64::from(w) - mean).powi(2)).sum::<f64>() / n;
    let expected = 2.0 / (l.inputs + l.outputs) as f64;
    assert!((var / expected - 1.0).abs() < 0.1, "variance {var} vs {expected}");
}

fn tiny_hp(steps: usize) -> TrainingHyperparams {
    TrainingHyperparams {
        batch_size: 4,
        learning_rate: 0.01,
        stages: vec![
            Stage { steps, lr_multiplier: 1.0 },
            Stage { steps: steps / 2, lr_multiplier: 0.1 },
        ],
        seed: 5,
        ..TrainingHyperparams::default()
    }
}

fn tiny_set(n: usize) -> TrainingSet {
    let size = BlockSize::square(4);
    let mut set = TrainingSet::new(size);
    for pair in random_batch(size, n, 77) {
        set.push(&pair).unwrap();
    }
    set
}

#[test]
fn train_is_deterministic_and_counts_steps() {
    let set = tiny_set(10);
    let init = init_params(1, set.size(), tiny_dims(set.size()));
    let hp = tiny_hp(20);
    let a = train(&set, &init, &hp).unwrap();
    let b = train(&set, &init, &hp).unwrap();
    assert_eq!(a.params.digest(), b.params.digest());
    assert_eq!(a.losses, b.losses);
    assert_eq!(a.steps, 30);

    let double = train(&set, &init, &TrainingHyperparams { stage_multiplier: 2, ..hp.clone() }).unwrap();
    assert_eq!(double.steps, 2 * a.steps);
    assert_eq!(double.losses.len(), 60);
}

#[test]
fn train_fits_a_single_pair() {
    let set = tiny_set(1);
    let size = set.size();
    let init = init_params(2, size, NetworkDims::with_hidden(size, 32));
    let hp = TrainingHyperparams {
        weight_decay: 0.0,
        batch_size: 1,
        learning_rate: 0.002,
        stages: vec![Stage { steps: 500, lr_multiplier: 1.0 }],
        ..TrainingHyperparams::default()
    };
    let out = train(&set, &init, &hp).unwrap();
    let first = out.losses[0];
    let last = loss(&[set.pair(0)], &out.params, 0.0).unwrap();
    assert!(last < 0.1 * first, "loss {first} -> {last}");
    // Decreasing on average: the last tenth sits well below the first tenth.
    let head: f64 = out.losses[..50].iter().sum();
    let tail: f64 = out.losses[450..].iter().sum();
    assert!(tail < head);
}

#[test]
fn train_rejects_bad_input() {
    let set = TrainingSet::new(BlockSize::square(4));
    let init = init_params(1, set.size(), tiny_dims(set.size()));
    assert_eq!(train(&set, &init, &tiny_hp(2)).unwrap_err(), Error::EmptyTrainingSet);
    let full = tiny_set(2);
    let bad = TrainingHyperparams { stage_multiplier: 0, ..tiny_hp(2) };
    assert!(matches!(train(&full, &init, &bad), Err(Error::InvalidConfig(_))));
    let mut wrong = TrainingSet::new(BlockSize::square(4));
    assert!(wrong.push_slices(&[0.0; 3], &[0.0; 16]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn loss_is_permutation_invariant(seed in any::<u64>(), rot in 0usize..5) {
        let size = BlockSize::square(4);
        let net = random_net(size, 8, seed, 1.0);
        let batch = random_batch(size, 5, seed ^ 1);
        let mut permuted = batch.clone();
        permuted.rotate_left(rot);
        permuted.swap(0, 4);
        let a = loss(&batch, &net, WEIGHT_DECAY).unwrap();
        let b = loss(&permuted, &net, WEIGHT_DECAY).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}


#[test]
fn divergence_is_reported() {
    let set = tiny_set(4);
    let init = init_params(1, set.size(), tiny_dims(set.size()));
    let hp = TrainingHyperparams { learning_rate: 1e30, ..tiny_hp(50) };
    assert!(matches!(train(&set, &init, &hp), Err(Error::Diverged { .. })));
}

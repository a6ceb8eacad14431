use super::container::{decode, encode};
use super::*;
use crate::frame::{sse, LumaPlane};
use crate::hash::splitmix64;
use crate::intra::{block_mse, build_reference_samples, predict_classic, rank_classic_by_mse, third_lowest_mse, ClassicMode};
use crate::nn::{extract_context, predict_block, unavailable_counts, NetworkDims};
use crate::train::init_params;
use crate::NN_MODE;
use alloc::vec;
use alloc::vec::Vec;
use coeffs::levels_len;
use signal::{mode_bits, signalling_gate};
use transform::Transform;

/// Smooth gradient, a few hard edges and mild noise.
pub(crate) fn test_image(width: usize, height: usize, seed: u64) -> LumaPlane {
    let mut s = seed;
    let mut next = || {
        s = splitmix64(s);
        s
    };
    let (gx, gy) = ((next() % 5) as f64 - 2.0, (next() % 5) as f64 - 2.0);
    let edge = (next() % width as u64) as f64;
    let slope = (next() % 7) as f64 / 3.0 - 1.0;
    let mut samples = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let mut v = 128.0 + gx * x as f64 * 0.8 + gy * y as f64 * 0.8;
            if (x as f64) > edge + slope * y as f64 {
                v += 60.0;
            }
            v += (next() % 9) as f64 - 4.0;
            samples.push(v.clamp(0.0, 255.0) as u8);
        }
    }
    LumaPlane::new(width, height, samples).unwrap()
}

/// Zero-weight predictors output the context mean; that makes the NN mode
/// cheap and frequently chosen, which exercises its signalling.
pub(crate) fn test_models() -> Models {
    let mut models = Models::new();
    for n in [4usize, 8, 16, 32] {
        let size = BlockSize::square(n);
        let dims = NetworkDims::with_hidden(size, 8);
        let params = if n <= 8 {
            crate::nn::NetworkParams::zeros(size, dims)
        } else {
            init_params(n as u64, size, dims)
        };
        models.insert(size, params);
    }
    models
}

fn all_sizes() -> Vec<BlockSize> {
    crate::frame::default_sizes()
}

#[test]
fn lambda_and_masks() {
    assert!((rd_lambda(12) - 0.57).abs() < 1e-15);
    assert!((rd_lambda(27) - 0.57 * 32.0).abs() < 1e-12);
    let mask = sizes_to_mask(&all_sizes()).unwrap();
    assert_eq!(mask, 0b1111);
    assert_eq!(mask_to_sizes(mask).unwrap(), all_sizes());
    assert_eq!(mask_to_sizes(0b0100).unwrap(), vec![BlockSize::square(16)]);
    assert!(mask_to_sizes(0x10).is_err());
}

#[test]
fn constant_plane_is_four_flat_leaves() {
    let plane = LumaPlane::filled(64, 64, 90);
    let out = encode_frame(&plane, &CodecConfig::new(32, vec![]), &Models::new()).unwrap();
    assert_eq!(out.records.len(), 4);
    for r in &out.records {
        assert_eq!((r.h, r.w), (32, 32));
        assert!(r.s == crate::intra::PLANAR || r.s == crate::intra::DC, "mode {}", r.s);
        assert!(!r.is_split_tbs);
    }
    assert_eq!(out.recon, plane);
}

#[test]
fn unpadded_and_bad_config_are_rejected() {
    let plane = LumaPlane::filled(48, 64, 0);
    assert!(matches!(
        encode_frame(&plane, &CodecConfig::new(32, vec![]), &Models::new()),
        Err(Error::UnpaddedFrame { .. })
    ));
    let plane = LumaPlane::filled(64, 64, 0);
    assert_eq!(
        encode_frame(&plane, &CodecConfig::new(60, vec![]), &Models::new()).unwrap_err(),
        Error::InvalidQp(60)
    );
    assert_eq!(
        encode_frame(&plane, &CodecConfig::new(32, vec![BlockSize::square(8)]), &Models::new()).unwrap_err(),
        Error::MissingParams(BlockSize::square(8))
    );
}

fn check_tiling(records: &[BlockRecord], width: usize, height: usize) {
    let mut cover = vec![0u8; width * height];
    for r in records {
        assert!(r.n0 <= r.h && r.n1 <= r.w);
        assert!([4, 8, 16, 32].contains(&r.w) && r.w == r.h);
        for y in r.y..r.y + r.h {
            for x in r.x..r.x + r.w {
                cover[y * width + x] += 1;
            }
        }
    }
    assert!(cover.iter().all(|&c| c == 1));
}

/// Replays the records in coding order and re-evaluates every mode of every
/// leaf from scratch: the chosen mode must have the lowest cost, `d_c` and
/// `d_nn` must match, and the counts must agree with the extracted context.
fn replay_oracle(plane: &LumaPlane, cfg: &CodecConfig, models: &Models, out: &EncodedFrame) {
    let t = Transform::new();
    let width = plane.width();
    let mut decoded = vec![false; width * plane.height()];
    let mut modes = vec![u8::MAX; width * plane.height()];
    let lambda = cfg.lambda();
    for r in &out.records {
        let n = r.w;
        let size = r.size();
        let orig = plane.block(r.x, r.y, n, n).unwrap();
        let refs = build_reference_samples(&out.recon, &decoded, r.x, r.y, n, n).unwrap();
        let mode_at = |px: isize, py: isize| {
            (px >= 0 && py >= 0 && (px as usize) < width && (py as usize) < plane.height())
                .then(|| modes[py as usize * width + px as usize])
                .filter(|&m| m != u8::MAX)
        };
        let mpm = signal::mpm_list(mode_at(r.x as isize - 1, r.y as isize), mode_at(r.x as isize, r.y as isize - 1));
        let gate = signalling_gate(r.x, r.y, size, &cfg.nn_sizes);
        let cost = |pred: &[u8], s: u8| {
            let residual: Vec<i32> = orig.iter().zip(pred).map(|(&o, &p)| i32::from(o) - i32::from(p)).collect();
            let levels = t.quantize(&residual, n, cfg.qp).unwrap();
            let recon = t.reconstruct(&levels, pred, n, cfg.qp).unwrap();
            let bits = mode_bits(s, gate, &mpm).unwrap() + levels_len(&levels, t.scan(n).unwrap());
            (sse(&recon, &orig) as f64 + lambda * bits as f64, recon)
        };
        let mut costs: Vec<f64> = Vec::new();
        let mut chosen_recon = None;
        for s in 0..35u8 {
            let pred = predict_classic(&refs, ClassicMode::new(s).unwrap(), n, n).unwrap();
            let (c, recon) = cost(&pred, s);
            costs.push(c);
            if s == r.s {
                chosen_recon = Some(recon);
            }
        }
        if gate {
            let pred = predict_block(&models[&size], &out.recon, &decoded, r.x, r.y).unwrap();
            assert_eq!(r.d_nn, Some(block_mse(&orig, &pred)));
            let (c, recon) = cost(&pred, NN_MODE);
            costs.push(c);
            if r.s == NN_MODE {
                chosen_recon = Some(recon);
            }
            let raw = extract_context(&out.recon, &decoded, r.x, r.y, size).unwrap();
            assert_eq!(unavailable_counts(&raw), (r.n0, r.n1));
        } else {
            assert_eq!(r.d_nn, None);
            assert_ne!(r.s, NN_MODE);
        }
        let chosen = costs[r.s as usize];
        for (m, &c) in costs.iter().enumerate() {
            assert!(chosen < c || (chosen == c && r.s as usize <= m), "mode {} cost {chosen} beaten by {m} at {c}", r.s);
        }
        assert_eq!(chosen_recon.unwrap(), out.recon.block(r.x, r.y, n, n).unwrap());
        let ranked = rank_classic_by_mse(&orig, &refs).unwrap();
        assert_eq!(r.d_c, third_lowest_mse(&ranked));

        for y in r.y..r.y + n {
            for x in r.x..r.x + n {
                decoded[y * width + x] = true;
                modes[y * width + x] = r.s;
            }
        }
    }
}

#[test]
fn leaves_are_rd_optimal_and_consistent() {
    let models = test_models();
    let plane = test_image(128, 64, 3);
    for (qp, sizes) in [(22, all_sizes()), (37, all_sizes()), (32, vec![])] {
        let cfg = CodecConfig::new(qp, sizes);
        let out = encode_frame(&plane, &cfg, &models).unwrap();
        check_tiling(&out.records, 128, 64);
        replay_oracle(&plane, &cfg, &models, &out);
        // Rate inside the costs is the rate in the payload.
        let expected = out.sse as f64 + cfg.lambda() * out.payload_bits as f64;
        assert!((out.cost - expected).abs() <= 1e-9 * expected);
        if !cfg.nn_enabled() {
            assert!(out.records.iter().all(|r| r.s < NN_MODE));
        }
    }
}

#[test]
fn nn_mode_is_used_and_round_trips() {
    let models = test_models();
    let plane = test_image(100, 70, 9);
    let cfg = CodecConfig::new(27, all_sizes());
    let enc = encode(&plane, &cfg, &models).unwrap();
    assert!(enc.frame.records.iter().any(|r| r.s == NN_MODE));
    let (header, recon) = decode(&enc.bytes, &models).unwrap();
    assert_eq!((header.width, header.height), (100, 70));
    assert_eq!(header.cfg, cfg);
    assert_eq!(recon, enc.recon);
    assert_eq!((recon.width(), recon.height()), (100, 70));
}

#[test]
fn round_trip_at_every_test_qp() {
    let models = test_models();
    for seed in 0..3 {
        let plane = test_image(64, 64, seed);
        for qp in [22, 27, 32, 37, 42] {
            for sizes in [vec![], all_sizes()] {
                let cfg = CodecConfig::new(qp, sizes);
                let enc = encode(&plane, &cfg, &models).unwrap();
                let (_, recon) = decode(&enc.bytes, &models).unwrap();
                assert_eq!(recon, enc.recon);
            }
        }
    }
}

#[test]
fn damaged_streams_fail_cleanly() {
    let models = test_models();
    let plane = test_image(64, 64, 5);
    let cfg = CodecConfig::new(32, all_sizes());
    let enc = encode(&plane, &cfg, &models).unwrap();

    let short = &enc.bytes[..enc.bytes.len() - 1];
    assert_eq!(decode(short, &models).unwrap_err(), Error::Truncated);
    for cut in [0, 5, 20, enc.bytes.len() / 2] {
        assert!(decode(&enc.bytes[..cut], &models).is_err());
    }

    let mut other = models.clone();
    for p in other.values_mut() {
        for l in &mut p.layers {
            for b in &mut l.biases {
                *b += 3.0;
            }
        }
    }
    if enc.frame.records.iter().any(|r| r.s == NN_MODE) {
        assert_eq!(decode(&enc.bytes, &other).unwrap_err(), Error::ReconMismatch);
    }

    let mut bad = enc.bytes.clone();
    bad[0] = b'X';
    assert!(matches!(decode(&bad, &models), Err(Error::Malformed(_))));

    // Flipping payload bits must never panic.
    for i in 0..enc.frame.payload.len() {
        let mut flipped = enc.bytes.clone();
        flipped[20 + i] ^= 0x5a;
        let _ = decode(&flipped, &models);
    }
}

#[test]
fn higher_qp_costs_fewer_bits() {
    let (mut ok, mut total) = (0, 0);
    for seed in 0..4 {
        let plane = test_image(64, 64, 100 + seed);
        let mut prev = usize::MAX;
        for qp in [22, 27, 32, 37, 42] {
            let bits = encode_frame(&plane, &CodecConfig::new(qp, vec![]), &Models::new())
                .unwrap()
                .payload_bits;
            if prev != usize::MAX {
                total += 1;
                ok += usize::from(bits <= prev);
            }
            prev = bits;
        }
    }
    assert!(ok * 100 >= total * 95, "{ok}/{total}");
}

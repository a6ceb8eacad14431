use alloc::vec::Vec;

use super::bitstream::BitWriter;
use super::coeffs::{levels_len, write_levels};
use super::signal::{encode_mode, mode_bits, signalling_gate};
use super::state::FrameState;
use super::transform::Transform;
use super::{BlockRecord, CodecConfig, Models, CTB_SIZE, MIN_LEAF};
use crate::frame::{sse, BlockSize, LumaPlane};
use crate::intra::{block_mse, build_reference_samples, predict_classic, ClassicMode, NUM_CLASSIC_MODES};
use crate::nn::predict_block;
use crate::{Error, Result, NN_MODE};

#[derive(Debug, Clone)]
pub struct EncodedFrame {
    pub payload: Vec<u8>,
    /// Exact payload length in bits, before byte padding.
    pub payload_bits: usize,
    pub recon: LumaPlane,
    /// One record per leaf, in coding order.
    pub records: Vec<BlockRecord>,
    /// Total squared error of the reconstruction.
    pub sse: u64,
    /// Sum of the RD costs of the chosen configuration.
    pub cost: f64,
}

struct Node {
    cost: f64,
    sse: u64,
    bits: BitWriter,
    records: Vec<BlockRecord>,
}

struct Encoder<'a> {
    orig: &'a LumaPlane,
    cfg: &'a CodecConfig,
    models: &'a Models,
    lambda: f64,
    transform: Transform,
    state: FrameState,
}

/// Encodes a plane whose sides are multiples of the CTB size.
///
/// Each node of the quadtree is tried as a leaf and as four children; the
/// cheaper (the leaf on a tie) is kept. Each leaf tries every classic mode
/// and, where signalled, the NN mode, with full residual coding, and keeps
/// the lowest `SSE + lambda * bits` (the lowest index on a tie, NN last).
pub fn encode_frame(plane: &LumaPlane, cfg: &CodecConfig, models: &Models) -> Result<EncodedFrame> {
    if plane.width() % CTB_SIZE != 0 || plane.height() % CTB_SIZE != 0 {
        return Err(Error::UnpaddedFrame {
            width: plane.width(),
            height: plane.height(),
        });
    }
    cfg.validate(models)?;
    let mut enc = Encoder {
        orig: plane,
        cfg,
        models,
        lambda: cfg.lambda(),
        transform: Transform::new(),
        state: FrameState::new(plane.width(), plane.height()),
    };
    let mut bits = BitWriter::new();
    let mut records = Vec::new();
    let (mut total_sse, mut cost) = (0, 0.0);
    for y in (0..plane.height()).step_by(CTB_SIZE) {
        for x in (0..plane.width()).step_by(CTB_SIZE) {
            let node = enc.node(x, y, CTB_SIZE)?;
            bits.append(&node.bits);
            records.extend(node.records);
            total_sse += node.sse;
            cost += node.cost;
        }
    }
    Ok(EncodedFrame {
        payload_bits: bits.len(),
        payload: bits.into_bytes(),
        recon: enc.state.recon,
        records,
        sse: total_sse,
        cost,
    })
}

impl Encoder<'_> {
    fn node(&mut self, x: usize, y: usize, n: usize) -> Result<Node> {
        if n == MIN_LEAF {
            return self.leaf(x, y, n);
        }
        if n == CTB_SIZE {
            return self.split(x, y, n);
        }
        let before = self.state.snapshot(x, y, n);
        let mut leaf = self.leaf(x, y, n)?;
        let after_leaf = self.state.snapshot(x, y, n);
        self.state.restore(&before);
        let mut split = self.split(x, y, n)?;

        leaf.cost += self.lambda;
        split.cost += self.lambda;
        let (mut best, flag) = if leaf.cost <= split.cost {
            self.state.restore(&after_leaf);
            (leaf, false)
        } else {
            (split, true)
        };
        let mut bits = BitWriter::new();
        bits.put_bit(flag);
        bits.append(&best.bits);
        best.bits = bits;
        Ok(best)
    }

    fn split(&mut self, x: usize, y: usize, n: usize) -> Result<Node> {
        let half = n / 2;
        let mut out = Node {
            cost: 0.0,
            sse: 0,
            bits: BitWriter::new(),
            records: Vec::new(),
        };
        for (dx, dy) in [(0, 0), (half, 0), (0, half), (half, half)] {
            let child = self.node(x + dx, y + dy, half)?;
            out.cost += child.cost;
            out.sse += child.sse;
            out.bits.append(&child.bits);
            out.records.extend(child.records);
        }
        Ok(out)
    }

    fn leaf(&mut self, x: usize, y: usize, n: usize) -> Result<Node> {
        let size = BlockSize::square(n);
        let qp = self.cfg.qp;
        let orig = self.orig.block(x, y, n, n)?;
        let refs = build_reference_samples(&self.state.recon, &self.state.decoded, x, y, n, n)?;
        let mpm = self.state.mpm(x, y);
        let gate = signalling_gate(x, y, size, &self.cfg.nn_sizes);
        let scan = self.transform.scan(n)?;

        let mut best: Option<(f64, u8, Vec<i32>, Vec<u8>, u64)> = None;
        let mut pred_mse = Vec::with_capacity(NUM_CLASSIC_MODES as usize);
        let mut d_nn = None;
        for s in 0..=NN_MODE {
            let pred = if s < NUM_CLASSIC_MODES {
                let pred = predict_classic(&refs, ClassicMode::new(s)?, n, n)?;
                pred_mse.push(block_mse(&orig, &pred));
                pred
            } else if gate {
                let pred = predict_block(&self.models[&size], &self.state.recon, &self.state.decoded, x, y)?;
                d_nn = Some(block_mse(&orig, &pred));
                pred
            } else {
                break;
            };
            let residual: Vec<i32> = orig
                .iter()
                .zip(&pred)
                .map(|(&o, &p)| i32::from(o) - i32::from(p))
                .collect();
            let levels = self.transform.quantize(&residual, n, qp)?;
            let recon = self.transform.reconstruct(&levels, &pred, n, qp)?;
            let dist = sse(&recon, &orig);
            let bits = mode_bits(s, gate, &mpm)? + levels_len(&levels, scan);
            let cost = dist as f64 + self.lambda * bits as f64;
            if best.as_ref().map_or(true, |b| cost < b.0) {
                best = Some((cost, s, levels, recon, dist));
            }
        }
        let (cost, s, levels, recon, dist) = best.expect("at least one classic mode");

        pred_mse.sort_by(f64::total_cmp);
        let (n0, n1) = self.state.unavailable_counts(x, y, size);
        let record = BlockRecord {
            x,
            y,
            h: n,
            w: n,
            n0,
            n1,
            s,
            d_nn,
            d_c: pred_mse[2],
            is_split_tbs: false,
        };

        let mut bits = BitWriter::new();
        encode_mode(&mut bits, s, gate, &mpm)?;
        write_levels(&mut bits, &levels, scan);
        self.state.commit(x, y, n, &recon, s);
        Ok(Node {
            cost,
            sse: dist,
            bits,
            records: alloc::vec![record],
        })
    }
}

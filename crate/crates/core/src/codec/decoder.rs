use super::bitstream::BitReader;
use super::coeffs::read_levels;
use super::signal::{decode_mode, signalling_gate};
use super::state::FrameState;
use super::transform::Transform;
use super::{CodecConfig, Models, CTB_SIZE, MIN_LEAF};
use crate::frame::{BlockSize, LumaPlane};
use crate::intra::{build_reference_samples, predict_classic, ClassicMode};
use crate::nn::predict_block;
use crate::{Error, Result, NN_MODE};

struct Decoder<'a, 'b> {
    input: BitReader<'b>,
    cfg: &'a CodecConfig,
    models: &'a Models,
    transform: Transform,
    state: FrameState,
}

/// Decodes a payload produced by [`encode_frame`](super::encode_frame) for a
/// `width x height` plane (multiples of the CTB size).
pub fn decode_frame(
    payload: &[u8],
    width: usize,
    height: usize,
    cfg: &CodecConfig,
    models: &Models,
) -> Result<LumaPlane> {
    if width == 0 || height == 0 || width % CTB_SIZE != 0 || height % CTB_SIZE != 0 {
        return Err(Error::UnpaddedFrame { width, height });
    }
    cfg.validate(models)?;
    let mut dec = Decoder {
        input: BitReader::new(payload),
        cfg,
        models,
        transform: Transform::new(),
        state: FrameState::new(width, height),
    };
    for y in (0..height).step_by(CTB_SIZE) {
        for x in (0..width).step_by(CTB_SIZE) {
            dec.node(x, y, CTB_SIZE)?;
        }
    }
    if dec.input.remaining() >= 8 {
        return Err(Error::Malformed("trailing payload bytes"));
    }
    Ok(dec.state.recon)
}

impl Decoder<'_, '_> {
    fn node(&mut self, x: usize, y: usize, n: usize) -> Result<()> {
        let split = n == CTB_SIZE || (n > MIN_LEAF && self.input.bit()?);
        if !split {
            return self.leaf(x, y, n);
        }
        let half = n / 2;
        for (dx, dy) in [(0, 0), (half, 0), (0, half), (half, half)] {
            self.node(x + dx, y + dy, half)?;
        }
        Ok(())
    }

    fn leaf(&mut self, x: usize, y: usize, n: usize) -> Result<()> {
        let size = BlockSize::square(n);
        let gate = signalling_gate(x, y, size, &self.cfg.nn_sizes);
        let mpm = self.state.mpm(x, y);
        let s = decode_mode(&mut self.input, gate, &mpm)?;
        let pred = if s == NN_MODE {
            predict_block(&self.models[&size], &self.state.recon, &self.state.decoded, x, y)?
        } else {
            let refs = build_reference_samples(&self.state.recon, &self.state.decoded, x, y, n, n)?;
            predict_classic(&refs, ClassicMode::new(s)?, n, n)?
        };
        let levels = read_levels(&mut self.input, self.transform.scan(n)?)?;
        let recon = self.transform.reconstruct(&levels, &pred, n, self.cfg.qp)?;
        self.state.commit(x, y, n, &recon, s);
        Ok(())
    }
}

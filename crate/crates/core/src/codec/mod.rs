//! The block-based intra codec: a 64x64 coding-tree quadtree down to 4x4
//! leaves chosen by rate-distortion cost, one prediction mode per leaf (35
//! classic modes plus the NN mode), DCT residual coding with exp-Golomb
//! levels, and a small container with a reconstruction hash.

pub mod bitstream;
pub mod container;
mod coeffs;
mod decoder;
mod encoder;
pub mod signal;
mod state;
pub mod transform;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::frame::BlockSize;
use crate::nn::{ContextGeometry, NetworkParams};
use crate::{Error, Result};

pub use decoder::decode_frame;
pub use encoder::{encode_frame, EncodedFrame};

/// Side of the coding tree block.
pub const CTB_SIZE: usize = 64;
/// Smallest leaf side.
pub const MIN_LEAF: usize = 4;

/// NN predictors by block size.
pub type Models = BTreeMap<BlockSize, NetworkParams>;

/// One quadtree leaf as seen by the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockRecord {
    pub x: usize,
    pub y: usize,
    pub h: usize,
    pub w: usize,
    /// Undecoded bottom rows of the left context rectangle.
    pub n0: usize,
    /// Undecoded rightmost columns of the above context rectangle.
    pub n1: usize,
    pub s: u8,
    /// NN prediction MSE, when the NN mode was signalled.
    pub d_nn: Option<f64>,
    /// Third-lowest classic prediction MSE.
    pub d_c: f64,
    /// Always false: every leaf is a single transform block.
    pub is_split_tbs: bool,
}

impl BlockRecord {
    pub fn size(&self) -> BlockSize {
        BlockSize::new(self.h, self.w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodecConfig {
    pub qp: i32,
    /// Sizes for which the NN mode is signalled; empty disables the mode.
    pub nn_sizes: Vec<BlockSize>,
}

pub const MAX_QP: i32 = 51;

impl CodecConfig {
    pub fn new(qp: i32, nn_sizes: Vec<BlockSize>) -> Self {
        CodecConfig { qp, nn_sizes }
    }

    pub fn nn_enabled(&self) -> bool {
        !self.nn_sizes.is_empty()
    }

    /// Lagrangian multiplier `0.57 * 2^((QP - 12) / 3)`.
    pub fn lambda(&self) -> f64 {
        rd_lambda(self.qp)
    }

    pub(crate) fn validate(&self, models: &Models) -> Result<()> {
        if !(0..=MAX_QP).contains(&self.qp) {
            return Err(Error::InvalidQp(self.qp));
        }
        for &size in &self.nn_sizes {
            if size.h != size.w || !matches!(size.w, 4 | 8 | 16 | 32) {
                return Err(Error::UnsupportedBlockSize(size));
            }
            let params = models.get(&size).ok_or(Error::MissingParams(size))?;
            if params.size != size
                || params.input_len() != ContextGeometry::new(size).len()
                || params.output_len() != size.area()
            {
                return Err(Error::Malformed("model shape does not match its block size"));
            }
        }
        Ok(())
    }
}

pub fn rd_lambda(qp: i32) -> f64 {
    0.57 * libm::pow(2.0, f64::from(qp - 12) / 3.0)
}

/// Bitmask over the leaf sizes 4, 8, 16, 32 (bit 0 for 4).
pub fn sizes_to_mask(sizes: &[BlockSize]) -> Result<u8> {
    let mut mask = 0;
    for s in sizes {
        let bit = match (s.h, s.w) {
            (4, 4) => 0,
            (8, 8) => 1,
            (16, 16) => 2,
            (32, 32) => 3,
            _ => return Err(Error::UnsupportedBlockSize(*s)),
        };
        mask |= 1 << bit;
    }
    Ok(mask)
}

pub fn mask_to_sizes(mask: u8) -> Result<Vec<BlockSize>> {
    if mask & 0xf0 != 0 {
        return Err(Error::Malformed("unknown block size in NN size mask"));
    }
    Ok((0..4)
        .filter(|b| mask >> b & 1 == 1)
        .map(|b| BlockSize::square(4 << b))
        .collect())
}

#[cfg(test)]
pub(crate) mod tests;

//! Stream container: a fixed header, the payload and a SHA-256 of the
//! cropped reconstruction.
//!
//! ```text
//! magic "ITNB" | version u8 | width u32 | height u32 | qp u8 | nn u8 |
//! nn size mask u8 | payload length u32 | payload | sha256(recon)
//! ```
//!
//! Integers are little-endian.

use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use super::{decode_frame, encode_frame, mask_to_sizes, sizes_to_mask, CodecConfig, EncodedFrame, Models, CTB_SIZE};
use crate::frame::LumaPlane;
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"ITNB";
pub const VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 4 + 4 + 1 + 1 + 1 + 4;
const HASH_LEN: usize = 32;
/// Largest accepted frame side, to bound decoder allocations.
pub const MAX_SIDE: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct StreamHeader {
    pub width: usize,
    pub height: usize,
    pub cfg: CodecConfig,
}

/// The result of [`encode`]: the container and the encoder's view of the
/// frame, with the reconstruction cropped to the input size.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub bytes: Vec<u8>,
    pub frame: EncodedFrame,
    pub recon: LumaPlane,
}

impl Encoded {
    /// Payload bits per pixel of the original plane.
    pub fn bits_per_pixel(&self) -> f64 {
        self.frame.payload_bits as f64 / self.recon.samples().len() as f64
    }
}

pub fn recon_hash(plane: &LumaPlane) -> [u8; 32] {
    Sha256::digest(plane.samples()).into()
}

/// Pads `plane` to whole CTBs, encodes it and wraps the payload.
pub fn encode(plane: &LumaPlane, cfg: &CodecConfig, models: &Models) -> Result<Encoded> {
    let padded = plane.pad_to_multiple(CTB_SIZE);
    let frame = encode_frame(&padded, cfg, models)?;
    let recon = frame.recon.crop(plane.width(), plane.height())?;
    let qp = u8::try_from(cfg.qp).map_err(|_| Error::InvalidQp(cfg.qp))?;
    let dims = |v: usize| u32::try_from(v).map_err(|_| Error::Malformed("frame too large"));
    let payload_len = u32::try_from(frame.payload.len()).map_err(|_| Error::Malformed("payload too large"))?;

    let mut bytes = Vec::with_capacity(HEADER_LEN + frame.payload.len() + HASH_LEN);
    bytes.extend_from_slice(&MAGIC);
    bytes.push(VERSION);
    bytes.extend_from_slice(&dims(plane.width())?.to_le_bytes());
    bytes.extend_from_slice(&dims(plane.height())?.to_le_bytes());
    bytes.push(qp);
    bytes.push(u8::from(cfg.nn_enabled()));
    bytes.push(sizes_to_mask(&cfg.nn_sizes)?);
    bytes.extend_from_slice(&payload_len.to_le_bytes());
    bytes.extend_from_slice(&frame.payload);
    bytes.extend_from_slice(&recon_hash(&recon));
    Ok(Encoded { bytes, frame, recon })
}

pub fn read_header(bytes: &[u8]) -> Result<StreamHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated);
    }
    if bytes[..4] != MAGIC {
        return Err(Error::Malformed("bad magic"));
    }
    if bytes[4] != VERSION {
        return Err(Error::Malformed("unsupported version"));
    }
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let (width, height) = (u32_at(5), u32_at(9));
    if width == 0 || height == 0 || width > MAX_SIDE || height > MAX_SIDE {
        return Err(Error::Malformed("frame dimensions out of range"));
    }
    let qp = i32::from(bytes[13]);
    let nn = bytes[14];
    let nn_sizes = mask_to_sizes(bytes[15])?;
    if nn > 1 || (nn == 1) != !nn_sizes.is_empty() {
        return Err(Error::Malformed("NN flag disagrees with size mask"));
    }
    Ok(StreamHeader {
        width,
        height,
        cfg: CodecConfig::new(qp, nn_sizes),
    })
}

/// Decodes a container and checks the reconstruction against the trailer
/// hash. A hash mismatch (for example from different NN parameters) is
/// [`Error::ReconMismatch`].
pub fn decode(bytes: &[u8], models: &Models) -> Result<(StreamHeader, LumaPlane)> {
    let header = read_header(bytes)?;
    let payload_len = u32::from_le_bytes(bytes[HEADER_LEN - 4..HEADER_LEN].try_into().unwrap()) as usize;
    let end = HEADER_LEN
        .checked_add(payload_len)
        .and_then(|v| v.checked_add(HASH_LEN))
        .ok_or(Error::Malformed("payload length overflow"))?;
    if bytes.len() < end {
        return Err(Error::Truncated);
    }
    if bytes.len() > end {
        return Err(Error::Malformed("trailing bytes after hash"));
    }
    let payload = &bytes[HEADER_LEN..HEADER_LEN + payload_len];
    let pw = header.width.div_ceil(CTB_SIZE) * CTB_SIZE;
    let ph = header.height.div_ceil(CTB_SIZE) * CTB_SIZE;
    let recon = decode_frame(payload, pw, ph, &header.cfg, models)?.crop(header.width, header.height)?;
    if recon_hash(&recon)[..] != bytes[end - HASH_LEN..] {
        return Err(Error::ReconMismatch);
    }
    Ok((header, recon))
}

use alloc::boxed::Box;
use alloc::string::String;

use crate::frame::BlockSize;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{width}x{height} plane needs {expected} samples, got {actual}")]
    SampleCount {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("block {w}x{h} at ({x}, {y}) is outside the {width}x{height} plane")]
    BlockOutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },
    #[error("invalid intra mode index {0}")]
    InvalidMode(u8),
    #[error("unsupported block shape {w}x{h}")]
    UnsupportedShape { w: usize, h: usize },
    #[error("context of the {w}x{h} block at ({x}, {y}) crosses the frame boundary")]
    ContextOutsideFrame { x: usize, y: usize, w: usize, h: usize },
    #[error("expected a vector of length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("training diverged at step {step} (non-finite loss)")]
    Diverged { step: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("duplicate image identifier {0:?}")]
    DuplicateImageId(String),
    #[error("cleansing needs d_nn and d_c for a {0} block")]
    MissingDistortion(BlockSize),
    #[error("no network parameters for block size {0}")]
    MissingParams(BlockSize),
    #[error("frame {width}x{height} is not padded to a multiple of 64")]
    UnpaddedFrame { width: usize, height: usize },
    #[error("QP {0} outside [0, 51]")]
    InvalidQp(i32),
    #[error("mode {0} cannot be signalled here")]
    UnrepresentableMode(u8),
    #[error("truncated bitstream")]
    Truncated,
    #[error("malformed bitstream: {0}")]
    Malformed(&'static str),
    #[error("decoded reconstruction does not match the encoder's hash")]
    ReconMismatch,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("iteration {index} failed: {source}")]
    Iteration {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid rate curve: {0}")]
    InvalidCurve(&'static str),
    #[error("rate curves have no PSNR overlap")]
    NoPsnrOverlap,
    #[error("no block records")]
    EmptyRecords,
    #[error("unsupported block size {0}")]
    UnsupportedBlockSize(BlockSize),
}

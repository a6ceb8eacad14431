//! Block-based intra codec with a single neural-network intra prediction
//! mode, and the iterative training loop that produces its predictors.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! and parallel corpus processing live in the companion `itnn` crate.
//!
//! Module map:
//!
//! * [`frame`]: luminance planes, corpora and quality metrics.
//! * [`intra`]: reference samples and the 35 classic intra modes.
//! * [`nn`]: context extraction, preprocessing and predictor inference.
//! * [`train`]: loss, backpropagation and the momentum-SGD trainer.
//! * [`codec`]: quadtree RDO encoder, bitstream and decoder.
//! * [`pipeline`]: dataset extraction, cleansing and iterative training.
//! * [`eval`]: BD-rate, mode statistics and prediction comparisons.
#![cfg_attr(not(feature = "std"), no_std)]
#![deny(rust_2018_idioms, unused_must_use)]

extern crate alloc;

pub mod codec;
pub mod error;
pub mod eval;
pub mod exec;
pub mod frame;
pub mod intra;
pub mod nn;
pub mod pipeline;
pub mod train;

mod hash;

pub use error::{Error, Result};
pub use frame::{BlockSize, Corpus, LumaPlane};
pub use nn::NetworkParams;

/// Index of the neural-network mode, right after the 35 classic modes.
pub const NN_MODE: u8 = 35;

/// Internal bitdepth of the codec.
pub const BITDEPTH: u32 = 8;

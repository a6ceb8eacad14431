//! The neural intra predictor: context extraction, preprocessing, the
//! fully-connected network and postprocessing.

mod context;
mod network;
mod scalar;

pub use context::{
    availability_from_counts, extract_context, extract_context_with_counts, preprocess,
    unavailable_counts, ContextGeometry, PreprocessedContext, RawContext,
};
pub use network::{
    forward, postprocess, predict_block, Layer, Network, NetworkDims, NetworkParams, HIDDEN_WIDTH,
    LEAKY_SLOPE,
};
pub use scalar::Scalar;

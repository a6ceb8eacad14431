//! Predictor parameter files.
//!
//! ```text
//! magic "ITNNMDL\0" | version u32 | h u32 | w u32 | n_a u32 | n_l u32 |
//! layer count u32 | layer widths u32 x (count + 1) | leaky slope f64 |
//! weights of every layer (row-major, outputs x inputs) | biases of every layer
//! ```
//!
//! All values little-endian, parameters as f32.

use std::fs;
use std::path::{Path, PathBuf};

use itnn_core::codec::Models;
use itnn_core::nn::{ContextGeometry, Layer, NetworkParams};
use itnn_core::BlockSize;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"ITNNMDL\0";
pub const VERSION: u32 = 1;

pub fn encode_model(params: &NetworkParams) -> Vec<u8> {
    let g = ContextGeometry::new(params.size);
    let mut out = Vec::with_capacity(64 + params.parameter_count() * 4);
    out.extend_from_slice(&MAGIC);
    let mut put = |v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
    put(VERSION as usize);
    put(params.size.h);
    put(params.size.w);
    put(g.n_a);
    put(g.n_l);
    put(params.layers.len());
    put(params.input_len());
    for l in &params.layers {
        put(l.outputs);
    }
    out.extend_from_slice(&params.leaky_slope.to_le_bytes());
    for l in &params.layers {
        out.extend(l.weights.iter().flat_map(|v| v.to_le_bytes()));
    }
    for l in &params.layers {
        out.extend(l.biases.iter().flat_map(|v| v.to_le_bytes()));
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> std::result::Result<&[u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or("truncated model file")?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<usize, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f32s(&mut self, n: usize) -> std::result::Result<Vec<f32>, String> {
        let raw = self.take(n.checked_mul(4).ok_or("layer too large")?)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn decode_model(bytes: &[u8]) -> std::result::Result<NetworkParams, String> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err("not a model file".into());
    }
    let version = c.u32()?;
    if version != VERSION as usize {
        return Err(format!("unsupported model version {version}"));
    }
    let size = BlockSize::new(c.u32()?, c.u32()?);
    let (n_a, n_l) = (c.u32()?, c.u32()?);
    if size.h == 0 || size.w == 0 || size.max_side() > 64 {
        return Err(format!("bad block size {size}"));
    }
    let g = ContextGeometry::new(size);
    if (n_a, n_l) != (g.n_a, g.n_l) {
        return Err(format!("context extents {n_a}/{n_l} do not match block size {size}"));
    }
    let count = c.u32()?;
    if count == 0 || count > 64 {
        return Err(format!("bad layer count {count}"));
    }
    let widths = (0..=count).map(|_| c.u32()).collect::<std::result::Result<Vec<_>, _>>()?;
    if widths[0] != g.len() || widths[count] != size.area() || widths.contains(&0) {
        return Err("layer widths do not fit the block size".into());
    }
    let leaky_slope = f64::from_le_bytes(c.take(8)?.try_into().unwrap());
    let mut layers = Vec::with_capacity(count);
    for p in widths.windows(2) {
        layers.push(Layer {
            inputs: p[0],
            outputs: p[1],
            weights: c.f32s(p[0] * p[1])?,
            biases: Vec::new(),
        });
    }
    for l in &mut layers {
        l.biases = c.f32s(l.outputs)?;
    }
    if c.pos != bytes.len() {
        return Err("trailing bytes after model".into());
    }
    Ok(NetworkParams {
        size,
        layers,
        leaky_slope,
    })
}

pub fn model_file_name(size: BlockSize) -> String {
    format!("model_{}x{}.bin", size.w, size.h)
}

pub fn save_model(path: &Path, params: &NetworkParams) -> Result<()> {
    fs::write(path, encode_model(params)).map_err(Error::io(path))
}

pub fn load_model(path: &Path) -> Result<NetworkParams> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    decode_model(&bytes).map_err(|msg| Error::format(path, msg))
}

/// Writes one file per size into `dir`, returning the paths in size order.
pub fn save_models(dir: &Path, models: &Models) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let mut paths = Vec::new();
    for (&size, params) in models {
        let path = dir.join(model_file_name(size));
        save_model(&path, params)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Loads every `model_*.bin` in `dir`.
pub fn load_models(dir: &Path) -> Result<Models> {
    let mut models = Models::new();
    for entry in fs::read_dir(dir).map_err(Error::io(dir))? {
        let path = entry.map_err(Error::io(dir))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("model_") && name.ends_with(".bin") {
            let params = load_model(&path)?;
            if models.insert(params.size, params).is_some() {
                return Err(Error::format(&path, "duplicate block size"));
            }
        }
    }
    if models.is_empty() {
        return Err(Error::format(dir, "no model files found"));
    }
    Ok(models)
}

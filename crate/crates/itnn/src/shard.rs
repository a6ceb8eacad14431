//! Training-set shards and their provenance sidecars.
//!
//! ```text
//! magic "ITNNSHD\0" | version u32 | h u32 | w u32 | input len u32 |
//! output len u32 | pair count u64 | pairs: x_c then y_c, f32 each
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use itnn_core::pipeline::Provenance;
use itnn_core::train::TrainingSet;
use itnn_core::BlockSize;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"ITNNSHD\0";
pub const VERSION: u32 = 1;

pub fn encode_shard(set: &TrainingSet) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    for v in [VERSION as usize, set.size().h, set.size().w, set.input_len(), set.output_len()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&(set.len() as u64).to_le_bytes());
    for i in 0..set.len() {
        let (x, y) = set.get(i);
        out.extend(x.iter().chain(y).flat_map(|v| v.to_le_bytes()));
    }
    out
}

pub fn decode_shard(bytes: &[u8]) -> std::result::Result<TrainingSet, String> {
    const HEAD: usize = 8 + 5 * 4 + 8;
    if bytes.len() < HEAD || bytes[..8] != MAGIC {
        return Err("not a shard file".into());
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize;
    if u32_at(0) != VERSION as usize {
        return Err(format!("unsupported shard version {}", u32_at(0)));
    }
    let size = BlockSize::new(u32_at(1), u32_at(2));
    let mut set = TrainingSet::new(size);
    if (u32_at(3), u32_at(4)) != (set.input_len(), set.output_len()) {
        return Err("pair lengths do not fit the block size".into());
    }
    let count = u64::from_le_bytes(bytes[28..36].try_into().unwrap()) as usize;
    let floats: Vec<f32> = bytes[HEAD..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let stride = set.input_len() + set.output_len();
    if (bytes.len() - HEAD) % 4 != 0 || Some(floats.len()) != count.checked_mul(stride) {
        return Err("pair data length does not match the pair count".into());
    }
    for pair in floats.chunks_exact(stride) {
        set.push_slices(&pair[..set.input_len()], &pair[set.input_len()..])
            .map_err(|e| e.to_string())?;
    }
    Ok(set)
}

pub fn save_shard(path: &Path, set: &TrainingSet) -> Result<()> {
    fs::write(path, encode_shard(set)).map_err(Error::io(path))
}

pub fn load_shard(path: &Path) -> Result<TrainingSet> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    decode_shard(&bytes).map_err(|msg| Error::format(path, msg))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceRow {
    pub index: usize,
    pub image: String,
    pub x: usize,
    pub y: usize,
    pub qp: i32,
    pub iteration: usize,
}

pub fn save_provenance(path: &Path, provenance: &[Provenance]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["index", "image", "x", "y", "qp", "iteration"]).map_err(csv_err)?;
    for (index, p) in provenance.iter().enumerate() {
        w.serialize((index, &p.image, p.x, p.y, p.qp, p.iteration)).map_err(csv_err)?;
    }
    w.flush().map_err(Error::io(path))
}

pub fn load_provenance(path: &Path) -> Result<Vec<ProvenanceRow>> {
    let csv_err = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<std::result::Result<Vec<_>, _>>().map_err(csv_err)
}

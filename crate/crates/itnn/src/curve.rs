//! Rate-distortion measurements over a corpus and per-image BD-rate.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use itnn_core::codec::container::encode;
use itnn_core::codec::{CodecConfig, Models};
use itnn_core::eval::{bd_rate, RateCurve};
use itnn_core::exec::Executor;
use itnn_core::frame::psnr;
use itnn_core::{Corpus, NN_MODE};

use crate::error::{Error, Result};

/// One encode of one image: payload bits per pixel, luma PSNR, and how many
/// leaves chose the NN mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub image: String,
    pub qp: i32,
    pub bpp: f64,
    pub psnr: f64,
    pub leaves: usize,
    pub nn_leaves: usize,
}

/// Encodes every image at every QP, with the NN mode for all sizes in
/// `models` (an empty map encodes classic-only).
pub fn measure(corpus: &Corpus, models: &Models, qps: &[i32], exec: &impl Executor) -> Result<Vec<CurveRow>> {
    let sizes: Vec<_> = models.keys().copied().collect();
    let jobs: Vec<(usize, i32)> = (0..corpus.len()).flat_map(|i| qps.iter().map(move |&q| (i, q))).collect();
    let rows = exec.map(jobs.len(), |j| -> Result<CurveRow> {
        let (i, qp) = jobs[j];
        let e = &corpus.entries()[i];
        let enc = encode(&e.plane, &CodecConfig::new(qp, sizes.clone()), models)?;
        Ok(CurveRow {
            image: e.id.clone(),
            qp,
            bpp: enc.bits_per_pixel(),
            psnr: psnr(&e.plane, &enc.recon, 255)?,
            leaves: enc.frame.records.len(),
            nn_leaves: enc.frame.records.iter().filter(|r| r.s == NN_MODE).count(),
        })
    });
    rows.into_iter().collect()
}

pub fn save(path: &Path, rows: &[CurveRow]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(Error::io(path))
}

/// Reads a curve CSV. Only `bpp` and `psnr` are required; `image` defaults
/// to a single curve.
pub fn load(path: &Path) -> Result<Vec<CurveRow>> {
    #[derive(Deserialize)]
    struct Loose {
        #[serde(default)]
        image: String,
        #[serde(default)]
        qp: i32,
        bpp: f64,
        psnr: f64,
        #[serde(default)]
        leaves: usize,
        #[serde(default)]
        nn_leaves: usize,
    }
    let csv_err = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize::<Loose>()
        .map(|row| {
            row.map(|l| CurveRow {
                image: l.image,
                qp: l.qp,
                bpp: l.bpp,
                psnr: l.psnr,
                leaves: l.leaves,
                nn_leaves: l.nn_leaves,
            })
            .map_err(csv_err)
        })
        .collect()
}

pub fn curves(rows: &[CurveRow]) -> Result<BTreeMap<String, RateCurve>> {
    let mut grouped: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        grouped.entry(r.image.clone()).or_default().push((r.bpp, r.psnr));
    }
    grouped
        .into_iter()
        .map(|(id, pts)| Ok((id, RateCurve::new(pts)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BdSummary {
    pub per_image: Vec<(String, f64)>,
    pub mean: f64,
}

/// BD-rate of `test` against `anchor` for every image, and their mean.
pub fn bd_summary(anchor: &[CurveRow], test: &[CurveRow]) -> Result<BdSummary> {
    let (a, t) = (curves(anchor)?, curves(test)?);
    if !a.keys().eq(t.keys()) {
        return Err(Error::Config("anchor and test curves cover different images".into()));
    }
    let per_image = a
        .iter()
        .map(|(id, ca)| Ok((id.clone(), bd_rate(ca, &t[id])?)))
        .collect::<Result<Vec<_>>>()?;
    if per_image.is_empty() {
        return Err(itnn_core::Error::InvalidCurve("no points").into());
    }
    let mean = per_image.iter().map(|p| p.1).sum::<f64>() / per_image.len() as f64;
    Ok(BdSummary { per_image, mean })
}

/// Fraction of leaves coded with the NN mode at `qp`.
pub fn nn_share(rows: &[CurveRow], qp: i32) -> f64 {
    let (n, total) = rows
        .iter()
        .filter(|r| r.qp == qp)
        .fold((0, 0), |(n, t), r| (n + r.nn_leaves, t + r.leaves));
    if total == 0 {
        0.0
    } else {
        n as f64 / total as f64
    }
}

//! Bjontegaard delta rate, mode-selection statistics and NN-versus-classic
//! prediction comparisons.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::codec::{BlockRecord, Models};
use crate::frame::{psnr_from_mse, BlockSize, Corpus};
use crate::hash::{self, TAG_REPORT};
use crate::intra::{build_reference_samples, rank_classic_by_mse, predict_classic};
use crate::nn::predict_block;
use crate::{Error, Result, NN_MODE};

/// Rate-distortion points: bits per pixel and PSNR in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    pub points: Vec<(f64, f64)>,
}

impl RateCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::InvalidCurve("a curve needs at least 4 points"));
        }
        if points.iter().any(|&(r, p)| !(r > 0.0) || !r.is_finite() || !p.is_finite()) {
            return Err(Error::InvalidCurve("rates must be positive and PSNRs finite"));
        }
        let mut sorted = points;
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidCurve("duplicate rate"));
        }
        let mut psnrs: Vec<f64> = sorted.iter().map(|p| p.1).collect();
        psnrs.sort_by(f64::total_cmp);
        if psnrs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidCurve("duplicate PSNR"));
        }
        Ok(RateCurve { points: sorted })
    }

    fn psnr_range(&self) -> (f64, f64) {
        let lo = self.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = self.points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Cubic in `t = (psnr - center) / scale`.
struct Cubic {
    coef: [f64; 4],
    center: f64,
    scale: f64,
}

impl Cubic {
    /// Least-squares fit of `log10(rate)` against PSNR.
    fn fit(curve: &RateCurve) -> Result<Cubic> {
        let (lo, hi) = curve.psnr_range();
        let center = (lo + hi) / 2.0;
        let scale = ((hi - lo) / 2.0).max(1e-12);
        // Normal equations A^T A c = A^T y.
        let mut m = [[0.0f64; 5]; 4];
        for &(rate, psnr) in &curve.points {
            let t = (psnr - center) / scale;
            let y = libm::log10(rate);
            let pows = [1.0, t, t * t, t * t * t];
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] += pows[i] * pows[j];
                }
                m[i][4] += pows[i] * y;
            }
        }
        let coef = solve4(m).ok_or(Error::InvalidCurve("degenerate curve"))?;
        Ok(Cubic { coef, center, scale })
    }

    /// Integral over PSNR in `[a, b]`.
    fn integral(&self, a: f64, b: f64) -> f64 {
        let anti = |t: f64| {
            let c = &self.coef;
            t * (c[0] + t * (c[1] / 2.0 + t * (c[2] / 3.0 + t * c[3] / 4.0)))
        };
        let ta = (a - self.center) / self.scale;
        let tb = (b - self.center) / self.scale;
        self.scale * (anti(tb) - anti(ta))
    }
}

/// Gaussian elimination with partial pivoting on an augmented 4x5 matrix.
fn solve4(mut m: [[f64; 5]; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..4 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..5 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some([m[0][4] / m[0][0], m[1][4] / m[1][1], m[2][4] / m[2][2], m[3][4] / m[3][3]])
}

/// Average bitrate difference of `test` against `anchor` at equal PSNR, in
/// percent (negative means savings). Uses cubic fits of log-rate over PSNR
/// integrated over the common PSNR interval.
pub fn bd_rate(anchor: &RateCurve, test: &RateCurve) -> Result<f64> {
    let (a_lo, a_hi) = anchor.psnr_range();
    let (t_lo, t_hi) = test.psnr_range();
    let (lo, hi) = (a_lo.max(t_lo), a_hi.min(t_hi));
    if !(hi > lo) {
        return Err(Error::NoPsnrOverlap);
    }
    let fa = Cubic::fit(anchor)?;
    let ft = Cubic::fit(test)?;
    let avg = (ft.integral(lo, hi) - fa.integral(lo, hi)) / (hi - lo);
    Ok((libm::pow(10.0, avg) - 1.0) * 100.0)
}

/// Selection-share change of one mode within one (block size, QP) group.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyDelta {
    pub size: BlockSize,
    pub qp: i32,
    pub mode: u8,
    pub percent_a: f64,
    pub percent_b: f64,
    /// `percent_b - percent_a`.
    pub delta: f64,
}

fn tally(records: &[(i32, BlockRecord)]) -> BTreeMap<(BlockSize, i32), Vec<usize>> {
    let mut groups: BTreeMap<(BlockSize, i32), Vec<usize>> = BTreeMap::new();
    for (qp, r) in records {
        let counts = groups
            .entry((r.size(), *qp))
            .or_insert_with(|| vec![0; NN_MODE as usize + 1]);
        if let Some(c) = counts.get_mut(r.s as usize) {
            *c += 1;
        }
    }
    groups
}

/// Per (size, QP, mode): the percentage of leaves choosing the mode in
/// `b` minus that in `a`. A group missing from one side counts as 0% there.
pub fn mode_frequency_delta(a: &[(i32, BlockRecord)], b: &[(i32, BlockRecord)]) -> Result<Vec<FrequencyDelta>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let (ta, tb) = (tally(a), tally(b));
    let mut keys: Vec<(BlockSize, i32)> = ta.keys().chain(tb.keys()).copied().collect();
    keys.sort();
    keys.dedup();
    let percent = |t: &BTreeMap<(BlockSize, i32), Vec<usize>>, key, mode: usize| {
        t.get(&key).map_or(0.0, |c: &Vec<usize>| {
            let total: usize = c.iter().sum();
            100.0 * c[mode] as f64 / total as f64
        })
    };
    let mut out = Vec::new();
    for key in keys {
        for mode in 0..=NN_MODE as usize {
            let (pa, pb) = (percent(&ta, key, mode), percent(&tb, key, mode));
            out.push(FrequencyDelta {
                size: key.0,
                qp: key.1,
                mode: mode as u8,
                percent_a: pa,
                percent_b: pb,
                delta: pb - pa,
            });
        }
    }
    Ok(out)
}

/// One sampled block: NN predictions under two parameter sets and the best
/// classic prediction, with PSNRs (infinite for an exact prediction).
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub image: String,
    pub x: usize,
    pub y: usize,
    pub size: BlockSize,
    pub psnr_i: f64,
    pub psnr_j: f64,
    pub psnr_classic: f64,
    pub best_classic_mode: u8,
    pub block: Vec<u8>,
    pub pred_i: Vec<u8>,
    pub pred_j: Vec<u8>,
    pub pred_classic: Vec<u8>,
}

/// Samples `samples` random positions whose whole context lies inside the
/// image and compares the predictions of two parameter sets, with the
/// original image as the (fully decoded) context.
pub fn prediction_report(
    corpus: &Corpus,
    params_i: &Models,
    params_j: &Models,
    size: BlockSize,
    samples: usize,
    seed: u64,
) -> Result<Vec<PredictionRow>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let (pi, pj) = match (params_i.get(&size), params_j.get(&size)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::UnsupportedBlockSize(size)),
    };
    let (n, h, w) = (size.min_side(), size.h, size.w);
    let hosts: Vec<usize> = (0..corpus.len())
        .filter(|&i| {
            let p = &corpus.entries()[i].plane;
            p.width() >= n + 2 * w && p.height() >= n + 2 * h
        })
        .collect();
    if hosts.is_empty() {
        return Err(Error::InvalidConfig("no image is large enough for a full context".into()));
    }
    let mut rng = hash::rng(seed, &[TAG_REPORT, (size.h as u64) << 32 | size.w as u64]);
    let mut rows = Vec::with_capacity(samples);
    for _ in 0..samples {
        let entry = &corpus.entries()[hosts[rng.random_range(0..hosts.len())]];
        let plane = &entry.plane;
        let x = rng.random_range(n..=plane.width() - 2 * w);
        let y = rng.random_range(n..=plane.height() - 2 * h);
        let decoded = vec![true; plane.samples().len()];
        let block = plane.block(x, y, w, h)?;
        let pred_i = predict_block(pi, plane, &decoded, x, y)?;
        let pred_j = predict_block(pj, plane, &decoded, x, y)?;
        let refs = build_reference_samples(plane, &decoded, x, y, w, h)?;
        let (best, mse) = rank_classic_by_mse(&block, &refs)?[0];
        let psnr = |p: &[u8]| psnr_from_mse(crate::intra::block_mse(&block, p), 255);
        rows.push(PredictionRow {
            image: entry.id.clone(),
            x,
            y,
            size,
            psnr_i: psnr(&pred_i),
            psnr_j: psnr(&pred_j),
            psnr_classic: psnr_from_mse(mse, 255),
            best_classic_mode: best.index(),
            pred_classic: predict_classic(&refs, best, w, h)?,
            block,
            pred_i,
            pred_j,
        });
    }
    Ok(rows)
}

//! Reference samples and the 35 classic intra prediction modes (PLANAR, DC
//! and 33 angular directions), following the HEVC design without reference
//! smoothing or boundary filters.

use alloc::vec;
use alloc::vec::Vec;

use crate::frame::LumaPlane;
use crate::{Error, Result, BITDEPTH};

pub const PLANAR: u8 = 0;
pub const DC: u8 = 1;
pub const HORIZONTAL: u8 = 10;
pub const VERTICAL: u8 = 26;
pub const NUM_CLASSIC_MODES: u8 = 35;

/// Displacement per row/column in 1/32 pel for modes 2..=34.
const ANGLES: [i32; 33] = [
    32, 26, 21, 17, 13, 9, 5, 2, 0, -2, -5, -9, -13, -17, -21, -26, -32, -26, -21, -17, -13, -9,
    -5, -2, 0, 2, 5, 9, 13, 17, 21, 26, 32,
];

fn inverse_angle(angle: i32) -> i32 {
    match angle {
        -2 => -4096,
        -5 => -1638,
        -9 => -910,
        -13 => -630,
        -17 => -482,
        -21 => -390,
        -26 => -315,
        -32 => -256,
        _ => 0,
    }
}

/// A classic mode index in `0..=34`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassicMode(u8);

impl ClassicMode {
    pub fn new(index: u8) -> Result<Self> {
        if index < NUM_CLASSIC_MODES {
            Ok(ClassicMode(index))
        } else {
            Err(Error::InvalidMode(index))
        }
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = ClassicMode> {
        (0..NUM_CLASSIC_MODES).map(ClassicMode)
    }
}

/// The row above (corner first) and the column left of a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceSamples {
    pub w: usize,
    pub h: usize,
    /// `2w + 1` samples: the top-left corner, then `2w` samples above.
    pub above: Vec<u8>,
    /// `2h` samples, top to bottom.
    pub left: Vec<u8>,
    /// Availability before substitution, `above` flags then `left` flags.
    pub available_above: Vec<bool>,
    pub available_left: Vec<bool>,
}

impl ReferenceSamples {
    /// References with every sample set to `value`.
    pub fn constant(w: usize, h: usize, value: u8) -> Self {
        ReferenceSamples {
            w,
            h,
            above: vec![value; 2 * w + 1],
            left: vec![value; 2 * h],
            available_above: vec![true; 2 * w + 1],
            available_left: vec![true; 2 * h],
        }
    }

    pub fn corner(&self) -> u8 {
        self.above[0]
    }
}

/// Gathers reference samples for the `w x h` block at `(x, y)`.
///
/// A sample is available when it lies inside the plane and `decoded` is set
/// for it. Unavailable samples are substituted by scanning from the bottom of
/// the left column up through the corner to the right end of the above row,
/// each taking the last available value seen (the first available one for a
/// leading run). With nothing available every sample is `2^(b-1)`.
pub fn build_reference_samples(
    recon: &LumaPlane,
    decoded: &[bool],
    x: usize,
    y: usize,
    w: usize,
    h: usize,
) -> Result<ReferenceSamples> {
    recon.check_block(x, y, w, h)?;
    if decoded.len() != recon.samples().len() {
        return Err(Error::LengthMismatch {
            expected: recon.samples().len(),
            actual: decoded.len(),
        });
    }
    let width = recon.width() as isize;
    let height = recon.height() as isize;
    let fetch = |px: isize, py: isize| -> Option<u8> {
        if px < 0 || py < 0 || px >= width || py >= height {
            return None;
        }
        let idx = py as usize * recon.width() + px as usize;
        decoded[idx].then(|| recon.samples()[idx])
    };

    // Scan order: left column bottom-up, corner, above row left to right.
    let (xi, yi) = (x as isize, y as isize);
    let mut scan: Vec<Option<u8>> = Vec::with_capacity(2 * h + 2 * w + 1);
    for i in (0..2 * h as isize).rev() {
        scan.push(fetch(xi - 1, yi + i));
    }
    scan.push(fetch(xi - 1, yi - 1));
    for i in 0..2 * w as isize {
        scan.push(fetch(xi + i, yi - 1));
    }

    let availability: Vec<bool> = scan.iter().map(Option::is_some).collect();
    let mut last = scan
        .iter()
        .find_map(|s| *s)
        .unwrap_or(1 << (BITDEPTH - 1));
    let filled: Vec<u8> = scan
        .iter()
        .map(|s| {
            if let Some(v) = s {
                last = *v;
            }
            last
        })
        .collect();

    let left: Vec<u8> = filled[..2 * h].iter().rev().copied().collect();
    let available_left: Vec<bool> = availability[..2 * h].iter().rev().copied().collect();
    Ok(ReferenceSamples {
        w,
        h,
        above: filled[2 * h..].to_vec(),
        left,
        available_above: availability[2 * h..].to_vec(),
        available_left,
    })
}

/// Predicts a `w x h` block (row-major) with a classic mode.
///
/// PLANAR and DC accept any shape; angular modes need a square block.
pub fn predict_classic(refs: &ReferenceSamples, mode: ClassicMode, w: usize, h: usize) -> Result<Vec<u8>> {
    if refs.w != w || refs.h != h || refs.above.len() != 2 * w + 1 || refs.left.len() != 2 * h {
        return Err(Error::LengthMismatch {
            expected: 2 * w + 1 + 2 * h,
            actual: refs.above.len() + refs.left.len(),
        });
    }
    let mut out = vec![0u8; w * h];
    match mode.index() {
        PLANAR => predict_planar(refs, w, h, &mut out),
        DC => {
            let dc = dc_value(refs, w, h);
            out.fill(dc);
        }
        m => {
            if w != h {
                return Err(Error::UnsupportedShape { w, h });
            }
            predict_angular(refs, m, w, &mut out);
        }
    }
    Ok(out)
}

fn dc_value(refs: &ReferenceSamples, w: usize, h: usize) -> u8 {
    let sum: u32 = refs.above[1..=w].iter().map(|&v| u32::from(v)).sum::<u32>()
        + refs.left[..h].iter().map(|&v| u32::from(v)).sum::<u32>();
    let n = (w + h) as u32;
    ((sum + n / 2) / n) as u8
}

fn predict_planar(refs: &ReferenceSamples, w: usize, h: usize, out: &mut [u8]) {
    let top_right = i64::from(refs.above[1 + w]);
    let bottom_left = i64::from(refs.left[h]);
    let (wi, hi) = (w as i64, h as i64);
    // Square blocks reduce to the HEVC formula with a shift of log2(n) + 1.
    for py in 0..h {
        for px in 0..w {
            let (xi, yi) = (px as i64, py as i64);
            let horizontal = (wi - 1 - xi) * i64::from(refs.left[py]) + (xi + 1) * top_right;
            let vertical = (hi - 1 - yi) * i64::from(refs.above[1 + px]) + (yi + 1) * bottom_left;
            let num = horizontal * hi + vertical * wi + wi * hi;
            out[py * w + px] = (num / (2 * wi * hi)) as u8;
        }
    }
}

fn predict_angular(refs: &ReferenceSamples, mode: u8, n: usize, out: &mut [u8]) {
    let angle = ANGLES[(mode - 2) as usize];
    let vertical_family = mode >= 18;
    let ni = n as i32;

    // Main reference with index offset `n` so that negative indices fit.
    let mut main = vec![0i32; 3 * n + 1];
    let at = |i: i32| (i + ni) as usize;
    let (primary, secondary): (&dyn Fn(usize) -> u8, &dyn Fn(usize) -> u8) = if vertical_family {
        // primary(k) = p[k-1][-1], secondary(k) = p[-1][k-1]
        (
            &|k| refs.above[k],
            &|k| if k == 0 { refs.above[0] } else { refs.left[k - 1] },
        )
    } else {
        (
            &|k| if k == 0 { refs.above[0] } else { refs.left[k - 1] },
            &|k| refs.above[k],
        )
    };
    for k in 0..=ni {
        main[at(k)] = i32::from(primary(k as usize));
    }
    if angle < 0 {
        let last = (ni * angle) >> 5;
        if last < -1 {
            let inv = inverse_angle(angle);
            for k in last..=-1 {
                let idx = ((k * inv + 128) >> 8) as usize;
                main[at(k)] = i32::from(secondary(idx));
            }
        }
    } else {
        for k in ni + 1..=2 * ni {
            main[at(k)] = i32::from(primary(k as usize));
        }
    }

    for py in 0..ni {
        for px in 0..ni {
            // Along the main direction `pos` steps away from the reference,
            // `off` runs parallel to it.
            let (pos, off) = if vertical_family { (py, px) } else { (px, py) };
            let disp = (pos + 1) * angle;
            let idx = disp >> 5;
            let fact = disp & 31;
            let base = off + idx + 1;
            let v = if fact == 0 {
                main[at(base)]
            } else {
                ((32 - fact) * main[at(base)] + fact * main[at(base + 1)] + 16) >> 5
            };
            out[py as usize * n + px as usize] = v as u8;
        }
    }
}

/// Mean squared error between two equally sized blocks.
pub fn block_mse(a: &[u8], b: &[u8]) -> f64 {
    crate::frame::sse(a, b) as f64 / a.len() as f64
}

/// Every classic mode with the MSE of its prediction against `block`,
/// sorted by ascending MSE, ties by lower mode index.
pub fn rank_classic_by_mse(block: &[u8], refs: &ReferenceSamples) -> Result<Vec<(ClassicMode, f64)>> {
    let (w, h) = (refs.w, refs.h);
    if block.len() != w * h {
        return Err(Error::LengthMismatch {
            expected: w * h,
            actual: block.len(),
        });
    }
    let mut ranked = ClassicMode::all()
        .map(|mode| Ok((mode, block_mse(block, &predict_classic(refs, mode, w, h)?))))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

/// The third-lowest classic prediction MSE, `d_c` in the cleansing rule.
pub fn third_lowest_mse(ranked: &[(ClassicMode, f64)]) -> f64 {
    ranked[2].1
}

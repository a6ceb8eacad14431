use alloc::vec;
use alloc::vec::Vec;

use crate::frame::{BlockSize, LumaPlane};
use crate::{Error, Result};

/// Value written over context pixels that are not decoded yet.
pub const MASK_VALUE: f64 = 255.0;

/// Shape of the L-shaped context of a `w x h` block: `n_a` rows of
/// `n_l + 2w` pixels above, and `n_l` columns of `2h` pixels to the left,
/// with `n_a = n_l = min(h, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContextGeometry {
    pub w: usize,
    pub h: usize,
    pub n_a: usize,
    pub n_l: usize,
}

impl ContextGeometry {
    pub fn new(size: BlockSize) -> Self {
        let n = size.min_side();
        ContextGeometry {
            w: size.w,
            h: size.h,
            n_a: n,
            n_l: n,
        }
    }

    pub fn size(&self) -> BlockSize {
        BlockSize::new(self.h, self.w)
    }

    pub fn above_cols(&self) -> usize {
        self.n_l + 2 * self.w
    }

    pub fn above_len(&self) -> usize {
        self.n_a * self.above_cols()
    }

    pub fn left_rows(&self) -> usize {
        2 * self.h
    }

    pub fn len(&self) -> usize {
        self.above_len() + self.left_rows() * self.n_l
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Ratio of context pixels to block pixels.
    pub fn delta(&self) -> f64 {
        self.len() as f64 / (self.w * self.h) as f64
    }
}

/// Context pixels, the above rectangle row-major followed by the left
/// rectangle row-major, with per-pixel availability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawContext {
    pub geometry: ContextGeometry,
    pub values: Vec<u8>,
    pub available: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessedContext {
    pub x_c: Vec<f64>,
    pub mu: f64,
}

fn check_gate(plane: &LumaPlane, x: usize, y: usize, size: BlockSize) -> Result<()> {
    plane.check_block(x, y, size.w, size.h)?;
    let n = size.min_side();
    if x < n || y < n {
        return Err(Error::ContextOutsideFrame {
            x,
            y,
            w: size.w,
            h: size.h,
        });
    }
    Ok(())
}

/// Visits the context positions in flattening order as `(px, py)`.
fn for_each_position(g: &ContextGeometry, x: usize, y: usize, mut f: impl FnMut(usize, usize)) {
    let left = x - g.n_l;
    for py in y - g.n_a..y {
        for px in left..left + g.above_cols() {
            f(px, py);
        }
    }
    for py in y..y + g.left_rows() {
        for px in left..x {
            f(px, py);
        }
    }
}

/// Extracts the context of the block at `(x, y)` from a partially decoded
/// reconstruction. Pixels outside the plane or not yet decoded are
/// unavailable.
pub fn extract_context(
    recon: &LumaPlane,
    decoded: &[bool],
    x: usize,
    y: usize,
    size: BlockSize,
) -> Result<RawContext> {
    check_gate(recon, x, y, size)?;
    if decoded.len() != recon.samples().len() {
        return Err(Error::LengthMismatch {
            expected: recon.samples().len(),
            actual: decoded.len(),
        });
    }
    let g = ContextGeometry::new(size);
    let mut values = Vec::with_capacity(g.len());
    let mut available = Vec::with_capacity(g.len());
    for_each_position(&g, x, y, |px, py| {
        if px < recon.width() && py < recon.height() {
            let idx = py * recon.width() + px;
            values.push(recon.samples()[idx]);
            available.push(decoded[idx]);
        } else {
            values.push(0);
            available.push(false);
        }
    });
    Ok(RawContext {
        geometry: g,
        values,
        available,
    })
}

/// Availability pattern with the `n0` bottom rows of the left rectangle and
/// the `n1` rightmost columns of the above rectangle missing.
pub fn availability_from_counts(g: &ContextGeometry, n0: usize, n1: usize) -> Vec<bool> {
    let mut available = vec![true; g.len()];
    let cols = g.above_cols();
    for row in 0..g.n_a {
        for col in cols - n1.min(cols)..cols {
            available[row * cols + col] = false;
        }
    }
    let rows = g.left_rows();
    for row in rows - n0.min(rows)..rows {
        for col in 0..g.n_l {
            available[g.above_len() + row * g.n_l + col] = false;
        }
    }
    available
}

/// Extracts a context from a fully decoded reconstruction, re-creating the
/// availability the block saw during coding from its `(n0, n1)` counts.
pub fn extract_context_with_counts(
    recon: &LumaPlane,
    x: usize,
    y: usize,
    size: BlockSize,
    n0: usize,
    n1: usize,
) -> Result<RawContext> {
    check_gate(recon, x, y, size)?;
    let g = ContextGeometry::new(size);
    let mut available = availability_from_counts(&g, n0, n1);
    let mut values = Vec::with_capacity(g.len());
    let mut i = 0;
    for_each_position(&g, x, y, |px, py| {
        if px < recon.width() && py < recon.height() {
            values.push(recon.get(px, py));
        } else {
            values.push(0);
            available[i] = false;
        }
        i += 1;
    });
    Ok(RawContext {
        geometry: g,
        values,
        available,
    })
}

/// Counts the bottom rows of the left rectangle (`n0`) and the rightmost
/// columns of the above rectangle (`n1`) that hold unavailable pixels.
pub fn unavailable_counts(raw: &RawContext) -> (usize, usize) {
    let g = &raw.geometry;
    let cols = g.above_cols();
    let n1 = (0..cols)
        .rev()
        .take_while(|&col| (0..g.n_a).any(|row| !raw.available[row * cols + col]))
        .count();
    let left = &raw.available[g.above_len()..];
    let n0 = (0..g.left_rows())
        .rev()
        .take_while(|&row| left[row * g.n_l..(row + 1) * g.n_l].iter().any(|a| !a))
        .count();
    (n0, n1)
}

/// Masks unavailable pixels with 255 and centers the available ones on
/// their mean. Masked entries are not centered.
pub fn preprocess(raw: &RawContext) -> PreprocessedContext {
    let (sum, count) = raw
        .values
        .iter()
        .zip(&raw.available)
        .filter(|(_, &a)| a)
        .fold((0u64, 0usize), |(s, c), (&v, _)| (s + u64::from(v), c + 1));
    let mu = if count == 0 {
        128.0
    } else {
        sum as f64 / count as f64
    };
    let x_c = raw
        .values
        .iter()
        .zip(&raw.available)
        .map(|(&v, &a)| if a { f64::from(v) - mu } else { MASK_VALUE })
        .collect();
    PreprocessedContext { x_c, mu }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(width: usize, height: usize) -> LumaPlane {
        let samples = (0..width * height).map(|i| (i * 13 % 256) as u8).collect();
        LumaPlane::new(width, height, samples).unwrap()
    }

    #[test]
    fn geometry_lengths() {
        // h = 8, w = 4: above 4 x 12, left 16 x 4.
        let g = ContextGeometry::new(BlockSize::new(8, 4));
        assert_eq!((g.n_a, g.n_l), (4, 4));
        assert_eq!(g.above_len(), 48);
        assert_eq!(g.len(), 4 * 12 + 16 * 4);
        assert_eq!(ContextGeometry::new(BlockSize::square(4)).len(), 80);
        assert_eq!(ContextGeometry::new(BlockSize::square(8)).delta(), 5.0);
    }

    #[test]
    fn geometry_formulas_hold_for_all_sizes() {
        for h in [4usize, 8, 16, 32] {
            for w in [4usize, 8, 16, 32] {
                let g = ContextGeometry::new(BlockSize::new(h, w));
                let n = h.min(w);
                assert_eq!(g.len(), n * 2 * h + n * (n + 2 * w));
                let n = n as f64;
                let delta = n * (n / (h * w) as f64 + 2.0 / h as f64 + 2.0 / w as f64);
                assert!((g.delta() - delta).abs() < 1e-12);
                if h == w {
                    assert_eq!(g.delta(), 5.0);
                }
            }
        }
    }

    #[test]
    fn extraction_order_and_availability() {
        let p = plane(32, 32);
        let size = BlockSize::new(8, 4);
        let raw = extract_context(&p, &[true; 1024], 12, 8, size).unwrap();
        assert!(raw.available.iter().all(|&a| a));
        // First above row starts at (x - n_l, y - n_a).
        assert_eq!(raw.values[0], p.get(8, 4));
        assert_eq!(raw.values[11], p.get(19, 4));
        // Left rectangle starts at (x - n_l, y).
        assert_eq!(raw.values[48], p.get(8, 8));
        assert_eq!(raw.values[48 + 4 * 15 + 3], p.get(11, 23));
    }

    #[test]
    fn gate_violation_is_an_error() {
        let p = plane(32, 32);
        let err = extract_context(&p, &[true; 1024], 2, 8, BlockSize::square(4));
        assert!(matches!(err, Err(Error::ContextOutsideFrame { .. })));
    }

    #[test]
    fn counts_round_trip() {
        let p = plane(64, 64);
        let size = BlockSize::square(8);
        let g = ContextGeometry::new(size);
        for n0 in [0, 3, 8] {
            for n1 in [0, 5, 8] {
                let mut decoded = vec![true; 64 * 64];
                let target = availability_from_counts(&g, n0, n1);
                let mut i = 0;
                for_each_position(&g, 16, 16, |px, py| {
                    decoded[py * 64 + px] = target[i];
                    i += 1;
                });
                let live = extract_context(&p, &decoded, 16, 16, size).unwrap();
                assert_eq!(unavailable_counts(&live), (n0, n1));
                let replay = extract_context_with_counts(&p, 16, 16, size, n0, n1).unwrap();
                assert_eq!(replay.available, live.available);
                assert_eq!(preprocess(&replay), preprocess(&live));
            }
        }
    }

    #[test]
    fn outside_plane_is_unavailable() {
        let p = plane(16, 16);
        // Above-right and below-left run past the plane.
        let raw = extract_context(&p, &[true; 256], 12, 12, BlockSize::square(4)).unwrap();
        assert_eq!(unavailable_counts(&raw), (4, 4));
    }

    #[test]
    fn preprocess_examples() {
        let g = ContextGeometry::new(BlockSize::square(4));
        let raw = RawContext {
            geometry: g,
            values: vec![100; 80],
            available: vec![true; 80],
        };
        let pre = preprocess(&raw);
        assert_eq!(pre.mu, 100.0);
        assert!(pre.x_c.iter().all(|&v| v == 0.0));

        let available: Vec<bool> = (0..80).map(|i| i % 2 == 0).collect();
        let raw = RawContext {
            geometry: g,
            values: vec![50; 80],
            available: available.clone(),
        };
        let pre = preprocess(&raw);
        assert_eq!(pre.mu, 50.0);
        for (v, a) in pre.x_c.iter().zip(&available) {
            assert_eq!(*v, if *a { 0.0 } else { 255.0 });
        }

        let values: Vec<u8> = (0..80).map(|i| if i % 2 == 0 { 0 } else { 255 }).collect();
        let raw = RawContext {
            geometry: g,
            values,
            available: vec![true; 80],
        };
        let pre = preprocess(&raw);
        assert_eq!(pre.mu, 127.5);
        assert_eq!(pre.x_c[0], -127.5);
        assert_eq!(pre.x_c[1], 127.5);

        let raw = RawContext {
            geometry: g,
            values: vec![9; 80],
            available: vec![false; 80],
        };
        let pre = preprocess(&raw);
        assert_eq!(pre.mu, 128.0);
        assert!(pre.x_c.iter().all(|&v| v == 255.0));
    }
}

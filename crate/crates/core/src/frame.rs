//! Luminance planes, corpora and quality metrics.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// Block dimensions, ordered by `(h, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockSize {
    pub h: usize,
    pub w: usize,
}

impl BlockSize {
    pub const fn new(h: usize, w: usize) -> Self {
        BlockSize { h, w }
    }

    pub const fn square(n: usize) -> Self {
        BlockSize { h: n, w: n }
    }

    pub fn min_side(self) -> usize {
        self.h.min(self.w)
    }

    pub fn max_side(self) -> usize {
        self.h.max(self.w)
    }

    pub fn area(self) -> usize {
        self.h * self.w
    }
}

impl fmt::Display for BlockSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.w, self.h)
    }
}

/// The sizes served by neural predictors: 4x4 through 32x32.
pub fn default_sizes() -> Vec<BlockSize> {
    [4, 8, 16, 32].into_iter().map(BlockSize::square).collect()
}

/// An 8-bit grayscale raster in row-major order.
#[derive(Clone, PartialEq, Eq)]
pub struct LumaPlane {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl fmt::Debug for LumaPlane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LumaPlane")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl LumaPlane {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        let expected = width * height;
        if width == 0 || height == 0 || samples.len() != expected {
            return Err(Error::SampleCount {
                width,
                height,
                expected,
                actual: samples.len(),
            });
        }
        Ok(LumaPlane {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "empty plane");
        LumaPlane {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [u8] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.samples[y * self.width + x] = value;
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }

    /// Copies a `w x h` block out of the plane, row-major.
    pub fn block(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Vec<u8>> {
        self.check_block(x, y, w, h)?;
        let mut out = Vec::with_capacity(w * h);
        for row in y..y + h {
            out.extend_from_slice(&self.samples[row * self.width + x..row * self.width + x + w]);
        }
        Ok(out)
    }

    pub fn check_block(&self, x: usize, y: usize, w: usize, h: usize) -> Result<()> {
        if w == 0 || h == 0 || x + w > self.width || y + h > self.height {
            return Err(Error::BlockOutOfBounds {
                x,
                y,
                w,
                h,
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    /// Extends the plane to the next multiples of `multiple` by replicating
    /// the last column and row.
    pub fn pad_to_multiple(&self, multiple: usize) -> LumaPlane {
        let width = self.width.div_ceil(multiple) * multiple;
        let height = self.height.div_ceil(multiple) * multiple;
        if width == self.width && height == self.height {
            return self.clone();
        }
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            let src = self.row(y.min(self.height - 1));
            samples.extend_from_slice(src);
            let last = src[self.width - 1];
            samples.resize(samples.len() + (width - self.width), last);
        }
        LumaPlane {
            width,
            height,
            samples,
        }
    }

    /// The top-left `width x height` corner of the plane.
    pub fn crop(&self, width: usize, height: usize) -> Result<LumaPlane> {
        LumaPlane::new(width, height, self.block(0, 0, width, height)?)
    }
}

/// BT.601 full-range luma, rounded half away from zero.
pub fn rgb_to_luma(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    libm::round(y).clamp(0.0, 255.0) as u8
}

/// Sum of squared differences between two equally sized sample slices.
pub fn sse(a: &[u8], b: &[u8]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| {
            let d = i64::from(p) - i64::from(q);
            (d * d) as u64
        })
        .sum()
}

/// PSNR in dB from a mean squared error; `f64::INFINITY` when `mse == 0`.
pub fn psnr_from_mse(mse: f64, peak: u32) -> f64 {
    if mse == 0.0 {
        return f64::INFINITY;
    }
    let peak = f64::from(peak);
    10.0 * libm::log10(peak * peak / mse)
}

/// `10 log10(peak^2 / MSE)`, or `f64::INFINITY` for identical planes.
pub fn psnr(a: &LumaPlane, b: &LumaPlane, peak: u32) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::DimensionMismatch(a.width, a.height, b.width, b.height));
    }
    let mse = sse(&a.samples, &b.samples) as f64 / a.samples.len() as f64;
    Ok(psnr_from_mse(mse, peak))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub id: String,
    pub plane: LumaPlane,
}

/// Training images, sorted by identifier.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    entries: Vec<CorpusEntry>,
}

impl Corpus {
    pub fn new(mut entries: Vec<CorpusEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(pair) = entries.windows(2).find(|pair| pair[0].id == pair[1].id) {
            return Err(Error::DuplicateImageId(pair[0].id.clone()));
        }
        Ok(Corpus { entries })
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// A corpus holding only the entries with index in `range`.
    pub fn slice(&self, range: core::ops::Range<usize>) -> Corpus {
        Corpus {
            entries: self.entries[range].to_vec(),
        }
    }
}

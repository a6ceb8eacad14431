//! Causal decoding state shared by the encoder and the decoder.

use alloc::vec;
use alloc::vec::Vec;

use super::signal::mpm_list;
use super::MIN_LEAF;
use crate::frame::{BlockSize, LumaPlane};

const NO_MODE: u8 = u8::MAX;

pub(crate) struct FrameState {
    pub recon: LumaPlane,
    pub decoded: Vec<bool>,
    /// Mode per 4x4 unit.
    modes: Vec<u8>,
    units_w: usize,
}

pub(crate) struct Snapshot {
    x: usize,
    y: usize,
    n: usize,
    samples: Vec<u8>,
    decoded: Vec<bool>,
    modes: Vec<u8>,
}

impl FrameState {
    pub fn new(width: usize, height: usize) -> Self {
        FrameState {
            recon: LumaPlane::filled(width, height, 0),
            decoded: vec![false; width * height],
            modes: vec![NO_MODE; (width / MIN_LEAF) * (height / MIN_LEAF)],
            units_w: width / MIN_LEAF,
        }
    }

    fn mode_at(&self, px: isize, py: isize) -> Option<u8> {
        if px < 0 || py < 0 || px as usize >= self.recon.width() || py as usize >= self.recon.height() {
            return None;
        }
        let m = self.modes[py as usize / MIN_LEAF * self.units_w + px as usize / MIN_LEAF];
        (m != NO_MODE).then_some(m)
    }

    pub fn mpm(&self, x: usize, y: usize) -> [u8; 3] {
        let (x, y) = (x as isize, y as isize);
        mpm_list(self.mode_at(x - 1, y), self.mode_at(x, y - 1))
    }

    fn available(&self, px: isize, py: isize) -> bool {
        px >= 0
            && py >= 0
            && (px as usize) < self.recon.width()
            && (py as usize) < self.recon.height()
            && self.decoded[py as usize * self.recon.width() + px as usize]
    }

    /// `(n0, n1)`: the bottom rows of the lower half of the left context
    /// and the right columns of the above-right context that are unavailable.
    /// Matches the counts of the extracted context whenever the context lies
    /// inside the frame.
    pub fn unavailable_counts(&self, x: usize, y: usize, size: BlockSize) -> (usize, usize) {
        let (x, y) = (x as isize, y as isize);
        let (h, w) = (size.h as isize, size.w as isize);
        let n0 = (y + h..y + 2 * h)
            .rev()
            .take_while(|&py| !self.available(x - 1, py))
            .count();
        let n1 = (x + w..x + 2 * w)
            .rev()
            .take_while(|&px| !self.available(px, y - 1))
            .count();
        (n0, n1)
    }

    pub fn commit(&mut self, x: usize, y: usize, n: usize, block: &[u8], mode: u8) {
        let width = self.recon.width();
        for r in 0..n {
            let row = (y + r) * width + x;
            self.recon.samples_mut()[row..row + n].copy_from_slice(&block[r * n..(r + 1) * n]);
            self.decoded[row..row + n].fill(true);
        }
        for uy in y / MIN_LEAF..(y + n) / MIN_LEAF {
            let row = uy * self.units_w;
            self.modes[row + x / MIN_LEAF..row + (x + n) / MIN_LEAF].fill(mode);
        }
    }

    pub fn snapshot(&self, x: usize, y: usize, n: usize) -> Snapshot {
        let width = self.recon.width();
        let mut samples = Vec::with_capacity(n * n);
        let mut decoded = Vec::with_capacity(n * n);
        for r in 0..n {
            let row = (y + r) * width + x;
            samples.extend_from_slice(&self.recon.samples()[row..row + n]);
            decoded.extend_from_slice(&self.decoded[row..row + n]);
        }
        let mut modes = Vec::new();
        for uy in y / MIN_LEAF..(y + n) / MIN_LEAF {
            let row = uy * self.units_w;
            modes.extend_from_slice(&self.modes[row + x / MIN_LEAF..row + (x + n) / MIN_LEAF]);
        }
        Snapshot {
            x,
            y,
            n,
            samples,
            decoded,
            modes,
        }
    }

    pub fn restore(&mut self, s: &Snapshot) {
        let width = self.recon.width();
        let n = s.n;
        for r in 0..n {
            let row = (s.y + r) * width + s.x;
            self.recon.samples_mut()[row..row + n].copy_from_slice(&s.samples[r * n..(r + 1) * n]);
            self.decoded[row..row + n].copy_from_slice(&s.decoded[r * n..(r + 1) * n]);
        }
        let units = n / MIN_LEAF;
        for (i, uy) in (s.y / MIN_LEAF..(s.y + n) / MIN_LEAF).enumerate() {
            let row = uy * self.units_w;
            self.modes[row + s.x / MIN_LEAF..row + (s.x + n) / MIN_LEAF]
                .copy_from_slice(&s.modes[i * units..(i + 1) * units]);
        }
    }
}

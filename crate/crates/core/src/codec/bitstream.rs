//! MSB-first bit packing and order-0 exp-Golomb codes.

use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bits written so far.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn put_bit(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// The low `count` bits of `value`, most significant first.
    pub fn put_bits(&mut self, value: u32, count: u32) {
        for i in (0..count).rev() {
            self.put_bit(value >> i & 1 == 1);
        }
    }

    pub fn put_ue(&mut self, v: u32) {
        let x = u64::from(v) + 1;
        let bits = 64 - x.leading_zeros();
        for _ in 0..bits - 1 {
            self.put_bit(false);
        }
        for i in (0..bits).rev() {
            self.put_bit(x >> i & 1 == 1);
        }
    }

    /// Signed exp-Golomb; `|v|` must stay below `2^30`.
    pub fn put_se(&mut self, v: i32) {
        self.put_ue(se_to_ue(v));
    }

    pub fn append(&mut self, other: &BitWriter) {
        if self.len % 8 == 0 {
            self.bytes.extend_from_slice(&other.bytes);
            self.len += other.len;
            return;
        }
        for i in 0..other.len {
            self.put_bit(other.bytes[i / 8] & (0x80 >> (i % 8)) != 0);
        }
    }

    /// The packed bytes, zero-padded to a byte boundary.
    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }
}

fn se_to_ue(v: i32) -> u32 {
    if v > 0 {
        (2 * i64::from(v) - 1) as u32
    } else {
        (-2 * i64::from(v)) as u32
    }
}

/// Length of `ue(v)`: `2 floor(log2(v + 1)) + 1`.
pub fn ue_len(v: u32) -> usize {
    let x = u64::from(v) + 1;
    2 * (63 - x.leading_zeros() as usize) + 1
}

pub fn se_len(v: i32) -> usize {
    ue_len(se_to_ue(v))
}

pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() * 8 - self.pos
    }

    pub fn bit(&mut self) -> Result<bool> {
        let byte = self.bytes.get(self.pos / 8).ok_or(Error::Truncated)?;
        let bit = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    pub fn bits(&mut self, count: u32) -> Result<u32> {
        let mut v = 0;
        for _ in 0..count {
            v = v << 1 | u32::from(self.bit()?);
        }
        Ok(v)
    }

    pub fn ue(&mut self) -> Result<u32> {
        let mut zeros = 0;
        while !self.bit()? {
            zeros += 1;
            if zeros > 31 {
                return Err(Error::Malformed("exp-Golomb prefix too long"));
            }
        }
        let suffix = self.bits(zeros)?;
        let x = (1u64 << zeros) + u64::from(suffix) - 1;
        u32::try_from(x).map_err(|_| Error::Malformed("exp-Golomb value overflow"))
    }

    pub fn se(&mut self) -> Result<i32> {
        let k = i64::from(self.ue()?);
        let v = if k % 2 == 1 { (k + 1) / 2 } else { -k / 2 };
        i32::try_from(v).map_err(|_| Error::Malformed("signed exp-Golomb overflow"))
    }
}

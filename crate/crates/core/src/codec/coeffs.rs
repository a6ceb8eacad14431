//! Level syntax: `ue(count)` where `count` is one past the last nonzero
//! level in zigzag order, then `se(level)` for each of the first `count`.

use alloc::vec;
use alloc::vec::Vec;

use super::bitstream::{se_len, ue_len, BitReader, BitWriter};
use crate::{Error, Result};

fn coded_count(levels: &[i32], scan: &[usize]) -> usize {
    scan.iter().rposition(|&i| levels[i] != 0).map_or(0, |p| p + 1)
}

pub fn levels_len(levels: &[i32], scan: &[usize]) -> usize {
    let count = coded_count(levels, scan);
    ue_len(count as u32) + scan[..count].iter().map(|&i| se_len(levels[i])).sum::<usize>()
}

pub fn write_levels(out: &mut BitWriter, levels: &[i32], scan: &[usize]) {
    let count = coded_count(levels, scan);
    out.put_ue(count as u32);
    for &i in &scan[..count] {
        out.put_se(levels[i]);
    }
}

pub fn read_levels(input: &mut BitReader<'_>, scan: &[usize]) -> Result<Vec<i32>> {
    let count = input.ue()? as usize;
    if count > scan.len() {
        return Err(Error::Malformed("coefficient count exceeds block size"));
    }
    let mut levels = vec![0; scan.len()];
    for &i in &scan[..count] {
        levels[i] = input.se()?;
    }
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::transform::zigzag;

    #[test]
    fn all_zero_block_costs_one_bit() {
        let scan = zigzag(4);
        assert_eq!(levels_len(&[0; 16], &scan), 1);
    }

    #[test]
    fn length_matches_written_bits_and_round_trips() {
        let scan = zigzag(4);
        let mut levels = [0i32; 16];
        levels[0] = 5;
        levels[4] = -2;
        let mut w = BitWriter::new();
        write_levels(&mut w, &levels, &scan);
        // count 3 -> ue(3) 5 bits; se(5)=ue(9) 7, se(0) 1, se(-2)=ue(4) 5.
        assert_eq!(w.len(), 18);
        assert_eq!(levels_len(&levels, &scan), 18);
        let bytes = w.into_bytes();
        assert_eq!(read_levels(&mut BitReader::new(&bytes), &scan).unwrap(), levels.to_vec());
    }
}

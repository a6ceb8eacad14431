//! Intra mode signalling: the NN gate, the most-probable-mode list and the
//! mode syntax.

use crate::codec::bitstream::{BitReader, BitWriter};
use crate::frame::BlockSize;
use crate::intra::{DC, NUM_CLASSIC_MODES, PLANAR, VERTICAL};
use crate::{Error, Result, NN_MODE};

/// Whether the NN mode is signalled for a block: its size is in `sizes` and
/// its whole context lies inside the frame.
pub fn signalling_gate(x: usize, y: usize, size: BlockSize, sizes: &[BlockSize]) -> bool {
    let n = size.min_side();
    sizes.contains(&size) && x >= n && y >= n
}

/// HEVC-style MPM list from the left and above neighbor modes. `None`
/// (unavailable) and the NN mode both count as DC.
pub fn mpm_list(left: Option<u8>, above: Option<u8>) -> [u8; 3] {
    let as_classic = |m: Option<u8>| match m {
        Some(m) if m < NUM_CLASSIC_MODES => m,
        _ => DC,
    };
    let (a, b) = (as_classic(left), as_classic(above));
    if a == b {
        if a < 2 {
            [PLANAR, DC, VERTICAL]
        } else {
            [a, 2 + (a + 29) % 32, 2 + (a - 2 + 1) % 32]
        }
    } else {
        let third = if a != PLANAR && b != PLANAR {
            PLANAR
        } else if a != DC && b != DC {
            DC
        } else {
            VERTICAL
        };
        [a, b, third]
    }
}

fn check_mpm(mpm: &[u8; 3]) -> Result<()> {
    if mpm.iter().any(|&m| m >= NUM_CLASSIC_MODES) || mpm[0] == mpm[1] || mpm[0] == mpm[2] || mpm[1] == mpm[2] {
        return Err(Error::Malformed("MPM list must hold three distinct classic modes"));
    }
    Ok(())
}

/// Bits `encode_mode` writes for `s`.
pub fn mode_bits(s: u8, gate_open: bool, mpm: &[u8; 3]) -> Result<usize> {
    let flag = usize::from(gate_open);
    if s == NN_MODE {
        return if gate_open { Ok(1) } else { Err(Error::UnrepresentableMode(s)) };
    }
    if s >= NUM_CLASSIC_MODES {
        return Err(Error::UnrepresentableMode(s));
    }
    Ok(flag
        + match mpm.iter().position(|&m| m == s) {
            Some(0) => 2,
            Some(_) => 3,
            None => 6,
        })
}

/// itnnFlag first when the gate is open, then the MPM flag (`0` for an MPM)
/// and either the MPM index (`0`, `10`, `11`) or 5 bits indexing the 32
/// remaining modes in ascending order.
pub fn encode_mode(out: &mut BitWriter, s: u8, gate_open: bool, mpm: &[u8; 3]) -> Result<()> {
    check_mpm(mpm)?;
    mode_bits(s, gate_open, mpm)?;
    if gate_open {
        out.put_bit(s == NN_MODE);
        if s == NN_MODE {
            return Ok(());
        }
    }
    match mpm.iter().position(|&m| m == s) {
        Some(i) => {
            out.put_bit(false);
            match i {
                0 => out.put_bit(false),
                _ => out.put_bits(if i == 1 { 0b10 } else { 0b11 }, 2),
            }
        }
        None => {
            out.put_bit(true);
            let below = mpm.iter().filter(|&&m| m < s).count() as u8;
            out.put_bits(u32::from(s - below), 5);
        }
    }
    Ok(())
}

pub fn decode_mode(input: &mut BitReader<'_>, gate_open: bool, mpm: &[u8; 3]) -> Result<u8> {
    if gate_open && input.bit()? {
        return Ok(NN_MODE);
    }
    if !input.bit()? {
        let i = if !input.bit()? { 0 } else if !input.bit()? { 1 } else { 2 };
        return Ok(mpm[i]);
    }
    let mut sorted = *mpm;
    sorted.sort_unstable();
    let mut s = input.bits(5)? as u8;
    for m in sorted {
        if s >= m {
            s += 1;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate_examples() {
        let t = [BlockSize::square(4), BlockSize::square(8)];
        assert!(!signalling_gate(0, 0, BlockSize::square(4), &t));
        assert!(signalling_gate(4, 4, BlockSize::square(4), &t));
        assert!(!signalling_gate(4, 8, BlockSize::square(8), &t));
        assert!(!signalling_gate(64, 64, BlockSize::square(16), &t));
    }

    #[test]
    fn mode_lengths() {
        let mpm = [0, 1, 26];
        let mut w = BitWriter::new();
        encode_mode(&mut w, NN_MODE, true, &mpm).unwrap();
        assert_eq!(w.len(), 1);

        let mut w = BitWriter::new();
        encode_mode(&mut w, 0, false, &mpm).unwrap();
        assert_eq!((w.len(), w.bytes()[0]), (2, 0));

        let mut w = BitWriter::new();
        encode_mode(&mut w, 5, true, &mpm).unwrap();
        assert_eq!(w.len(), 7);

        assert_eq!(
            encode_mode(&mut BitWriter::new(), NN_MODE, false, &mpm),
            Err(Error::UnrepresentableMode(NN_MODE))
        );
    }

    #[test]
    fn mpm_derivation() {
        assert_eq!(mpm_list(None, None), [0, 1, 26]);
        assert_eq!(mpm_list(Some(NN_MODE), Some(1)), [0, 1, 26]);
        assert_eq!(mpm_list(Some(10), Some(10)), [10, 9, 11]);
        assert_eq!(mpm_list(Some(2), Some(2)), [2, 33, 3]);
        assert_eq!(mpm_list(Some(34), Some(34)), [34, 33, 3]);
        assert_eq!(mpm_list(Some(10), Some(26)), [10, 26, 0]);
        assert_eq!(mpm_list(Some(0), Some(26)), [0, 26, 1]);
        assert_eq!(mpm_list(Some(0), Some(1)), [0, 1, 26]);
    }

    #[test]
    fn every_mode_round_trips_with_its_length() {
        let lists = [[0, 1, 26], [10, 9, 11], [2, 33, 3], [34, 0, 1]];
        for mpm in lists {
            for gate in [false, true] {
                for s in 0..=NN_MODE {
                    if s == NN_MODE && !gate {
                        continue;
                    }
                    let mut w = BitWriter::new();
                    encode_mode(&mut w, s, gate, &mpm).unwrap();
                    assert_eq!(w.len(), mode_bits(s, gate, &mpm).unwrap());
                    let bytes = w.into_bytes();
                    let mut r = BitReader::new(&bytes);
                    assert_eq!(decode_mode(&mut r, gate, &mpm).unwrap(), s);
                }
            }
        }
    }
}

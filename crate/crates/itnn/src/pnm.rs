//! Binary PGM (P5) and PPM (P6) with maxval 255.

use std::fs;
use std::path::Path;

use itnn_core::frame::rgb_to_luma;
use itnn_core::LumaPlane;

use crate::error::{Error, PnmError, Result};

struct Header {
    width: usize,
    height: usize,
    offset: usize,
}

fn parse_header(bytes: &[u8], magic: &'static str) -> Result<Header, PnmError> {
    if bytes.len() < 2 || &bytes[..2] != magic.as_bytes() {
        return Err(PnmError::WrongMagic { expected: magic });
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        // Whitespace and comments before each field.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(PnmError::MalformedHeader("header ends early")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(PnmError::MalformedHeader("expected a decimal number"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(PnmError::MalformedHeader("number out of range"))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(PnmError::MalformedHeader("missing separator after maxval"));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(PnmError::MalformedHeader("zero dimension"));
    }
    if maxval != 255 {
        return Err(PnmError::UnsupportedMaxval(maxval));
    }
    Ok(Header {
        width: width as usize,
        height: height as usize,
        offset: pos + 1,
    })
}

fn raster<'a>(bytes: &'a [u8], h: &Header, channels: usize) -> Result<&'a [u8], PnmError> {
    let expected = h
        .width
        .checked_mul(h.height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or(PnmError::MalformedHeader("dimensions overflow"))?;
    let actual = bytes.len() - h.offset;
    if actual < expected {
        return Err(PnmError::Truncated { expected, actual });
    }
    Ok(&bytes[h.offset..h.offset + expected])
}

pub fn parse_pgm(bytes: &[u8]) -> Result<LumaPlane, PnmError> {
    let h = parse_header(bytes, "P5")?;
    let data = raster(bytes, &h, 1)?;
    Ok(LumaPlane::new(h.width, h.height, data.to_vec()).expect("sample count checked"))
}

/// Reads a P6 file and converts it to luma.
pub fn parse_ppm_as_luma(bytes: &[u8]) -> Result<LumaPlane, PnmError> {
    let h = parse_header(bytes, "P6")?;
    let data = raster(bytes, &h, 3)?;
    let samples = data.chunks_exact(3).map(|p| rgb_to_luma(p[0], p[1], p[2])).collect();
    Ok(LumaPlane::new(h.width, h.height, samples).expect("sample count checked"))
}

pub fn encode_pgm(plane: &LumaPlane) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", plane.width(), plane.height()).into_bytes();
    out.extend_from_slice(plane.samples());
    out
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(Error::io(path))
}

pub fn load_pgm(path: &Path) -> Result<LumaPlane> {
    parse_pgm(&read(path)?).map_err(|source| Error::Pnm {
        path: path.into(),
        source,
    })
}

/// Loads a P5 file directly or a P6 file through luma conversion.
pub fn load_image(path: &Path) -> Result<LumaPlane> {
    let bytes = read(path)?;
    let parsed = if bytes.starts_with(b"P6") {
        parse_ppm_as_luma(&bytes)
    } else {
        parse_pgm(&bytes)
    };
    parsed.map_err(|source| Error::Pnm {
        path: path.into(),
        source,
    })
}

pub fn save_pgm(path: &Path, plane: &LumaPlane) -> Result<()> {
    fs::write(path, encode_pgm(plane)).map_err(Error::io(path))
}

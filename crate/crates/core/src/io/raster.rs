//! Binary scalar raster for signed, high-precision grids (gamma, embedding,
//! depth, height).
//!
//! Layout, little-endian:
//!
//! ```text
//! 8 bytes   magic: "PPXRAS32" (f32 values) or "PPXRAS64" (f64 values)
//! u32       width
//! u32       height
//! w*h       values, row-major
//! ceil(w*h/8) bytes  validity mask, pixel i at bit (i % 8) of byte i / 8
//! ```
//!
//! Invalid pixels store 0.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::ScalarGrid;

use super::{read_bytes, write_atomic};

pub const MAGIC_F32: &[u8; 8] = b"PPXRAS32";
pub const MAGIC_F64: &[u8; 8] = b"PPXRAS64";
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RasterPrecision {
    #[default]
    F32,
    F64,
}

impl RasterPrecision {
    fn width(self) -> usize {
        match self {
            RasterPrecision::F32 => 4,
            RasterPrecision::F64 => 8,
        }
    }
}

pub fn encode_raster(grid: &ScalarGrid, precision: RasterPrecision) -> Result<Vec<u8>> {
    let (w, h) = (grid.width(), grid.height());
    let (Ok(wu), Ok(hu)) = (u32::try_from(w), u32::try_from(h)) else {
        return Err(Error::InvalidParameter(format!("{w}x{h} raster too large")));
    };
    let n = w * h;
    let mut bytes = Vec::with_capacity(HEADER_LEN + n * precision.width() + n.div_ceil(8));
    bytes.extend_from_slice(match precision {
        RasterPrecision::F32 => MAGIC_F32,
        RasterPrecision::F64 => MAGIC_F64,
    });
    bytes.extend_from_slice(&wu.to_le_bytes());
    bytes.extend_from_slice(&hu.to_le_bytes());
    for (&value, &ok) in grid.values().iter().zip(grid.valid()) {
        let value = if ok { value } else { 0.0 };
        match precision {
            RasterPrecision::F32 => {
                let narrow = value as f32;
                if ok && !narrow.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "value {value} overflows a 32-bit raster"
                    )));
                }
                bytes.extend_from_slice(&narrow.to_le_bytes());
            }
            RasterPrecision::F64 => bytes.extend_from_slice(&value.to_le_bytes()),
        }
    }
    let mut mask = vec![0u8; n.div_ceil(8)];
    for (i, _) in grid.valid().iter().enumerate().filter(|(_, &ok)| ok) {
        mask[i / 8] |= 1 << (i % 8);
    }
    bytes.extend_from_slice(&mask);
    Ok(bytes)
}

pub fn decode_raster(path: &Path, bytes: &[u8]) -> Result<ScalarGrid> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::SizeMismatch {
            path: path.into(),
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let precision = match &bytes[..8] {
        m if m == MAGIC_F32 => RasterPrecision::F32,
        m if m == MAGIC_F64 => RasterPrecision::F64,
        other => {
            return Err(Error::format(
                path,
                format!("bad raster magic {:?}", String::from_utf8_lossy(other)),
            ))
        }
    };
    let w = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let h = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let n = (w as u64) * (h as u64);
    let expected = HEADER_LEN as u64 + n * precision.width() as u64 + n.div_ceil(8);
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            path: path.into(),
            expected,
            found: bytes.len() as u64,
        });
    }
    let n = n as usize;
    let mask_start = HEADER_LEN + n * precision.width();
    let mut values = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for i in 0..n {
        let offset = HEADER_LEN + i * precision.width();
        let value = match precision {
            RasterPrecision::F32 => {
                f32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes")) as f64
            }
            RasterPrecision::F64 => {
                f64::from_le_bytes(bytes[offset..offset + 8].try_into().expect("8 bytes"))
            }
        };
        let ok = bytes[mask_start + i / 8] & (1 << (i % 8)) != 0;
        if ok && !value.is_finite() {
            return Err(Error::format(
                path,
                format!("non-finite value at pixel {i}"),
            ));
        }
        values.push(value);
        valid.push(ok);
    }
    ScalarGrid::from_parts(w, h, values, valid)
}

pub fn write_raster(
    path: impl AsRef<Path>,
    grid: &ScalarGrid,
    precision: RasterPrecision,
) -> Result<()> {
    write_atomic(path.as_ref(), &encode_raster(grid, precision)?)
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<ScalarGrid> {
    let path = path.as_ref();
    decode_raster(path, &read_bytes(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_round_trip() {
        let grid = ScalarGrid::from_parts(
            3,
            3,
            (0..9).map(|i| i as f64 * -0.25).collect(),
            (0..9).map(|i| i != 4).collect(),
        )
        .unwrap();
        let bytes = encode_raster(&grid, RasterPrecision::F32).unwrap();
        assert_eq!(bytes.len(), 16 + 36 + 2);
        assert_eq!(&bytes[..8], MAGIC_F32);
        assert_eq!(bytes[bytes.len() - 2], 0b1110_1111);
        assert_eq!(bytes[bytes.len() - 1], 0b1);
        assert_eq!(decode_raster(Path::new("g"), &bytes).unwrap(), grid);

        let precise = ScalarGrid::from_values(2, 1, vec![0.1, -1.0 / 3.0]).unwrap();
        let bytes = encode_raster(&precise, RasterPrecision::F64).unwrap();
        assert_eq!(decode_raster(Path::new("g"), &bytes).unwrap(), precise);
    }

    #[test]
    fn malformed_inputs() {
        let grid = ScalarGrid::from_values(2, 2, vec![1.0; 4]).unwrap();
        let bytes = encode_raster(&grid, RasterPrecision::F32).unwrap();
        let p = Path::new("g");
        assert!(matches!(
            decode_raster(p, &bytes[..bytes.len() - 1]),
            Err(Error::SizeMismatch { .. })
        ));
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(matches!(
            decode_raster(p, &wrong),
            Err(Error::Format { .. })
        ));
        let mut nan = bytes.clone();
        nan[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_raster(p, &nan), Err(Error::Format { .. })));
    }
}

//! Middlebury `.flo`: the float tag 202021.25 (`PIEH`), width and height as
//! 32-bit integers, then row-major interleaved 32-bit float `(u, v)` pairs,
//! all little-endian. Invalid pixels are written as 1e10 and any component
//! above 1e9 in magnitude reads back as invalid.

use std::path::Path;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::grid::FlowField;

use super::{read_bytes, write_atomic};

pub const FLO_TAG: f32 = 202021.25;
const UNKNOWN_FLOW: f32 = 1e10;
const UNKNOWN_THRESHOLD: f32 = 1e9;
const HEADER_LEN: usize = 12;

pub fn encode_flo(flow: &FlowField) -> Result<Vec<u8>> {
    let (w, h) = (flow.width(), flow.height());
    let (Ok(wi), Ok(hi)) = (i32::try_from(w), i32::try_from(h)) else {
        return Err(Error::InvalidParameter(format!(
            "{w}x{h} field too large for .flo"
        )));
    };
    let mut bytes = Vec::with_capacity(HEADER_LEN + 8 * w * h);
    bytes.extend_from_slice(&FLO_TAG.to_le_bytes());
    bytes.extend_from_slice(&wi.to_le_bytes());
    bytes.extend_from_slice(&hi.to_le_bytes());
    for (vec, &ok) in flow.vectors().iter().zip(flow.valid()) {
        let (u, v) = if ok {
            (vec.x as f32, vec.y as f32)
        } else {
            (UNKNOWN_FLOW, UNKNOWN_FLOW)
        };
        bytes.extend_from_slice(&u.to_le_bytes());
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    Ok(bytes)
}

pub fn decode_flo(path: &Path, bytes: &[u8]) -> Result<FlowField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::SizeMismatch {
            path: path.into(),
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let word = |i: usize| -> [u8; 4] { bytes[i..i + 4].try_into().expect("4-byte slice") };
    let tag = f32::from_le_bytes(word(0));
    if tag != FLO_TAG {
        return Err(Error::format(
            path,
            format!("bad .flo tag {tag}, expected {FLO_TAG}"),
        ));
    }
    let (w, h) = (i32::from_le_bytes(word(4)), i32::from_le_bytes(word(8)));
    if w < 0 || h < 0 {
        return Err(Error::format(path, format!("negative dimensions {w}x{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let expected = (HEADER_LEN as u64) + 8 * (w as u64) * (h as u64);
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            path: path.into(),
            expected,
            found: bytes.len() as u64,
        });
    }
    let mut flow = FlowField::empty(w, h);
    for i in 0..w * h {
        let offset = HEADER_LEN + 8 * i;
        let u = f32::from_le_bytes(word(offset));
        let v = f32::from_le_bytes(word(offset + 4));
        let known = u.abs() <= UNKNOWN_THRESHOLD && v.abs() <= UNKNOWN_THRESHOLD;
        if known {
            flow.set(i % w, i / w, Vector2::new(u as f64, v as f64));
        }
    }
    Ok(flow)
}

pub fn write_flo(path: impl AsRef<Path>, flow: &FlowField) -> Result<()> {
    write_atomic(path.as_ref(), &encode_flo(flow)?)
}

pub fn read_flo(path: impl AsRef<Path>) -> Result<FlowField> {
    let path = path.as_ref();
    decode_flo(path, &read_bytes(path)?)
}

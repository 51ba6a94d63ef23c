//! KITTI-style depth PNGs: 16-bit single channel, meters = raw / 256, raw 0
//! marks a pixel without depth.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageFormat, ImageReader, Luma};

use crate::error::{Error, Result};
use crate::grid::ScalarGrid;

use super::{read_bytes, write_atomic};

pub const DEPTH_SCALE: f64 = 256.0;

pub fn decode_depth_png16(path: &Path, bytes: &[u8]) -> Result<ScalarGrid> {
    let reader = ImageReader::with_format(Cursor::new(bytes), ImageFormat::Png);
    let image = reader
        .decode()
        .map_err(|e| Error::format(path, format!("cannot decode PNG: {e}")))?;
    let DynamicImage::ImageLuma16(buffer) = image else {
        return Err(Error::BitDepth {
            path: path.into(),
            found: format!("{:?}", image.color()),
        });
    };
    let (w, h) = (buffer.width() as usize, buffer.height() as usize);
    Ok(ScalarGrid::from_fn(w, h, |u, v| {
        let raw = buffer.get_pixel(u as u32, v as u32).0[0];
        (raw != 0).then(|| raw as f64 / DEPTH_SCALE)
    }))
}

pub fn read_depth_png16(path: impl AsRef<Path>) -> Result<ScalarGrid> {
    let path = path.as_ref();
    decode_depth_png16(path, &read_bytes(path)?)
}

/// Rounds each valid depth to the nearest 1/256 m. Depths that would round
/// to 0 or beyond 65535 raw are rejected.
pub fn encode_depth_png16(depth: &ScalarGrid) -> Result<Vec<u8>> {
    let (w, h) = (depth.width() as u32, depth.height() as u32);
    let mut buffer: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::new(w, h);
    for (u, v, z) in depth.iter_valid() {
        let raw = (z * DEPTH_SCALE).round();
        if !(1.0..=u16::MAX as f64).contains(&raw) {
            return Err(Error::InvalidParameter(format!(
                "depth {z} m at ({u}, {v}) is not representable in a 16-bit PNG"
            )));
        }
        buffer.put_pixel(u as u32, v as u32, Luma([raw as u16]));
    }
    let mut bytes = Vec::new();
    buffer
        .write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)
        .map_err(|e| Error::InvalidParameter(format!("PNG encoding failed: {e}")))?;
    Ok(bytes)
}

pub fn write_depth_png16(path: impl AsRef<Path>, depth: &ScalarGrid) -> Result<()> {
    write_atomic(path.as_ref(), &encode_depth_png16(depth)?)
}

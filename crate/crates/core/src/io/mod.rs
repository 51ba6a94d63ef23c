//! File formats.
//!
//! | Data | Format |
//! |------|--------|
//! | depth | 16-bit grayscale PNG, meters = raw / 256, raw 0 = invalid |
//! | residual flow | Middlebury `.flo` |
//! | gamma, embedding, depth, height | binary raster (see [`raster`]) |
//! | poses and motions | KITTI odometry text, 12 floats per line |
//! | planes, intrinsics, scenes, configuration | TOML |
//!
//! Every writer goes through a temporary file in the destination directory
//! followed by a rename, so readers never observe a partial file.

pub mod flo;
pub mod png16;
pub mod pose;
pub mod raster;
pub mod text;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub use flo::{decode_flo, encode_flo, read_flo, write_flo};
pub use png16::{decode_depth_png16, encode_depth_png16, read_depth_png16, write_depth_png16};
pub use pose::{
    format_pose_line, parse_pose_line, read_pose_kitti, read_poses_kitti, relative_motion,
    write_poses_kitti, PoseLineError,
};
pub use raster::{decode_raster, encode_raster, read_raster, write_raster, RasterPrecision};
pub use text::{
    read_config, read_intrinsics, read_plane, read_scene_file, write_intrinsics, write_plane,
    SceneFile,
};

fn temp_path(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp{}", std::process::id()))
}

/// Writes `bytes` to `path` atomically.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = temp_path(path);
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(source) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, source));
    }
    Ok(())
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

//! File loading shared by the commands. Depth-like grids are read from
//! 16-bit PNGs when the extension is `.png` and from binary rasters
//! otherwise.

use std::path::Path;

use parallax_core::io::{
    read_depth_png16, read_pose_kitti, read_poses_kitti, read_raster, relative_motion,
    write_depth_png16, write_raster, RasterPrecision,
};
use parallax_core::{
    backproject_depth, CameraIntrinsics, Error, PointCloud, Result, RigidMotion, ScalarGrid,
};

pub fn is_png(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

pub fn read_grid(path: &Path) -> Result<ScalarGrid> {
    if is_png(path) {
        read_depth_png16(path)
    } else {
        read_raster(path)
    }
}

pub fn write_grid(path: &Path, grid: &ScalarGrid, precision: RasterPrecision) -> Result<()> {
    if is_png(path) {
        write_depth_png16(path, grid)
    } else {
        write_raster(path, grid, precision)
    }
}

/// A motion from a pose file: either the pose on `line` taken as the
/// source-to-target motion itself, or, with `pair = [a, b]`, the relative
/// motion between two camera-to-world poses of a KITTI sequence.
pub fn read_motion(path: &Path, line: usize, pair: Option<&[usize]>) -> Result<RigidMotion> {
    match pair {
        None => read_pose_kitti(path, line),
        Some(&[a, b]) => {
            let poses = read_poses_kitti(path)?;
            let get = |i: usize| {
                poses.get(i).copied().ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "pose index {i} out of range ({} poses in {})",
                        poses.len(),
                        path.display()
                    ))
                })
            };
            Ok(relative_motion(&get(a)?, &get(b)?))
        }
        Some(other) => Err(Error::InvalidParameter(format!(
            "--pair takes two indices, got {}",
            other.len()
        ))),
    }
}

/// A point cloud from a depth map (needs intrinsics) or from a text file
/// with `x y z` or `x y z nx ny nz` per line (`#` starts a comment).
pub fn read_cloud(path: &Path, intrinsics: Option<&CameraIntrinsics>) -> Result<PointCloud> {
    let is_text = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("xyz") || e.eq_ignore_ascii_case("txt"));
    if !is_text {
        let k = intrinsics.ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{} is a depth map; --intrinsics is required",
                path.display()
            ))
        })?;
        return backproject_depth(&read_grid(path)?, k);
    }
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut columns = None;
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let parse_error = |message: String| Error::Parse {
            path: path.into(),
            line: i + 1,
            message,
        };
        let values = content
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_error(format!("'{t}' is not a finite number")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != 3 && values.len() != 6 {
            return Err(parse_error(format!(
                "expected 3 or 6 values, found {}",
                values.len()
            )));
        }
        if *columns.get_or_insert(values.len()) != values.len() {
            return Err(parse_error("mixed 3- and 6-column rows".into()));
        }
        points.push([values[0], values[1], values[2]].into());
        if values.len() == 6 {
            normals.push([values[3], values[4], values[5]].into());
        }
    }
    if normals.is_empty() {
        PointCloud::new(points)
    } else {
        PointCloud::with_normals(points, normals)
    }
}

//! KITTI odometry pose text: one pose per line, 12 whitespace-separated
//! floats forming the row-major 3x4 matrix `[R | t]`. Poses in a sequence
//! file map camera coordinates to the world (first camera) frame.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{nearest_rotation, orthonormality_error, RigidMotion};
use crate::tolerance;

use super::{read_text, write_atomic};

/// Why a pose line was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum PoseLineError {
    Malformed(String),
    NonRigid(f64),
}

impl PoseLineError {
    fn into_error(self, path: &Path, line: usize) -> Error {
        match self {
            PoseLineError::Malformed(message) => Error::Parse {
                path: path.into(),
                line,
                message,
            },
            PoseLineError::NonRigid(err) => Error::NonRigid(err),
        }
    }
}

/// Parses one pose line. Rotations off by more than 1e-3 are rejected;
/// smaller deviations are projected back onto SO(3).
pub fn parse_pose_line(line: &str) -> std::result::Result<RigidMotion, PoseLineError> {
    let values = line
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| PoseLineError::Malformed(format!("'{tok}' is not a finite number")))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if values.len() != 12 {
        return Err(PoseLineError::Malformed(format!(
            "expected 12 values, found {}",
            values.len()
        )));
    }
    let rotation = Matrix3::new(
        values[0], values[1], values[2], values[4], values[5], values[6], values[8], values[9],
        values[10],
    );
    let translation = Vector3::new(values[3], values[7], values[11]);
    let err = orthonormality_error(&rotation);
    if err > tolerance::POSE_READ {
        return Err(PoseLineError::NonRigid(err));
    }
    let rotation = if err > tolerance::POSE_EXACT {
        nearest_rotation(&rotation).map_err(|_| PoseLineError::NonRigid(err))?
    } else {
        rotation
    };
    RigidMotion::new(rotation, translation).map_err(|_| PoseLineError::NonRigid(err))
}

/// All poses in a file, skipping blank lines.
pub fn read_poses_kitti(path: impl AsRef<Path>) -> Result<Vec<RigidMotion>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_pose_line(l).map_err(|e| e.into_error(path, i + 1)))
        .collect()
}

/// The pose on the zero-based `line_index`-th line.
pub fn read_pose_kitti(path: impl AsRef<Path>, line_index: usize) -> Result<RigidMotion> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let line = text.lines().nth(line_index).ok_or_else(|| Error::Parse {
        path: path.into(),
        line: line_index + 1,
        message: "no such line".into(),
    })?;
    parse_pose_line(line).map_err(|e| e.into_error(path, line_index + 1))
}

pub fn format_pose_line(pose: &RigidMotion) -> String {
    let r = pose.rotation();
    let t = pose.translation();
    let mut line = String::new();
    for row in 0..3 {
        for col in 0..3 {
            let _ = write!(line, "{} ", r[(row, col)]);
        }
        let _ = write!(line, "{}", t[row]);
        if row < 2 {
            line.push(' ');
        }
    }
    line
}

/// Writes one pose per line using shortest round-trip float formatting.
pub fn write_poses_kitti(path: impl AsRef<Path>, poses: &[RigidMotion]) -> Result<()> {
    let mut text = String::new();
    for pose in poses {
        text.push_str(&format_pose_line(pose));
        text.push('\n');
    }
    write_atomic(path.as_ref(), text.as_bytes())
}

/// Motion taking camera-`a` coordinates to camera-`b` coordinates, given
/// both cameras' camera-to-world poses: `R = R_b^T R_a`,
/// `T = R_b^T (t_a - t_b)`.
pub fn relative_motion(pose_a: &RigidMotion, pose_b: &RigidMotion) -> RigidMotion {
    pose_a.then(&pose_b.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_translation_lines() {
        let id = parse_pose_line("1 0 0 0 0 1 0 0 0 0 1 0").unwrap();
        assert_eq!(id, RigidMotion::identity());
        let shifted = parse_pose_line("1 0 0 0.5 0 1 0 -2 0 0 1 7.25").unwrap();
        assert_eq!(*shifted.rotation(), Matrix3::identity());
        assert_eq!(*shifted.translation(), Vector3::new(0.5, -2.0, 7.25));
    }

    #[test]
    fn bad_lines() {
        assert!(parse_pose_line("1 0 0 0 0 1 0 0 0 0 1").is_err());
        assert!(parse_pose_line("1 0 0 0 0 1 0 0 0 0 1 nan").is_err());
        assert!(parse_pose_line("1 0 0 0 0 1 0 0 0 0 1 x").is_err());
        let skewed = parse_pose_line("1 0.01 0 0 0 1 0 0 0 0 1 0").unwrap_err();
        assert!(matches!(skewed, PoseLineError::NonRigid(e) if e > 1e-3));
    }

    #[test]
    fn slightly_off_rotation_is_projected() {
        let pose = parse_pose_line("1 0.0001 0 0 0 1 0 0 0 0 1 0").unwrap();
        assert!(orthonormality_error(pose.rotation()) < 1e-12);
    }

    #[test]
    fn relative_motion_of_same_pose_is_identity() {
        let a = RigidMotion::from_axis_angle(
            Vector3::new(0.2, 1.0, 0.1),
            0.3,
            Vector3::new(4.0, -1.0, 20.0),
        );
        let rel = relative_motion(&a, &a);
        assert!(rel.angle() < 1e-7);
        assert!(rel.translation().norm() < 1e-12);
    }
}

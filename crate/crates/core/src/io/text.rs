//! TOML-backed text formats: planes, intrinsics, scene descriptions, tool
//! configuration and dataset manifests.
//!
//! A plane file:
//!
//! ```toml
//! normal = [0.0, 1.0, 0.0]
//! camera_height = 1.65
//! ```
//!
//! A scene file (all lengths in meters, angles in degrees):
//!
//! ```toml
//! schema = "parallax-scene/1"
//! sky_depth = 120.0            # optional far clip
//!
//! [camera]
//! fx = 500.0
//! fy = 500.0
//! cx = 319.5
//! cy = 239.5
//! width = 640
//! height = 480
//!
//! [rig]                        # target camera in the world frame
//! position = [0.0, 0.0, 1.5]
//! yaw_deg = 90.0
//! pitch_deg = 0.0
//! roll_deg = 0.0
//!
//! [motion]                     # source camera -> target camera
//! axis = [0.0, 1.0, 0.0]
//! angle_deg = 0.5
//! translation = [0.0, 0.0, -0.75]
//!
//! [[objects]]
//! center = [0.0, 10.0, 0.75]
//! extents = [2.0, 2.0, 1.5]
//! ```

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::ToolConfig;
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, PlaneModel, RigidMotion};
use crate::synthetic::{camera_pose, SceneBox, SyntheticScene};

use super::{read_text, write_atomic};

pub const SCENE_SCHEMA: &str = "parallax-scene/1";

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses TOML text, reporting the offending line on failure.
pub fn parse_toml<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Parse {
        path: path.into(),
        line: e.span().map_or(0, |span| line_of(text, span.start)),
        message: e.message().to_string(),
    })
}

fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_toml(path, &read_text(path)?)
}

fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string(value).map_err(|e| {
        Error::InvalidParameter(format!("cannot serialize {}: {e}", path.display()))
    })?;
    write_atomic(path, text.as_bytes())
}

pub fn read_plane(path: impl AsRef<Path>) -> Result<PlaneModel> {
    read_toml(path.as_ref())
}

pub fn write_plane(path: impl AsRef<Path>, plane: &PlaneModel) -> Result<()> {
    write_toml(path.as_ref(), plane)
}

pub fn read_intrinsics(path: impl AsRef<Path>) -> Result<CameraIntrinsics> {
    read_toml(path.as_ref())
}

pub fn write_intrinsics(path: impl AsRef<Path>, intrinsics: &CameraIntrinsics) -> Result<()> {
    write_toml(path.as_ref(), intrinsics)
}

/// Missing file means all defaults.
pub fn read_config(path: Option<&Path>) -> Result<ToolConfig> {
    let config: ToolConfig = match path {
        Some(path) => read_toml(path)?,
        None => ToolConfig::default(),
    };
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRig {
    pub position: [f64; 3],
    #[serde(default)]
    pub yaw_deg: f64,
    #[serde(default)]
    pub pitch_deg: f64,
    #[serde(default)]
    pub roll_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneMotion {
    #[serde(default = "default_axis")]
    pub axis: [f64; 3],
    #[serde(default)]
    pub angle_deg: f64,
    pub translation: [f64; 3],
}

fn default_axis() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

/// A complete synthetic experiment: scene, camera, target pose and the
/// source-to-target motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sky_depth: Option<f64>,
    pub camera: SceneCamera,
    pub rig: SceneRig,
    pub motion: SceneMotion,
    #[serde(default)]
    pub objects: Vec<SceneBox>,
}

impl SceneFile {
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCENE_SCHEMA {
            return Err(Error::InvalidParameter(format!(
                "unsupported scene schema '{}', expected '{SCENE_SCHEMA}'",
                self.schema
            )));
        }
        if self.camera.width == 0 || self.camera.height == 0 {
            return Err(Error::InvalidParameter("image size must be nonzero".into()));
        }
        self.intrinsics()?;
        self.scene()?;
        self.motion()?;
        let pose = self.target_pose();
        if pose.inverse().translation().z <= 0.0 {
            return Err(Error::InvalidParameter(
                "camera must be above the ground".into(),
            ));
        }
        Ok(())
    }

    pub fn intrinsics(&self) -> Result<CameraIntrinsics> {
        let c = &self.camera;
        CameraIntrinsics::new(c.fx, c.fy, c.cx, c.cy)
    }

    pub fn scene(&self) -> Result<SyntheticScene> {
        SyntheticScene::new(self.objects.clone(), self.sky_depth)
    }

    /// World-to-camera pose of the target camera.
    pub fn target_pose(&self) -> RigidMotion {
        let r = &self.rig;
        camera_pose(
            Vector3::from(r.position),
            r.yaw_deg.to_radians(),
            r.pitch_deg.to_radians(),
            r.roll_deg.to_radians(),
        )
    }

    pub fn motion(&self) -> Result<RigidMotion> {
        let m = &self.motion;
        let axis = Vector3::from(m.axis);
        let translation = Vector3::from(m.translation);
        if translation.iter().any(|t| !t.is_finite()) || !m.angle_deg.is_finite() {
            return Err(Error::InvalidParameter("motion must be finite".into()));
        }
        if m.angle_deg == 0.0 {
            return Ok(RigidMotion::from_translation(translation));
        }
        if !(axis.norm() > 0.0) {
            return Err(Error::InvalidParameter(
                "rotation axis must be nonzero".into(),
            ));
        }
        Ok(RigidMotion::from_axis_angle(
            axis,
            m.angle_deg.to_radians(),
            translation,
        ))
    }
}

pub fn parse_scene(path: &Path, text: &str) -> Result<SceneFile> {
    let scene: SceneFile = parse_toml(path, text)?;
    scene.validate()?;
    Ok(scene)
}

pub fn read_scene_file(path: impl AsRef<Path>) -> Result<SceneFile> {
    let path = path.as_ref();
    parse_scene(path, &read_text(path)?)
}

pub fn write_scene_file(path: impl AsRef<Path>, scene: &SceneFile) -> Result<()> {
    write_toml(path.as_ref(), scene)
}

/// One evaluation sample of a user-supplied dataset manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFrame {
    pub image_id: String,
    pub depth_path: PathBuf,
    pub pose_path: PathBuf,
    pub pose_line: usize,
    pub plane_path: PathBuf,
    pub intrinsics: CameraIntrinsics,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    intrinsics: CameraIntrinsics,
    #[serde(default)]
    frames: Vec<RawFrame>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    image_id: String,
    depth: PathBuf,
    pose: PathBuf,
    #[serde(default)]
    pose_line: usize,
    plane: PathBuf,
}

/// Reads a manifest listing frames of a dataset split:
///
/// ```toml
/// [intrinsics]
/// fx = 721.5377
/// fy = 721.5377
/// cx = 609.5593
/// cy = 172.854
///
/// [[frames]]
/// image_id = "2011_09_26_drive_0002_sync/0000000005"
/// depth = "depth/0000000005.png"
/// pose = "poses/02.txt"
/// pose_line = 5
/// plane = "planes/0000000005.toml"
/// ```
///
/// Relative paths resolve against the manifest's directory. Every
/// referenced file must exist and every pose must parse.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<DatasetFrame>> {
    let path = path.as_ref();
    let raw: RawManifest = read_toml(path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    raw.frames
        .into_iter()
        .map(|f| {
            let frame = DatasetFrame {
                image_id: f.image_id,
                depth_path: base.join(f.depth),
                pose_path: base.join(f.pose),
                pose_line: f.pose_line,
                plane_path: base.join(f.plane),
                intrinsics: raw.intrinsics,
            };
            for p in [&frame.depth_path, &frame.plane_path] {
                if !p.is_file() {
                    return Err(Error::io(
                        p,
                        std::io::Error::new(
                            std::io::ErrorKind::NotFound,
                            "referenced file missing",
                        ),
                    ));
                }
            }
            super::read_pose_kitti(&frame.pose_path, frame.pose_line)?;
            read_plane(&frame.plane_path)?;
            Ok(frame)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENE: &str = r#"
schema = "parallax-scene/1"

[camera]
fx = 100.0
fy = 100.0
cx = 31.5
cy = 23.5
width = 64
height = 48

[rig]
position = [0.0, 0.0, 1.5]
yaw_deg = 90.0

[motion]
translation = [0.0, 0.0, -0.75]

[[objects]]
center = [0.0, 10.0, 0.75]
extents = [2.0, 2.0, 1.5]
"#;

    #[test]
    fn scene_parses_and_places_camera() {
        let scene = parse_scene(Path::new("s.toml"), SCENE).unwrap();
        assert_eq!(scene.objects.len(), 1);
        let pose = scene.target_pose();
        let ahead = pose.apply(&Vector3::new(0.0, 10.0, 1.5));
        assert!((ahead - Vector3::new(0.0, 0.0, 10.0)).norm() < 1e-12);
        assert_eq!(
            *scene.motion().unwrap().translation(),
            Vector3::new(0.0, 0.0, -0.75)
        );
    }

    #[test]
    fn scene_rejects_bad_schema_and_unknown_keys() {
        let wrong = SCENE.replace("parallax-scene/1", "parallax-scene/9");
        assert!(parse_scene(Path::new("s.toml"), &wrong).is_err());
        let extra = SCENE.replace("[rig]", "[rig]\nzoom = 2.0");
        match parse_scene(Path::new("s.toml"), &extra) {
            Err(Error::Parse { line, .. }) => assert!(line > 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn plane_text_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plane.toml");
        let plane = PlaneModel::new(Vector3::new(0.01, 0.99, -0.02), 1.65).unwrap();
        write_plane(&path, &plane).unwrap();
        assert_eq!(read_plane(&path).unwrap(), plane);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("normal = [") && text.contains("camera_height = 1.65"));
    }

    #[test]
    fn plane_text_rejects_negative_height() {
        let err =
            parse_toml::<PlaneModel>(Path::new("p"), "normal = [0, 1, 0]\ncamera_height = -1.0\n");
        assert!(matches!(err, Err(Error::Parse { .. })));
    }
}

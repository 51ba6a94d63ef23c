//! Analytic scenes with exact ground truth.
//!
//! A scene lives in a world frame whose ground is the `z = 0` plane, with
//! `+z` pointing up. Objects are axis-aligned boxes resting on or above the
//! ground. Camera poses map world coordinates to camera coordinates
//! (x right, y down, z forward). Rendering casts one ray per pixel centre and
//! reports perspective depth (camera-frame z, not ray length), height above
//! the ground and `gamma = height / depth`.

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, PixelPoint, PlaneModel, RigidMotion};
use crate::grid::{FlowField, ScalarGrid};
use crate::parallax::geometric_residual_flow;

/// Axis-aligned box; `extents` are full side lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneBox {
    pub center: [f64; 3],
    pub extents: [f64; 3],
}

impl SceneBox {
    pub fn new(center: [f64; 3], extents: [f64; 3]) -> Result<Self> {
        let b = Self { center, extents };
        b.validate()?;
        Ok(b)
    }

    /// A box standing on the ground, given its footprint centre and size.
    pub fn on_ground(x: f64, y: f64, extents: [f64; 3]) -> Result<Self> {
        Self::new([x, y, extents[2] / 2.0], extents)
    }

    fn validate(&self) -> Result<()> {
        if self.extents.iter().any(|e| !(*e > 0.0 && e.is_finite()))
            || self.center.iter().any(|c| !c.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "box extents must be positive and finite: {self:?}"
            )));
        }
        if self.bottom() < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "box reaches below the ground (bottom at {})",
                self.bottom()
            )));
        }
        Ok(())
    }

    pub fn bottom(&self) -> f64 {
        self.center[2] - self.extents[2] / 2.0
    }

    pub fn top(&self) -> f64 {
        self.center[2] + self.extents[2] / 2.0
    }

    fn bounds(&self, axis: usize) -> (f64, f64) {
        let half = self.extents[axis] / 2.0;
        (self.center[axis] - half, self.center[axis] + half)
    }

    /// Slab test. Returns the entry parameter and the world height of the
    /// entry point, snapped to the face plane when entering through the top
    /// or bottom.
    fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, f64)> {
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        let mut entry_axis = usize::MAX;
        let mut entry_value = 0.0;
        for axis in 0..3 {
            let (lo, hi) = self.bounds(axis);
            if dir[axis] == 0.0 {
                if origin[axis] < lo || origin[axis] > hi {
                    return None;
                }
                continue;
            }
            let (a, b) = (
                (lo - origin[axis]) / dir[axis],
                (hi - origin[axis]) / dir[axis],
            );
            let (t0, face) = if a < b { (a, lo) } else { (b, hi) };
            let t1 = a.max(b);
            if t0 > t_near {
                t_near = t0;
                entry_axis = axis;
                entry_value = face;
            }
            t_far = t_far.min(t1);
        }
        if t_far < t_near || t_near <= 0.0 {
            return None;
        }
        let height = if entry_axis == 2 {
            entry_value
        } else {
            origin.z + t_near * dir.z
        };
        Some((t_near, height))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticScene {
    #[serde(default)]
    pub objects: Vec<SceneBox>,
    /// Hits farther than this camera-frame depth count as sky. Absent means
    /// unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sky_depth: Option<f64>,
}

impl SyntheticScene {
    pub fn new(objects: Vec<SceneBox>, sky_depth: Option<f64>) -> Result<Self> {
        let scene = Self { objects, sky_depth };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        for b in &self.objects {
            b.validate()?;
        }
        if let Some(d) = self.sky_depth {
            if !(d > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "sky depth must be positive, got {d}"
                )));
            }
        }
        Ok(())
    }
}

/// World-to-camera pose of a camera at `position` (world, meters) heading
/// `yaw` radians from `+x` towards `+y`, pitched down by `pitch` and rolled
/// clockwise by `roll` about the optical axis.
pub fn camera_pose(position: Vector3<f64>, yaw: f64, pitch: f64, roll: f64) -> RigidMotion {
    let (sy, cy) = yaw.sin_cos();
    // Rows: camera axes expressed in world coordinates, for a level camera.
    let level = Matrix3::new(sy, -cy, 0.0, 0.0, 0.0, -1.0, cy, sy, 0.0);
    let pitch_down = nalgebra::Rotation3::from_axis_angle(&Vector3::x_axis(), pitch);
    let roll_cw = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), roll);
    let rotation = roll_cw.matrix() * pitch_down.matrix() * level;
    RigidMotion::new(rotation, -(rotation * position)).expect("product of rotations")
}

/// The ground plane expressed in the frame of a camera with world-to-camera
/// `pose`.
pub fn ground_plane(pose: &RigidMotion) -> Result<PlaneModel> {
    let centre = pose.inverse().translation().z;
    PlaneModel::new(pose.rotation() * -Vector3::z(), centre)
}

/// World-to-camera pose of the source camera, given the target pose and the
/// source-to-target `motion`.
pub fn source_pose(target_pose: &RigidMotion, motion: &RigidMotion) -> RigidMotion {
    target_pose.then(&motion.inverse())
}

/// What a pixel's ray hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hit {
    Sky,
    Ground,
    Object(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub depth: ScalarGrid,
    pub height: ScalarGrid,
    pub gamma: ScalarGrid,
    pub hits: Vec<Hit>,
}

impl RenderedFrame {
    pub fn width(&self) -> usize {
        self.depth.width()
    }

    pub fn height_px(&self) -> usize {
        self.depth.height()
    }

    pub fn hit(&self, u: usize, v: usize) -> Hit {
        self.hits[v * self.width() + u]
    }
}

/// Ray-casts the scene from a camera with world-to-camera `pose`.
pub fn render(
    scene: &SyntheticScene,
    intrinsics: &CameraIntrinsics,
    pose: &RigidMotion,
    width: usize,
    height: usize,
) -> Result<RenderedFrame> {
    scene.validate()?;
    let to_world = pose.inverse();
    let origin = *to_world.translation();
    if !(origin.z > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "camera must be above the ground, got height {}",
            origin.z
        )));
    }
    let mut frame = RenderedFrame {
        depth: ScalarGrid::empty(width, height),
        height: ScalarGrid::empty(width, height),
        gamma: ScalarGrid::empty(width, height),
        hits: vec![Hit::Sky; width * height],
    };
    for v in 0..height {
        for u in 0..width {
            // Unit z in the camera frame, so the ray parameter is the depth.
            let ray = intrinsics.unproject(PixelPoint::new(u as f64, v as f64));
            let dir = to_world.rotation() * ray;
            let mut best: Option<(f64, f64, Hit)> = None;
            if dir.z < 0.0 {
                best = Some((-origin.z / dir.z, 0.0, Hit::Ground));
            }
            for (i, b) in scene.objects.iter().enumerate() {
                if let Some((t, h)) = b.intersect(&origin, &dir) {
                    if best.is_none_or(|(bt, ..)| t < bt) {
                        best = Some((t, h, Hit::Object(i)));
                    }
                }
            }
            let Some((depth, h, hit)) = best else {
                continue;
            };
            if scene.sky_depth.is_some_and(|limit| depth > limit) {
                continue;
            }
            frame.depth.set(u, v, depth);
            frame.height.set(u, v, h);
            frame.gamma.set(u, v, h / depth);
            frame.hits[v * width + u] = hit;
        }
    }
    Ok(frame)
}

/// Geometric residual flow of a rendered target frame; see
/// [`geometric_residual_flow`].
pub fn residual_flow_from_frame(
    frame: &RenderedFrame,
    intrinsics: &CameraIntrinsics,
    motion: &RigidMotion,
    plane: &PlaneModel,
) -> Result<FlowField> {
    geometric_residual_flow(&frame.depth, intrinsics, motion, plane)
}

/// Renders the target view and returns its geometric residual flow.
#[allow(clippy::too_many_arguments)]
pub fn render_residual_flow(
    scene: &SyntheticScene,
    intrinsics: &CameraIntrinsics,
    target_pose: &RigidMotion,
    motion: &RigidMotion,
    plane: &PlaneModel,
    width: usize,
    height: usize,
) -> Result<FlowField> {
    let frame = render(scene, intrinsics, target_pose, width, height)?;
    residual_flow_from_frame(&frame, intrinsics, motion, plane)
}

/// Adds isotropic Gaussian noise to every valid vector. Each pixel draws from
/// its own ChaCha stream keyed by the pixel index, so the result depends only
/// on `seed` and the pixel, not on traversal order.
pub fn perturb_flow(flow: &FlowField, noise_sigma: f64, seed: u64) -> Result<FlowField> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be non-negative, got {noise_sigma}"
        )));
    }
    let mut out = flow.clone();
    if noise_sigma == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, noise_sigma).expect("sigma checked above");
    let valid = flow.valid().to_vec();
    for (i, vec) in out.vectors_mut().iter_mut().enumerate() {
        if !valid[i] {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        *vec += Vector2::new(normal.sample(&mut rng), normal.sample(&mut rng));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(200.0, 200.0, 80.0, 60.0).unwrap()
    }

    #[test]
    fn level_camera_axes() {
        let pose = camera_pose(Vector3::new(0.0, 0.0, 1.5), 0.0, 0.0, 0.0);
        // Forward is world +x, down is world -z.
        assert!((pose.inverse().rotation() * Vector3::z() - Vector3::x()).norm() < 1e-15);
        assert!((pose.inverse().rotation() * Vector3::y() + Vector3::z()).norm() < 1e-15);
        let plane = ground_plane(&pose).unwrap();
        assert!((plane.normal() - Vector3::y()).norm() < 1e-15);
        assert_eq!(plane.camera_height(), 1.5);

        let pitched = camera_pose(Vector3::new(0.0, 0.0, 1.5), 0.0, 0.1, 0.0);
        assert!((pitched.inverse().rotation() * Vector3::z()).z < 0.0);
    }

    #[test]
    fn empty_scene_is_all_ground_below_horizon() {
        let pose = camera_pose(Vector3::new(0.0, 0.0, 1.5), 0.0, 0.0, 0.0);
        let frame = render(&SyntheticScene::default(), &k(), &pose, 160, 120).unwrap();
        let plane = ground_plane(&pose).unwrap();
        for v in 0..120 {
            for u in 0..160 {
                if v as f64 > 60.0 {
                    assert_eq!(frame.hit(u, v), Hit::Ground);
                    assert_eq!(frame.gamma.get(u, v), Some(0.0));
                    let ppe = crate::geometry::ppe_value(
                        &k(),
                        &plane,
                        PixelPoint::new(u as f64, v as f64),
                    );
                    let depth = frame.depth.get(u, v).unwrap();
                    assert!((depth - 1.5 / ppe).abs() <= 1e-12 * depth);
                } else {
                    assert_eq!(frame.hit(u, v), Hit::Sky);
                    assert_eq!(frame.depth.get(u, v), None);
                }
            }
        }
    }

    #[test]
    fn box_front_face_depth_and_top_gamma() {
        // Front face at x = 10, top at 1.5 m; camera 2 m up so the top is visible.
        let scene = SyntheticScene::new(
            vec![SceneBox::on_ground(12.0, 0.0, [4.0, 6.0, 1.5]).unwrap()],
            None,
        )
        .unwrap();
        let pose = camera_pose(Vector3::new(0.0, 0.0, 2.0), 0.0, 0.0, 0.0);
        let frame = render(&scene, &k(), &pose, 160, 120).unwrap();
        let mut front = 0;
        let mut top = 0;
        for v in 0..120 {
            for u in 0..160 {
                if frame.hit(u, v) != Hit::Object(0) {
                    continue;
                }
                let depth = frame.depth.get(u, v).unwrap();
                let h = frame.height.get(u, v).unwrap();
                if h == 1.5 {
                    top += 1;
                    assert_eq!(frame.gamma.get(u, v).unwrap(), 1.5 / depth);
                } else {
                    front += 1;
                    assert_eq!(depth, 10.0);
                    assert!((0.0..1.5).contains(&h));
                }
            }
        }
        assert!(front > 0 && top > 0);
        // The front face just below its top edge approaches gamma = 0.15.
        let edge = (0..120)
            .filter(|&v| frame.hit(80, v) == Hit::Object(0) && frame.depth.get(80, v) == Some(10.0))
            .map(|v| frame.gamma.get(80, v).unwrap())
            .fold(0.0f64, f64::max);
        assert!(edge <= 0.15 && edge > 0.15 - 0.01);
    }

    #[test]
    fn sky_depth_clips_far_hits() {
        let pose = camera_pose(Vector3::new(0.0, 0.0, 1.5), 0.0, 0.0, 0.0);
        let scene = SyntheticScene::new(vec![], Some(20.0)).unwrap();
        let frame = render(&scene, &k(), &pose, 160, 120).unwrap();
        assert!(frame.depth.iter_valid().all(|(_, _, d)| d <= 20.0));
        assert!(frame.depth.valid_count() > 0);
    }

    #[test]
    fn invalid_scenes_are_rejected() {
        assert!(SceneBox::new([0.0, 0.0, 0.2], [1.0, 1.0, 1.0]).is_err());
        assert!(SceneBox::new([0.0, 0.0, 1.0], [1.0, 0.0, 1.0]).is_err());
        assert!(SyntheticScene::new(vec![], Some(-1.0)).is_err());
        let below = camera_pose(Vector3::new(0.0, 0.0, -1.0), 0.0, 0.0, 0.0);
        assert!(render(&SyntheticScene::default(), &k(), &below, 4, 4).is_err());
    }

    #[test]
    fn zero_motion_gives_zero_flow() {
        let scene = SyntheticScene::new(
            vec![SceneBox::on_ground(15.0, 1.0, [2.0, 2.0, 3.0]).unwrap()],
            None,
        )
        .unwrap();
        let pose = camera_pose(Vector3::new(0.0, 0.0, 1.5), 0.0, 0.02, 0.0);
        let plane = ground_plane(&pose).unwrap();
        let flow = render_residual_flow(
            &scene,
            &k(),
            &pose,
            &RigidMotion::identity(),
            &plane,
            160,
            120,
        )
        .unwrap();
        assert!(flow.valid_count() > 0);
        assert!(flow.iter_valid().all(|(_, v)| v.norm() < 1e-10));
    }

    #[test]
    fn perturbation_contract() {
        let flow = FlowField::from_fn(30, 20, |u, v| {
            ((u + v) % 3 != 0).then(|| Vector2::new(u as f64, -(v as f64)))
        });
        assert_eq!(perturb_flow(&flow, 0.0, 7).unwrap(), flow);
        let a = perturb_flow(&flow, 0.5, 7).unwrap();
        let b = perturb_flow(&flow, 0.5, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, perturb_flow(&flow, 0.5, 8).unwrap());
        assert_eq!(a.valid(), flow.valid());
        assert!(perturb_flow(&flow, -1.0, 7).is_err());
    }
}

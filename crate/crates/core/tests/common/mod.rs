//! Random scene and camera generators shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::Vector3;
use parallax_core::{camera_pose, CameraIntrinsics, RigidMotion, SceneBox, SyntheticScene};
use rand::Rng;

pub struct Setup {
    pub scene: SyntheticScene,
    pub intrinsics: CameraIntrinsics,
    pub pose: RigidMotion,
    pub motion: RigidMotion,
    pub width: usize,
    pub height: usize,
}

pub fn random_intrinsics(rng: &mut impl Rng, width: usize, height: usize) -> CameraIntrinsics {
    let fx = rng.random_range(0.8..1.6) * width as f64;
    let fy = fx * rng.random_range(0.95..1.05);
    let cx = (width as f64 - 1.0) / 2.0 + rng.random_range(-3.0..3.0);
    let cy = (height as f64 - 1.0) / 2.0 + rng.random_range(-3.0..3.0);
    CameraIntrinsics::new(fx, fy, cx, cy).unwrap()
}

/// A driving-like camera: 1.2-2 m above the ground, looking roughly along
/// world `+y` with small pitch and roll.
pub fn random_pose(rng: &mut impl Rng) -> RigidMotion {
    let deg = PI / 180.0;
    camera_pose(
        Vector3::new(rng.random_range(-1.0..1.0), 0.0, rng.random_range(1.2..2.0)),
        (90.0 + rng.random_range(-10.0..10.0)) * deg,
        rng.random_range(-3.0..5.0) * deg,
        rng.random_range(-2.0..2.0) * deg,
    )
}

/// Boxes whose near faces lie at least 6 m ahead, up to 2.5 m tall, some
/// floating slightly above the ground.
pub fn random_scene(rng: &mut impl Rng) -> SyntheticScene {
    let count = rng.random_range(1..=4);
    let objects = (0..count)
        .map(|_| {
            let extents = [
                rng.random_range(0.5..4.0),
                rng.random_range(0.5..4.0),
                rng.random_range(0.3..2.5),
            ];
            let bottom = if rng.random_bool(0.3) {
                rng.random_range(0.0..0.3)
            } else {
                0.0
            };
            let centre = [
                rng.random_range(-8.0..8.0),
                6.0 + extents[1] / 2.0 + rng.random_range(0.0..30.0),
                bottom + extents[2] / 2.0,
            ];
            SceneBox::new(centre, extents).unwrap()
        })
        .collect();
    SyntheticScene::new(objects, Some(150.0)).unwrap()
}

/// Source-to-target motion with `|t_z|` in `tz_range` (random sign), a
/// lateral drift up to 20% of `|t_z|` and up to 1 degree of rotation.
pub fn random_motion(rng: &mut impl Rng, tz_range: std::ops::Range<f64>) -> RigidMotion {
    let tz = rng.random_range(tz_range) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let lateral = 0.2 * tz.abs();
    let translation = Vector3::new(
        rng.random_range(-lateral..=lateral),
        rng.random_range(-lateral..=lateral) * 0.5,
        tz,
    );
    let axis = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let angle = rng.random_range(0.0..1.0) * PI / 180.0;
    if axis.norm() < 1e-3 {
        return RigidMotion::from_translation(translation);
    }
    RigidMotion::from_axis_angle(axis, angle, translation)
}

pub fn random_setup(rng: &mut impl Rng, width: usize, height: usize) -> Setup {
    Setup {
        scene: random_scene(rng),
        intrinsics: random_intrinsics(rng, width, height),
        pose: random_pose(rng),
        motion: random_motion(rng, 0.1..2.0),
        width,
        height,
    }
}

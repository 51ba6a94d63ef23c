//! Relative motion between camera-to-world poses.

use nalgebra::Vector3;
use parallax_core::io::relative_motion;
use parallax_core::RigidMotion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pose(rng: &mut impl Rng) -> RigidMotion {
    let axis = Vector3::new(
        rng.random_range(-0.2..0.2),
        1.0,
        rng.random_range(-0.2..0.2),
    );
    let t = Vector3::new(
        rng.random_range(-100.0..100.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-100.0..100.0),
    );
    RigidMotion::from_axis_angle(axis, rng.random_range(-3.0..3.0), t)
}

/// Camera coordinates of world point `x` for a camera-to-world pose.
fn in_camera(pose: &RigidMotion, x: &Vector3<f64>) -> Vector3<f64> {
    pose.rotation().transpose() * (x - pose.translation())
}

#[test]
fn forward_step_gives_negative_z_translation() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..20 {
        let a = random_pose(&mut rng);
        let b = RigidMotion::new(
            *a.rotation(),
            a.translation() + a.rotation() * Vector3::new(0.0, 0.0, 1.0),
        )
        .unwrap();
        let rel = relative_motion(&a, &b);
        assert!((rel.translation() - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-10);
        assert!(rel.angle() < 1e-7);
        let x = a.apply(&Vector3::new(1.0, -0.5, 12.0));
        let p_a = in_camera(&a, &x);
        let p_b = in_camera(&b, &x);
        assert!((rel.apply(&p_a) - p_b).norm() < 1e-10);
        assert!((p_b.z - (p_a.z - 1.0)).abs() < 1e-10);
    }
}

#[test]
fn relative_motion_maps_common_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    for _ in 0..100 {
        let (a, b) = (random_pose(&mut rng), random_pose(&mut rng));
        let rel = relative_motion(&a, &b);
        let x = Vector3::new(
            rng.random_range(-50.0..50.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-50.0..50.0),
        );
        assert!((rel.apply(&in_camera(&a, &x)) - in_camera(&b, &x)).norm() < 1e-9);
    }
}

#[test]
fn relative_motions_compose() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for _ in 0..100 {
        let (a, b, c) = (
            random_pose(&mut rng),
            random_pose(&mut rng),
            random_pose(&mut rng),
        );
        let direct = relative_motion(&a, &c);
        let chained = relative_motion(&a, &b).then(&relative_motion(&b, &c));
        assert!((direct.rotation() - chained.rotation()).amax() < 1e-10);
        assert!((direct.translation() - chained.translation()).amax() < 1e-10 * 200.0);
        assert!(relative_motion(&a, &a).translation().norm() < 1e-12);
    }
}

//! Homography, residual-flow and embedding identities checked against the
//! ray-cast renderer and direct projection.

mod common;

use nalgebra::Vector3;
use parallax_core::synthetic::Hit;
use parallax_core::{
    gamma_map_from_flow, gamma_to_depth, ground_plane, homography_from_motion, ppe_value, render,
    residual_flow_closed_form, residual_flow_forward_lateral, residual_flow_from_frame,
    source_pose, warp_point, EpipoleMaskPolicy, PixelPoint, PlaneModel, RigidMotion,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn homography_aligns_random_plane_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let k = common::random_intrinsics(&mut rng, 640, 480);
        let normal = Vector3::new(
            rng.random_range(-0.1..0.1),
            1.0,
            rng.random_range(-0.1..0.1),
        );
        let plane = PlaneModel::new(normal, rng.random_range(1.0..2.5)).unwrap();
        let motion = common::random_motion(&mut rng, 0.0..2.0);
        let h = homography_from_motion(&k, &motion, &plane).unwrap();
        let mut checked = 0;
        while checked < 100 {
            let p_s = PixelPoint::new(rng.random_range(0.0..640.0), rng.random_range(250.0..480.0));
            let ray = k.unproject(p_s);
            let along = plane.normal().dot(&ray);
            if along <= 0.05 {
                continue;
            }
            // Point where the source ray meets the plane, seen from the target.
            let point = ray * (plane.camera_height() / along);
            let in_target = motion.apply(&point);
            if in_target.z <= 0.5 {
                continue;
            }
            let p_t = k.project(&in_target);
            let p_w = warp_point(&h, p_s).unwrap();
            let scale = 1.0 + p_t.to_vector().norm();
            assert!(p_w.distance(&p_t) < 1e-9 * scale, "{p_w:?} vs {p_t:?}");
            checked += 1;
        }
    }
}

#[test]
fn rendered_flow_matches_closed_form_and_inverts() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let policy = EpipoleMaskPolicy::default();
    for _ in 0..60 {
        let s = common::random_setup(&mut rng, 64, 48);
        let frame = render(&s.scene, &s.intrinsics, &s.pose, s.width, s.height).unwrap();
        let plane_s = ground_plane(&source_pose(&s.pose, &s.motion)).unwrap();
        let flow = residual_flow_from_frame(&frame, &s.intrinsics, &s.motion, &plane_s).unwrap();
        assert!(flow.valid_count() > 0);
        for (p, u_res) in flow.iter_valid() {
            let gamma = frame.gamma.get(p.u as usize, p.v as usize).unwrap();
            let expected = residual_flow_closed_form(
                gamma,
                p,
                &s.intrinsics,
                s.motion.translation(),
                plane_s.camera_height(),
            )
            .unwrap();
            assert!((u_res - expected).norm() < 1e-9, "{u_res} vs {expected}");
        }
        let e_t = parallax_core::epipole(&s.intrinsics, s.motion.translation()).unwrap();
        let t_z = s.motion.translation().z;
        let rec = gamma_map_from_flow(&flow, e_t, t_z, plane_s.camera_height(), &policy).unwrap();
        for (u, v, gamma) in rec.gamma.iter_valid() {
            assert!((gamma - frame.gamma.get(u, v).unwrap()).abs() < 1e-9);
        }
    }
}

#[test]
fn lateral_motion_matches_lateral_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let mut s = common::random_setup(&mut rng, 64, 48);
        let t = Vector3::new(
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.1..0.1),
            0.0,
        );
        s.motion = RigidMotion::from_translation(t);
        let frame = render(&s.scene, &s.intrinsics, &s.pose, s.width, s.height).unwrap();
        let plane_s = ground_plane(&source_pose(&s.pose, &s.motion)).unwrap();
        let flow = residual_flow_from_frame(&frame, &s.intrinsics, &s.motion, &plane_s).unwrap();
        let kt = s.intrinsics.matrix() * t;
        for (p, u_res) in flow.iter_valid() {
            let gamma = frame.gamma.get(p.u as usize, p.v as usize).unwrap();
            let expected =
                residual_flow_forward_lateral(gamma, &kt, plane_s.camera_height()).unwrap();
            assert!((u_res - expected).norm() < 1e-9);
        }
    }
}

#[test]
fn embedding_identity_on_every_rendered_pixel() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..40 {
        let s = common::random_setup(&mut rng, 80, 60);
        let frame = render(&s.scene, &s.intrinsics, &s.pose, s.width, s.height).unwrap();
        let plane = ground_plane(&s.pose).unwrap();
        for (u, v, depth) in frame.depth.iter_valid() {
            let h = frame.height.get(u, v).unwrap();
            let gamma = frame.gamma.get(u, v).unwrap();
            assert_eq!(gamma, h / depth);
            let ppe = ppe_value(&s.intrinsics, &plane, PixelPoint::new(u as f64, v as f64));
            assert!((ppe - (plane.camera_height() - h) / depth).abs() < 1e-9);
            let z = gamma_to_depth(gamma, ppe, plane.camera_height()).unwrap();
            assert!(((z - depth) / depth).abs() < 1e-9);
            if frame.hit(u, v) == Hit::Ground {
                assert!(h == 0.0 && gamma == 0.0);
            }
        }
    }
}

#[test]
fn zero_motion_gives_identity_homography() {
    let k = common::random_intrinsics(&mut ChaCha8Rng::seed_from_u64(15), 100, 80);
    let plane = PlaneModel::new(Vector3::y(), 1.5).unwrap();
    let h = homography_from_motion(&k, &RigidMotion::identity(), &plane).unwrap();
    let p = PixelPoint::new(12.0, 70.0);
    assert!(warp_point(&h, p).unwrap().distance(&p) < 1e-12);
}

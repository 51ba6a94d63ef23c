//! File-format round trips and rejection of malformed files.

use std::path::Path;

use nalgebra::{Vector2, Vector3};
use parallax_core::io::{
    read_depth_png16, read_flo, read_pose_kitti, read_poses_kitti, read_raster, write_depth_png16,
    write_flo, write_poses_kitti, write_raster, RasterPrecision,
};
use parallax_core::{Error, FlowField, RigidMotion, ScalarGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn size(rng: &mut impl Rng) -> (usize, usize) {
    (rng.random_range(1..50), rng.random_range(1..40))
}

#[test]
fn depth_png_round_trips_quantized_grids() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.png");
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..50 {
        let (w, h) = size(&mut rng);
        let grid = ScalarGrid::from_fn(w, h, |_, _| {
            rng.random_bool(0.9)
                .then(|| rng.random_range(1..=u16::MAX) as f64 / 256.0)
        });
        write_depth_png16(&path, &grid).unwrap();
        assert_eq!(read_depth_png16(&path).unwrap(), grid);
    }
}

#[test]
fn raw_png_value_conventions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.png");
    let grid = ScalarGrid::from_parts(2, 1, vec![100.0, 0.0], vec![true, false]).unwrap();
    write_depth_png16(&path, &grid).unwrap();
    let back = read_depth_png16(&path).unwrap();
    assert_eq!(back.get(0, 0), Some(25600.0 / 256.0));
    assert_eq!(back.get(1, 0), None);
}

#[test]
fn flo_round_trips_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.flo");
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..50 {
        let (w, h) = size(&mut rng);
        let flow = FlowField::from_fn(w, h, |_, _| {
            rng.random_bool(0.9).then(|| {
                let u = rng.random_range(-300.0f32..300.0);
                let v = rng.random_range(-300.0f32..300.0);
                Vector2::new(u as f64, v as f64)
            })
        });
        write_flo(&path, &flow).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 12 + 8 * w * h);
        assert_eq!(read_flo(&path).unwrap(), flow);
    }
}

#[test]
fn one_pixel_flo_is_twenty_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.flo");
    let flow = FlowField::from_fn(1, 1, |_, _| Some(Vector2::new(0.5, -2.0)));
    write_flo(&path, &flow).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 20);
    assert_eq!(read_flo(&path).unwrap(), flow);
}

#[test]
fn pose_text_round_trips_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("poses.txt");
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let poses: Vec<_> = (0..50)
        .map(|_| {
            let axis = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let t = Vector3::new(
                rng.random_range(-50.0..50.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-50.0..50.0),
            );
            RigidMotion::from_axis_angle(axis, rng.random_range(-3.0..3.0), t)
        })
        .collect();
    write_poses_kitti(&path, &poses).unwrap();
    assert_eq!(read_poses_kitti(&path).unwrap(), poses);
    for (i, pose) in poses.iter().enumerate().step_by(7) {
        assert_eq!(read_pose_kitti(&path, i).unwrap(), *pose);
    }
}

#[test]
fn rasters_round_trip_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.ras");
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for i in 0..50 {
        let (w, h) = size(&mut rng);
        let narrow = i % 2 == 0;
        let grid = ScalarGrid::from_fn(w, h, |_, _| {
            rng.random_bool(0.85).then(|| {
                let x = rng.random_range(-1.0..1.0);
                if narrow {
                    x as f32 as f64
                } else {
                    x
                }
            })
        });
        let precision = if narrow {
            RasterPrecision::F32
        } else {
            RasterPrecision::F64
        };
        write_raster(&path, &grid, precision).unwrap();
        assert_eq!(read_raster(&path).unwrap(), grid);
    }
}

fn category_of<T: std::fmt::Debug>(result: parallax_core::Result<T>) -> &'static str {
    result.expect_err("malformed input was accepted").category()
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, bytes).unwrap();
    path
}

#[test]
fn malformed_corpus_is_rejected_with_categories() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let flow = FlowField::from_fn(3, 2, |u, _| Some(Vector2::new(u as f64, 1.0)));
    write_flo(d.join("good.flo"), &flow).unwrap();
    let good = std::fs::read(d.join("good.flo")).unwrap();
    let truncated = write(d, "trunc.flo", &good[..good.len() - 3]);
    assert_eq!(category_of(read_flo(&truncated)), "size-mismatch");
    let mut bad = good.clone();
    bad[..4].copy_from_slice(b"FLOW");
    assert_eq!(category_of(read_flo(write(d, "magic.flo", &bad))), "format");
    assert_eq!(
        category_of(read_flo(write(d, "empty.flo", b""))),
        "size-mismatch"
    );

    let grid = ScalarGrid::from_values(4, 3, vec![0.25; 12]).unwrap();
    write_raster(d.join("good.ras"), &grid, RasterPrecision::F32).unwrap();
    let good = std::fs::read(d.join("good.ras")).unwrap();
    assert_eq!(
        category_of(read_raster(write(d, "t.ras", &good[..20]))),
        "size-mismatch"
    );
    let mut bad = good.clone();
    bad[..8].copy_from_slice(b"NOTARAST");
    assert_eq!(category_of(read_raster(write(d, "m.ras", &bad))), "format");

    write_depth_png16(d.join("good.png"), &grid).unwrap();
    let good = std::fs::read(d.join("good.png")).unwrap();
    assert_eq!(
        category_of(read_depth_png16(write(d, "t.png", &good[..good.len() / 2]))),
        "format"
    );
    assert_eq!(
        category_of(read_depth_png16(write(d, "x.png", b"GIF89a"))),
        "format"
    );

    let skew = write(d, "skew.txt", b"1 0.2 0 0 0 1 0 0 0 0 1 0\n");
    assert_eq!(category_of(read_pose_kitti(&skew, 0)), "non-rigid");
    let scaled = write(d, "scaled.txt", b"2 0 0 0 0 2 0 0 0 0 2 0\n");
    assert_eq!(category_of(read_pose_kitti(&scaled, 0)), "non-rigid");
    let short = write(d, "short.txt", b"1 0 0 0 0 1 0 0 0 0 1\n");
    assert_eq!(category_of(read_pose_kitti(&short, 0)), "parse");
    let text = write(d, "text.txt", b"1 0 0 0 0 1 0 0 0 0 1 zero\n");
    assert_eq!(category_of(read_pose_kitti(&text, 0)), "parse");
    assert_eq!(category_of(read_pose_kitti(&text, 3)), "parse");
    assert_eq!(category_of(read_flo(d.join("missing.flo"))), "io");
}

#[test]
fn eight_bit_png_is_a_bit_depth_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gray8.png");
    image::GrayImage::new(3, 2).save(&path).unwrap();
    match read_depth_png16(&path) {
        Err(Error::BitDepth { .. }) => {}
        other => panic!("expected bit-depth error, got {other:?}"),
    }
}

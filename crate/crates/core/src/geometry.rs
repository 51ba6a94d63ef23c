//! Camera, plane and motion types together with the closed-form maps between
//! gamma, depth, height, the plane-induced homography, the epipole and the
//! planar position embedding.
//!
//! Conventions: camera frames are right-handed with x right, y down and z
//! forward. A [`PlaneModel`] normal points from the camera towards the plane,
//! so that `N^T P = h_c - h` for a point `P` at height `h` above the plane.
//! A [`RigidMotion`] maps source-camera coordinates to target-camera
//! coordinates, `P_t = R P_s + T`.

use std::ops::Sub;

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarGrid;
use crate::tolerance;

/// Pinhole intrinsics (pixels). No distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntrinsics", into = "RawIntrinsics")]
pub struct CameraIntrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
}

impl TryFrom<RawIntrinsics> for CameraIntrinsics {
    type Error = Error;

    fn try_from(raw: RawIntrinsics) -> Result<Self> {
        CameraIntrinsics::new(raw.fx, raw.fy, raw.cx, raw.cy)
    }
}

impl From<CameraIntrinsics> for RawIntrinsics {
    fn from(k: CameraIntrinsics) -> Self {
        RawIntrinsics {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
        }
    }
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(Error::InvalidParameter(
                "principal point must be finite".into(),
            ));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    /// `K = I`, handy for normalized-coordinate tests.
    pub fn identity() -> Self {
        Self {
            fx: 1.0,
            fy: 1.0,
            cx: 0.0,
            cy: 0.0,
        }
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn fy(&self) -> f64 {
        self.fy
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn principal_point(&self) -> PixelPoint {
        PixelPoint::new(self.cx, self.cy)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// `K^-1 (u, v, 1)`: the viewing ray with unit z component.
    pub fn unproject(&self, p: PixelPoint) -> Vector3<f64> {
        Vector3::new((p.u - self.cx) / self.fx, (p.v - self.cy) / self.fy, 1.0)
    }

    /// Perspective projection of a camera-frame point. The caller must ensure
    /// `point.z != 0`.
    pub fn project(&self, point: &Vector3<f64>) -> PixelPoint {
        PixelPoint::new(
            self.fx * point.x / point.z + self.cx,
            self.fy * point.y / point.z + self.cy,
        )
    }
}

/// Reference plane in a camera frame: unit normal `N` pointing from the camera
/// towards the plane, and camera height `h_c > 0` above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPlane", into = "RawPlane")]
pub struct PlaneModel {
    normal: Vector3<f64>,
    camera_height: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlane {
    normal: [f64; 3],
    camera_height: f64,
}

impl TryFrom<RawPlane> for PlaneModel {
    type Error = Error;

    fn try_from(raw: RawPlane) -> Result<Self> {
        PlaneModel::new(Vector3::from(raw.normal), raw.camera_height)
    }
}

impl From<PlaneModel> for RawPlane {
    fn from(plane: PlaneModel) -> Self {
        RawPlane {
            normal: plane.normal.into(),
            camera_height: plane.camera_height,
        }
    }
}

impl PlaneModel {
    /// Normalizes `normal`; rejects zero normals and non-positive heights.
    pub fn new(normal: Vector3<f64>, camera_height: f64) -> Result<Self> {
        let norm = normal.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "plane normal {normal:?} cannot be normalized"
            )));
        }
        if !(camera_height > 0.0 && camera_height.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "camera height must be positive, got {camera_height}"
            )));
        }
        let normal = if (norm - 1.0).abs() <= tolerance::UNIT_NORMAL {
            normal
        } else {
            normal / norm
        };
        Ok(Self {
            normal,
            camera_height,
        })
    }

    pub fn normal(&self) -> Vector3<f64> {
        self.normal
    }

    pub fn camera_height(&self) -> f64 {
        self.camera_height
    }

    /// Height of a camera-frame point above the plane, `h_c - N^T P`.
    pub fn height_of(&self, point: &Vector3<f64>) -> f64 {
        self.camera_height - self.normal.dot(point)
    }

    /// The same physical plane expressed in the frame reached by `motion`.
    pub fn transformed(&self, motion: &RigidMotion) -> Result<PlaneModel> {
        let normal = motion.rotation * self.normal;
        let camera_height = self.camera_height + normal.dot(&motion.translation);
        PlaneModel::new(normal, camera_height)
    }
}

/// Rigid transform `P_t = R P_s + T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidMotion {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let err = orthonormality_error(&rotation);
        if !(err <= tolerance::ORTHONORMAL) {
            return Err(Error::NonRigid(err));
        }
        if !translation.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite translation".into()));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation by `angle` radians about `axis` (any non-zero vector), then
    /// translation.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rotation =
            nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        Self {
            rotation: *rotation.matrix(),
            translation,
        }
    }

    /// Projects an approximately orthonormal matrix onto SO(3) (polar
    /// decomposition) and builds the motion.
    pub fn orthonormalized(rotation: &Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let rotation = nearest_rotation(rotation)?;
        Self::new(rotation, translation)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn apply(&self, point: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * point + self.translation
    }

    pub fn inverse(&self) -> RigidMotion {
        let rt = self.rotation.transpose();
        RigidMotion {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &RigidMotion) -> RigidMotion {
        RigidMotion {
            rotation: next.rotation * self.rotation,
            translation: next.rotation * self.translation + next.translation,
        }
    }

    /// Rotation angle in radians.
    pub fn angle(&self) -> f64 {
        ((self.rotation.trace() - 1.0) / 2.0)
            .clamp(-1.0, 1.0)
            .acos()
    }
}

/// Largest entry of `|R^T R - I|` combined with `|det R - 1|`.
pub fn orthonormality_error(rotation: &Matrix3<f64>) -> f64 {
    let gram = rotation.transpose() * rotation - Matrix3::identity();
    let max_gram = gram.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let det = (rotation.determinant() - 1.0).abs();
    if max_gram.is_nan() || det.is_nan() {
        return f64::INFINITY;
    }
    max_gram.max(det)
}

/// Closest rotation in the Frobenius sense, `U V^T` with the sign of the last
/// singular direction fixed so that `det = +1`.
pub fn nearest_rotation(m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let svd = m.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::NonRigid(f64::INFINITY));
    };
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        r = u * v_t;
    }
    Ok(r)
}

/// Plane-induced homography, mapping homogeneous source pixels to target
/// pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(Matrix3<f64>);

impl Homography {
    pub fn new(matrix: Matrix3<f64>) -> Result<Self> {
        let det = matrix.determinant();
        if !(det.abs() >= tolerance::SINGULAR) {
            return Err(Error::SingularHomography { det });
        }
        Ok(Self(matrix))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Result<Homography> {
        let inv = self
            .0
            .try_inverse()
            .ok_or(Error::SingularHomography { det: 0.0 })?;
        Homography::new(inv)
    }
}

/// Continuous pixel coordinates; the homogeneous lift is `(u, v, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn homogeneous(&self) -> Vector3<f64> {
        Vector3::new(self.u, self.v, 1.0)
    }

    pub fn to_vector(&self) -> Vector2<f64> {
        Vector2::new(self.u, self.v)
    }

    pub fn distance(&self, other: &PixelPoint) -> f64 {
        (*self - *other).norm()
    }
}

impl Sub for PixelPoint {
    type Output = Vector2<f64>;

    fn sub(self, rhs: PixelPoint) -> Vector2<f64> {
        Vector2::new(self.u - rhs.u, self.v - rhs.v)
    }
}

/// `H = K (R + T N^T / h_c) K^-1`, with the plane expressed in the source
/// frame.
pub fn homography_from_motion(
    intrinsics: &CameraIntrinsics,
    motion: &RigidMotion,
    plane: &PlaneModel,
) -> Result<Homography> {
    let euclidean =
        motion.rotation + motion.translation * plane.normal.transpose() / plane.camera_height;
    Homography::new(intrinsics.matrix() * euclidean * intrinsics.inverse_matrix())
}

/// `p_w = H p_s / (H_3 p_s)`.
pub fn warp_point(homography: &Homography, p: PixelPoint) -> Result<PixelPoint> {
    let mapped = homography.0 * p.homogeneous();
    if !(mapped.z.abs() >= tolerance::SINGULAR) {
        return Err(Error::PointAtInfinity {
            denominator: mapped.z.abs(),
        });
    }
    Ok(PixelPoint::new(mapped.x / mapped.z, mapped.y / mapped.z))
}

/// Target-view epipole `K T / t_z`.
pub fn epipole(intrinsics: &CameraIntrinsics, translation: &Vector3<f64>) -> Result<PixelPoint> {
    let t = intrinsics.matrix() * translation;
    if t.z.abs() <= tolerance::LATERAL_TZ {
        return Err(Error::LateralMotion { t_z: t.z });
    }
    Ok(PixelPoint::new(t.x / t.z, t.y / t.z))
}

/// Planar position embedding `N^T (K^-1 p)`, equal to `(h_c - h) / z` for
/// the point imaged at `p`.
pub fn ppe_value(intrinsics: &CameraIntrinsics, plane: &PlaneModel, p: PixelPoint) -> f64 {
    plane.normal.dot(&intrinsics.unproject(p))
}

/// Dense embedding over integer pixel centres; every pixel is valid.
pub fn ppe_map(
    intrinsics: &CameraIntrinsics,
    plane: &PlaneModel,
    width: usize,
    height: usize,
) -> Result<ScalarGrid> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!(
            "embedding size must be at least 1x1, got {width}x{height}"
        )));
    }
    Ok(ScalarGrid::from_fn(width, height, |u, v| {
        Some(ppe_value(
            intrinsics,
            plane,
            PixelPoint::new(u as f64, v as f64),
        ))
    }))
}

/// `z = h_c / (gamma + ppe)`.
pub fn gamma_to_depth(gamma: f64, ppe: f64, camera_height: f64) -> Result<f64> {
    let denominator = gamma + ppe;
    if !(denominator > tolerance::HORIZON) {
        return Err(Error::Horizon { denominator });
    }
    Ok(camera_height / denominator)
}

/// `gamma = h_c / z - ppe`.
pub fn depth_to_gamma(depth: f64, ppe: f64, camera_height: f64) -> Result<f64> {
    if !(depth > 0.0) {
        return Err(Error::NonPositiveDepth(depth));
    }
    Ok(camera_height / depth - ppe)
}

/// `h = gamma z`.
pub fn height_from_gamma(gamma: f64, depth: f64) -> f64 {
    gamma * depth
}

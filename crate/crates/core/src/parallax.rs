//! Residual-flow geometry after plane alignment.
//!
//! Once the source frame has been warped onto the target by the plane-induced
//! homography, every remaining displacement `u_res = p_w - p_t` points along
//! the line through the epipole, with magnitude set by `gamma = h / z`:
//!
//! ```text
//! u_res = (gamma t_z / h_c) / (1 - gamma t_z / h_c) * (p_t - e_t)    (t_z != 0)
//! u_res = -(gamma / h_c) * (t_x, t_y)                                (t_z == 0, t = K T)
//! ```
//!
//! The inverse map recovers gamma from a measured flow vector by projecting
//! it onto `p_t - e_t`.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    epipole, homography_from_motion, warp_point, CameraIntrinsics, Homography, PixelPoint,
    PlaneModel, RigidMotion,
};
use crate::grid::{FlowField, ScalarGrid};
use crate::tolerance;

/// Which pixels are trusted when inverting flow to gamma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolicy", into = "RawPolicy")]
pub struct EpipoleMaskPolicy {
    min_epipole_dist: f64,
    max_gamma_factor: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawPolicy {
    min_epipole_dist: f64,
    max_gamma_factor: f64,
}

impl Default for RawPolicy {
    fn default() -> Self {
        EpipoleMaskPolicy::default().into()
    }
}

impl TryFrom<RawPolicy> for EpipoleMaskPolicy {
    type Error = Error;

    fn try_from(raw: RawPolicy) -> Result<Self> {
        EpipoleMaskPolicy::new(raw.min_epipole_dist, raw.max_gamma_factor)
    }
}

impl From<EpipoleMaskPolicy> for RawPolicy {
    fn from(p: EpipoleMaskPolicy) -> Self {
        RawPolicy {
            min_epipole_dist: p.min_epipole_dist,
            max_gamma_factor: p.max_gamma_factor,
        }
    }
}

impl Default for EpipoleMaskPolicy {
    fn default() -> Self {
        Self {
            min_epipole_dist: 2.0,
            max_gamma_factor: 0.9,
        }
    }
}

impl EpipoleMaskPolicy {
    pub fn new(min_epipole_dist: f64, max_gamma_factor: f64) -> Result<Self> {
        if !(min_epipole_dist > 0.0 && min_epipole_dist.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "min_epipole_dist must be positive, got {min_epipole_dist}"
            )));
        }
        if !(max_gamma_factor > 0.0 && max_gamma_factor < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "max_gamma_factor must lie in (0, 1), got {max_gamma_factor}"
            )));
        }
        Ok(Self {
            min_epipole_dist,
            max_gamma_factor,
        })
    }

    pub fn min_epipole_dist(&self) -> f64 {
        self.min_epipole_dist
    }

    pub fn max_gamma_factor(&self) -> f64 {
        self.max_gamma_factor
    }
}

fn check_forward_motion(t_z: f64) -> Result<()> {
    if t_z.abs() <= tolerance::LATERAL_TZ {
        return Err(Error::LateralMotion { t_z });
    }
    Ok(())
}

/// Residual flow of a pixel with height ratio `gamma` under motion with
/// forward component `t_z`.
pub fn residual_flow_forward(
    gamma: f64,
    p_t: PixelPoint,
    e_t: PixelPoint,
    t_z: f64,
    camera_height: f64,
) -> Result<Vector2<f64>> {
    check_forward_motion(t_z)?;
    let factor = gamma * t_z / camera_height;
    let denominator = 1.0 - factor;
    if denominator.abs() < tolerance::FLOW_POLE {
        return Err(Error::FlowPole(denominator));
    }
    Ok((p_t - e_t) * (factor / denominator))
}

/// Residual flow when the camera moves parallel to the image plane
/// (`t_z = 0`). `t` is the pixel-space translation `K T`.
pub fn residual_flow_forward_lateral(
    gamma: f64,
    t: &Vector3<f64>,
    camera_height: f64,
) -> Result<Vector2<f64>> {
    if t.z.abs() > tolerance::LATERAL_TZ {
        return Err(Error::InvalidParameter(format!(
            "lateral branch needs t_z = 0, got {}",
            t.z
        )));
    }
    Ok(Vector2::new(t.x, t.y) * (-gamma / camera_height))
}

/// Closed-form residual flow in either regime: the epipolar form when the
/// motion has a forward component, the lateral form when `t_z = 0`.
/// `translation` is the metric `T` of the source-to-target motion.
pub fn residual_flow_closed_form(
    gamma: f64,
    p_t: PixelPoint,
    intrinsics: &CameraIntrinsics,
    translation: &Vector3<f64>,
    camera_height: f64,
) -> Result<Vector2<f64>> {
    if translation.z.abs() <= tolerance::LATERAL_TZ {
        let t = intrinsics.matrix() * translation;
        return residual_flow_forward_lateral(gamma, &t, camera_height);
    }
    let e_t = epipole(intrinsics, translation)?;
    residual_flow_forward(gamma, p_t, e_t, translation.z, camera_height)
}

/// Inverts [`residual_flow_forward`]. The vector ratio `(p_t - e_t) / u_res`
/// is taken through the least-squares collinear scale
/// `k = u_res . (p_t - e_t) / |p_t - e_t|^2`, giving
/// `gamma = (h_c / t_z) k / (1 + k)`.
pub fn gamma_from_flow(
    u_res: Vector2<f64>,
    p_t: PixelPoint,
    e_t: PixelPoint,
    t_z: f64,
    camera_height: f64,
    policy: &EpipoleMaskPolicy,
) -> Result<f64> {
    check_forward_motion(t_z)?;
    let radial = p_t - e_t;
    let distance = radial.norm();
    if distance < policy.min_epipole_dist {
        return Err(Error::EpipoleProximity {
            distance,
            minimum: policy.min_epipole_dist,
        });
    }
    if u_res.x == 0.0 && u_res.y == 0.0 {
        return Ok(0.0);
    }
    let k = u_res.dot(&radial) / radial.norm_squared();
    if (1.0 + k).abs() < tolerance::FLOW_POLE {
        return Err(Error::DegenerateFlow);
    }
    Ok(camera_height / t_z * (k / (1.0 + k)))
}

/// Per-pixel displacement `warp_point(H, p) - p`. Pixels mapped to infinity
/// are left invalid.
pub fn planar_warp_field(homography: &Homography, width: usize, height: usize) -> FlowField {
    FlowField::from_fn(width, height, |u, v| {
        let p = PixelPoint::new(u as f64, v as f64);
        warp_point(homography, p).ok().map(|w| w - p)
    })
}

/// Residual flow measured geometrically from a target depth map: each pixel
/// is back-projected with its depth, moved into the source camera
/// (`P_s = R^T (P_t - T)`), projected, warped back by the homography of
/// `plane` (source frame) and compared with the target pixel. Pixels whose
/// source projection is behind the camera or outside the source image are
/// left invalid.
pub fn geometric_residual_flow(
    depth: &ScalarGrid,
    intrinsics: &CameraIntrinsics,
    motion: &RigidMotion,
    plane: &PlaneModel,
) -> Result<FlowField> {
    let homography = homography_from_motion(intrinsics, motion, plane)?;
    let to_source = motion.inverse();
    let (width, height) = (depth.width(), depth.height());
    let (u_max, v_max) = (width as f64 - 0.5, height as f64 - 0.5);
    Ok(FlowField::from_fn(width, height, |u, v| {
        let z = depth.get(u, v)?;
        let p_t = PixelPoint::new(u as f64, v as f64);
        let source_point = to_source.apply(&(intrinsics.unproject(p_t) * z));
        if !(source_point.z > 0.0) {
            return None;
        }
        let p_s = intrinsics.project(&source_point);
        if !(p_s.u >= -0.5 && p_s.u < u_max && p_s.v >= -0.5 && p_s.v < v_max) {
            return None;
        }
        let p_w = warp_point(&homography, p_s).ok()?;
        Some(p_w - p_t)
    }))
}

/// Outcome of a dense flow-to-gamma inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaRecovery {
    pub gamma: ScalarGrid,
    /// Valid flow pixels that were examined.
    pub considered: usize,
    /// Rejected for lying within `min_epipole_dist` of the epipole.
    pub near_epipole: usize,
    /// Rejected because `|gamma t_z / h_c|` exceeded `max_gamma_factor`.
    pub extreme_factor: usize,
    /// Rejected because the collinear scale hit `k = -1`.
    pub degenerate: usize,
}

impl GammaRecovery {
    pub fn masked(&self) -> usize {
        self.near_epipole + self.extreme_factor + self.degenerate
    }

    pub fn masked_fraction(&self) -> f64 {
        if self.considered == 0 {
            0.0
        } else {
            self.masked() as f64 / self.considered as f64
        }
    }
}

/// Dense flow-to-gamma inversion with epipole-aware masking. Fails only for
/// lateral motion, where the inversion is undefined.
pub fn gamma_map_from_flow(
    flow: &FlowField,
    e_t: PixelPoint,
    t_z: f64,
    camera_height: f64,
    policy: &EpipoleMaskPolicy,
) -> Result<GammaRecovery> {
    check_forward_motion(t_z)?;
    let mut out = GammaRecovery {
        gamma: ScalarGrid::empty(flow.width(), flow.height()),
        considered: 0,
        near_epipole: 0,
        extreme_factor: 0,
        degenerate: 0,
    };
    for (p, u_res) in flow.iter_valid() {
        out.considered += 1;
        match gamma_from_flow(u_res, p, e_t, t_z, camera_height, policy) {
            Ok(gamma) if (gamma * t_z / camera_height).abs() <= policy.max_gamma_factor => {
                out.gamma.set(p.u as usize, p.v as usize, gamma)
            }
            Ok(_) => out.extreme_factor += 1,
            Err(Error::EpipoleProximity { .. }) => out.near_epipole += 1,
            Err(_) => out.degenerate += 1,
        }
    }
    Ok(out)
}

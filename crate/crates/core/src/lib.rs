//! Geometry toolkit for planar-parallax monocular depth.
//!
//! The central quantity is `gamma = h / z`, the ratio of a point's height
//! above a reference road plane to its camera-frame depth. After warping a
//! source frame onto the target frame with the homography induced by the
//! plane, points on the plane align exactly and every other point leaves a
//! residual flow whose magnitude is a function of gamma. This crate provides:
//!
//! - [`geometry`]: intrinsics, planes, rigid motions, plane homographies, the
//!   planar position embedding (PPE) and gamma/depth conversion.
//! - [`parallax`]: residual flow from gamma and gamma from residual flow.
//! - [`plane`] and [`icp`]: RANSAC ground-plane fitting, mean planes and
//!   point-to-plane ICP pose refinement.
//! - [`synthetic`]: an analytic box-world renderer that serves as ground
//!   truth for everything above.
//! - [`loss`] and [`metrics`]: the gamma L1 and SILog losses and the
//!   standard depth-evaluation metrics.
//! - [`io`] and [`config`]: file formats and tool configuration.
//!
//! Conventions: camera frames are x right, y down, z forward. Plane normals
//! point from the camera towards the plane, so a level camera has normal
//! `(0, 1, 0)`. Pixel centres sit at integer coordinates. Depth is
//! camera-frame z. A [`RigidMotion`] maps source-camera coordinates to
//! target-camera coordinates, `P_t = R P_s + T`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod icp;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod parallax;
pub mod plane;
mod sum;
pub mod synthetic;
pub mod tolerance;

pub use nalgebra;

pub use config::ToolConfig;
pub use error::{Error, Result};
pub use geometry::{
    depth_to_gamma, epipole, gamma_to_depth, height_from_gamma, homography_from_motion, ppe_map,
    ppe_value, warp_point, CameraIntrinsics, Homography, PixelPoint, PlaneModel, RigidMotion,
};
pub use grid::{FlowField, Mask, ScalarGrid};
pub use icp::{
    estimate_normals, icp_point_to_plane, icp_point_to_plane_with, IcpConfig, IcpResult,
};
pub use loss::{gamma_l1_loss, silog_loss, total_loss, LossBreakdown, LossWeights};
pub use metrics::{depth_metrics, height_mask, EvalSettings, MetricReport};
pub use parallax::{
    gamma_from_flow, gamma_map_from_flow, geometric_residual_flow, planar_warp_field,
    residual_flow_closed_form, residual_flow_forward, residual_flow_forward_lateral,
    EpipoleMaskPolicy, GammaRecovery,
};
pub use plane::{
    backproject_depth, fit_plane_least_squares, mean_plane, plane_sse, ransac_plane_fit,
    PointCloud, RansacConfig, RansacFit,
};
pub use synthetic::{
    camera_pose, ground_plane, perturb_flow, render, render_residual_flow,
    residual_flow_from_frame, source_pose, Hit, RenderedFrame, SceneBox, SyntheticScene,
};

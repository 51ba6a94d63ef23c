//! Numerical thresholds shared by every module.

/// Below this |det H| (or |H_3 p|) a homography is treated as singular.
pub const SINGULAR: f64 = 1e-12;

/// Smallest admissible `gamma + ppe` when converting gamma to depth.
pub const HORIZON: f64 = 1e-9;

/// |t_z| at or below this selects the lateral (epipole at infinity) branch.
pub const LATERAL_TZ: f64 = 1e-12;

/// Distance from the pole `gamma t_z / h_c = 1` of the residual-flow map.
pub const FLOW_POLE: f64 = 1e-12;

/// Allowed deviation of a plane normal from unit length.
pub const UNIT_NORMAL: f64 = 1e-12;

/// Allowed |R^T R - I| and |det R - 1| for a rigid motion.
pub const ORTHONORMAL: f64 = 1e-10;

/// Orthonormality error accepted (and then projected away) when reading poses.
pub const POSE_READ: f64 = 1e-3;

/// Orthonormality error below which a parsed rotation is kept verbatim.
pub const POSE_EXACT: f64 = 1e-12;

/// Minimum triangle area (m^2) of a RANSAC plane hypothesis.
pub const MIN_TRIANGLE_AREA: f64 = 1e-8;

/// Smallest norm of an averaged plane normal.
pub const NORMAL_CANCELLATION: f64 = 1e-9;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report. [`Error::category`] gives a short,
/// stable tag used by the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular homography (|det H| = {det:e})")]
    SingularHomography { det: f64 },

    #[error("point maps to infinity (|H_3 p| = {denominator:e})")]
    PointAtInfinity { denominator: f64 },

    #[error("lateral motion: t_z = {t_z:e}, epipole is at infinity")]
    LateralMotion { t_z: f64 },

    #[error("horizon: gamma + ppe = {denominator:e} leaves depth unbounded")]
    Horizon { denominator: f64 },

    #[error("non-positive depth {0}")]
    NonPositiveDepth(f64),

    #[error("residual flow pole: 1 - gamma t_z / h_c = {0:e}")]
    FlowPole(f64),

    #[error("pixel is {distance:.3} px from the epipole (minimum {minimum} px)")]
    EpipoleProximity { distance: f64, minimum: f64 },

    #[error("degenerate flow: collinear scale k = -1")]
    DegenerateFlow,

    #[error("grid shape mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),

    #[error("no valid pixels in the evaluation mask")]
    EmptyMask,

    #[error("degenerate point cloud: {0}")]
    DegenerateCloud(String),

    #[error("insufficient inliers: {found} of {total} (need fraction {required})")]
    InsufficientInliers {
        found: usize,
        total: usize,
        required: f64,
    },

    #[error("mean plane normal cancels (norm {0:e})")]
    NormalCancellation(f64),

    #[error("no correspondences within {gate} m")]
    NoCorrespondence { gate: f64 },

    #[error("target cloud has no normals")]
    MissingNormals,

    #[error("non-rigid pose: orthonormality error {0:e}")]
    NonRigid(f64),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: expected 16-bit single-channel PNG, got {found}")]
    BitDepth { path: PathBuf, found: String },

    #[error("{path}: size mismatch, expected {expected} bytes, found {found}")]
    SizeMismatch {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::SingularHomography { .. } => "singular-homography",
            Error::PointAtInfinity { .. } => "point-at-infinity",
            Error::LateralMotion { .. } => "lateral-motion",
            Error::Horizon { .. } => "horizon",
            Error::NonPositiveDepth(_) => "non-positive-depth",
            Error::FlowPole(_) => "flow-pole",
            Error::EpipoleProximity { .. } => "epipole-proximity",
            Error::DegenerateFlow => "degenerate-flow",
            Error::ShapeMismatch(..) => "shape-mismatch",
            Error::EmptyMask => "empty-mask",
            Error::DegenerateCloud(_) => "degenerate-cloud",
            Error::InsufficientInliers { .. } => "insufficient-inliers",
            Error::NormalCancellation(_) => "normal-cancellation",
            Error::NoCorrespondence { .. } => "no-correspondence",
            Error::MissingNormals => "missing-normals",
            Error::NonRigid(_) => "non-rigid",
            Error::Format { .. } => "format",
            Error::BitDepth { .. } => "bit-depth",
            Error::SizeMismatch { .. } => "size-mismatch",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

//! Reference-plane estimation from depth: back-projection, RANSAC plane
//! extraction and dataset-level plane averaging.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, PixelPoint, PlaneModel};
use crate::grid::ScalarGrid;
use crate::sum::Accumulator;
use crate::tolerance;

/// Camera-frame points (meters) with optional unit normals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Vector3<f64>>,
    normals: Option<Vec<Vector3<f64>>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self> {
        if points.iter().any(|p| !p.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidParameter("non-finite point".into()));
        }
        Ok(Self {
            points,
            normals: None,
        })
    }

    pub fn with_normals(points: Vec<Vector3<f64>>, normals: Vec<Vector3<f64>>) -> Result<Self> {
        if normals.len() != points.len() {
            return Err(Error::InvalidParameter(format!(
                "{} normals for {} points",
                normals.len(),
                points.len()
            )));
        }
        let mut cloud = Self::new(points)?;
        let mut unit = Vec::with_capacity(normals.len());
        for n in normals {
            let norm = n.norm();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "normal {n:?} is not normalizable"
                )));
            }
            unit.push(if (norm - 1.0).abs() <= tolerance::UNIT_NORMAL {
                n
            } else {
                n / norm
            });
        }
        cloud.normals = Some(unit);
        Ok(cloud)
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn normals(&self) -> Option<&[Vector3<f64>]> {
        self.normals.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `P = z K^-1 (u, v, 1)` for every valid pixel, in row-major order.
pub fn backproject_depth(depth: &ScalarGrid, intrinsics: &CameraIntrinsics) -> Result<PointCloud> {
    let mut points = Vec::with_capacity(depth.valid_count());
    for (u, v, z) in depth.iter_valid() {
        if !(z > 0.0) {
            return Err(Error::NonPositiveDepth(z));
        }
        points.push(intrinsics.unproject(PixelPoint::new(u as f64, v as f64)) * z);
    }
    PointCloud::new(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Point-to-plane distance (meters) below which a point is an inlier.
    pub inlier_threshold: f64,
    pub min_inlier_fraction: f64,
    pub rng_seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            inlier_threshold: 0.05,
            min_inlier_fraction: 0.3,
            rng_seed: 0,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter(
                "RANSAC needs at least one iteration".into(),
            ));
        }
        if !(self.inlier_threshold > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "inlier threshold must be positive, got {}",
                self.inlier_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.min_inlier_fraction) {
            return Err(Error::InvalidParameter(format!(
                "min_inlier_fraction must lie in [0, 1], got {}",
                self.min_inlier_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacFit {
    /// Least-squares refit on the inliers of the best hypothesis.
    pub plane: PlaneModel,
    /// Inliers of the refit plane.
    pub inliers: Vec<bool>,
    /// Inlier count of the winning hypothesis.
    pub hypothesis_inliers: usize,
    /// Index of the winning hypothesis (lowest index among ties).
    pub hypothesis_index: usize,
}

impl RansacFit {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }

    pub fn inlier_fraction(&self) -> f64 {
        self.inlier_count() as f64 / self.inliers.len() as f64
    }
}

/// Plane through three points, oriented so that the camera height is
/// positive. `None` for near-collinear samples or planes through the origin.
fn plane_from_triple(
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
) -> Option<(Vector3<f64>, f64)> {
    let cross = (b - a).cross(&(c - a));
    let twice_area = cross.norm();
    if !(twice_area / 2.0 > tolerance::MIN_TRIANGLE_AREA) {
        return None;
    }
    orient(cross / twice_area, a)
}

fn orient(normal: Vector3<f64>, on_plane: &Vector3<f64>) -> Option<(Vector3<f64>, f64)> {
    let offset = normal.dot(on_plane);
    if offset > 0.0 {
        Some((normal, offset))
    } else if offset < 0.0 {
        Some((-normal, -offset))
    } else {
        None
    }
}

fn covariance(points: impl Iterator<Item = Vector3<f64>> + Clone) -> (Vector3<f64>, Matrix3<f64>) {
    let mut n = 0usize;
    let mut sums = [
        Accumulator::default(),
        Accumulator::default(),
        Accumulator::default(),
    ];
    for p in points.clone() {
        for (s, x) in sums.iter_mut().zip(p.iter()) {
            s.add(*x);
        }
        n += 1;
    }
    let count = n.max(1) as f64;
    let centroid = Vector3::new(sums[0].total(), sums[1].total(), sums[2].total()) / count;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    (centroid, cov / count)
}

/// Eigenvalues (ascending) and matching eigenvectors of a symmetric matrix.
fn sorted_eigen(m: Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let eig = SymmetricEigen::new(m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    (
        order.map(|i| eig.eigenvalues[i]),
        order.map(|i| eig.eigenvectors.column(i).into_owned()),
    )
}

/// Total-least-squares plane through `points`: the normal is the direction
/// of least variance of the centred points.
pub fn fit_plane_least_squares(points: &[Vector3<f64>]) -> Result<PlaneModel> {
    if points.len() < 3 {
        return Err(Error::DegenerateCloud(format!("{} points", points.len())));
    }
    let (centroid, cov) = covariance(points.iter().copied());
    let (values, vectors) = sorted_eigen(cov);
    if !(values[1] > 1e-12 * values[2].max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateCloud("points are collinear".into()));
    }
    let (normal, height) = orient(vectors[0], &centroid)
        .ok_or_else(|| Error::DegenerateCloud("plane passes through the camera centre".into()))?;
    PlaneModel::new(normal, height)
}

fn inlier_mask(
    points: &[Vector3<f64>],
    normal: &Vector3<f64>,
    height: f64,
    threshold: f64,
) -> Vec<bool> {
    points
        .iter()
        .map(|p| (normal.dot(p) - height).abs() <= threshold)
        .collect()
}

/// RANSAC plane extraction with 3-point hypotheses followed by a
/// least-squares refit on the consensus set. Deterministic for a given seed.
pub fn ransac_plane_fit(cloud: &PointCloud, cfg: &RansacConfig) -> Result<RansacFit> {
    cfg.validate()?;
    let points = cloud.points();
    if points.len() < 3 {
        return Err(Error::DegenerateCloud(format!("{} points", points.len())));
    }
    let (_, cov) = covariance(points.iter().copied());
    let (values, _) = sorted_eigen(cov);
    if !(values[1] > 1e-12 * values[2].max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateCloud("points are collinear".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut best: Option<(usize, usize, Vector3<f64>, f64)> = None;
    for iteration in 0..cfg.iterations {
        let sample = index::sample(&mut rng, points.len(), 3);
        let Some((normal, height)) = plane_from_triple(
            &points[sample.index(0)],
            &points[sample.index(1)],
            &points[sample.index(2)],
        ) else {
            continue;
        };
        let count = points
            .iter()
            .filter(|p| (normal.dot(p) - height).abs() <= cfg.inlier_threshold)
            .count();
        if best.is_none_or(|(best_count, ..)| count > best_count) {
            best = Some((count, iteration, normal, height));
        }
    }
    let Some((count, hypothesis_index, normal, height)) = best else {
        return Err(Error::DegenerateCloud(
            "no non-degenerate hypothesis was sampled".into(),
        ));
    };
    let required = cfg.min_inlier_fraction;
    if (count as f64) < required * points.len() as f64 {
        return Err(Error::InsufficientInliers {
            found: count,
            total: points.len(),
            required,
        });
    }

    let consensus = inlier_mask(points, &normal, height, cfg.inlier_threshold);
    let selected: Vec<_> = points
        .iter()
        .zip(&consensus)
        .filter(|(_, &ok)| ok)
        .map(|(p, _)| *p)
        .collect();
    let plane = fit_plane_least_squares(&selected)?;
    let inliers = inlier_mask(
        points,
        &plane.normal(),
        plane.camera_height(),
        cfg.inlier_threshold,
    );
    Ok(RansacFit {
        plane,
        inliers,
        hypothesis_inliers: count,
        hypothesis_index,
    })
}

/// Sum of squared point-to-plane distances.
pub fn plane_sse(points: &[Vector3<f64>], plane: &PlaneModel) -> f64 {
    let mut acc = Accumulator::default();
    for p in points {
        let d = plane.normal().dot(p) - plane.camera_height();
        acc.add(d * d);
    }
    acc.total()
}

/// Dataset-average plane: the normalized arithmetic mean of the normals and
/// the arithmetic mean of the camera heights.
pub fn mean_plane(planes: &[PlaneModel]) -> Result<PlaneModel> {
    if planes.is_empty() {
        return Err(Error::InvalidParameter(
            "mean of an empty plane list".into(),
        ));
    }
    let mut sums = [
        Accumulator::default(),
        Accumulator::default(),
        Accumulator::default(),
        Accumulator::default(),
    ];
    for plane in planes {
        let n = plane.normal();
        for (s, x) in sums.iter_mut().zip([n.x, n.y, n.z, plane.camera_height()]) {
            s.add(x);
        }
    }
    let count = planes.len() as f64;
    let normal = Vector3::new(sums[0].total(), sums[1].total(), sums[2].total()) / count;
    let norm = normal.norm();
    if norm < tolerance::NORMAL_CANCELLATION {
        return Err(Error::NormalCancellation(norm));
    }
    PlaneModel::new(normal / norm, sums[3].total() / count)
}

//! Point-to-plane ICP for rectifying relative poses.

use std::collections::HashMap;

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{nearest_rotation, RigidMotion};
use crate::plane::PointCloud;

/// Uniform voxel hash for fixed-radius neighbour queries.
pub struct SpatialGrid<'a> {
    points: &'a [Vector3<f64>],
    cell: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl<'a> SpatialGrid<'a> {
    /// `cell` must be at least the largest query radius.
    pub fn new(points: &'a [Vector3<f64>], cell: f64) -> Self {
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(i);
        }
        Self {
            points,
            cell,
            cells,
        }
    }

    fn key(p: &Vector3<f64>, cell: f64) -> [i64; 3] {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    }

    fn candidates(&self, p: &Vector3<f64>) -> impl Iterator<Item = usize> + '_ {
        let [x, y, z] = Self::key(p, self.cell);
        (-1..=1)
            .flat_map(move |dx| {
                (-1..=1).flat_map(move |dy| (-1..=1).map(move |dz| [x + dx, y + dy, z + dz]))
            })
            .filter_map(|k| self.cells.get(&k))
            .flatten()
            .copied()
    }

    /// Closest point within `radius`; ties go to the lowest index.
    pub fn nearest(&self, p: &Vector3<f64>, radius: f64) -> Option<usize> {
        let limit = radius * radius;
        let mut best: Option<(f64, usize)> = None;
        for i in self.candidates(p) {
            let d = (self.points[i] - p).norm_squared();
            if d > limit {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bi)) => d < bd || (d == bd && i < bi),
            };
            if better {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i)
    }

    pub fn within(&self, p: &Vector3<f64>, radius: f64) -> Vec<usize> {
        let limit = radius * radius;
        let mut out: Vec<_> = self
            .candidates(p)
            .filter(|&i| (self.points[i] - p).norm_squared() <= limit)
            .collect();
        out.sort_unstable();
        out
    }
}

/// Local PCA normals from neighbours within `radius`, oriented towards the
/// camera centre. Points with fewer than three neighbours, or whose
/// neighbourhood is not planar enough to define a normal, are dropped.
pub fn estimate_normals(cloud: &PointCloud, radius: f64) -> Result<PointCloud> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "normal radius must be positive, got {radius}"
        )));
    }
    let grid = SpatialGrid::new(cloud.points(), radius);
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for p in cloud.points() {
        let neighbours = grid.within(p, radius);
        if neighbours.len() < 3 {
            continue;
        }
        let count = neighbours.len() as f64;
        let centroid = neighbours
            .iter()
            .map(|&i| cloud.points()[i])
            .sum::<Vector3<f64>>()
            / count;
        let mut cov = Matrix3::zeros();
        for &i in &neighbours {
            let d = cloud.points()[i] - centroid;
            cov += d * d.transpose();
        }
        let eig = SymmetricEigen::new(cov);
        let v = eig.eigenvalues;
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        if !(v[order[1]] > 0.0) {
            continue;
        }
        let mut n: Vector3<f64> = eig.eigenvectors.column(order[0]).into_owned();
        if n.dot(p) > 0.0 {
            n = -n;
        }
        points.push(*p);
        normals.push(n);
    }
    PointCloud::with_normals(points, normals)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IcpConfig {
    pub max_iters: usize,
    /// Stop once the RMS point-to-plane residual improves by less than this
    /// (meters).
    pub tol: f64,
    /// Correspondence gate (meters).
    pub gate: f64,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-9,
            gate: 1.0,
        }
    }
}

impl IcpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gate > 0.0 && self.gate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gate must be positive, got {}",
                self.gate
            )));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be non-negative, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    pub motion: RigidMotion,
    /// RMS residual at the initial pose followed by every accepted iterate.
    pub residual_trace: Vec<f64>,
    /// Number of accepted updates.
    pub iterations: usize,
    /// True when the improvement fell below `tol`.
    pub converged: bool,
}

impl IcpResult {
    pub fn final_residual(&self) -> f64 {
        *self
            .residual_trace
            .last()
            .expect("trace holds the initial residual")
    }
}

struct Registration<'a> {
    source: &'a [Vector3<f64>],
    target: &'a [Vector3<f64>],
    normals: &'a [Vector3<f64>],
    index: SpatialGrid<'a>,
    gate: f64,
}

impl Registration<'_> {
    /// Correspondences `(source, target)` under `motion` and their RMS
    /// point-to-plane residual.
    fn evaluate(&self, motion: &RigidMotion) -> Result<(Vec<(usize, usize)>, f64)> {
        let mut pairs = Vec::new();
        let mut sq = 0.0;
        for (i, p) in self.source.iter().enumerate() {
            let moved = motion.apply(p);
            if let Some(j) = self.index.nearest(&moved, self.gate) {
                let r = self.normals[j].dot(&(moved - self.target[j]));
                sq += r * r;
                pairs.push((i, j));
            }
        }
        if pairs.is_empty() {
            return Err(Error::NoCorrespondence { gate: self.gate });
        }
        let rms = (sq / pairs.len() as f64).sqrt();
        Ok((pairs, rms))
    }

    /// One linearized Gauss-Newton step. Directions the geometry leaves
    /// unconstrained get a zero update (minimum-norm solution).
    fn step(&self, motion: &RigidMotion, pairs: &[(usize, usize)]) -> Result<RigidMotion> {
        let mut normal_matrix = Matrix6::zeros();
        let mut rhs = Vector6::zeros();
        for &(i, j) in pairs {
            let moved = motion.apply(&self.source[i]);
            let n = self.normals[j];
            let r = n.dot(&(moved - self.target[j]));
            let c = moved.cross(&n);
            let jac = Vector6::new(c.x, c.y, c.z, n.x, n.y, n.z);
            normal_matrix += jac * jac.transpose();
            rhs -= jac * r;
        }
        let eig = SymmetricEigen::new(normal_matrix);
        let largest = eig.eigenvalues.amax();
        let mut delta = Vector6::zeros();
        for k in 0..6 {
            let value = eig.eigenvalues[k];
            if value > largest * 1e-10 {
                let v = eig.eigenvectors.column(k);
                delta += v * (v.dot(&rhs) / value);
            }
        }
        let omega = Vector3::new(delta[0], delta[1], delta[2]);
        let v = Vector3::new(delta[3], delta[4], delta[5]);
        let small = Matrix3::identity() + omega.cross_matrix();
        let rotation = nearest_rotation(&small)?;
        let update = RigidMotion::new(rotation, v)?;
        let composed = motion.then(&update);
        RigidMotion::orthonormalized(composed.rotation(), *composed.translation())
    }
}

/// Registers `source` onto `target` (which must carry normals), minimizing
/// `sum (n_j . (R p_i + T - q_j))^2` over nearest-neighbour correspondences.
/// An update that would raise the RMS residual is rejected and ends the
/// iteration, so the returned residual never exceeds the initial one.
pub fn icp_point_to_plane(
    source: &PointCloud,
    target: &PointCloud,
    init: &RigidMotion,
    max_iters: usize,
    tol: f64,
) -> Result<IcpResult> {
    let cfg = IcpConfig {
        max_iters,
        tol,
        ..IcpConfig::default()
    };
    icp_point_to_plane_with(source, target, init, &cfg)
}

pub fn icp_point_to_plane_with(
    source: &PointCloud,
    target: &PointCloud,
    init: &RigidMotion,
    cfg: &IcpConfig,
) -> Result<IcpResult> {
    let normals = target.normals().ok_or(Error::MissingNormals)?;
    if source.is_empty() || target.is_empty() {
        return Err(Error::NoCorrespondence { gate: cfg.gate });
    }
    cfg.validate()?;
    let reg = Registration {
        source: source.points(),
        target: target.points(),
        normals,
        index: SpatialGrid::new(target.points(), 2.0 * cfg.gate),
        gate: cfg.gate,
    };

    let mut motion = *init;
    let (mut pairs, mut rms) = reg.evaluate(&motion)?;
    let mut trace = vec![rms];
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        let candidate = reg.step(&motion, &pairs)?;
        let Ok((next_pairs, next_rms)) = reg.evaluate(&candidate) else {
            break;
        };
        if next_rms > rms {
            break;
        }
        let improvement = rms - next_rms;
        motion = candidate;
        pairs = next_pairs;
        rms = next_rms;
        trace.push(rms);
        if improvement < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(IcpResult {
        motion,
        iterations: trace.len() - 1,
        residual_trace: trace,
        converged,
    })
}

//! Scan-to-landmark association, clustering of leftovers and initiation of
//! new landmarks.

mod cluster;

pub use cluster::dbscan;

use nalgebra::{Matrix2, Vector2};

use crate::error::{invalid, Error, Result};
use crate::geometry::{local_to_global, wrap_two_pi, RobotPose};
use crate::gp_contour::GpContourModel;
use crate::landmark::{gate, gaussian_density, radial_observation, Landmark, DEGENERATE_RADIUS};
use crate::scalar::Real;
use crate::slam::{AssociatedPoint, AssociatedScan, LandmarkMeasurements, SlamState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationConfig<T: Real> {
    /// Chi-square threshold on the squared radial Mahalanobis distance.
    pub gate_gamma: T,
    pub cluster_eps: T,
    /// Core-point neighbourhood size, the point itself included.
    pub cluster_min_pts: usize,
    /// Clusters smaller than this do not spawn a landmark.
    pub min_cluster_size: usize,
    pub init_center_cov: Matrix2<T>,
    /// Pushes a new landmark's center from the cluster centroid away from the
    /// robot by this fraction of the cluster's half-extent; `0` keeps the
    /// centroid.
    pub center_depth: T,
}

impl<T: Real> AssociationConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.gate_gamma > T::zero()) {
            return Err(invalid("gate_gamma must be positive"));
        }
        if !(self.cluster_eps > T::zero()) {
            return Err(invalid("cluster_eps must be positive"));
        }
        if self.cluster_min_pts < 2 {
            return Err(invalid("cluster_min_pts must be at least 2"));
        }
        if !(self.center_depth >= T::zero()) {
            return Err(invalid("center_depth must be non-negative"));
        }
        Ok(())
    }
}

/// Attributes every scan point to the gated landmark with the highest
/// likelihood, evaluated on the predicted state. Ties go to the landmark
/// with the lowest id; points no landmark accepts are left unassociated.
pub fn associate<T: Real>(
    scan: &[Vector2<T>],
    state: &SlamState<T>,
    cfg: &AssociationConfig<T>,
    model: &GpContourModel<T>,
) -> AssociatedScan<T> {
    let pose = state.pose();
    let landmarks = state.landmarks();
    let mut groups: Vec<Vec<AssociatedPoint<T>>> = vec![Vec::new(); landmarks.len()];
    let mut unassociated = Vec::new();
    for (j, z) in scan.iter().enumerate() {
        let mut best: Option<(usize, T, AssociatedPoint<T>)> = None;
        for (i, lm) in landmarks.iter().enumerate() {
            let Ok(obs) = radial_observation(z, &pose, &lm.center) else {
                continue;
            };
            let (mu, var) = lm.radius_predictive(obs.angle, model);
            if !matches!(gate(obs.radius, mu, var, cfg.gate_gamma), Ok(true)) {
                continue;
            }
            let l = gaussian_density(obs.radius, mu, var);
            let better = match &best {
                None => true,
                Some((bi, bl, _)) => l > *bl || (l == *bl && lm.id < landmarks[*bi].id),
            };
            if better {
                let point = AssociatedPoint {
                    scan_index: j,
                    z_local: *z,
                    angle: obs.angle,
                    radius: obs.radius,
                };
                best = Some((i, l, point));
            }
        }
        match best {
            Some((i, _, p)) => groups[i].push(p),
            None => unassociated.push((j, *z)),
        }
    }
    AssociatedScan {
        groups: groups
            .into_iter()
            .enumerate()
            .filter(|(_, pts)| !pts.is_empty())
            .map(|(landmark, points)| LandmarkMeasurements { landmark, points })
            .collect(),
        unassociated,
    }
}

/// Clusters world-frame points, dropping noise and clusters smaller than
/// `min_cluster_size`. Each cluster lists indices into `points`.
pub fn cluster<T: Real>(points: &[Vector2<T>], cfg: &AssociationConfig<T>) -> Vec<Vec<usize>> {
    dbscan(points, cfg.cluster_eps, cfg.cluster_min_pts)
        .into_iter()
        .filter(|c| c.len() >= cfg.min_cluster_size.max(1))
        .collect()
}

/// Creates a landmark from a cluster of world-frame points: the center is
/// the centroid (optionally pushed away from the robot, see
/// [`AssociationConfig::center_depth`]) and the contour prior is conditioned
/// on every point's radius.
pub fn initiate<T: Real>(
    id: u64,
    points: &[Vector2<T>],
    pose: &RobotPose<T>,
    cfg: &AssociationConfig<T>,
    model: &GpContourModel<T>,
) -> Result<Landmark<T>> {
    if points.is_empty() {
        return Err(invalid("cannot initiate a landmark from an empty cluster"));
    }
    let count = T::of(points.len() as f64);
    let centroid = points.iter().fold(Vector2::zeros(), |acc, p| acc + p) / count;
    let half_extent = points
        .iter()
        .map(|p| (p - centroid).norm())
        .fold(T::zero(), |a, b| a.max(b));
    if !(half_extent >= T::of(DEGENERATE_RADIUS)) {
        return Err(Error::DegenerateGeometry("cluster points are all identical".into()));
    }
    let mut center = centroid;
    let away = centroid - pose.position;
    if cfg.center_depth > T::zero() && away.norm() > T::of(DEGENERATE_RADIUS) {
        center += away.normalize() * (cfg.center_depth * half_extent);
    }
    let mut lm = Landmark::new(id, center, model);
    let identity = RobotPose::identity();
    for p in points {
        let obs = radial_observation(p, &identity, &center)?;
        model.observe(&mut lm.contour, wrap_two_pi(obs.angle), obs.radius)?;
    }
    lm.hits = points.len();
    Ok(lm)
}

/// World-frame positions of the unassociated points of a scan.
pub fn unassociated_global<T: Real>(scan: &AssociatedScan<T>, pose: &RobotPose<T>) -> Vec<Vector2<T>> {
    scan.unassociated
        .iter()
        .map(|(_, z)| local_to_global(z, pose))
        .collect()
}

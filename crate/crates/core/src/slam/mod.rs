//! Augmented-state filter over the robot pose and every landmark.
//!
//! State layout: `[x, y, φ | c₁ (2), f₁ (N) | c₂, f₂ | …]` with one joint
//! covariance. Prediction is additive, correction is an iterated EKF over all
//! scan points attributed to existing landmarks.

mod iekf;
mod measurement;

pub use iekf::{iekf, IekfOutcome, IekfSettings, MeasurementModel, RowBlock, StackedModel};
pub use measurement::{
    jacobian, linearize_point, measurement_fn, measurement_noise, predicted_measurement,
    PointJacobian, PointLinearization,
};

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{invalid, Result};
use crate::geometry::{wrap_pi, RobotPose};
use crate::gp_contour::{symmetrize, ContourState, GpContourModel};
use crate::landmark::Landmark;
use crate::scalar::Real;

pub const POSE_DIM: usize = 3;

/// Process and sensor noise of the filter. The contour process noise comes
/// from the GP model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig<T: Real> {
    pub pose: Matrix3<T>,
    pub center: Matrix2<T>,
    /// Cartesian noise of a scan point.
    pub cartesian: Matrix2<T>,
}

/// Where a landmark lives inside the state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LandmarkSlot {
    pub id: u64,
    pub offset: usize,
    pub hits: usize,
}

/// A scan point attributed to a landmark, with its bearing and distance
/// from the predicted center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociatedPoint<T: Real> {
    pub scan_index: usize,
    pub z_local: Vector2<T>,
    pub angle: T,
    pub radius: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkMeasurements<T: Real> {
    /// Index into [`SlamState::slots`].
    pub landmark: usize,
    pub points: Vec<AssociatedPoint<T>>,
}

/// A scan partitioned into per-landmark groups and leftover points.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociatedScan<T: Real> {
    pub groups: Vec<LandmarkMeasurements<T>>,
    /// `(scan index, robot-frame point)` not attributed to any landmark.
    pub unassociated: Vec<(usize, Vector2<T>)>,
}

impl<T: Real> AssociatedScan<T> {
    pub fn associated_count(&self) -> usize {
        self.groups.iter().map(|g| g.points.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.associated_count() == 0
    }
}

/// Symmetry and positive-semidefiniteness of a covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceHealth {
    /// `max |P − Pᵀ| / max |P|`.
    pub asymmetry: f64,
    /// Whether `P + tol·trace(P)·I` admits a Cholesky factor.
    pub psd: bool,
}

impl CovarianceHealth {
    pub fn ok(&self, tol: f64) -> bool {
        self.asymmetry <= tol && self.psd
    }
}

pub fn covariance_health<T: Real>(cov: &DMatrix<T>, tol: f64) -> CovarianceHealth {
    let scale = cov.amax().as_f64();
    let asym = (cov - cov.transpose()).amax().as_f64();
    let asymmetry = if scale > 0.0 { asym / scale } else { asym };
    let mut shifted = cov.clone();
    symmetrize(&mut shifted);
    let bump = T::of(tol) * cov.trace().max(T::zero()) + T::of(f64::MIN_POSITIVE);
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += bump;
    }
    CovarianceHealth {
        asymmetry,
        psd: shifted.cholesky().is_some(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlamState<T: Real> {
    mean: DVector<T>,
    cov: DMatrix<T>,
    slots: Vec<LandmarkSlot>,
    basis_len: usize,
}

struct ScanModel<'a, T: Real> {
    scan: &'a AssociatedScan<T>,
    slots: &'a [LandmarkSlot],
    model: &'a GpContourModel<T>,
    cartesian: Matrix2<T>,
}

impl<T: Real> MeasurementModel<T> for ScanModel<'_, T> {
    fn linearize(&self, x: &DVector<T>) -> Result<StackedModel<T>> {
        let m = self.scan.associated_count();
        let mut z = DVector::zeros(2 * m);
        let mut h = DVector::zeros(2 * m);
        let mut blocks = Vec::with_capacity(self.scan.groups.len());
        let mut noise = Vec::with_capacity(m);
        let width = 2 + self.model.basis_len();
        let mut row = 0;
        for group in &self.scan.groups {
            let slot = self
                .slots
                .get(group.landmark)
                .ok_or_else(|| invalid("association refers to an unknown landmark"))?;
            let rows = 2 * group.points.len();
            let mut pose_jac = DMatrix::zeros(rows, POSE_DIM);
            let mut lm_jac = DMatrix::zeros(rows, width);
            for (k, pt) in group.points.iter().enumerate() {
                let lin = linearize_point(x, slot.offset, &pt.z_local, self.model, &self.cartesian)?;
                let r = row + 2 * k;
                z.fixed_rows_mut::<2>(r).copy_from(&pt.z_local);
                h.fixed_rows_mut::<2>(r).copy_from(&lin.predicted);
                pose_jac.view_mut((2 * k, 0), (2, POSE_DIM)).copy_from(&lin.jacobian.pose);
                lm_jac
                    .view_mut((2 * k, 0), (2, width))
                    .copy_from(&lin.jacobian.landmark_block());
                noise.push((r, DMatrix::from_iterator(2, 2, lin.noise.iter().copied())));
            }
            blocks.push(RowBlock {
                row,
                rows,
                segments: vec![(0, pose_jac), (slot.offset, lm_jac)],
            });
            row += rows;
        }
        Ok(StackedModel {
            z,
            h,
            blocks,
            noise,
            state_dim: x.len(),
        })
    }
}

impl<T: Real> SlamState<T> {
    /// A map-free state at `pose` with the given pose covariance.
    pub fn new(pose: RobotPose<T>, pose_cov: Matrix3<T>, basis_len: usize) -> Self {
        let mut cov = DMatrix::zeros(POSE_DIM, POSE_DIM);
        cov.copy_from(&pose_cov);
        Self {
            mean: DVector::from_column_slice(&[pose.position.x, pose.position.y, pose.heading]),
            cov,
            slots: Vec::new(),
            basis_len,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<T> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<T> {
        &self.cov
    }

    pub fn basis_len(&self) -> usize {
        self.basis_len
    }

    pub fn pose(&self) -> RobotPose<T> {
        RobotPose {
            position: Vector2::new(self.mean[0], self.mean[1]),
            heading: self.mean[2],
        }
    }

    pub fn pose_cov(&self) -> Matrix3<T> {
        self.cov.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn slots(&self) -> &[LandmarkSlot] {
        &self.slots
    }

    pub fn landmark_count(&self) -> usize {
        self.slots.len()
    }

    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.slots.iter().position(|s| s.id == id)
    }

    /// Marginal view of landmark `index` (center mean and contour belief).
    pub fn landmark(&self, index: usize) -> Landmark<T> {
        let s = self.slots[index];
        let n = self.basis_len;
        Landmark {
            id: s.id,
            center: Vector2::new(self.mean[s.offset], self.mean[s.offset + 1]),
            contour: ContourState {
                mean: self.mean.rows(s.offset + 2, n).into_owned(),
                cov: self.cov.view((s.offset + 2, s.offset + 2), (n, n)).into_owned(),
            },
            hits: s.hits,
        }
    }

    pub fn landmarks(&self) -> Vec<Landmark<T>> {
        (0..self.slots.len()).map(|i| self.landmark(i)).collect()
    }

    /// 2×2 marginal covariance of landmark `index`'s center.
    pub fn center_cov(&self, index: usize) -> Matrix2<T> {
        let o = self.slots[index].offset;
        self.cov.fixed_view::<2, 2>(o, o).into_owned()
    }

    pub fn health(&self, tol: f64) -> CovarianceHealth {
        covariance_health(&self.cov, tol)
    }

    /// Time update `x ← x + [u, 0, …]`, `Σ ← Σ + blkdiag(Q_r, Q_c, Q_f, …)`.
    pub fn predict(&mut self, odometry: &Vector3<T>, noise: &NoiseConfig<T>, model: &GpContourModel<T>) -> Result<()> {
        if !odometry.iter().all(|v| v.is_finite()) {
            return Err(invalid("odometry increment must be finite"));
        }
        for k in 0..POSE_DIM {
            self.mean[k] += odometry[k];
        }
        self.mean[2] = wrap_pi(self.mean[2]);
        let mut pose_block = self.cov.view_mut((0, 0), (3, 3));
        pose_block += noise.pose;
        let qf = model.process_noise();
        let n = self.basis_len;
        for s in &self.slots {
            let mut c = self.cov.view_mut((s.offset, s.offset), (2, 2));
            c += noise.center;
            let mut f = self.cov.view_mut((s.offset + 2, s.offset + 2), (n, n));
            f += &qf;
        }
        Ok(())
    }

    /// Appends a landmark with zero cross-covariance to the existing state.
    pub fn augment(&mut self, landmark: &Landmark<T>, center_cov: &Matrix2<T>) -> Result<()> {
        if self.index_of(landmark.id).is_some() {
            return Err(invalid(format!("landmark id {} already in the map", landmark.id)));
        }
        let n = self.basis_len;
        if landmark.contour.dim() != n {
            return Err(invalid("landmark contour size does not match the basis grid"));
        }
        let old = self.dim();
        let new = old + 2 + n;
        let mut mean = DVector::zeros(new);
        mean.rows_mut(0, old).copy_from(&self.mean);
        mean.fixed_rows_mut::<2>(old).copy_from(&landmark.center);
        mean.rows_mut(old + 2, n).copy_from(&landmark.contour.mean);
        let mut cov = DMatrix::zeros(new, new);
        cov.view_mut((0, 0), (old, old)).copy_from(&self.cov);
        cov.view_mut((old, old), (2, 2)).copy_from(center_cov);
        cov.view_mut((old + 2, old + 2), (n, n)).copy_from(&landmark.contour.cov);
        self.mean = mean;
        self.cov = cov;
        self.slots.push(LandmarkSlot {
            id: landmark.id,
            offset: old,
            hits: landmark.hits,
        });
        Ok(())
    }

    /// Stacks the point models of an associated scan, landmark-major.
    /// `None` when no point is associated.
    pub fn build_stacked_model(
        &self,
        scan: &AssociatedScan<T>,
        model: &GpContourModel<T>,
        noise: &NoiseConfig<T>,
    ) -> Result<Option<StackedModel<T>>> {
        if scan.is_empty() {
            return Ok(None);
        }
        let sm = ScanModel {
            scan,
            slots: &self.slots,
            model,
            cartesian: noise.cartesian,
        };
        sm.linearize(&self.mean).map(Some)
    }

    /// Iterated EKF correction with every associated point. The state is
    /// left untouched on error.
    pub fn correct(
        &mut self,
        scan: &AssociatedScan<T>,
        model: &GpContourModel<T>,
        noise: &NoiseConfig<T>,
        settings: &IekfSettings<T>,
    ) -> Result<Option<IekfOutcome<T>>> {
        if scan.is_empty() {
            return Ok(None);
        }
        let sm = ScanModel {
            scan,
            slots: &self.slots,
            model,
            cartesian: noise.cartesian,
        };
        let mut out = iekf(&self.mean, &self.cov, &sm, settings)?;
        out.mean[2] = wrap_pi(out.mean[2]);
        self.mean.copy_from(&out.mean);
        self.cov.copy_from(&out.cov);
        for g in &scan.groups {
            self.slots[g.landmark].hits += g.points.len();
        }
        Ok(Some(out))
    }
}

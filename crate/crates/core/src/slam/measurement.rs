//! Point measurement model of a star-convex landmark and its Jacobian.
//!
//! A scan point `z` (robot frame) attributed to landmark `i` is predicted as
//! `h = T(φ)ᵀ (c + p(θ)·H(θ)·x_f − x_p)` where `θ` is the bearing of the point
//! around the center `c` and `p(θ) = (cos θ, sin θ)`. The bearing itself is a
//! function of pose, center and `z`; the Jacobian carries those chain terms.

use nalgebra::{DMatrix, Dyn, Matrix2, Matrix2x3, OMatrix, RowVector2, Vector2, U2};

use crate::error::{Error, Result};
use crate::geometry::{rot, rot_derivative, wrap_two_pi};
use crate::gp_contour::GpContourModel;
use crate::landmark::DEGENERATE_RADIUS;
use crate::scalar::Real;

use super::POSE_DIM;

/// 2×D Jacobian of one point, nonzero only in the pose and one landmark block.
#[derive(Debug, Clone, PartialEq)]
pub struct PointJacobian<T: Real> {
    /// `∂h/∂(x, y, φ)`.
    pub pose: Matrix2x3<T>,
    pub center: Matrix2<T>,
    pub contour: OMatrix<T, U2, Dyn>,
    /// State index of the landmark's center block.
    pub offset: usize,
}

impl<T: Real> PointJacobian<T> {
    pub fn to_dense(&self, dim: usize) -> DMatrix<T> {
        let mut m = DMatrix::zeros(2, dim);
        m.view_mut((0, 0), (2, POSE_DIM)).copy_from(&self.pose);
        m.view_mut((0, self.offset), (2, 2)).copy_from(&self.center);
        let n = self.contour.ncols();
        m.view_mut((0, self.offset + 2), (2, n)).copy_from(&self.contour);
        m
    }

    /// The `[center | contour]` columns as one dense block.
    pub(crate) fn landmark_block(&self) -> DMatrix<T> {
        let n = self.contour.ncols();
        let mut m = DMatrix::zeros(2, 2 + n);
        m.view_mut((0, 0), (2, 2)).copy_from(&self.center);
        m.view_mut((0, 2), (2, n)).copy_from(&self.contour);
        m
    }
}

/// Everything the filter needs from one point at one linearization point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointLinearization<T: Real> {
    pub angle: T,
    pub predicted: Vector2<T>,
    pub noise: Matrix2<T>,
    pub jacobian: PointJacobian<T>,
}

/// Predicted robot-frame point for a given bearing `theta`, held fixed.
pub fn measurement_fn<T: Real>(
    mean: &nalgebra::DVector<T>,
    offset: usize,
    theta: T,
    model: &GpContourModel<T>,
) -> Vector2<T> {
    let n = model.basis_len();
    let pos = Vector2::new(mean[0], mean[1]);
    let center = Vector2::new(mean[offset], mean[offset + 1]);
    let (h_row, _) = model.measurement_model(wrap_two_pi(theta));
    let f = h_row.dot(&mean.rows(offset + 2, n).transpose());
    let p = Vector2::new(theta.cos(), theta.sin());
    rot(mean[2]).transpose() * (center + p * f - pos)
}

/// Noise of a point measurement: radial GP noise along the bearing plus the
/// Cartesian sensor noise, `Tᵀ p R_f pᵀ T + R`.
pub fn measurement_noise<T: Real>(theta: T, phi: T, r_f: T, r_xy: &Matrix2<T>) -> Matrix2<T> {
    let q = rot(phi).transpose() * Vector2::new(theta.cos(), theta.sin());
    q * q.transpose() * r_f + r_xy
}

/// Linearizes the point model at `mean`, recomputing the bearing from the state.
pub fn linearize_point<T: Real>(
    mean: &nalgebra::DVector<T>,
    offset: usize,
    z_local: &Vector2<T>,
    model: &GpContourModel<T>,
    r_xy: &Matrix2<T>,
) -> Result<PointLinearization<T>> {
    let n = model.basis_len();
    let pos = Vector2::new(mean[0], mean[1]);
    let phi = mean[2];
    let center = Vector2::new(mean[offset], mean[offset + 1]);
    let contour = mean.rows(offset + 2, n);

    let t = rot(phi);
    let tt = t.transpose();
    let dt = rot_derivative(phi);
    let tz = t * z_local;
    let d = tz + pos - center;
    let rho = d.norm();
    if !(rho >= T::of(DEGENERATE_RADIUS)) {
        return Err(Error::DegenerateGeometry(
            "scan point coincides with landmark center".into(),
        ));
    }
    let p = d / rho;
    let angle = wrap_two_pi(d.y.atan2(d.x));

    let (h_row, r_f) = model.measurement_model(angle);
    let dh_row = model.measurement_row_derivative(angle);
    let f = h_row.dot(&contour.transpose());
    let g = dh_row.dot(&contour.transpose());

    // derivative of the boundary point p(θ)·f(θ) with respect to the offset d
    let dp_dd = (Matrix2::identity() - p * p.transpose()) / rho;
    let dtheta_dd = RowVector2::new(-p.y, p.x) / rho;
    let a = dp_dd * f + p * dtheta_dd * g;

    let d_center = tt * (Matrix2::identity() - a);
    let d_pos = -d_center;
    let boundary = center + p * f - pos;
    let d_phi = dt.transpose() * boundary + tt * a * (dt * z_local);
    let q = tt * p;
    let d_contour = &q * &h_row;

    let mut pose = Matrix2x3::zeros();
    pose.fixed_view_mut::<2, 2>(0, 0).copy_from(&d_pos);
    pose.set_column(2, &d_phi);

    Ok(PointLinearization {
        angle,
        predicted: tt * boundary,
        noise: q * q.transpose() * r_f + r_xy,
        jacobian: PointJacobian {
            pose,
            center: d_center,
            contour: d_contour,
            offset,
        },
    })
}

/// Predicted point with the bearing evaluated from the state itself.
pub fn predicted_measurement<T: Real>(
    mean: &nalgebra::DVector<T>,
    offset: usize,
    z_local: &Vector2<T>,
    model: &GpContourModel<T>,
) -> Result<Vector2<T>> {
    let pos = Vector2::new(mean[0], mean[1]);
    let center = Vector2::new(mean[offset], mean[offset + 1]);
    let d = rot(mean[2]) * z_local + pos - center;
    if !(d.norm() >= T::of(DEGENERATE_RADIUS)) {
        return Err(Error::DegenerateGeometry(
            "scan point coincides with landmark center".into(),
        ));
    }
    Ok(measurement_fn(mean, offset, d.y.atan2(d.x), model))
}

/// Analytic Jacobian of [`predicted_measurement`] with respect to the state.
pub fn jacobian<T: Real>(
    mean: &nalgebra::DVector<T>,
    offset: usize,
    z_local: &Vector2<T>,
    model: &GpContourModel<T>,
) -> Result<PointJacobian<T>> {
    linearize_point(mean, offset, z_local, model, &Matrix2::zeros()).map(|l| l.jacobian)
}

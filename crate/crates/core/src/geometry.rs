//! 2D rigid-body helpers: rotations, frame transforms and angle wrapping.
//!
//! Matrices follow the usual row-major semantic order (row index = output
//! dimension). Heading wrapping is kept out of the differentiable paths and
//! applied explicitly by the filter after each update.

use nalgebra::{Matrix2, Vector2};

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Robot pose in the world frame: position plus heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotPose<T: Real> {
    pub position: Vector2<T>,
    /// Heading in radians, kept in `[-π, π)`.
    pub heading: T,
}

impl<T: Real> RobotPose<T> {
    /// Builds a pose, wrapping the heading into `[-π, π)`.
    pub fn new(x: T, y: T, heading: T) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(invalid("pose position must be finite"));
        }
        Ok(Self {
            position: Vector2::new(x, y),
            heading: normalize_angle(heading)?,
        })
    }

    pub fn identity() -> Self {
        Self {
            position: Vector2::zeros(),
            heading: T::zero(),
        }
    }

    /// Rotation `T(φ)` taking local vectors into the world frame.
    pub fn rotation(&self) -> Matrix2<T> {
        rot(self.heading)
    }
}

/// `[[cos φ, -sin φ], [sin φ, cos φ]]`.
pub fn rotation_matrix<T: Real>(phi: T) -> Result<Matrix2<T>> {
    if !phi.is_finite() {
        return Err(invalid("rotation angle must be finite"));
    }
    Ok(rot(phi))
}

#[inline]
pub(crate) fn rot<T: Real>(phi: T) -> Matrix2<T> {
    let (s, c) = phi.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Derivative of the rotation matrix with respect to its angle.
#[inline]
pub(crate) fn rot_derivative<T: Real>(phi: T) -> Matrix2<T> {
    let (s, c) = phi.sin_cos();
    Matrix2::new(-s, -c, c, -s)
}

/// Wraps an angle into `[-π, π)`.
pub fn normalize_angle<T: Real>(theta: T) -> Result<T> {
    if !theta.is_finite() {
        return Err(invalid("angle must be finite"));
    }
    Ok(wrap_pi(theta))
}

#[inline]
pub(crate) fn wrap_pi<T: Real>(theta: T) -> T {
    let pi = T::pi();
    let two_pi = T::two_pi();
    let mut r = theta - two_pi * ((theta + pi) / two_pi).floor();
    // floor can land one ulp on the wrong side of the interval bounds
    if r >= pi {
        r -= two_pi;
    }
    if r < -pi {
        r += two_pi;
    }
    r
}

/// Wraps an angle into `[0, 2π)`.
#[inline]
pub fn wrap_two_pi<T: Real>(theta: T) -> T {
    let two_pi = T::two_pi();
    let mut r = theta - two_pi * (theta / two_pi).floor();
    if r >= two_pi {
        r -= two_pi;
    }
    if r < T::zero() {
        r += two_pi;
    }
    r
}

/// Maps a robot-frame point into the world frame: `T(φ)·z + p`.
pub fn local_to_global<T: Real>(z_local: &Vector2<T>, pose: &RobotPose<T>) -> Vector2<T> {
    pose.rotation() * z_local + pose.position
}

/// Maps a world-frame point into the robot frame: `T(φ)ᵀ·(z − p)`.
pub fn global_to_local<T: Real>(z_global: &Vector2<T>, pose: &RobotPose<T>) -> Vector2<T> {
    pose.rotation().transpose() * (z_global - pose.position)
}

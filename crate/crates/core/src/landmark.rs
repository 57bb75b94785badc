//! Star-convex landmarks: a center plus a GP contour, and the radial
//! geometry that relates a scan point to them.

use nalgebra::Vector2;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};
use crate::geometry::{local_to_global, wrap_two_pi, RobotPose};
use crate::gp_contour::{ContourState, GpContourModel};
use crate::scalar::Real;

/// Offsets shorter than this have no usable bearing from the center.
pub const DEGENERATE_RADIUS: f64 = 1e-9;

/// Floor on the likelihood variance so a collapsed contour cannot divide by zero.
const MIN_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Landmark<T: Real> {
    pub id: u64,
    pub center: Vector2<T>,
    pub contour: ContourState<T>,
    /// Number of scan points that have been attributed to this landmark.
    pub hits: usize,
}

/// Mean contour with a symmetric confidence band, sampled on a uniform angle grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourBand<T: Real> {
    pub angles: Vec<T>,
    pub mean_radius: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> ContourBand<T> {
    /// Boundary points `center + r(θ)·p(θ)` of the (clamped) mean contour.
    pub fn mean_polygon(&self, center: &Vector2<T>) -> Vec<Vector2<T>> {
        self.angles
            .iter()
            .zip(&self.mean_radius)
            .map(|(&a, &r)| center + Vector2::new(a.cos(), a.sin()) * r.max(T::zero()))
            .collect()
    }
}

/// Bearing and distance of a scan point as seen from a landmark center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialObservation<T: Real> {
    /// Angle in `[0, 2π)`.
    pub angle: T,
    pub radius: T,
}

/// World-frame offset `T(φ)·z + p − c`.
#[inline]
pub(crate) fn center_offset<T: Real>(
    z_local: &Vector2<T>,
    pose: &RobotPose<T>,
    center: &Vector2<T>,
) -> Vector2<T> {
    local_to_global(z_local, pose) - center
}

pub fn radial_observation<T: Real>(
    z_local: &Vector2<T>,
    pose: &RobotPose<T>,
    center: &Vector2<T>,
) -> Result<RadialObservation<T>> {
    let d = center_offset(z_local, pose, center);
    let radius = d.norm();
    if !(radius >= T::of(DEGENERATE_RADIUS)) {
        return Err(Error::DegenerateGeometry(
            "scan point coincides with landmark center".into(),
        ));
    }
    Ok(RadialObservation {
        angle: wrap_two_pi(d.y.atan2(d.x)),
        radius,
    })
}

/// Angle of the scan point around the landmark center, in `[0, 2π)`.
pub fn measurement_angle<T: Real>(
    z_local: &Vector2<T>,
    pose: &RobotPose<T>,
    center: &Vector2<T>,
) -> Result<T> {
    radial_observation(z_local, pose, center).map(|o| o.angle)
}

/// Distance of the scan point from the landmark center.
pub fn radial_distance<T: Real>(z_local: &Vector2<T>, pose: &RobotPose<T>, center: &Vector2<T>) -> T {
    center_offset(z_local, pose, center).norm()
}

/// Gaussian density `N(r; μ, σ²)`.
pub fn gaussian_density<T: Real>(r: T, mean: T, var: T) -> T {
    let var = var.max(T::of(MIN_VARIANCE));
    let e = r - mean;
    (-(e * e) / (var + var)).exp() / (T::two_pi() * var).sqrt()
}

/// Squared Mahalanobis gate: accepts iff `(r − μ)²/σ² < γ`.
pub fn gate<T: Real>(r: T, mean: T, var: T, gamma: T) -> Result<bool> {
    if !(var > T::zero()) {
        return Err(invalid("gate variance must be positive"));
    }
    if !(gamma > T::zero()) {
        return Err(invalid("gate threshold must be positive"));
    }
    let e = r - mean;
    Ok(e * e / var < gamma)
}

/// Quantile of the chi-square distribution with `dof` degrees of freedom.
pub fn chi_square_quantile(p: f64, dof: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid("probability must lie in (0, 1)"));
    }
    let dist = ChiSquared::new(dof).map_err(|e| invalid(e.to_string()))?;
    Ok(dist.inverse_cdf(p))
}

/// Two-sided standard-normal multiplier for confidence level `c`.
pub fn normal_two_sided_quantile(c: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(invalid("confidence level must lie in (0, 1)"));
    }
    let n = Normal::standard();
    Ok(n.inverse_cdf(0.5 + 0.5 * c))
}

impl<T: Real> Landmark<T> {
    /// Prior landmark at `center` with an uninformed contour.
    pub fn new(id: u64, center: Vector2<T>, model: &GpContourModel<T>) -> Self {
        Self {
            id,
            center,
            contour: model.init_contour(),
            hits: 0,
        }
    }

    /// Predictive mean and variance of a radius measurement at `angle`:
    /// the contour marginal plus the radial measurement noise.
    pub fn radius_predictive(&self, angle: T, model: &GpContourModel<T>) -> (T, T) {
        let (mu, var) = model.predict_radius(angle, &self.contour);
        (mu, var + model.hyper().meas_noise)
    }

    /// Likelihood that this landmark produced the scan point.
    pub fn likelihood(
        &self,
        z_local: &Vector2<T>,
        pose: &RobotPose<T>,
        model: &GpContourModel<T>,
    ) -> Result<T> {
        let obs = radial_observation(z_local, pose, &self.center)?;
        let (mu, var) = self.radius_predictive(obs.angle, model);
        Ok(gaussian_density(obs.radius, mu, var))
    }

    /// Mean contour with a `confidence`-level band on `n` uniformly spaced angles.
    pub fn contour_band(
        &self,
        n: usize,
        confidence: f64,
        model: &GpContourModel<T>,
    ) -> Result<ContourBand<T>> {
        if n < 8 {
            return Err(invalid("contour band needs at least 8 samples"));
        }
        let zc = T::of(normal_two_sided_quantile(confidence)?);
        let step = T::two_pi() / T::of(n as f64);
        let mut band = ContourBand {
            angles: Vec::with_capacity(n),
            mean_radius: Vec::with_capacity(n),
            lower: Vec::with_capacity(n),
            upper: Vec::with_capacity(n),
        };
        for i in 0..n {
            let angle = step * T::of(i as f64);
            let (mu, var) = model.predict_radius(angle, &self.contour);
            let half = zc * var.sqrt();
            band.angles.push(angle);
            band.mean_radius.push(mu);
            band.lower.push((mu - half).max(T::zero()));
            band.upper.push(mu + half);
        }
        Ok(band)
    }

    /// Area enclosed by the mean contour, `½∮ max(μ, 0)² dθ` on `n` samples.
    pub fn area(&self, n: usize, model: &GpContourModel<T>) -> Result<T> {
        if n < 16 {
            return Err(invalid("area quadrature needs at least 16 samples"));
        }
        let step = T::two_pi() / T::of(n as f64);
        let sum = (0..n).fold(T::zero(), |acc, i| {
            let (mu, _) = model.predict_radius(step * T::of(i as f64), &self.contour);
            let r = mu.max(T::zero());
            acc + r * r
        });
        Ok(sum * step * T::of(0.5))
    }
}

//! Simulated 2D LiDAR and odometry.

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use starslam_core::geometry::{global_to_local, normalize_angle};
use starslam_core::Pose;
use std::f64::consts::TAU;

use crate::error::{scenario, Result};
use crate::world::WorldObject;

const ODOMETRY_STREAM: u64 = 0xFFFF;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    /// Angle between neighbouring beams (rad); must divide a full turn.
    pub angular_resolution: f64,
    pub max_range: f64,
    /// Std of the isotropic Cartesian noise on every hit (m).
    pub range_noise_std: f64,
    /// Covariance of the odometry increment noise `[x, y, heading]`.
    pub odom_noise: [[f64; 3]; 3],
    /// Overwritten by the scenario seed.
    #[serde(skip)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    /// Hit point in the robot frame.
    pub local: Vector2<f64>,
    /// Ground-truth object id; for evaluation only.
    pub object: usize,
}

impl SensorSpec {
    pub fn beam_count(&self) -> Result<usize> {
        let r = self.angular_resolution;
        if !(r > 0.0 && r.is_finite()) {
            return Err(scenario("angular_resolution must be positive"));
        }
        let n = (TAU / r).round();
        if n < 1.0 || (n * r - TAU).abs() > 1e-9 {
            return Err(scenario("angular_resolution must divide 2π evenly"));
        }
        Ok(n as usize)
    }

    pub fn odom_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.odom_noise[i][j])
    }

    pub fn validate(&self) -> Result<()> {
        self.beam_count()?;
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return Err(scenario("max_range must be positive"));
        }
        if !(self.range_noise_std >= 0.0 && self.range_noise_std.is_finite()) {
            return Err(scenario("range_noise_std must be non-negative"));
        }
        let q = self.odom_matrix();
        if (q - q.transpose()).amax() > 1e-12 || !q.iter().all(|v| v.is_finite()) {
            return Err(scenario("odom_noise must be symmetric"));
        }
        if (q + Matrix3::identity() * 1e-15).cholesky().is_none() {
            return Err(scenario("odom_noise must be positive semidefinite"));
        }
        Ok(())
    }

    /// Random stream for beam `beam` of scan `step`.
    fn stream(&self, step: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((step << 16) | index);
        rng
    }

    /// Odometry noise stream of step `step`.
    pub fn odometry_rng(&self, step: u64) -> ChaCha8Rng {
        self.stream(step, ODOMETRY_STREAM)
    }
}

/// Casts every beam from `pose` and returns the nearest hit per beam, with
/// Cartesian noise added in the world frame. Beam `b` points along
/// `heading + b·resolution`; beams without a hit are omitted.
pub fn raycast(world: &[WorldObject], pose: &Pose, spec: &SensorSpec, step: u64) -> Result<Vec<ScanPoint>> {
    if let Some(obj) = world.iter().find(|o| o.contains(&pose.position)) {
        return Err(scenario(format!("robot pose lies inside object {}", obj.id)));
    }
    let beams = spec.beam_count()?;
    let mut out = Vec::new();
    for b in 0..beams {
        let angle = pose.heading + b as f64 * spec.angular_resolution;
        let dir = Vector2::new(angle.cos(), angle.sin());
        let hit = world
            .iter()
            .filter_map(|o| o.ray_hit(&pose.position, &dir, spec.max_range).map(|t| (t, o.id)))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let Some((t, object)) = hit else { continue };
        let mut global = pose.position + dir * t;
        if spec.range_noise_std > 0.0 {
            let mut rng = spec.stream(step, b as u64);
            let nx: f64 = rng.sample(StandardNormal);
            let ny: f64 = rng.sample(StandardNormal);
            global += Vector2::new(nx, ny) * spec.range_noise_std;
        }
        out.push(ScanPoint {
            local: global_to_local(&global, pose),
            object,
        });
    }
    Ok(out)
}

/// Global-frame increment from `prev` to `curr` (heading delta wrapped)
/// plus a draw from the odometry noise.
pub fn odometry_increment<R: Rng + ?Sized>(prev: &Pose, curr: &Pose, spec: &SensorSpec, rng: &mut R) -> Result<Vector3<f64>> {
    let dpos = curr.position - prev.position;
    let dh = normalize_angle(curr.heading - prev.heading)?;
    let mut u = Vector3::new(dpos.x, dpos.y, dh);
    let q = spec.odom_matrix();
    if q.amax() > 0.0 {
        let l = (q + Matrix3::identity() * 1e-300)
            .cholesky()
            .ok_or_else(|| scenario("odom_noise must be positive semidefinite"))?
            .l();
        let e = Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        u += l * e;
    }
    Ok(u)
}

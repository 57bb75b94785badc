//! Scripted robot paths made of straight lines and circular arcs.

use serde::{Deserialize, Serialize};
use starslam_core::geometry::RobotPose;
use starslam_core::Pose;

use crate::error::{scenario, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Segment {
    Straight { length: f64, speed: f64 },
    /// Positive `sweep` turns left (counter-clockwise).
    Arc { radius: f64, sweep: f64, speed: f64 },
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match *self {
            Segment::Straight { length, speed } => length / speed,
            Segment::Arc { radius, sweep, speed } => radius * sweep.abs() / speed,
        }
    }

    /// Pose after driving this segment for `t` seconds from `start`.
    fn advance(&self, start: &Pose, t: f64) -> Pose {
        let (p0, phi0) = (start.position, start.heading);
        match *self {
            Segment::Straight { speed, .. } => {
                let d = speed * t;
                pose(p0.x + d * phi0.cos(), p0.y + d * phi0.sin(), phi0)
            }
            Segment::Arc { radius, sweep, speed } => {
                let s = sweep.signum();
                let phi = phi0 + s * speed * t / radius;
                let cx = p0.x - s * radius * phi0.sin();
                let cy = p0.y + s * radius * phi0.cos();
                pose(cx + s * radius * phi.sin(), cy - s * radius * phi.cos(), phi)
            }
        }
    }
}

fn pose(x: f64, y: f64, heading: f64) -> Pose {
    RobotPose::new(x, y, heading).expect("finite trajectory pose")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    /// `[x, y, heading]` at `t = 0`.
    pub start: [f64; 3],
    pub segments: Vec<Segment>,
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<()> {
        if !self.start.iter().all(|v| v.is_finite()) {
            return Err(scenario("trajectory start must be finite"));
        }
        if self.segments.is_empty() {
            return Err(scenario("trajectory needs at least one segment"));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            let ok = match *seg {
                Segment::Straight { length, speed } => length > 0.0 && speed > 0.0 && length.is_finite(),
                Segment::Arc { radius, sweep, speed } => {
                    radius > 0.0 && speed > 0.0 && sweep != 0.0 && sweep.is_finite() && radius.is_finite()
                }
            };
            if !ok || !seg.duration().is_finite() {
                return Err(scenario(format!(
                    "trajectory segment {i}: lengths, radii and speeds must be positive and the sweep non-zero"
                )));
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(Segment::duration).sum()
    }

    pub fn start_pose(&self) -> Pose {
        pose(self.start[0], self.start[1], self.start[2])
    }

    pub fn pose_at(&self, t: f64) -> Result<Pose> {
        let total = self.duration();
        if !(t >= 0.0 && t <= total * (1.0 + 1e-12)) {
            return Err(scenario(format!("time {t} outside the trajectory [0, {total}]")));
        }
        let mut start = self.start_pose();
        let mut elapsed = 0.0;
        for seg in &self.segments {
            let d = seg.duration();
            if t <= elapsed + d {
                return Ok(seg.advance(&start, t - elapsed));
            }
            start = seg.advance(&start, d);
            elapsed += d;
        }
        Ok(start)
    }
}

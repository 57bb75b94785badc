//! Newline-delimited JSON record of a run: one header line, then one line
//! per filter step.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use starslam_core::geometry::RobotPose;
use starslam_core::pipeline::{Phase, PointFate};
use starslam_core::Pose;
use std::f64::consts::TAU;
use std::io::{BufRead, Write};

use crate::error::{Result, SimError};
use crate::metrics::{association_accuracy, map_iou, pose_rmse, PoseRmse};
use crate::world::WorldObject;

pub const RUNLOG_FORMAT: u32 = 1;

/// Confidence level of the logged contour bands.
pub const BAND_CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunHeader {
    pub format: u32,
    pub scenario: String,
    pub seed: u64,
    pub dt: f64,
    pub contour_samples: usize,
    pub snapshot_every: usize,
    pub iou_resolution: f64,
    pub band_confidence: f64,
    pub truth: Vec<WorldObject>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseTag {
    Predict,
    Associate,
    Initiate,
    Correct,
}

impl From<Phase> for PhaseTag {
    fn from(p: Phase) -> Self {
        match p {
            Phase::Predict => PhaseTag::Predict,
            Phase::Associate => PhaseTag::Associate,
            Phase::Initiate => PhaseTag::Initiate,
            Phase::Correct => PhaseTag::Correct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fate {
    Associated(u64),
    Initiated(u64),
    Discarded,
}

impl From<PointFate> for Fate {
    fn from(f: PointFate) -> Self {
        match f {
            PointFate::Associated(id) => Fate::Associated(id),
            PointFate::Initiated(id) => Fate::Initiated(id),
            PointFate::Discarded => Fate::Discarded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRecord {
    /// Robot-frame hit.
    pub local: [f64; 2],
    /// Ground-truth object that produced the hit.
    pub object: usize,
    pub fate: Fate,
}

/// Mean contour and band radii at `contour_samples` uniform angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandmarkSnapshot {
    pub id: u64,
    pub center: [f64; 2],
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

fn radial_polygon(center: [f64; 2], radii: &[f64]) -> Vec<Vector2<f64>> {
    let c = Vector2::new(center[0], center[1]);
    let n = radii.len();
    radii
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let a = TAU * k as f64 / n as f64;
            c + Vector2::new(a.cos(), a.sin()) * r.max(0.0)
        })
        .collect()
}

impl LandmarkSnapshot {
    pub fn mean_polygon(&self) -> Vec<Vector2<f64>> {
        radial_polygon(self.center, &self.mean)
    }

    pub fn lower_polygon(&self) -> Vec<Vector2<f64>> {
        radial_polygon(self.center, &self.lower)
    }

    pub fn upper_polygon(&self) -> Vec<Vector2<f64>> {
        radial_polygon(self.center, &self.upper)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    /// `[x, y, heading]`.
    pub true_pose: [f64; 3],
    pub est_pose: [f64; 3],
    /// Marginal standard deviations of the estimated pose.
    pub pose_std: [f64; 3],
    pub phases: Vec<PhaseTag>,
    pub iterations: usize,
    pub converged: bool,
    /// Relative asymmetry of the joint covariance after the step.
    pub asymmetry: f64,
    pub psd: bool,
    pub landmarks: Vec<LandmarkSnapshot>,
    pub points: Vec<PointRecord>,
}

fn to_pose(p: &[f64; 3]) -> Pose {
    RobotPose::new(p[0], p[1], p[2]).expect("logged poses are finite")
}

impl StepRecord {
    pub fn true_pose(&self) -> Pose {
        to_pose(&self.true_pose)
    }

    pub fn est_pose(&self) -> Pose {
        to_pose(&self.est_pose)
    }

    pub fn mean_polygons(&self) -> Vec<Vec<Vector2<f64>>> {
        self.landmarks.iter().map(LandmarkSnapshot::mean_polygon).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub header: RunHeader,
    pub steps: Vec<StepRecord>,
}

impl RunLog {
    pub fn write_ndjson<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for s in &self.steps {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_ndjson(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_ndjson(&mut buf)?;
        Ok(buf)
    }

    pub fn read_ndjson<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate().filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));
        let bad = |line: usize, e: serde_json::Error| SimError::RunLog {
            line: line + 1,
            message: e.to_string(),
        };
        let (i, first) = lines.next().ok_or(SimError::RunLog {
            line: 1,
            message: "empty run log".into(),
        })?;
        let header: RunHeader = serde_json::from_str(&first?).map_err(|e| bad(i, e))?;
        if header.format != RUNLOG_FORMAT {
            return Err(SimError::RunLog {
                line: 1,
                message: format!("unsupported format {}", header.format),
            });
        }
        let mut steps = Vec::new();
        for (i, line) in lines {
            steps.push(serde_json::from_str(&line?).map_err(|e| bad(i, e))?);
        }
        Ok(Self { header, steps })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::read_ndjson(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn true_poses(&self) -> Vec<Pose> {
        self.steps.iter().map(StepRecord::true_pose).collect()
    }

    pub fn est_poses(&self) -> Vec<Pose> {
        self.steps.iter().map(StepRecord::est_pose).collect()
    }

    pub fn pose_rmse(&self) -> Result<PoseRmse> {
        pose_rmse(&self.true_poses(), &self.est_poses())
    }

    pub fn iou_at(&self, step: usize) -> Result<f64> {
        map_iou(&self.steps[step].mean_polygons(), &self.header.truth, self.header.iou_resolution)
    }

    pub fn final_iou(&self) -> Result<f64> {
        if self.steps.is_empty() {
            return Err(SimError::InvalidScenario("run log has no steps".into()));
        }
        self.iou_at(self.steps.len() - 1)
    }

    /// `(true object, landmark)` of every point used in a correction.
    pub fn association_pairs(&self) -> Vec<(usize, u64)> {
        self.steps
            .iter()
            .flat_map(|s| s.points.iter())
            .filter_map(|p| match p.fate {
                Fate::Associated(id) => Some((p.object, id)),
                _ => None,
            })
            .collect()
    }

    pub fn association_accuracy(&self) -> f64 {
        association_accuracy(&self.association_pairs())
    }
}

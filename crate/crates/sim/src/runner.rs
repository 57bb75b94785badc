//! Drives the filter through a simulated scenario.

use nalgebra::Vector2;
use starslam_core::pipeline::Estimator;
use starslam_core::Filter;

use crate::config::ScenarioConfig;
use crate::error::{Result, SimError};
use crate::runlog::{LandmarkSnapshot, PointRecord, RunHeader, RunLog, StepRecord, BAND_CONFIDENCE, RUNLOG_FORMAT};
use crate::sensor::{odometry_increment, raycast};

fn snapshot(est: &Filter, samples: usize) -> Result<Vec<LandmarkSnapshot>> {
    let model = est.model();
    est.state()
        .landmarks()
        .iter()
        .map(|lm| {
            let band = lm.contour_band(samples, BAND_CONFIDENCE, model)?;
            Ok(LandmarkSnapshot {
                id: lm.id,
                center: [lm.center.x, lm.center.y],
                mean: band.mean_radius,
                lower: band.lower,
                upper: band.upper,
            })
        })
        .collect()
}

/// Runs the filter on the scenario: a scan at `t = 0` without motion, then
/// one odometry increment and one scan per `dt`. The filter starts at the
/// true initial pose.
pub fn run(cfg: &ScenarioConfig) -> Result<RunLog> {
    cfg.validate()?;
    let sensor = cfg.seeded_sensor();
    let traj = &cfg.trajectory;
    let mut est = Estimator::new(
        traj.start_pose(),
        cfg.initial_pose_cov(),
        cfg.contour_model()?,
        cfg.noise(),
        cfg.assoc_config()?,
        cfg.iekf_settings(),
    )?;
    let header = RunHeader {
        format: RUNLOG_FORMAT,
        scenario: cfg.name.clone(),
        seed: cfg.seed,
        dt: cfg.dt,
        contour_samples: cfg.output.contour_samples,
        snapshot_every: cfg.output.snapshot_every,
        iou_resolution: cfg.output.iou_resolution,
        band_confidence: BAND_CONFIDENCE,
        truth: cfg.world.clone(),
    };
    let steps = cfg.steps();
    let mut records = Vec::with_capacity(steps + 1);
    let mut prev = traj.start_pose();
    for k in 0..=steps {
        let time = k as f64 * cfg.dt;
        let truth = traj.pose_at(time.min(traj.duration()))?;
        let odometry = if k == 0 {
            None
        } else {
            Some(odometry_increment(&prev, &truth, &sensor, &mut sensor.odometry_rng(k as u64))?)
        };
        let scan = raycast(&cfg.world, &truth, &sensor, k as u64)?;
        let local: Vec<Vector2<f64>> = scan.iter().map(|p| p.local).collect();
        let report = est
            .step(odometry.as_ref(), &local)
            .map_err(|source| SimError::Filter { step: k, source })?;
        let pose = est.state().pose();
        let pc = est.state().pose_cov();
        records.push(StepRecord {
            step: k,
            time,
            true_pose: [truth.position.x, truth.position.y, truth.heading],
            est_pose: [pose.position.x, pose.position.y, pose.heading],
            pose_std: [pc[(0, 0)].sqrt(), pc[(1, 1)].sqrt(), pc[(2, 2)].sqrt()],
            phases: report.phases.iter().map(|&p| p.into()).collect(),
            iterations: report.iterations,
            converged: report.converged,
            asymmetry: report.health.asymmetry,
            psd: report.health.psd,
            landmarks: snapshot(&est, cfg.output.contour_samples)?,
            points: scan
                .iter()
                .zip(&report.fates)
                .map(|(p, f)| PointRecord {
                    local: [p.local.x, p.local.y],
                    object: p.object,
                    fate: (*f).into(),
                })
                .collect(),
        });
        prev = truth;
    }
    Ok(RunLog { header, steps: records })
}

//! One filter cycle per scan: prediction, association, initiation of new
//! objects from leftover clusters, then the iterated correction.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::association::{associate, cluster, initiate, AssociationConfig};
use crate::error::{Error, Result};
use crate::geometry::{local_to_global, RobotPose};
use crate::gp_contour::GpContourModel;
use crate::scalar::Real;
use crate::slam::{CovarianceHealth, IekfSettings, NoiseConfig, SlamState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Predict,
    Associate,
    Initiate,
    Correct,
}

/// What happened to one scan point during a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFate {
    /// Used in the correction of this landmark.
    Associated(u64),
    /// Seeded this newly created landmark.
    Initiated(u64),
    /// Rejected by every gate and not part of any retained cluster.
    Discarded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub phases: Vec<Phase>,
    /// One entry per input scan point, in input order.
    pub fates: Vec<PointFate>,
    pub initiated: Vec<u64>,
    pub iterations: usize,
    pub converged: bool,
    pub health: CovarianceHealth,
}

#[derive(Debug, Clone)]
pub struct Estimator<T: Real> {
    state: SlamState<T>,
    model: GpContourModel<T>,
    noise: NoiseConfig<T>,
    assoc: AssociationConfig<T>,
    iekf: IekfSettings<T>,
    health_tol: f64,
    next_id: u64,
}

impl<T: Real> Estimator<T> {
    pub fn new(
        pose: RobotPose<T>,
        pose_cov: Matrix3<T>,
        model: GpContourModel<T>,
        noise: NoiseConfig<T>,
        assoc: AssociationConfig<T>,
        iekf: IekfSettings<T>,
    ) -> Result<Self> {
        assoc.validate()?;
        if iekf.max_iter == 0 {
            return Err(Error::InvalidArgument("IEKF needs at least one iteration".into()));
        }
        Ok(Self {
            state: SlamState::new(pose, pose_cov, model.basis_len()),
            model,
            noise,
            assoc,
            iekf,
            health_tol: 1e-9,
            next_id: 0,
        })
    }

    /// Relative tolerance of the per-step covariance check.
    pub fn with_health_tolerance(mut self, tol: f64) -> Self {
        self.health_tol = tol;
        self
    }

    pub fn state(&self) -> &SlamState<T> {
        &self.state
    }

    pub fn model(&self) -> &GpContourModel<T> {
        &self.model
    }

    /// Runs one cycle. `odometry` is `None` for a scan taken without motion
    /// (the initial one). Fails with [`Error::NumericalFailure`] when the
    /// covariance stops being symmetric positive semidefinite.
    pub fn step(&mut self, odometry: Option<&Vector3<T>>, scan: &[Vector2<T>]) -> Result<StepReport> {
        let mut phases = Vec::with_capacity(4);
        if let Some(u) = odometry {
            self.state.predict(u, &self.noise, &self.model)?;
            phases.push(Phase::Predict);
        }

        let associated = associate(scan, &self.state, &self.assoc, &self.model);
        phases.push(Phase::Associate);
        let mut fates = vec![PointFate::Discarded; scan.len()];
        for g in &associated.groups {
            let id = self.state.slots()[g.landmark].id;
            for p in &g.points {
                fates[p.scan_index] = PointFate::Associated(id);
            }
        }

        let pose = self.state.pose();
        let leftovers: Vec<Vector2<T>> = associated
            .unassociated
            .iter()
            .map(|(_, z)| local_to_global(z, &pose))
            .collect();
        let mut initiated = Vec::new();
        let clusters = cluster(&leftovers, &self.assoc);
        if !clusters.is_empty() {
            phases.push(Phase::Initiate);
        }
        for members in clusters {
            let points: Vec<Vector2<T>> = members.iter().map(|&i| leftovers[i]).collect();
            let lm = match initiate(self.next_id, &points, &pose, &self.assoc, &self.model) {
                Ok(lm) => lm,
                Err(Error::DegenerateGeometry(_)) => continue,
                Err(e) => return Err(e),
            };
            self.state.augment(&lm, &self.assoc.init_center_cov)?;
            for &i in &members {
                fates[associated.unassociated[i].0] = PointFate::Initiated(lm.id);
            }
            initiated.push(lm.id);
            self.next_id += 1;
        }

        let mut iterations = 0;
        let mut converged = true;
        if !associated.is_empty() {
            let out = self
                .state
                .correct(&associated, &self.model, &self.noise, &self.iekf)?
                .expect("non-empty association yields a correction");
            iterations = out.iterations;
            converged = out.converged;
            phases.push(Phase::Correct);
        }

        let health = self.state.health(self.health_tol);
        if !health.ok(self.health_tol) {
            return Err(Error::NumericalFailure(format!(
                "covariance lost symmetry or definiteness (asymmetry {:e}, psd {})",
                health.asymmetry, health.psd
            )));
        }
        Ok(StepReport {
            phases,
            fates,
            initiated,
            iterations,
            converged,
            health,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp_contour::{BasisGrid, GpHyperparams, PeriodicForm};
    use crate::landmark::chi_square_quantile;
    use nalgebra::Matrix2;
    use std::f64::consts::PI;

    fn estimator(pose: RobotPose<f64>) -> Estimator<f64> {
        let h = GpHyperparams {
            sigma_f: 0.3,
            length_scale: 0.2,
            sigma_r: 1.5,
            meas_noise: 1e-3,
            forgetting: 0.0,
            form: PeriodicForm::HalfAngle,
        };
        let model = GpContourModel::new(BasisGrid::uniform(50).unwrap(), h).unwrap();
        let noise = NoiseConfig {
            pose: Matrix3::from_diagonal(&Vector3::new(1e-4, 1e-4, 1e-5)),
            center: Matrix2::zeros(),
            cartesian: Matrix2::identity() * 1e-3,
        };
        let assoc = AssociationConfig {
            gate_gamma: chi_square_quantile(0.99, 1.0).unwrap(),
            cluster_eps: 0.4,
            cluster_min_pts: 3,
            min_cluster_size: 4,
            init_center_cov: Matrix2::identity() * 0.01,
            center_depth: 0.0,
        };
        Estimator::new(pose, Matrix3::zeros(), model, noise, assoc, IekfSettings::default()).unwrap()
    }

    fn ring(center: Vector2<f64>, r: f64, pose: &RobotPose<f64>) -> Vec<Vector2<f64>> {
        (0..40)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / 40.0;
                crate::geometry::global_to_local(&(center + Vector2::new(a.cos(), a.sin()) * r), pose)
            })
            .collect()
    }

    #[test]
    fn first_scan_initiates_then_later_scans_associate() {
        let pose = RobotPose::identity();
        let mut est = estimator(pose);
        let scan = ring(Vector2::new(4.0, 0.0), 1.0, &pose);
        let first = est.step(None, &scan).unwrap();
        assert_eq!(first.phases, vec![Phase::Associate, Phase::Initiate]);
        assert_eq!(first.initiated, vec![0]);
        assert!(first.fates.iter().all(|f| *f == PointFate::Initiated(0)));

        let second = est.step(Some(&Vector3::zeros()), &scan).unwrap();
        assert_eq!(second.phases, vec![Phase::Predict, Phase::Associate, Phase::Correct]);
        assert!(second.fates.iter().all(|f| *f == PointFate::Associated(0)));
        assert_eq!(est.state().landmark_count(), 1);
        assert!(second.iterations >= 1);
    }

    #[test]
    fn empty_scans_follow_dead_reckoning() {
        let mut est = estimator(RobotPose::identity());
        let u = Vector3::new(0.1, -0.05, 0.02);
        for _ in 0..10 {
            let r = est.step(Some(&u), &[]).unwrap();
            assert_eq!(r.phases, vec![Phase::Predict, Phase::Associate]);
        }
        let p = est.state().pose();
        assert!((p.position - Vector2::new(1.0, -0.5)).norm() < 1e-12);
        assert!((p.heading - 0.2).abs() < 1e-12);
        assert_eq!(est.state().landmark_count(), 0);
    }

    #[test]
    fn correction_never_precedes_association() {
        let pose = RobotPose::identity();
        let mut est = estimator(pose);
        let scan = ring(Vector2::new(3.0, 1.0), 0.8, &pose);
        for k in 0..5 {
            let odo = Vector3::zeros();
            let r = est.step(if k == 0 { None } else { Some(&odo) }, &scan).unwrap();
            let a = r.phases.iter().position(|p| *p == Phase::Associate).unwrap();
            if let Some(c) = r.phases.iter().position(|p| *p == Phase::Correct) {
                assert!(a < c);
            }
        }
    }
}

//! Versioned JSON scenario description.

use nalgebra::{Matrix2, Matrix3, SMatrix};
use serde::{Deserialize, Serialize};
use starslam_core::gp_contour::{BasisGrid, PeriodicForm};
use starslam_core::landmark::chi_square_quantile;
use starslam_core::{AssocConfig, ContourModel, Hyperparams, Noise, Settings};
use std::collections::BTreeSet;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use crate::error::{Result, SimError};
use crate::sensor::SensorSpec;
use crate::trajectory::TrajectorySpec;
use crate::world::WorldObject;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelForm {
    #[default]
    HalfAngle,
    FullAngle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpSection {
    pub sigma_f: f64,
    pub length_scale: f64,
    pub sigma_r: f64,
    pub meas_noise: f64,
    #[serde(default)]
    pub forgetting: f64,
    #[serde(default)]
    pub form: KernelForm,
}

/// Filter-side noise model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub initial_pose_cov: [[f64; 3]; 3],
    pub pose: [[f64; 3]; 3],
    pub center: [[f64; 2]; 2],
    pub cartesian: [[f64; 2]; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssociationSection {
    /// Chi-square gate threshold; give this or `gate_probability`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_gamma: Option<f64>,
    /// Gate acceptance probability, turned into a 1-dof chi-square quantile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_probability: Option<f64>,
    pub cluster_eps: f64,
    pub cluster_min_pts: usize,
    pub min_cluster_size: usize,
    pub init_center_cov: [[f64; 2]; 2],
    #[serde(default)]
    pub center_depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IekfSection {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for IekfSection {
    fn default() -> Self {
        Self { max_iter: 10, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Steps between SVG map snapshots.
    pub snapshot_every: usize,
    /// Angles at which landmark contours are logged.
    pub contour_samples: usize,
    /// Raster cell size for IoU (m).
    pub iou_resolution: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            snapshot_every: 10,
            contour_samples: 72,
            iou_resolution: 0.05,
        }
    }
}

fn default_basis() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub name: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Time between consecutive scans (s).
    pub dt: f64,
    pub world: Vec<WorldObject>,
    pub trajectory: TrajectorySpec,
    pub sensor: SensorSpec,
    pub gp: GpSection,
    #[serde(default = "default_basis")]
    pub basis_count: usize,
    pub filter: FilterSection,
    pub association: AssociationSection,
    #[serde(default)]
    pub iekf: IekfSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn at(path: impl Into<String>, msg: impl Display) -> SimError {
    SimError::Config {
        path: path.into(),
        message: msg.to_string(),
    }
}

fn matrix<const N: usize>(m: &[[f64; N]; N]) -> SMatrix<f64, N, N> {
    SMatrix::from_fn(|i, j| m[i][j])
}

fn check_cov<const N: usize>(path: &str, m: &[[f64; N]; N]) -> Result<()> {
    let m = matrix(m);
    if !m.iter().all(|v| v.is_finite()) {
        return Err(at(path, "entries must be finite"));
    }
    if (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
        return Err(at(path, "matrix must be symmetric"));
    }
    let bump = 1e-12 * m.trace().abs() + f64::MIN_POSITIVE;
    if (m + SMatrix::<f64, N, N>::identity() * bump).cholesky().is_none() {
        return Err(at(path, "matrix must be positive semidefinite"));
    }
    Ok(())
}

impl ScenarioConfig {
    /// Parses and validates a scenario; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            at(path, e.into_inner())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Four regular polygons circled by a path of straights and arcs.
    pub fn sim1() -> Self {
        Self::from_json(include_str!("../scenarios/sim1.json")).expect("bundled sim1 scenario is valid")
    }

    /// Eight smooth irregular shapes; the path returns to its start.
    pub fn sim2() -> Self {
        Self::from_json(include_str!("../scenarios/sim2.json")).expect("bundled sim2 scenario is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(at("version", format!("unsupported version {}, expected {CONFIG_VERSION}", self.version)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(at("dt", "must be positive"));
        }
        let mut ids = BTreeSet::new();
        for (i, o) in self.world.iter().enumerate() {
            o.validate().map_err(|e| at(format!("world[{i}]"), e))?;
            if !ids.insert(o.id) {
                return Err(at(format!("world[{i}].id"), format!("duplicate object id {}", o.id)));
            }
        }
        self.trajectory.validate().map_err(|e| at("trajectory", e))?;
        let start = self.trajectory.start_pose();
        if let Some(o) = self.world.iter().find(|o| o.contains(&start.position)) {
            return Err(at("trajectory.start", format!("starts inside object {}", o.id)));
        }
        self.sensor.validate().map_err(|e| at("sensor", e))?;
        self.hyperparams().validate().map_err(|e| at("gp", e))?;
        if self.basis_count < 4 {
            return Err(at("basis_count", "must be at least 4"));
        }
        check_cov("filter.initial_pose_cov", &self.filter.initial_pose_cov)?;
        check_cov("filter.pose", &self.filter.pose)?;
        check_cov("filter.center", &self.filter.center)?;
        check_cov("filter.cartesian", &self.filter.cartesian)?;
        check_cov("association.init_center_cov", &self.association.init_center_cov)?;
        match (self.association.gate_gamma, self.association.gate_probability) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(at("association", "give exactly one of gate_gamma and gate_probability"));
            }
            (None, Some(p)) if !(p > 0.0 && p < 1.0) => {
                return Err(at("association.gate_probability", "must lie in (0, 1)"));
            }
            _ => {}
        }
        self.assoc_config()?.validate().map_err(|e| at("association", e))?;
        if self.iekf.max_iter == 0 {
            return Err(at("iekf.max_iter", "must be at least 1"));
        }
        if !(self.iekf.tol > 0.0) {
            return Err(at("iekf.tol", "must be positive"));
        }
        if self.output.snapshot_every == 0 {
            return Err(at("output.snapshot_every", "must be at least 1"));
        }
        if self.output.contour_samples < 16 {
            return Err(at("output.contour_samples", "must be at least 16"));
        }
        if !(self.output.iou_resolution > 0.0) {
            return Err(at("output.iou_resolution", "must be positive"));
        }
        if self.steps() == 0 {
            return Err(at("dt", "longer than the whole trajectory"));
        }
        Ok(())
    }

    /// Number of motion steps; scans are taken at `k·dt` for `k = 0..=steps`.
    pub fn steps(&self) -> usize {
        (self.trajectory.duration() / self.dt + 1e-9).floor() as usize
    }

    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            sigma_f: self.gp.sigma_f,
            length_scale: self.gp.length_scale,
            sigma_r: self.gp.sigma_r,
            meas_noise: self.gp.meas_noise,
            forgetting: self.gp.forgetting,
            form: match self.gp.form {
                KernelForm::HalfAngle => PeriodicForm::HalfAngle,
                KernelForm::FullAngle => PeriodicForm::FullAngle,
            },
        }
    }

    pub fn contour_model(&self) -> Result<ContourModel> {
        let grid = BasisGrid::uniform(self.basis_count).map_err(|e| at("basis_count", e))?;
        ContourModel::new(grid, self.hyperparams()).map_err(|e| at("gp", e))
    }

    pub fn noise(&self) -> Noise {
        Noise {
            pose: matrix(&self.filter.pose),
            center: matrix(&self.filter.center),
            cartesian: matrix(&self.filter.cartesian),
        }
    }

    pub fn initial_pose_cov(&self) -> Matrix3<f64> {
        matrix(&self.filter.initial_pose_cov)
    }

    pub fn gate_gamma(&self) -> Result<f64> {
        match (self.association.gate_gamma, self.association.gate_probability) {
            (Some(g), _) => Ok(g),
            (None, Some(p)) => chi_square_quantile(p, 1.0).map_err(|e| at("association.gate_probability", e)),
            (None, None) => Err(at("association", "missing gate_gamma or gate_probability")),
        }
    }

    pub fn assoc_config(&self) -> Result<AssocConfig> {
        let a = &self.association;
        Ok(AssocConfig {
            gate_gamma: self.gate_gamma()?,
            cluster_eps: a.cluster_eps,
            cluster_min_pts: a.cluster_min_pts,
            min_cluster_size: a.min_cluster_size,
            init_center_cov: Matrix2::from_fn(|i, j| a.init_center_cov[i][j]),
            center_depth: a.center_depth,
        })
    }

    pub fn iekf_settings(&self) -> Settings {
        Settings {
            max_iter: self.iekf.max_iter,
            tol: self.iekf.tol,
        }
    }

    /// Sensor spec carrying the scenario seed.
    pub fn seeded_sensor(&self) -> SensorSpec {
        SensorSpec {
            seed: self.seed,
            ..self.sensor.clone()
        }
    }
}

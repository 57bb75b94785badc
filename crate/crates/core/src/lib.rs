//! Joint robot-pose and object-map estimation from 2D range scans.
//!
//! Every map object is a star-convex shape: a center plus a radial contour
//! `r = f(θ)` modelled as a Gaussian process over a fixed grid of basis
//! angles. Pose, centers and contour values live in one augmented state that
//! is propagated with additive odometry and corrected by an iterated EKF.
//! Scan points are attributed to objects by gated maximum likelihood under
//! the contour's predictive distribution; leftovers are clustered and spawn
//! new objects.
//!
//! All estimator types are generic over the scalar ([`Real`]); the aliases
//! below fix it to `f64`.

pub mod association;
pub mod error;
pub mod geometry;
pub mod gp_contour;
pub mod landmark;
pub mod pipeline;
pub mod scalar;
pub mod slam;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Pose = geometry::RobotPose<f64>;
pub type Hyperparams = gp_contour::GpHyperparams<f64>;
pub type Grid = gp_contour::BasisGrid<f64>;
pub type Contour = gp_contour::ContourState<f64>;
pub type ContourModel = gp_contour::GpContourModel<f64>;
pub type Object = landmark::Landmark<f64>;
pub type Band = landmark::ContourBand<f64>;
pub type State = slam::SlamState<f64>;
pub type Noise = slam::NoiseConfig<f64>;
pub type Settings = slam::IekfSettings<f64>;
pub type Scan = slam::AssociatedScan<f64>;
pub type AssocConfig = association::AssociationConfig<f64>;
pub type Filter = pipeline::Estimator<f64>;

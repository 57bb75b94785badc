//! Scalar abstraction shared by every estimator type in the crate.
//!
//! All filter math is written against [`Real`], so the same code runs in
//! `f64` (the default, see the aliases at the crate root) or `f32`.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the estimator: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// Lossy conversion back to `f64`, used at reporting boundaries.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + ToPrimitive {}

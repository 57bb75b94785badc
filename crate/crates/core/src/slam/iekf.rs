//! Iterated EKF measurement update over a block-sparse stacked model.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::gp_contour::symmetrize;
use crate::scalar::Real;

/// Jacobian rows of one measurement group, stored as dense column segments.
#[derive(Debug, Clone, PartialEq)]
pub struct RowBlock<T: Real> {
    pub row: usize,
    pub rows: usize,
    /// `(first column, dense rows × width block)`, non-overlapping.
    pub segments: Vec<(usize, DMatrix<T>)>,
}

/// A linearized measurement model `z ≈ h(x̄) + H (x − x̄)`, noise `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedModel<T: Real> {
    pub z: DVector<T>,
    /// Predicted measurement at the linearization point.
    pub h: DVector<T>,
    pub blocks: Vec<RowBlock<T>>,
    /// Square diagonal blocks of `R` as `(first row, block)`.
    pub noise: Vec<(usize, DMatrix<T>)>,
    pub state_dim: usize,
}

impl<T: Real> StackedModel<T> {
    pub fn rows(&self) -> usize {
        self.z.len()
    }

    pub fn jacobian_dense(&self) -> DMatrix<T> {
        let mut h = DMatrix::zeros(self.rows(), self.state_dim);
        for b in &self.blocks {
            for (c0, j) in &b.segments {
                h.view_mut((b.row, *c0), j.shape()).copy_from(j);
            }
        }
        h
    }

    pub fn noise_dense(&self) -> DMatrix<T> {
        let mut r = DMatrix::zeros(self.rows(), self.rows());
        for (r0, blk) in &self.noise {
            r.view_mut((*r0, *r0), blk.shape()).copy_from(blk);
        }
        r
    }

    /// `H·v` without materializing `H`.
    pub fn apply_jacobian(&self, v: &DVector<T>) -> DVector<T> {
        let mut out = DVector::zeros(self.rows());
        for b in &self.blocks {
            let mut dst = out.rows_mut(b.row, b.rows);
            for (c0, j) in &b.segments {
                dst.gemv(T::one(), j, &v.rows(*c0, j.ncols()), T::one());
            }
        }
        out
    }

    /// `P·Hᵀ`.
    fn cov_times_jt(&self, cov: &DMatrix<T>) -> DMatrix<T> {
        let mut pht = DMatrix::zeros(cov.nrows(), self.rows());
        for b in &self.blocks {
            let mut dst = pht.columns_mut(b.row, b.rows);
            for (c0, j) in &b.segments {
                dst.gemm(T::one(), &cov.columns(*c0, j.ncols()), &j.transpose(), T::one());
            }
        }
        pht
    }

    /// `H·(P·Hᵀ) + R`, symmetrized.
    fn innovation_cov(&self, pht: &DMatrix<T>) -> DMatrix<T> {
        let m = self.rows();
        let mut s = DMatrix::zeros(m, m);
        for b in &self.blocks {
            let mut dst = s.rows_mut(b.row, b.rows);
            for (c0, j) in &b.segments {
                dst.gemm(T::one(), j, &pht.rows(*c0, j.ncols()), T::one());
            }
        }
        for (r0, blk) in &self.noise {
            let mut dst = s.view_mut((*r0, *r0), blk.shape());
            dst += blk;
        }
        symmetrize(&mut s);
        s
    }
}

/// Anything that can be linearized around a state estimate.
pub trait MeasurementModel<T: Real> {
    fn linearize(&self, x: &DVector<T>) -> Result<StackedModel<T>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IekfSettings<T: Real> {
    pub max_iter: usize,
    /// Stop once the iterate moves less than this (state-vector norm).
    pub tol: T,
}

impl<T: Real> Default for IekfSettings<T> {
    fn default() -> Self {
        Self {
            max_iter: 10,
            tol: T::of(1e-6),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IekfOutcome<T: Real> {
    pub mean: DVector<T>,
    pub cov: DMatrix<T>,
    pub iterations: usize,
    pub converged: bool,
}

fn factor<T: Real>(mut s: DMatrix<T>) -> Result<nalgebra::Cholesky<T, nalgebra::Dyn>> {
    if let Some(c) = s.clone().cholesky() {
        return Ok(c);
    }
    let bump = s.trace() * T::of(1e-9);
    for i in 0..s.nrows() {
        s[(i, i)] += bump;
    }
    s.cholesky().ok_or_else(|| {
        Error::NumericalFailure("innovation covariance is not positive definite".into())
    })
}

/// Iterated EKF update.
///
/// Each iteration relinearizes at the current iterate `x̂ˡ` and sets
/// `x̂ˡ⁺¹ = x̂ + K(z − h(x̂ˡ) − H(x̂ − x̂ˡ))`. The covariance uses the gain and
/// Jacobian of the last linearization: `Σ − K H Σ`, symmetrized.
pub fn iekf<T: Real, M: MeasurementModel<T>>(
    prior_mean: &DVector<T>,
    prior_cov: &DMatrix<T>,
    model: &M,
    settings: &IekfSettings<T>,
) -> Result<IekfOutcome<T>> {
    if settings.max_iter == 0 {
        return Err(invalid("IEKF needs at least one iteration"));
    }
    let mut iterate = prior_mean.clone();
    let mut last = None;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..settings.max_iter {
        iterations += 1;
        let lin = model.linearize(&iterate)?;
        if lin.state_dim != prior_mean.len() {
            return Err(invalid("measurement model dimension does not match state"));
        }
        let pht = lin.cov_times_jt(prior_cov);
        let chol = factor(lin.innovation_cov(&pht))?;
        let offset = lin.apply_jacobian(&(prior_mean - &iterate));
        let innovation = &lin.z - &lin.h - offset;
        let next = prior_mean + &pht * chol.solve(&innovation);
        let step = (&next - &iterate).norm();
        iterate = next;
        last = Some((pht, chol));
        if step < settings.tol {
            converged = true;
            break;
        }
    }
    let (pht, chol) = last.expect("at least one iteration ran");
    let w = chol.solve(&pht.transpose());
    let mut cov = prior_cov - &pht * w;
    symmetrize(&mut cov);
    Ok(IekfOutcome {
        mean: iterate,
        cov,
        iterations,
        converged,
    })
}

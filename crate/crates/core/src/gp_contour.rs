//! Recursive Gaussian-process model of a radial contour function `r = f(θ)`.
//!
//! The contour is tracked through its values at a fixed grid of basis angles.
//! An observation of the radius at an arbitrary angle is a linear function of
//! those values plus an interpolation-error term, which turns GP regression
//! into a sequence of Kalman updates.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{invalid, Error, Result};
use crate::geometry::wrap_two_pi;
use crate::scalar::Real;

/// Which argument the periodic kernel feeds through `sin`.
///
/// `HalfAngle` is the standard periodic kernel `exp(-2 sin²(Δ/2) / l²)`; its
/// derivative is `-sin(Δ)/l² · k`, which is the form the contour Jacobian
/// uses. `FullAngle` uses `sin²(Δ)` and therefore has period π: opposite
/// sides of a contour become perfectly correlated and a grid with an even
/// number of angles yields a singular Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeriodicForm {
    #[default]
    HalfAngle,
    FullAngle,
}

/// Hyperparameters of the contour GP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpHyperparams<T: Real> {
    /// Amplitude std of radial deviations from the mean radius (m).
    pub sigma_f: T,
    /// Angular length scale (rad).
    pub length_scale: T,
    /// Prior std of the unknown constant mean radius (m).
    pub sigma_r: T,
    /// Radial measurement noise variance `R` (m²).
    pub meas_noise: T,
    /// Scale of the contour process noise relative to the Gram matrix.
    pub forgetting: T,
    pub form: PeriodicForm,
}

impl<T: Real> GpHyperparams<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v.is_finite() && v > T::zero();
        if !positive(self.sigma_f) {
            return Err(invalid("sigma_f must be positive"));
        }
        if !positive(self.length_scale) {
            return Err(invalid("length_scale must be positive"));
        }
        if !positive(self.sigma_r) {
            return Err(invalid("sigma_r must be positive"));
        }
        if !(self.meas_noise.is_finite() && self.meas_noise >= T::zero()) {
            return Err(invalid("meas_noise must be non-negative"));
        }
        if !(self.forgetting >= T::zero() && self.forgetting <= T::one()) {
            return Err(invalid("forgetting must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Prior variance of the radius at any angle, `σ_f² + σ_r²`.
    pub fn prior_variance(&self) -> T {
        self.sigma_f * self.sigma_f + self.sigma_r * self.sigma_r
    }

    #[inline]
    fn exponent_arg(&self, delta: T) -> T {
        match self.form {
            PeriodicForm::HalfAngle => (delta.abs() * T::of(0.5)).sin(),
            PeriodicForm::FullAngle => delta.abs().sin(),
        }
    }
}

/// Periodic kernel plus the mean-radius variance term.
#[inline]
pub fn kernel<T: Real>(a: T, b: T, h: &GpHyperparams<T>) -> T {
    let s = h.exponent_arg(a - b);
    let l2 = h.length_scale * h.length_scale;
    h.sigma_f * h.sigma_f * (-(T::of(2.0) * s * s) / l2).exp() + h.sigma_r * h.sigma_r
}

/// `∂k(a, b)/∂a`.
#[inline]
pub fn kernel_derivative<T: Real>(a: T, b: T, h: &GpHyperparams<T>) -> T {
    let delta = a - b;
    let s = h.exponent_arg(delta);
    let l2 = h.length_scale * h.length_scale;
    let k = h.sigma_f * h.sigma_f * (-(T::of(2.0) * s * s) / l2).exp();
    match h.form {
        PeriodicForm::HalfAngle => -k * delta.sin() / l2,
        PeriodicForm::FullAngle => -k * T::of(2.0) * (delta + delta).sin() / l2,
    }
}

/// Matrix of pairwise kernel values, `K(a, b)[i][j] = k(a_i, b_j)`.
pub fn gram<T: Real>(a: &[T], b: &[T], h: &GpHyperparams<T>) -> DMatrix<T> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| kernel(a[i], b[j], h))
}

/// Uniformly spaced basis angles over `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisGrid<T: Real> {
    angles: Vec<T>,
}

impl<T: Real> BasisGrid<T> {
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(invalid(format!("basis grid needs at least 4 angles, got {n}")));
        }
        let step = T::two_pi() / T::of(n as f64);
        Ok(Self {
            angles: (0..n).map(|i| step * T::of(i as f64)).collect(),
        })
    }

    pub fn angles(&self) -> &[T] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Gaussian belief over the contour values at the basis angles.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourState<T: Real> {
    pub mean: DVector<T>,
    pub cov: DMatrix<T>,
}

impl<T: Real> ContourState<T> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Scalar Kalman update with a radius observation `y ~ N(h·x, noise)`.
    pub fn condition(&mut self, h_row: &RowDVector<T>, noise: T, y: T) -> Result<()> {
        let ph = &self.cov * h_row.transpose();
        let s = (h_row * &ph)[(0, 0)] + noise;
        if !(s > T::zero()) {
            return Err(Error::NumericalFailure(
                "non-positive innovation variance in contour update".into(),
            ));
        }
        let innovation = y - (h_row * &self.mean)[(0, 0)];
        let gain = ph / s;
        self.mean += &gain * innovation;
        self.cov -= &gain * (&gain.transpose() * s);
        symmetrize(&mut self.cov);
        Ok(())
    }
}

pub(crate) fn symmetrize<T: Real>(m: &mut DMatrix<T>) {
    let n = m.nrows();
    let half = T::of(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Basis grid and hyperparameters with the Gram inverse cached.
///
/// Both are fixed for a run, and the measurement row is evaluated for every
/// point in every filter iteration.
#[derive(Debug, Clone)]
pub struct GpContourModel<T: Real> {
    grid: BasisGrid<T>,
    hyper: GpHyperparams<T>,
    gram: DMatrix<T>,
    gram_inv: DMatrix<T>,
    jitter: T,
}

impl<T: Real> GpContourModel<T> {
    /// Factorizes `K(θ, θ)`. A diagonal jitter is added only when the plain
    /// Gram matrix is not numerically positive definite, escalating up to
    /// `1e-9·(σ_f² + σ_r²)`.
    pub fn new(grid: BasisGrid<T>, hyper: GpHyperparams<T>) -> Result<Self> {
        hyper.validate()?;
        let gram = gram(grid.angles(), grid.angles(), &hyper);
        let scale = hyper.prior_variance();
        for rel in [0.0, 1e-12, 1e-9] {
            let jitter = scale * T::of(rel);
            let mut k = gram.clone();
            for i in 0..k.nrows() {
                k[(i, i)] += jitter;
            }
            if let Some(chol) = k.clone().cholesky() {
                let mut gram_inv = chol.inverse();
                symmetrize(&mut gram_inv);
                return Ok(Self {
                    grid,
                    hyper,
                    gram: k,
                    gram_inv,
                    jitter,
                });
            }
        }
        Err(Error::NumericalFailure(
            "basis Gram matrix is singular even after jitter".into(),
        ))
    }

    pub fn grid(&self) -> &BasisGrid<T> {
        &self.grid
    }

    pub fn hyper(&self) -> &GpHyperparams<T> {
        &self.hyper
    }

    pub fn basis_len(&self) -> usize {
        self.grid.len()
    }

    /// Gram matrix of the basis angles, including any jitter applied.
    pub fn gram(&self) -> &DMatrix<T> {
        &self.gram
    }

    pub fn gram_inv(&self) -> &DMatrix<T> {
        &self.gram_inv
    }

    /// Diagonal jitter that was needed to factor the Gram matrix (often zero).
    pub fn jitter(&self) -> T {
        self.jitter
    }

    fn cross_row(&self, theta: T) -> RowDVector<T> {
        RowDVector::from_iterator(
            self.grid.len(),
            self.grid.angles().iter().map(|&b| kernel(theta, b, &self.hyper)),
        )
    }

    /// Measurement row `H = K(θ', θ)·K(θ, θ)⁻¹` and the matching noise
    /// variance `R_f = k(θ', θ') + R − K(θ', θ)·K⁻¹·K(θ, θ')`.
    pub fn measurement_model(&self, theta: T) -> (RowDVector<T>, T) {
        let k = self.cross_row(theta);
        let h_row = &k * &self.gram_inv;
        let explained = h_row.dot(&k);
        let r_f = kernel(theta, theta, &self.hyper) + self.hyper.meas_noise - explained;
        (h_row, r_f)
    }

    /// `∂H/∂θ'`.
    pub fn measurement_row_derivative(&self, theta: T) -> RowDVector<T> {
        let dk = RowDVector::from_iterator(
            self.grid.len(),
            self.grid
                .angles()
                .iter()
                .map(|&b| kernel_derivative(theta, b, &self.hyper)),
        );
        dk * &self.gram_inv
    }

    /// Marginal mean and variance of the contour at an arbitrary angle.
    ///
    /// Variance is `k(θ',θ') + a·(Σ − K)·aᵀ` with `a = K(θ',θ)K⁻¹`, clamped at
    /// zero against cancellation.
    pub fn predict_radius(&self, theta: T, state: &ContourState<T>) -> (T, T) {
        let k = self.cross_row(theta);
        let a = &k * &self.gram_inv;
        let mean = a.dot(&state.mean.transpose());
        let diff = &state.cov - &self.gram;
        let quad = (&a * diff * a.transpose())[(0, 0)];
        let var = kernel(theta, theta, &self.hyper) + quad;
        (mean, var.max(T::zero()))
    }

    /// Prior belief: zero mean and the basis Gram matrix as covariance.
    pub fn init_contour(&self) -> ContourState<T> {
        ContourState {
            mean: DVector::zeros(self.grid.len()),
            cov: self.gram.clone(),
        }
    }

    /// Contour process noise `Q^f = forgetting · K(θ, θ)`.
    pub fn process_noise(&self) -> DMatrix<T> {
        &self.gram * self.hyper.forgetting
    }

    /// Conditions a contour on one radius observation at angle `theta`.
    pub fn observe(&self, state: &mut ContourState<T>, theta: T, radius: T) -> Result<()> {
        let (h_row, r_f) = self.measurement_model(wrap_two_pi(theta));
        state.condition(&h_row, r_f, radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn hyper() -> GpHyperparams<f64> {
        GpHyperparams {
            sigma_f: 0.3,
            length_scale: 0.2,
            sigma_r: 1.5,
            meas_noise: 4e-4,
            forgetting: 0.0,
            form: PeriodicForm::HalfAngle,
        }
    }

    fn model(n: usize) -> GpContourModel<f64> {
        GpContourModel::new(BasisGrid::uniform(n).unwrap(), hyper()).unwrap()
    }

    #[test]
    fn kernel_values() {
        let h = hyper();
        assert_abs_diff_eq!(kernel(0.4, 0.4, &h), 0.09 + 2.25, epsilon = 1e-15);
        assert_abs_diff_eq!(kernel(0.4, 0.4 + 2.0 * PI, &h), kernel(0.4, 0.4, &h), epsilon = 1e-12);
        let h1 = GpHyperparams {
            sigma_f: 1.0,
            length_scale: 1.0,
            sigma_r: 0.5,
            ..h
        };
        let expected = (-2.0 * (0.35_f64).sin().powi(2)).exp() + 0.25;
        assert_abs_diff_eq!(kernel(1.0, 0.3, &h1), expected, epsilon = 1e-15);
    }

    #[test]
    fn kernel_derivative_matches_finite_difference() {
        for form in [PeriodicForm::HalfAngle, PeriodicForm::FullAngle] {
            let h = GpHyperparams { form, length_scale: 0.7, ..hyper() };
            for &(a, b) in &[(0.1, 0.3), (2.0, -1.0), (5.5, 0.2), (0.0, 3.0)] {
                let eps = 1e-6;
                let fd = (kernel(a + eps, b, &h) - kernel(a - eps, b, &h)) / (2.0 * eps);
                assert_abs_diff_eq!(kernel_derivative(a, b, &h), fd, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn gram_shapes_and_entries() {
        let h = hyper();
        let g = BasisGrid::<f64>::uniform(8).unwrap();
        let k = gram(g.angles(), g.angles(), &h);
        assert_eq!(k, k.transpose());
        for i in 0..8 {
            assert_eq!(k[(i, i)], h.prior_variance());
        }
        assert_eq!(gram(&[0.7], &[1.1], &h)[(0, 0)], kernel(0.7, 1.1, &h));
        let a = [0.1, 2.0, 4.0];
        let b = [0.5, 6.0];
        let k = gram(&a, &b, &h);
        assert_eq!(k.shape(), (3, 2));
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(k[(i, j)], kernel(a[i], b[j], &h));
            }
        }
    }

    #[test]
    fn basis_grid_validation() {
        assert!(BasisGrid::<f64>::uniform(3).is_err());
        let g = BasisGrid::<f64>::uniform(50).unwrap();
        assert!(g.angles().windows(2).all(|w| w[1] > w[0]));
        assert!(*g.angles().last().unwrap() < 2.0 * PI);
    }

    #[test]
    fn hyper_validation() {
        assert!(GpHyperparams { sigma_f: 0.0, ..hyper() }.validate().is_err());
        assert!(GpHyperparams { length_scale: -1.0, ..hyper() }.validate().is_err());
        assert!(GpHyperparams { sigma_r: 0.0, ..hyper() }.validate().is_err());
        assert!(GpHyperparams { meas_noise: -1e-3, ..hyper() }.validate().is_err());
        assert!(GpHyperparams { forgetting: 1.5, ..hyper() }.validate().is_err());
        assert!(hyper().validate().is_ok());
    }

    #[test]
    fn interpolates_exactly_at_basis_angles() {
        let m = model(50);
        assert_eq!(m.jitter(), 0.0);
        for (i, &theta) in m.grid().angles().iter().enumerate() {
            let (h_row, r_f) = m.measurement_model(theta);
            for j in 0..50 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((h_row[j] - e).abs() < 1e-8, "H[{i}][{j}] = {}", h_row[j]);
            }
            assert!((r_f - 4e-4).abs() < 1e-8);
        }
    }

    #[test]
    fn full_angle_form_correlates_opposite_sides() {
        let h = GpHyperparams { form: PeriodicForm::FullAngle, ..hyper() };
        assert_abs_diff_eq!(kernel(0.3, 0.3 + PI, &h), kernel(0.3, 0.3, &h), epsilon = 1e-12);
        // rows i and i + N/2 coincide, so the plain Gram matrix cannot be factored
        let m = GpContourModel::new(BasisGrid::uniform(50).unwrap(), h).unwrap();
        assert!(m.jitter() > 0.0);
    }

    #[test]
    fn posterior_noise_never_below_measurement_noise() {
        let m = model(50);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let theta = rng.random_range(0.0..2.0 * PI);
            let (_, r_f) = m.measurement_model(theta);
            assert!(r_f >= 4e-4 - 1e-9);
        }
    }

    #[test]
    fn midpoint_matches_batch_regression_formula() {
        let m = model(16);
        let h = hyper();
        let angles = m.grid().angles().to_vec();
        let theta = 0.5 * (angles[3] + angles[4]);
        // dense GP regression: weights solve K w = k(θ') by LU, independent of the cached inverse
        let k = gram(&angles, &angles, &h);
        let kx = DVector::from_iterator(16, angles.iter().map(|&b| kernel(theta, b, &h)));
        let w = k.clone().lu().solve(&kx).unwrap();
        let r_expected = kernel(theta, theta, &h) + h.meas_noise - kx.dot(&w);
        let (h_row, r_f) = m.measurement_model(theta);
        for j in 0..16 {
            assert_abs_diff_eq!(h_row[j], w[j], epsilon = 1e-7);
        }
        assert_abs_diff_eq!(r_f, r_expected, epsilon = 1e-9);
    }

    #[test]
    fn prior_predictive_and_basis_marginals() {
        let m = model(50);
        let prior = m.init_contour();
        for &theta in &[0.0, 0.05, 1.0, 3.3, 6.2] {
            let (mu, var) = m.predict_radius(theta, &prior);
            assert_abs_diff_eq!(mu, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(var, kernel(theta, theta, m.hyper()), epsilon = 1e-8);
        }
        let mut state = prior.clone();
        m.observe(&mut state, 0.3, 1.2).unwrap();
        m.observe(&mut state, 2.0, 0.9).unwrap();
        for (i, &theta) in m.grid().angles().iter().enumerate() {
            let (mu, var) = m.predict_radius(theta, &state);
            assert_abs_diff_eq!(mu, state.mean[i], epsilon = 1e-8);
            assert_abs_diff_eq!(var, state.cov[(i, i)], epsilon = 1e-8);
        }
    }

    #[test]
    fn exact_observation_pins_basis_value() {
        // scalar Bayes oracle: prior N(0, s²), observation y with noise v ⇒ mean y·s²/(s²+v)
        let s2 = hyper().prior_variance();
        for noise in [1e-2, 1e-4, 1e-6, 1e-8] {
            let h = GpHyperparams { meas_noise: noise, ..hyper() };
            let m = GpContourModel::new(BasisGrid::uniform(50).unwrap(), h).unwrap();
            let mut state = m.init_contour();
            let theta0 = m.grid().angles()[0];
            m.observe(&mut state, theta0, 1.3).unwrap();
            let (mu, _) = m.predict_radius(theta0, &state);
            assert_abs_diff_eq!(mu, 1.3 * s2 / (s2 + noise), epsilon = 1e-7);
        }
    }

    #[test]
    fn init_and_process_noise() {
        let m = model(4);
        let c = m.init_contour();
        assert_eq!(c.mean, DVector::zeros(4));
        for i in 0..4 {
            assert_abs_diff_eq!(c.cov[(i, i)], hyper().prior_variance() + m.jitter());
        }
        assert_abs_diff_eq!(c.cov[(0, 1)], kernel(0.0, PI / 2.0, &hyper()));
        assert!(c.cov.clone().symmetric_eigenvalues().min() > -1e-12);

        let zero = model(8).process_noise();
        assert_eq!(zero, DMatrix::zeros(8, 8));
        let h = GpHyperparams { forgetting: 0.01, ..hyper() };
        let m8 = GpContourModel::new(BasisGrid::uniform(8).unwrap(), h).unwrap();
        let g = BasisGrid::<f64>::uniform(8).unwrap();
        let oracle = gram(g.angles(), g.angles(), &h) * 0.01;
        assert_abs_diff_eq!(m8.process_noise(), oracle, epsilon = 1e-15);
    }

    #[test]
    fn recursive_matches_batch_update() {
        let m = model(24);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let obs: Vec<(f64, f64)> = (0..30)
            .map(|_| (rng.random_range(0.0..2.0 * PI), rng.random_range(0.8..1.2)))
            .collect();
        let mut seq = m.init_contour();
        for &(t, r) in &obs {
            m.observe(&mut seq, t, r).unwrap();
        }
        let prior = m.init_contour();
        let n = obs.len();
        let mut h = DMatrix::zeros(n, 24);
        let mut rdiag = DVector::zeros(n);
        let y = DVector::from_iterator(n, obs.iter().map(|o| o.1));
        for (i, &(t, _)) in obs.iter().enumerate() {
            let (row, rf) = m.measurement_model(t);
            h.set_row(i, &row);
            rdiag[i] = rf;
        }
        let s = &h * &prior.cov * h.transpose() + DMatrix::from_diagonal(&rdiag);
        let gain = &prior.cov * h.transpose() * s.cholesky().unwrap().inverse();
        let mean = &prior.mean + &gain * (y - &h * &prior.mean);
        let cov = &prior.cov - &gain * &h * &prior.cov;
        assert!((seq.mean - mean).amax() < 1e-6);
        assert!((seq.cov - cov).amax() < 1e-6);
    }

    proptest! {
        #[test]
        fn kernel_is_periodic_and_stationary(a in -10.0..10.0_f64, b in -10.0..10.0_f64, m in -3i32..3) {
            let h = hyper();
            let shift = 2.0 * PI * m as f64;
            prop_assert!((kernel(a + shift, b, &h) - kernel(a, b, &h)).abs() < 1e-12);
            prop_assert!((kernel(a, b, &h) - kernel(b, a, &h)).abs() < 1e-15);
            prop_assert!((kernel(a + 0.37, b + 0.37, &h) - kernel(a, b, &h)).abs() < 1e-12);
        }

        #[test]
        fn variance_does_not_grow_with_data(
            obs in proptest::collection::vec((0.0..6.28_f64, 0.5..2.0_f64), 1..8),
            probe in 0.0..6.28_f64,
        ) {
            let m = model(20);
            let mut state = m.init_contour();
            let mut last = m.predict_radius(probe, &state).1;
            for (t, r) in obs {
                m.observe(&mut state, t, r).unwrap();
                let v = m.predict_radius(probe, &state).1;
                prop_assert!(v <= last + 1e-9);
                last = v;
            }
        }
    }
}

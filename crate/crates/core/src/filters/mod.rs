//! State estimators on the integral-augmented model: a baseline Kalman
//! filter for intermittent data and the maximum-correntropy variant.

mod kf;
mod mcc;
mod recursion;

pub use kf::{kf_step, MissingData};
pub use mcc::{gaussian_kernel, mcckf_step, MccConfig};
pub use recursion::{correlated_update, CorrelatedUpdate};

use nalgebra::{DMatrix, DVector};

use crate::control::AugmentedModel;
use crate::error::{check_shape, Result};
use crate::scalar::Real;
use crate::sensors::{MeasurementFrame, Sensor};

/// How the estimator fills sensor blocks that did not report this step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImputationStrategy {
    /// Reuse the last value seen for that block.
    PreviousMeasurement,
    /// Use the corresponding block of `H·x̂_{k|k-1}`.
    ExpectedMeasurement,
}

/// Plant process noise `W` and measurement noise `V`, with the augmented
/// quantities derived for a given selection.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCovariances<T: Real> {
    pub w: DMatrix<T>,
    pub v: DMatrix<T>,
}

impl<T: Real> NoiseCovariances<T> {
    pub fn new(w: DMatrix<T>, v: DMatrix<T>) -> Result<Self> {
        check_shape("noise: W", w.nrows(), w.ncols(), w.nrows(), w.nrows())?;
        check_shape("noise: V", v.nrows(), v.ncols(), v.nrows(), v.nrows())?;
        if v.clone().cholesky().is_none() {
            return Err(crate::error::invalid(
                "v",
                "measurement covariance must be positive definite",
            ));
        }
        if w.clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .any(|l| *l < -T::lit(1e-12))
        {
            return Err(crate::error::invalid(
                "w",
                "process covariance must be positive semi-definite",
            ));
        }
        Ok(Self { w, v })
    }

    /// `Ē·blockdiag(W, V)·Ēᵀ`
    pub fn process(&self, model: &AugmentedModel<T>) -> DMatrix<T> {
        let n = self.w.nrows();
        let p = self.v.nrows();
        let mut joint = DMatrix::zeros(n + p, n + p);
        joint.view_mut((0, 0), (n, n)).copy_from(&self.w);
        joint.view_mut((n, n), (p, p)).copy_from(&self.v);
        &model.noise_map * joint * model.noise_map.transpose()
    }

    /// `Ē·V12` with `V12 = E{[w; v] vᵀ} = [0; V]`.
    pub fn cross(&self, model: &AugmentedModel<T>) -> DMatrix<T> {
        let n = self.w.nrows();
        let p = self.v.nrows();
        let mut v12 = DMatrix::zeros(n + p, p);
        v12.view_mut((n, 0), (p, p)).copy_from(&self.v);
        &model.noise_map * v12
    }
}

/// Estimator memory between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState<T: Real> {
    /// `x̂_{k|k-1}`
    pub x_prior: DVector<T>,
    /// `P_k`, covariance of the a-priori error.
    pub p_prior: DMatrix<T>,
    /// `x̂_{k-1|k-1}`
    pub x_post: DVector<T>,
    pub p_post: DMatrix<T>,
    /// Last imputed (or last received) measurement vector.
    pub y_prev: DVector<T>,
    /// `x̂_{k|k-1} − Φ̄x̂_{k-1|k-1} − Γ̄u_{k-1} − Īr_{k-1}`
    pub prediction_residual: DVector<T>,
    pub k: usize,
}

impl<T: Real> FilterState<T> {
    pub fn new(x0: DVector<T>, p0: DMatrix<T>, c: &DMatrix<T>) -> Result<Self> {
        let n = x0.len();
        check_shape("filter init: P0", p0.nrows(), p0.ncols(), n, n)?;
        check_shape("filter init: C", c.nrows(), c.ncols(), c.nrows(), n)?;
        Ok(Self {
            y_prev: c * &x0,
            x_post: x0.clone(),
            p_post: p0.clone(),
            prediction_residual: DVector::zeros(n),
            x_prior: x0,
            p_prior: p0,
            k: 0,
        })
    }

    pub fn min_eigenvalue(&self) -> T {
        self.p_prior.clone().symmetric_eigen().eigenvalues.min()
    }
}

/// Per-step quantities reported by either estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics<T> {
    pub kernel_ratio: T,
    pub kernel_numerator: T,
    pub kernel_denominator: T,
    /// The denominator fell below the floor and was clamped.
    pub floor_hit: bool,
    /// `‖y − Hx̂‖²` weighted by `V⁻¹` over the rows used.
    pub innovation_sq: T,
    pub gain_norm: T,
    pub rows_used: usize,
}

/// Fills missing sensor blocks. Blocks present in the frame are copied
/// verbatim.
pub fn impute<T: Real>(
    frame: &MeasurementFrame<T>,
    state: &FilterState<T>,
    h: &DMatrix<T>,
    strategy: ImputationStrategy,
) -> DVector<T> {
    let expected = match strategy {
        ImputationStrategy::ExpectedMeasurement => Some(h * &state.x_prior),
        ImputationStrategy::PreviousMeasurement => None,
    };
    let mut y = DVector::zeros(h.nrows());
    for sensor in Sensor::ALL {
        let o = sensor.offset();
        match frame.block(sensor) {
            Some(b) => y.rows_mut(o, 3).copy_from(b),
            None => match &expected {
                Some(e) => y.rows_mut(o, 3).copy_from(&e.rows(o, 3)),
                None => y.rows_mut(o, 3).copy_from(&state.y_prev.rows(o, 3)),
            },
        }
    }
    y
}

/// `y_prev` with the blocks present in `frame` overwritten.
pub fn held_measurement<T: Real>(frame: &MeasurementFrame<T>, y_prev: &DVector<T>) -> DVector<T> {
    let mut y = y_prev.clone();
    for sensor in Sensor::ALL {
        if let Some(b) = frame.block(sensor) {
            y.rows_mut(sensor.offset(), 3).copy_from(b);
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{augment, PositionSource};
    use crate::model::{build_continuous_model, discretize, QuadrotorParams};
    use crate::sensors::{assemble_frame, AvailabilityMask};
    use nalgebra::Vector3;

    fn aug() -> AugmentedModel<f64> {
        let p = QuadrotorParams::default();
        let d = discretize(&build_continuous_model(&p).unwrap(), p.dt).unwrap();
        augment(&d, &PositionSource::Uwb.matrix()).unwrap()
    }

    fn state(aug: &AugmentedModel<f64>) -> FilterState<f64> {
        let x0 = DVector::from_fn(15, |i, _| 0.1 * i as f64);
        let mut s = FilterState::new(x0, DMatrix::identity(15, 15) * 0.1, &aug.c).unwrap();
        s.y_prev = DVector::from_fn(9, |i, _| 100.0 + i as f64);
        s
    }

    fn frame(mask: AvailabilityMask) -> MeasurementFrame<f64> {
        assemble_frame(
            Some(Vector3::new(7.0, 8.0, 9.0)),
            Some(Vector3::new(1.0, 2.0, 3.0)),
            Some(Vector3::new(4.0, 5.0, 6.0)),
            mask,
            0,
        )
        .unwrap()
    }

    #[test]
    fn full_frame_passes_through() {
        let a = aug();
        let s = state(&a);
        let f = frame(AvailabilityMask::ALL);
        for strat in [
            ImputationStrategy::PreviousMeasurement,
            ImputationStrategy::ExpectedMeasurement,
        ] {
            let y = impute(&f, &s, &a.c, strat);
            assert_eq!(y.as_slice(), f.full().unwrap().as_slice());
        }
    }

    #[test]
    fn previous_strategy_reuses_last_block() {
        let a = aug();
        let s = state(&a);
        let f = frame(AvailabilityMask {
            cam: false,
            ..AvailabilityMask::ALL
        });
        let y = impute(&f, &s, &a.c, ImputationStrategy::PreviousMeasurement);
        assert_eq!(y.rows(3, 3), s.y_prev.rows(3, 3));
        assert_eq!(y.rows(0, 3).as_slice(), &[1.0, 2.0, 3.0]);
        assert_eq!(y.rows(6, 3).as_slice(), &[7.0, 8.0, 9.0]);
    }

    #[test]
    fn expected_strategy_uses_prediction() {
        let a = aug();
        let s = state(&a);
        let f = frame(AvailabilityMask {
            uwb: false,
            ..AvailabilityMask::ALL
        });
        let y = impute(&f, &s, &a.c, ImputationStrategy::ExpectedMeasurement);
        let pred = &a.c * &s.x_prior;
        assert_eq!(y.rows(0, 3), pred.rows(0, 3));
        assert_eq!(y.rows(3, 3).as_slice(), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn derived_covariances_have_expected_structure() {
        let a = aug();
        let w = DMatrix::identity(12, 12) * 2.0;
        let v = DMatrix::from_diagonal(&DVector::from_fn(9, |i, _| 1.0 + i as f64));
        let cov = NoiseCovariances::new(w.clone(), v.clone()).unwrap();
        let q = cov.process(&a);
        assert_eq!(q.view((0, 0), (12, 12)).into_owned(), w);
        assert_eq!(q.view((0, 12), (12, 3)).amax(), 0.0);
        let e = &a.selection;
        assert_eq!(
            q.view((12, 12), (3, 3)).into_owned(),
            e * &v * e.transpose()
        );
        let x = cov.cross(&a);
        assert_eq!(x.view((0, 0), (12, 9)).amax(), 0.0);
        assert_eq!(x.view((12, 0), (3, 9)).into_owned(), -(e * &v));
    }

    #[test]
    fn initial_cache_is_predicted_output() {
        let a = aug();
        let x0 = DVector::from_fn(15, |i, _| i as f64);
        let s = FilterState::new(x0.clone(), DMatrix::identity(15, 15), &a.c).unwrap();
        assert_eq!(s.y_prev, &a.c * x0);
        assert!(
            FilterState::new(DVector::zeros(15), DMatrix::<f64>::identity(14, 14), &a.c).is_err()
        );
    }
}

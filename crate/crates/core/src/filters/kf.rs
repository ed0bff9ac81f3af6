use nalgebra::{DMatrix, DVector};

use super::{
    correlated_update, held_measurement, impute, FilterState, ImputationStrategy, NoiseCovariances,
    StepDiagnostics,
};
use crate::control::AugmentedModel;
use crate::error::{check_shape, Error, Result};
use crate::scalar::Real;
use crate::sensors::MeasurementFrame;

/// Missing-data policy of the baseline filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingData {
    /// Drop the rows of `H`, `y` and `V` belonging to absent sensors.
    DropRows,
    /// Fill absent blocks and run the full-rank update.
    Impute(ImputationStrategy),
}

pub(super) fn check_dims<T: Real>(
    state: &FilterState<T>,
    model: &AugmentedModel<T>,
    u: &DVector<T>,
    reference: &DVector<T>,
    cov: &NoiseCovariances<T>,
) -> Result<()> {
    let n = model.state_dim();
    check_shape("filter: x̂", state.x_prior.len(), 1, n, 1)?;
    check_shape(
        "filter: P",
        state.p_prior.nrows(),
        state.p_prior.ncols(),
        n,
        n,
    )?;
    check_shape("filter: u", u.len(), 1, model.gamma.ncols(), 1)?;
    check_shape(
        "filter: r",
        reference.len(),
        1,
        model.reference_map.ncols(),
        1,
    )?;
    check_shape(
        "filter: V",
        cov.v.nrows(),
        cov.v.ncols(),
        model.c.nrows(),
        model.c.nrows(),
    )?;
    check_shape(
        "filter: W",
        cov.w.nrows(),
        cov.w.ncols(),
        model.plant_dim(),
        model.plant_dim(),
    )?;
    Ok(())
}

pub(super) fn whitened_sq<T: Real>(e: &DVector<T>, cov: &DMatrix<T>) -> Result<T> {
    if e.is_empty() {
        return Ok(T::zero());
    }
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("weighting matrix is not positive definite".into()))?;
    Ok(e.dot(&chol.solve(e)))
}

/// Baseline Kalman filter step on the augmented model.
pub fn kf_step<T: Real>(
    state: &FilterState<T>,
    model: &AugmentedModel<T>,
    u: &DVector<T>,
    reference: &DVector<T>,
    frame: &MeasurementFrame<T>,
    cov: &NoiseCovariances<T>,
    missing: MissingData,
) -> Result<(FilterState<T>, StepDiagnostics<T>)> {
    check_dims(state, model, u, reference, cov)?;
    let drive = &model.gamma * u + &model.reference_map * reference;
    let process = cov.process(model);
    let cross = cov.cross(model);

    let (rows, y, y_cache): (Vec<usize>, DVector<T>, DVector<T>) = match missing {
        MissingData::DropRows => {
            let rows = frame.live_rows();
            let held = held_measurement(frame, &state.y_prev);
            let y = held.select_rows(rows.iter());
            (rows, y, held)
        }
        MissingData::Impute(strategy) => {
            let y = impute(frame, state, &model.c, strategy);
            ((0..model.c.nrows()).collect(), y.clone(), y)
        }
    };
    let h = model.c.select_rows(rows.iter());
    let v = cov.v.select_rows(rows.iter()).select_columns(rows.iter());
    let cross = cross.select_columns(rows.iter());

    let innovation = &y - &h * &state.x_prior;
    let innovation_sq = whitened_sq(&innovation, &v)?;

    let upd = correlated_update(
        &state.x_prior,
        &state.p_prior,
        &model.phi,
        &drive,
        &process,
        &cross,
        &h,
        &v,
        &y,
        T::one(),
    )?;
    let next = FilterState {
        prediction_residual: &upd.x_next - (&model.phi * &upd.x_post + &drive),
        x_prior: upd.x_next,
        p_prior: upd.p_next,
        x_post: upd.x_post,
        p_post: upd.p_post,
        y_prev: y_cache,
        k: state.k + 1,
    };
    let diag = StepDiagnostics {
        kernel_ratio: T::one(),
        kernel_numerator: T::one(),
        kernel_denominator: T::one(),
        floor_hit: false,
        innovation_sq,
        gain_norm: upd.gain.norm(),
        rows_used: rows.len(),
    };
    Ok((next, diag))
}

use nalgebra::DVector;

use super::kf::{check_dims, whitened_sq};
use super::{
    correlated_update, impute, FilterState, ImputationStrategy, NoiseCovariances, StepDiagnostics,
};
use crate::control::AugmentedModel;
use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::sensors::MeasurementFrame;

/// `G_σ = exp(−d²/(2σ²))` for a squared distance `d²`.
pub fn gaussian_kernel<T: Real>(d_sq: T, sigma: T) -> T {
    (-d_sq / (T::lit(2.0) * sigma * sigma)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MccConfig<T> {
    /// Kernel size, in whitened units.
    pub sigma: T,
    pub strategy: ImputationStrategy,
    /// Lower bound on the kernel-ratio denominator.
    pub floor: T,
}

impl<T: Real> MccConfig<T> {
    pub fn new(sigma: T, strategy: ImputationStrategy, floor: T) -> Result<Self> {
        if !(sigma > T::zero()) {
            return Err(invalid(
                "sigma",
                format!("kernel size must be positive, got {sigma}"),
            ));
        }
        if !(floor > T::zero()) {
            return Err(invalid(
                "floor",
                format!("kernel floor must be positive, got {floor}"),
            ));
        }
        Ok(Self {
            sigma,
            strategy,
            floor,
        })
    }
}

impl<T: Real> Default for MccConfig<T> {
    fn default() -> Self {
        Self {
            sigma: T::lit(5.0),
            strategy: ImputationStrategy::PreviousMeasurement,
            floor: T::lit(1e-12),
        }
    }
}

/// Maximum-correntropy Kalman step: imputes missing blocks, scales the
/// prior covariance inside the gain by the kernel ratio and advances the
/// one-step predictor. The covariance recursion is the unweighted one.
#[allow(clippy::too_many_arguments)]
pub fn mcckf_step<T: Real>(
    state: &FilterState<T>,
    model: &AugmentedModel<T>,
    u: &DVector<T>,
    reference: &DVector<T>,
    frame: &MeasurementFrame<T>,
    cov: &NoiseCovariances<T>,
    mcc: &MccConfig<T>,
) -> Result<(FilterState<T>, StepDiagnostics<T>)> {
    check_dims(state, model, u, reference, cov)?;
    let y = impute(frame, state, &model.c, mcc.strategy);
    let innovation = &y - &model.c * &state.x_prior;
    let innovation_sq = whitened_sq(&innovation, &cov.v)?;
    // G is strictly positive; keep it so after underflow
    let numerator = gaussian_kernel(innovation_sq, mcc.sigma).max(T::min_positive());

    // Only the plant block carries estimation error. The integral block of
    // the residual is the correlated-noise term, a known function of the
    // previous innovation, and P has no information along it.
    let n = model.plant_dim();
    let residual = state.prediction_residual.rows(0, n).into_owned();
    let residual_sq = if residual.iter().all(|v| *v == T::zero()) {
        T::zero()
    } else {
        whitened_sq(&residual, &state.p_prior.view((0, 0), (n, n)).into_owned())?
    };
    let raw_denominator = gaussian_kernel(residual_sq, mcc.sigma);
    let floor_hit = raw_denominator < mcc.floor;
    let denominator = raw_denominator.max(mcc.floor);
    let kappa = numerator / denominator;

    let drive = &model.gamma * u + &model.reference_map * reference;
    let upd = correlated_update(
        &state.x_prior,
        &state.p_prior,
        &model.phi,
        &drive,
        &cov.process(model),
        &cov.cross(model),
        &model.c,
        &cov.v,
        &y,
        kappa,
    )?;
    let next = FilterState {
        prediction_residual: &upd.x_next - (&model.phi * &upd.x_post + &drive),
        x_prior: upd.x_next,
        p_prior: upd.p_next,
        x_post: upd.x_post,
        p_post: upd.p_post,
        y_prev: y,
        k: state.k + 1,
    };
    let diag = StepDiagnostics {
        kernel_ratio: kappa,
        kernel_numerator: numerator,
        kernel_denominator: denominator,
        floor_hit,
        innovation_sq,
        gain_norm: upd.gain.norm(),
        rows_used: model.c.nrows(),
    };
    Ok((next, diag))
}

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Result of one predictor step with correlated process/measurement noise.
#[derive(Debug, Clone)]
pub struct CorrelatedUpdate<T: Real> {
    /// `x̂_{k|k}`
    pub x_post: DVector<T>,
    pub p_post: DMatrix<T>,
    /// `x̂_{k+1|k}`
    pub x_next: DVector<T>,
    /// `P_{k+1}`
    pub p_next: DMatrix<T>,
    /// `K_k`
    pub gain: DMatrix<T>,
}

fn symmetrize<T: Real>(m: &mut DMatrix<T>) {
    let t = m.transpose();
    *m += t;
    *m *= T::lit(0.5);
}

fn spd_inverse<T: Real>(m: DMatrix<T>, what: &str) -> Result<DMatrix<T>> {
    m.cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Numerical(format!("{what} is not positive definite")))
}

/// One step of the one-step-ahead predictor
///
/// ```text
/// K      = (Φ P κ Hᵀ + X)(H P κ Hᵀ + V)⁻¹
/// x̂⁺     = Φ x̂ + d + K (y − H x̂)
/// P⁺     = Φ P Φᵀ + Q − (Φ P Hᵀ + X)(H P Hᵀ + V)⁻¹(Φ P Hᵀ + X)ᵀ
/// ```
///
/// where `X` is the process/measurement noise cross-covariance, `d` the
/// known drive (`Γ̄u + Īr`) and `κ` a scalar gain weight (`1` for the plain
/// Kalman filter). With no measurement rows the step is a pure prediction.
#[allow(clippy::too_many_arguments)]
pub fn correlated_update<T: Real>(
    x: &DVector<T>,
    p: &DMatrix<T>,
    phi: &DMatrix<T>,
    drive: &DVector<T>,
    process: &DMatrix<T>,
    cross: &DMatrix<T>,
    h: &DMatrix<T>,
    v: &DMatrix<T>,
    y: &DVector<T>,
    kappa: T,
) -> Result<CorrelatedUpdate<T>> {
    let n = x.len();
    let phi_p = phi * p;
    if h.nrows() == 0 {
        let x_next = phi * x + drive;
        let mut p_next = &phi_p * phi.transpose() + process;
        symmetrize(&mut p_next);
        return Ok(CorrelatedUpdate {
            x_post: x.clone(),
            p_post: p.clone(),
            x_next,
            p_next,
            gain: DMatrix::zeros(n, 0),
        });
    }

    let innovation = y - h * x;
    let p_ht = p * h.transpose();
    let h_p_ht = h * &p_ht;

    let s_weighted_inv = spd_inverse(&h_p_ht * kappa + v, "H P κ Hᵀ + V")?;
    let gain = (&phi_p * h.transpose() * kappa + cross) * &s_weighted_inv;
    let x_post = x + &p_ht * (&s_weighted_inv * &innovation) * kappa;
    let x_next = phi * x + drive + &gain * &innovation;

    let s_inv = spd_inverse(&h_p_ht + v, "H P Hᵀ + V")?;
    let m = &phi_p * h.transpose() + cross;
    let mut p_next = &phi_p * phi.transpose() + process - &m * &s_inv * m.transpose();
    symmetrize(&mut p_next);
    let mut p_post = p - &p_ht * &s_inv * p_ht.transpose();
    symmetrize(&mut p_post);

    Ok(CorrelatedUpdate {
        x_post,
        p_post,
        x_next,
        p_next,
        gain,
    })
}

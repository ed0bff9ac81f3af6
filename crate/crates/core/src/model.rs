//! Quadrotor rigid-body model: nonlinear Newton–Euler plant, the hover
//! linearization and its exact zero-order-hold discretization.

use nalgebra::{DMatrix, DVector, SVector, Vector3, Vector4};

use crate::error::{check_shape, invalid, Error, Result};
use crate::scalar::{wrap_angle, Real};

pub const STATE_DIM: usize = 12;
pub const INPUT_DIM: usize = 4;
pub const OUTPUT_DIM: usize = 9;

/// Indices into the 12-dim state `[x y z φ θ ψ ẋ ẏ ż φ̇ θ̇ ψ̇]`.
pub mod idx {
    pub const X: usize = 0;
    pub const Y: usize = 1;
    pub const Z: usize = 2;
    pub const ROLL: usize = 3;
    pub const PITCH: usize = 4;
    pub const YAW: usize = 5;
    pub const VX: usize = 6;
    pub const VY: usize = 7;
    pub const VZ: usize = 8;
    pub const ROLL_RATE: usize = 9;
    pub const PITCH_RATE: usize = 10;
    pub const YAW_RATE: usize = 11;
}

/// Physical constants of the airframe plus the control period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrotorParams<T> {
    /// kg
    pub mass: T,
    /// m/s²
    pub gravity: T,
    /// kg·m²
    pub ix: T,
    pub iy: T,
    pub iz: T,
    /// Sampling period in seconds.
    pub dt: T,
}

impl<T: Real> Default for QuadrotorParams<T> {
    fn default() -> Self {
        Self {
            mass: T::lit(2.355),
            gravity: T::lit(9.81),
            ix: T::lit(0.033),
            iy: T::lit(0.033),
            iz: T::lit(0.055),
            dt: T::lit(0.01),
        }
    }
}

impl<T: Real> QuadrotorParams<T> {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass", self.mass),
            ("gravity", self.gravity),
            ("ix", self.ix),
            ("iy", self.iy),
            ("iz", self.iz),
            ("dt", self.dt),
        ];
        for (name, v) in fields {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(invalid(
                    name,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        Ok(())
    }

    /// Control input that holds the vehicle at a level hover.
    pub fn hover_input(&self) -> ControlInput<T> {
        ControlInput::new(self.mass * self.gravity, Vector3::zeros())
    }
}

/// True rigid-body state in the ENU frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState<T: Real> {
    pub position: Vector3<T>,
    /// Roll, pitch, yaw in radians, kept in `(-π, π]`.
    pub attitude: Vector3<T>,
    pub velocity: Vector3<T>,
    pub rates: Vector3<T>,
}

impl<T: Real> PlantState<T> {
    pub fn at_rest(position: Vector3<T>) -> Self {
        Self {
            position,
            attitude: Vector3::zeros(),
            velocity: Vector3::zeros(),
            rates: Vector3::zeros(),
        }
    }

    pub fn to_vector(&self) -> SVector<T, STATE_DIM> {
        let mut v = SVector::<T, STATE_DIM>::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.position);
        v.fixed_rows_mut::<3>(3).copy_from(&self.attitude);
        v.fixed_rows_mut::<3>(6).copy_from(&self.velocity);
        v.fixed_rows_mut::<3>(9).copy_from(&self.rates);
        v
    }

    pub fn from_vector(v: &SVector<T, STATE_DIM>) -> Self {
        Self {
            position: v.fixed_rows::<3>(0).into_owned(),
            attitude: v.fixed_rows::<3>(3).into_owned(),
            velocity: v.fixed_rows::<3>(6).into_owned(),
            rates: v.fixed_rows::<3>(9).into_owned(),
        }
    }

    pub fn to_dvector(&self) -> DVector<T> {
        DVector::from_column_slice(self.to_vector().as_slice())
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }

    fn wrapped(mut self) -> Self {
        self.attitude = self.attitude.map(wrap_angle);
        self
    }
}

/// Total thrust (N) and body torques (N·m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput<T: Real> {
    pub thrust: T,
    pub torque: Vector3<T>,
}

impl<T: Real> ControlInput<T> {
    pub fn new(thrust: T, torque: Vector3<T>) -> Self {
        Self { thrust, torque }
    }

    pub fn to_vector(&self) -> Vector4<T> {
        Vector4::new(self.thrust, self.torque.x, self.torque.y, self.torque.z)
    }

    pub fn from_vector(v: &Vector4<T>) -> Self {
        Self::new(v[0], Vector3::new(v[1], v[2], v[3]))
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// `dx = A x dt + B u dt`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousModel<T: Real> {
    pub a: DMatrix<T>,
    pub b: DMatrix<T>,
    pub c: DMatrix<T>,
}

/// Zero-order-hold equivalent `x⁺ = Φ x + Γ u`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel<T: Real> {
    pub phi: DMatrix<T>,
    pub gamma: DMatrix<T>,
    pub c: DMatrix<T>,
    pub dt: T,
}

/// Output map rows: UWB position, camera position, IMU attitude.
pub fn output_matrix<T: Real>() -> DMatrix<T> {
    let mut c = DMatrix::zeros(OUTPUT_DIM, STATE_DIM);
    for i in 0..3 {
        c[(i, idx::X + i)] = T::one();
        c[(3 + i, idx::X + i)] = T::one();
        c[(6 + i, idx::ROLL + i)] = T::one();
    }
    c
}

/// Small-angle linearization about hover. The input of the linear model is
/// the deviation from the hover input.
pub fn build_continuous_model<T: Real>(params: &QuadrotorParams<T>) -> Result<ContinuousModel<T>> {
    params.validate()?;
    let mut a = DMatrix::zeros(STATE_DIM, STATE_DIM);
    for i in 0..3 {
        a[(idx::X + i, idx::VX + i)] = T::one();
        a[(idx::ROLL + i, idx::ROLL_RATE + i)] = T::one();
    }
    a[(idx::VX, idx::PITCH)] = params.gravity;
    a[(idx::VY, idx::ROLL)] = -params.gravity;

    let mut b = DMatrix::zeros(STATE_DIM, INPUT_DIM);
    b[(idx::VZ, 0)] = T::one() / params.mass;
    b[(idx::ROLL_RATE, 1)] = T::one() / params.ix;
    b[(idx::PITCH_RATE, 2)] = T::one() / params.iy;
    b[(idx::YAW_RATE, 3)] = T::one() / params.iz;

    Ok(ContinuousModel {
        a,
        b,
        c: output_matrix(),
    })
}

/// `Φ = e^{Ah}` and `Γ = ∫₀ʰ e^{As} ds B`, evaluated by the finite series
/// that is exact when `A⁴ = 0`. Accepts `h = 0`.
pub fn series_propagators<T: Real>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    h: T,
) -> (DMatrix<T>, DMatrix<T>) {
    let n = a.nrows();
    let eye = DMatrix::<T>::identity(n, n);
    let a2 = a * a;
    let a3 = &a2 * a;
    let h2 = h * h;
    let h3 = h2 * h;
    let h4 = h3 * h;
    let phi = &eye + a * h + &a2 * (h2 / T::lit(2.0)) + &a3 * (h3 / T::lit(6.0));
    let integral =
        &eye * h + a * (h2 / T::lit(2.0)) + &a2 * (h3 / T::lit(6.0)) + &a3 * (h4 / T::lit(24.0));
    (phi, integral * b)
}

pub fn discretize<T: Real>(cont: &ContinuousModel<T>, h: T) -> Result<DiscreteModel<T>> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(invalid(
            "dt",
            format!("sampling period must be positive, got {h}"),
        ));
    }
    let n = cont.a.nrows();
    check_shape("discretize: A", cont.a.nrows(), cont.a.ncols(), n, n)?;
    check_shape(
        "discretize: B",
        cont.b.nrows(),
        cont.b.ncols(),
        n,
        cont.b.ncols(),
    )?;
    let a4 = {
        let a2 = &cont.a * &cont.a;
        &a2 * &a2
    };
    if a4.iter().any(|v| *v != T::zero()) {
        return Err(Error::InvalidModel(
            "series discretization requires a nilpotent system matrix (A⁴ = 0)".into(),
        ));
    }
    let (phi, gamma) = series_propagators(&cont.a, &cont.b, h);
    Ok(DiscreteModel {
        phi,
        gamma,
        c: cont.c.clone(),
        dt: h,
    })
}

fn derivative<T: Real>(
    s: &SVector<T, STATE_DIM>,
    u: &ControlInput<T>,
    p: &QuadrotorParams<T>,
) -> SVector<T, STATE_DIM> {
    let (phi, theta, psi) = (s[idx::ROLL], s[idx::PITCH], s[idx::YAW]);
    let (p_rate, q_rate, r_rate) = (s[idx::ROLL_RATE], s[idx::PITCH_RATE], s[idx::YAW_RATE]);
    let (sphi, cphi) = phi.sin_cos();
    let (sth, cth) = theta.sin_cos();
    let (spsi, cpsi) = psi.sin_cos();
    let accel = u.thrust / p.mass;

    let mut d = SVector::<T, STATE_DIM>::zeros();
    for i in 0..3 {
        d[idx::X + i] = s[idx::VX + i];
        d[idx::ROLL + i] = s[idx::ROLL_RATE + i];
    }
    d[idx::VX] = accel * (cphi * sth * cpsi + spsi * sphi);
    d[idx::VY] = accel * (cphi * sth * spsi - cpsi * sphi);
    d[idx::VZ] = accel * (cphi * cth) - p.gravity;
    d[idx::ROLL_RATE] = (p.iy - p.iz) / p.ix * q_rate * r_rate + u.torque.x / p.ix;
    d[idx::PITCH_RATE] = (p.iz - p.ix) / p.iy * p_rate * r_rate + u.torque.y / p.iy;
    d[idx::YAW_RATE] = (p.ix - p.iy) / p.iz * p_rate * q_rate + u.torque.z / p.iz;
    d
}

/// One RK4 step of the nonlinear equations of motion with the input held
/// over the period, followed by additive process noise `w`.
pub fn step_nonlinear_plant<T: Real>(
    state: &PlantState<T>,
    u: &ControlInput<T>,
    params: &QuadrotorParams<T>,
    w: &SVector<T, STATE_DIM>,
) -> PlantState<T> {
    let h = params.dt;
    let half = h / T::lit(2.0);
    let x = state.to_vector();
    let k1 = derivative(&x, u, params);
    let k2 = derivative(&(x + k1 * half), u, params);
    let k3 = derivative(&(x + k2 * half), u, params);
    let k4 = derivative(&(x + k3 * h), u, params);
    let next = x + (k1 + (k2 + k3) * T::lit(2.0) + k4) * (h / T::lit(6.0)) + w;
    PlantState::from_vector(&next).wrapped()
}

/// Linear-model plant step; `u` is the absolute input, the hover offset is
/// removed before applying `Γ`.
pub fn step_linear_plant<T: Real>(
    state: &PlantState<T>,
    u: &ControlInput<T>,
    params: &QuadrotorParams<T>,
    model: &DiscreteModel<T>,
    w: &SVector<T, STATE_DIM>,
) -> PlantState<T> {
    let du = u.to_vector() - params.hover_input().to_vector();
    let x = state.to_dvector();
    let next = &model.phi * x + &model.gamma * DVector::from_column_slice(du.as_slice());
    let next = SVector::<T, STATE_DIM>::from_column_slice(next.as_slice()) + w;
    PlantState::from_vector(&next).wrapped()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params() -> QuadrotorParams<f64> {
        QuadrotorParams::default()
    }

    #[test]
    fn pitch_drives_x_acceleration() {
        let m = build_continuous_model(&params()).unwrap();
        let row = m.a.row(idx::VX);
        let nonzero: Vec<_> = row.iter().enumerate().filter(|(_, v)| **v != 0.0).collect();
        assert_eq!(nonzero, vec![(idx::PITCH, &9.81)]);
        assert_eq!(m.a[(idx::VY, idx::ROLL)], -9.81);
    }

    #[test]
    fn thrust_column_is_inverse_mass() {
        let p = QuadrotorParams {
            mass: 2.0,
            ..params()
        };
        let m = build_continuous_model(&p).unwrap();
        assert_eq!(m.b[(idx::VZ, 0)], 0.5);
    }

    #[test]
    fn system_matrix_is_nilpotent_of_order_four() {
        let m = build_continuous_model(&params()).unwrap();
        let a2 = &m.a * &m.a;
        let a3 = &a2 * &m.a;
        assert!(a3.iter().any(|v| *v != 0.0));
        assert!((&a3 * &m.a).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn output_rows_map_positions_twice_and_attitude_once() {
        let c = output_matrix::<f64>();
        for i in 0..3 {
            assert_eq!(c[(i, i)], 1.0);
            assert_eq!(c[(3 + i, i)], 1.0);
            assert_eq!(c[(6 + i, 3 + i)], 1.0);
        }
        assert_eq!(c.sum(), 9.0);
    }

    #[test]
    fn rejects_bad_params() {
        let p = QuadrotorParams {
            iz: 0.0,
            ..params()
        };
        assert!(matches!(
            build_continuous_model(&p),
            Err(Error::InvalidParameter { name: "iz", .. })
        ));
        let p = QuadrotorParams {
            mass: -1.0,
            ..params()
        };
        assert!(build_continuous_model(&p).is_err());
    }

    #[test]
    fn double_integrator_closed_form() {
        let cont = ContinuousModel {
            a: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            b: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            c: DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        };
        let d = discretize(&cont, 0.1).unwrap();
        assert_abs_diff_eq!(
            d.phi,
            DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            d.gamma,
            DMatrix::from_row_slice(2, 1, &[0.005, 0.1]),
            epsilon = 1e-15
        );
    }

    #[test]
    fn zero_period_limit_is_identity() {
        let cont = build_continuous_model(&params()).unwrap();
        let (phi, gamma) = series_propagators(&cont.a, &cont.b, 0.0);
        assert_eq!(phi, DMatrix::identity(12, 12));
        assert!(gamma.iter().all(|v| *v == 0.0));
        let d = discretize(&cont, 1e-12).unwrap();
        assert_abs_diff_eq!(d.phi, DMatrix::identity(12, 12), epsilon = 1e-11);
        assert!(d.gamma.amax() < 1e-9);
    }

    #[test]
    fn discretize_rejects_nonpositive_period() {
        let cont = build_continuous_model(&params()).unwrap();
        assert!(discretize(&cont, 0.0).is_err());
        assert!(discretize(&cont, -0.01).is_err());
    }

    #[test]
    fn discretize_rejects_non_nilpotent() {
        let cont = ContinuousModel {
            a: DMatrix::from_row_slice(1, 1, &[-1.0]),
            b: DMatrix::from_row_slice(1, 1, &[1.0]),
            c: DMatrix::from_row_slice(1, 1, &[1.0]),
        };
        assert!(matches!(
            discretize(&cont, 0.1),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn hover_is_a_fixed_point() {
        let p = params();
        let s = PlantState::at_rest(Vector3::new(1.0, 2.0, 1.0));
        let next = step_nonlinear_plant(&s, &p.hover_input(), &p, &SVector::zeros());
        assert!((next.to_vector() - s.to_vector()).amax() < 1e-12);
    }

    #[test]
    fn free_fall_loses_g_h_of_vertical_speed() {
        let p = params();
        let s = PlantState::at_rest(Vector3::new(0.0, 0.0, 1.0));
        let u = ControlInput::new(0.0, Vector3::zeros());
        let next = step_nonlinear_plant(&s, &u, &p, &SVector::zeros());
        assert_abs_diff_eq!(next.velocity.z, -0.0981, epsilon = 1e-6);
    }

    #[test]
    fn yaw_torque_spins_up_yaw_rate() {
        let p = QuadrotorParams {
            iz: 0.1,
            ..params()
        };
        let s = PlantState::at_rest(Vector3::zeros());
        let u = ControlInput::new(p.mass * p.gravity, Vector3::new(0.0, 0.0, 0.02));
        let next = step_nonlinear_plant(&s, &u, &p, &SVector::zeros());
        let expected = 0.02 / 0.1 * p.dt;
        assert!((next.rates.z - expected).abs() < p.dt * p.dt);
        // yaw itself follows the analytic ½αt²
        assert_abs_diff_eq!(next.attitude.z, 0.5 * 0.2 * p.dt * p.dt, epsilon = 1e-12);
    }

    #[test]
    fn attitude_is_rewrapped() {
        let p = params();
        let mut s = PlantState::at_rest(Vector3::zeros());
        s.attitude.z = std::f64::consts::PI - 1e-4;
        s.rates.z = 1.0;
        let next = step_nonlinear_plant(&s, &p.hover_input(), &p, &SVector::zeros());
        assert!(next.attitude.z < 0.0 && next.attitude.z > -std::f64::consts::PI);
    }
}

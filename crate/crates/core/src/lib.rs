//! Quadrotor trajectory tracking with intermittent, outlier-prone sensing:
//! linearized and nonlinear plant models, IMU/UWB/camera sensor simulation,
//! LQ-servo control and Kalman / maximum-correntropy Kalman estimation.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`). The aliases
//! below fix the scalar to `f64`, which is what the simulator uses.

// `!(x > 0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod filters;
pub mod model;
pub mod scalar;
pub mod sensors;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Scalar = f64;
pub type Params = model::QuadrotorParams<f64>;
pub type State = model::PlantState<f64>;
pub type Input = model::ControlInput<f64>;
pub type Discrete = model::DiscreteModel<f64>;
pub type Augmented = control::AugmentedModel<f64>;
pub type Gains = control::GainCache<f64>;
pub type Filter = filters::FilterState<f64>;
pub type Config = sim::ScenarioConfig<f64>;
pub type Log = sim::EpisodeLog<f64>;

/// Single-precision variants.
pub mod f32 {
    pub type Params = crate::model::QuadrotorParams<f32>;
    pub type State = crate::model::PlantState<f32>;
    pub type Discrete = crate::model::DiscreteModel<f32>;
    pub type Augmented = crate::control::AugmentedModel<f32>;
    pub type Filter = crate::filters::FilterState<f32>;
    pub type Config = crate::sim::ScenarioConfig<f32>;
}

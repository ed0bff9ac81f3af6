//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FloatConst, ToPrimitive};

/// Floating point type the models, filters and solvers are written against.
///
/// Implemented for `f32` and `f64`. The simulation defaults to `f64`; the
/// tolerances quoted in the tests assume double precision.
pub trait Real: RealField + Copy + FloatConst + ToPrimitive {
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        nalgebra::convert(v)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Smallest positive normal value.
    fn min_positive() -> Self;
}

impl Real for f32 {
    fn min_positive() -> Self {
        f32::MIN_POSITIVE
    }
}

impl Real for f64 {
    fn min_positive() -> Self {
        f64::MIN_POSITIVE
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let pi = T::PI();
    let two_pi = pi + pi;
    let mut w = a - two_pi * ((a + pi) / two_pi).floor();
    // floor puts results in [-pi, pi); move the closed end to +pi
    if w <= -pi {
        w += two_pi;
    }
    w
}

use nalgebra::Vector3;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Waypoints of the default flight: a 13 m × 3 m open rectangle at 1 m
/// altitude.
pub fn default_waypoints<T: Real>() -> Vec<Vector3<T>> {
    [
        (0.0, 0.0, 1.0),
        (13.0, 0.0, 1.0),
        (13.0, 3.0, 1.0),
        (0.0, 3.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(T::lit(x), T::lit(y), T::lit(z)))
    .collect()
}

/// Constant-speed piecewise-linear path sampled every `h` seconds. The last
/// waypoint is always the final sample.
pub fn generate_trajectory<T: Real>(
    waypoints: &[Vector3<T>],
    speed: T,
    h: T,
) -> Result<Vec<Vector3<T>>> {
    if waypoints.len() < 2 {
        return Err(Error::InvalidPath(format!(
            "need at least 2 waypoints, got {}",
            waypoints.len()
        )));
    }
    if !(speed > T::zero()) || !speed.is_finite() {
        return Err(invalid("speed", format!("must be positive, got {speed}")));
    }
    if !(h > T::zero()) {
        return Err(invalid("dt", format!("must be positive, got {h}")));
    }
    let mut cumulative = vec![T::zero()];
    for (i, pair) in waypoints.windows(2).enumerate() {
        let len = (pair[1] - pair[0]).norm();
        if !(len > T::zero()) {
            return Err(Error::InvalidPath(format!(
                "waypoints {i} and {} coincide",
                i + 1
            )));
        }
        cumulative.push(cumulative[i] + len);
    }
    let total = *cumulative.last().unwrap();
    let step = speed * h;
    let slack = step * T::lit(1e-9);

    let mut out = Vec::new();
    let mut seg = 0;
    let mut k = 0usize;
    loop {
        let s = step * T::from_usize(k).unwrap();
        if s > total + slack {
            break;
        }
        while seg + 2 < cumulative.len() && s > cumulative[seg + 1] {
            seg += 1;
        }
        let seg_len = cumulative[seg + 1] - cumulative[seg];
        let t = ((s - cumulative[seg]) / seg_len).min(T::one());
        out.push(waypoints[seg] + (waypoints[seg + 1] - waypoints[seg]) * t);
        k += 1;
    }
    let last = *waypoints.last().unwrap();
    if (out.last().unwrap() - last).norm() > slack {
        out.push(last);
    }
    Ok(out)
}

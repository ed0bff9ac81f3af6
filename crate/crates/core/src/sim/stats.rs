//! Error metrics and order statistics over Monte-Carlo runs.

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

pub fn rmse<T: Real>(est: &[T], truth: &[T]) -> Result<T> {
    if est.len() != truth.len() {
        return Err(Error::Dimension {
            context: "rmse",
            expected: format!("{}", truth.len()),
            got: format!("{}", est.len()),
        });
    }
    if est.is_empty() {
        return Err(invalid("rmse", "sequences must be non-empty"));
    }
    let sum = est
        .iter()
        .zip(truth)
        .fold(T::zero(), |acc, (e, t)| acc + (*e - *t) * (*e - *t));
    Ok((sum / T::from_usize(est.len()).unwrap()).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary<T> {
    pub mean: T,
    pub median: T,
    pub p25: T,
    pub p75: T,
}

/// Percentile of sorted data by linear interpolation between order
/// statistics at rank `q·(n−1)`.
pub fn percentile_sorted<T: Real>(sorted: &[T], q: T) -> T {
    let last = sorted.len() - 1;
    let pos = q * T::from_usize(last).unwrap();
    let lo = pos.floor().to_usize().unwrap_or(0).min(last);
    let hi = (lo + 1).min(last);
    let frac = pos - T::from_usize(lo).unwrap();
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn summarize<T: Real>(values: &[T]) -> Result<Summary<T>> {
    if values.is_empty() {
        return Err(invalid("values", "cannot summarize an empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mean = sorted.iter().fold(T::zero(), |a, b| a + *b) / T::from_usize(sorted.len()).unwrap();
    Ok(Summary {
        mean,
        median: percentile_sorted(&sorted, T::lit(0.5)),
        p25: percentile_sorted(&sorted, T::lit(0.25)),
        p75: percentile_sorted(&sorted, T::lit(0.75)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[1.0, 2.0], &[0.0, 0.0]).unwrap() - 2.5f64.sqrt()).abs() < 1e-15);
        assert!((rmse(&[0.6f64, -0.4, 1.1], &[1.0, 0.0, 1.5]).unwrap() - 0.4).abs() < 1e-12);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmse::<f64>(&[], &[]).is_err());
    }

    #[test]
    fn summary_of_one_to_four() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((s.mean, s.median, s.p25, s.p75), (2.5, 2.5, 1.75, 3.25));
    }

    #[test]
    fn single_value_summary() {
        let s = summarize(&[0.7]).unwrap();
        assert_eq!((s.mean, s.median, s.p25, s.p75), (0.7, 0.7, 0.7, 0.7));
        assert!(summarize::<f64>(&[]).is_err());
    }

    proptest! {
        #[test]
        fn summary_is_ordered_and_permutation_invariant(
            mut v in proptest::collection::vec(0.0f64..10.0, 1..40),
            seed in any::<u64>(),
        ) {
            let a = summarize(&v).unwrap();
            prop_assert!(a.p25 <= a.median && a.median <= a.p75);
            // deterministic shuffle
            let n = v.len();
            let mut state = seed;
            for i in (1..n).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                v.swap(i, (state >> 33) as usize % (i + 1));
            }
            let b = summarize(&v).unwrap();
            prop_assert_eq!(a.median, b.median);
            prop_assert_eq!(a.p25, b.p25);
            prop_assert_eq!(a.p75, b.p75);
            prop_assert!((a.mean - b.mean).abs() < 1e-12);
        }
    }
}

//! KPI reductions.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("metric needs at least one sample")]
    EmptyInput,
}

/// Jain's fairness index `(Σx)² / (n·Σx²)`; all-zero input counts as perfectly fair.
pub fn jfi(shares: &[f64]) -> Result<f64, MetricError> {
    if shares.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let (sum, sq) = shares.iter().fold((0.0, 0.0), |(s, q), &x| (s + x, q + x * x));
    if sq == 0.0 {
        return Ok(1.0);
    }
    Ok((sum * sum / (shares.len() as f64 * sq)).min(1.0))
}

pub fn success_rate(satisfied: &[bool]) -> Result<f64, MetricError> {
    if satisfied.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    Ok(satisfied.iter().filter(|&&s| s).count() as f64 / satisfied.len() as f64)
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn jfi_examples() {
        assert_eq!(jfi(&[1.0; 4]).unwrap(), 1.0);
        assert!((jfi(&[1.0, 0.0]).unwrap() - 0.5).abs() < 1e-12);
        assert!((jfi(&[1.0, 0.5]).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(jfi(&[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(jfi(&[]), Err(MetricError::EmptyInput));
    }

    #[test]
    fn success_examples() {
        assert_eq!(success_rate(&[true; 5]).unwrap(), 1.0);
        assert_eq!(success_rate(&[false; 5]).unwrap(), 0.0);
        let mut flags = vec![true; 10];
        flags.extend([false, false]);
        assert!((success_rate(&flags).unwrap() - 10.0 / 12.0).abs() < 1e-12);
        assert_eq!(success_rate(&[]), Err(MetricError::EmptyInput));
    }

    proptest! {
        #[test]
        fn jfi_bounds(xs in proptest::collection::vec(0.0f64..1.0, 1..40)) {
            let j = jfi(&xs).unwrap();
            let n = xs.len() as f64;
            prop_assert!(j <= 1.0 + 1e-12);
            if xs.iter().any(|&x| x > 0.0) {
                prop_assert!(j >= 1.0 / n - 1e-12);
                // shares bounded by one: fairness never drops below the mean share
                prop_assert!(j >= mean(&xs).unwrap() - 1e-12);
            }
        }
    }
}

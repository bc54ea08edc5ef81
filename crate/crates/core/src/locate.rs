//! Change-point location by maximizing the sup-norm of the generalized CUSUM.

use crate::cusum::{cusum_process, test_statistic, CusumConfig};
use crate::error::Result;
use crate::sample::Sample;

/// Estimated change-point location.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocationEstimate {
    pub m_hat: usize,
    /// `m_hat / n`.
    pub t_hat: f64,
    pub theta: f64,
    pub truncated: bool,
    /// `|Z_theta(m_hat)|_inf`.
    pub max_value: f64,
}

/// Argmax over `s` of `|Z_theta(s)|_inf`, smallest `s` on ties.
///
/// Splits `1..=n-1` are searched unless `truncation` restricts the scan to
/// `[truncation, n - truncation]`.
pub fn estimate_location(
    sample: &Sample,
    theta: f64,
    truncation: Option<usize>,
) -> Result<LocationEstimate> {
    let n = sample.n();
    let cfg = match truncation {
        Some(b) => CusumConfig::truncated(n, theta, b)?,
        None => CusumConfig::full_range(n, theta)?,
    };
    let best = test_statistic(&cusum_process(sample, &cfg)?)?;
    Ok(LocationEstimate {
        m_hat: best.split,
        t_hat: best.split as f64 / n as f64,
        theta,
        truncated: truncation.is_some(),
        max_value: best.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn noiseless_step() {
        let x = Sample::from_series(&[0.0, 0.0, 1.0, 1.0]).unwrap();
        let est = estimate_location(&x, 0.0, None).unwrap();
        assert_eq!(est.m_hat, 2);
        assert_eq!(est.t_hat, 0.5);
        assert!((est.max_value - 1.0).abs() < 1e-15);
        assert!(!est.truncated);
    }

    #[test]
    fn truncation_restricts_search() {
        // Largest jump at s = 1, outside [2, 4].
        let x = Sample::from_series(&[10.0, 0.0, 0.0, 0.1, 0.0, 0.0]).unwrap();
        assert_eq!(estimate_location(&x, 0.5, None).unwrap().m_hat, 1);
        let est = estimate_location(&x, 0.5, Some(2)).unwrap();
        assert!(est.truncated);
        assert!((2..=4).contains(&est.m_hat));
    }

    #[test]
    fn symmetric_ties_pick_smallest_split() {
        // |Z(s)| is symmetric about the centre with equal maxima at s = 1 and s = 4.
        let x = Sample::from_series(&[1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let cfg = CusumConfig::full_range(5, 0.5).unwrap();
        let proc = cusum_process(&x, &cfg).unwrap();
        let norms = proc.sup_norms();
        assert!((norms[0] - norms[3]).abs() < 1e-15);
        let est = estimate_location(&x, 0.5, None).unwrap();
        assert_eq!(est.m_hat, 1);
    }

    #[test]
    fn invalid_parameters() {
        let x = Sample::from_series(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(matches!(
            estimate_location(&x, 1.0, None),
            Err(Error::InvalidConfig(_))
        ));
        assert!(estimate_location(&x, 0.5, Some(0)).is_err());
        assert!(estimate_location(&x, 0.5, Some(4)).is_err());
    }
}

//! The n × p observation matrix every statistic is computed on.

use crate::error::{Error, Result};

/// Smallest admissible number of time points.
pub const MIN_OBSERVATIONS: usize = 4;

/// Observations `X_1, ..., X_n` in `R^p`, stored row-major (one row per time point).
///
/// Construction validates the shape and rejects non-finite entries, so every
/// downstream routine may assume a well-formed matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    n: usize,
    p: usize,
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl Sample {
    /// Builds a sample from a row-major buffer of length `n * p`.
    pub fn from_row_major(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n < MIN_OBSERVATIONS {
            return Err(Error::sample(format!(
                "need at least {MIN_OBSERVATIONS} observations; got {n}"
            )));
        }
        if p == 0 {
            return Err(Error::sample("dimension p must be at least 1"));
        }
        if values.len() != n * p {
            return Err(Error::LengthMismatch {
                what: "row-major values",
                expected: n * p,
                actual: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::sample(format!(
                "non-finite entry at row {}, column {}",
                pos / p + 1,
                pos % p + 1
            )));
        }
        Ok(Self {
            n,
            p,
            values,
            labels: None,
        })
    }

    /// Builds a sample from a list of equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let p = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != p {
                return Err(Error::sample(format!(
                    "row {} has {} columns; expected {p}",
                    i + 1,
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::from_row_major(rows.len(), p, values)
    }

    /// Builds a univariate sample from a series.
    pub fn from_series(series: &[f64]) -> Result<Self> {
        Self::from_row_major(series.len(), 1, series.to_vec())
    }

    /// Attaches one time label per row.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::LengthMismatch {
                what: "time labels",
                expected: self.n,
                actual: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Row-major view of all entries.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Row `i` using zero-based indexing (time point `i + 1`).
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.p)
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Applies `f` elementwise, revalidating finiteness of the result.
    pub fn try_map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        let mut out = Self::from_row_major(self.n, self.p, values)?;
        out.labels = self.labels.clone();
        Ok(out)
    }

    /// Adds `shift` to every row.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.p {
            return Err(Error::LengthMismatch {
                what: "translation vector",
                expected: self.p,
                actual: shift.len(),
            });
        }
        let mut out = self.clone();
        for row in out.values.chunks_exact_mut(self.p) {
            for (x, c) in row.iter_mut().zip(shift) {
                *x += c;
            }
        }
        Ok(out)
    }

    /// Single column `j` (zero-based) as a vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_and_nonfinite_input() {
        assert!(Sample::from_series(&[1.0, 2.0, 3.0]).is_err());
        assert!(Sample::from_series(&[1.0, f64::NAN, 3.0, 4.0]).is_err());
        assert!(Sample::from_row_major(4, 0, vec![]).is_err());
        assert!(matches!(
            Sample::from_row_major(4, 2, vec![0.0; 7]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let rows = vec![vec![1.0, 2.0], vec![3.0], vec![1.0, 1.0], vec![0.0, 0.0]];
        assert!(Sample::from_rows(&rows).is_err());
    }

    #[test]
    fn reports_position_of_bad_entry() {
        let err = Sample::from_row_major(4, 2, vec![0.0, 0.0, 0.0, f64::INFINITY, 0.0, 0.0, 0.0, 0.0])
            .unwrap_err();
        assert_eq!(
            err.to_string(),
            "invalid sample: non-finite entry at row 2, column 2"
        );
    }

    #[test]
    fn labels_must_match_rows() {
        let s = Sample::from_series(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(s.clone().with_labels(vec!["a".into()]).is_err());
        let s = s
            .with_labels(vec!["a".into(), "b".into(), "c".into(), "d".into()])
            .unwrap();
        assert_eq!(s.labels().unwrap()[3], "d");
    }
}

//! Generalized CUSUM process and the sup-norm test statistic.
//!
//! For a split `s` in `1..n`, the generalized CUSUM with weighting `theta` is
//!
//! ```text
//! Z_theta(s) = [s (n - s) / n]^(1 - theta) * (mean(X_1..X_s) - mean(X_{s+1}..X_n))
//! ```
//!
//! `theta = 1/2` gives the covariance-stationary CUSUM used for testing;
//! `theta = 0` reduces to `S(s) - (s/n) S(n)` and down-weights splits near the
//! ends of the sample. Everything is evaluated from running prefix sums, so a
//! whole process costs O(np).

use crate::error::{Error, Result};
use crate::sample::Sample;

/// Weighting of the covariance-stationary CUSUM.
pub const STATIONARY_THETA: f64 = 0.5;

/// Cumulative row sums `S(s) = X_1 + ... + X_s` for `s = 0..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrefixSums {
    n: usize,
    p: usize,
    // (n + 1) rows; row 0 is the zero vector.
    sums: Vec<f64>,
}

impl PrefixSums {
    /// Accumulates a row-major `n × p` buffer in index order.
    pub fn from_row_major(p: usize, values: &[f64]) -> Result<Self> {
        if p == 0 || !values.len().is_multiple_of(p) {
            return Err(Error::sample(format!(
                "buffer of length {} is not a whole number of rows of width {p}",
                values.len()
            )));
        }
        let n = values.len() / p;
        let mut sums = vec![0.0; (n + 1) * p];
        for (i, row) in values.chunks_exact(p).enumerate() {
            let (done, rest) = sums.split_at_mut((i + 1) * p);
            let prev = &done[i * p..];
            for ((out, &acc), &x) in rest[..p].iter_mut().zip(prev).zip(row) {
                *out = acc + x;
            }
        }
        Ok(Self { n, p, sums })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `S(s)` for `s = 0..=n`.
    pub fn at(&self, s: usize) -> &[f64] {
        &self.sums[s * self.p..(s + 1) * self.p]
    }

    /// `S(n)`.
    pub fn total(&self) -> &[f64] {
        self.at(self.n)
    }

    /// `S(1), ..., S(n)` as a row-major buffer.
    pub fn cumulative(&self) -> &[f64] {
        &self.sums[self.p..]
    }
}

/// Prefix sums of a validated sample.
pub fn prefix_sums(sample: &Sample) -> PrefixSums {
    PrefixSums::from_row_major(sample.p(), sample.values())
        .expect("validated sample has whole rows")
}

/// `[s (n - s) / n]^(1 - theta)`.
#[inline]
pub fn cusum_weight(n: usize, s: usize, theta: f64) -> f64 {
    let (n, s) = (n as f64, s as f64);
    (s * (n - s) / n).powf(1.0 - theta)
}

fn check_split(n: usize, s: usize) -> Result<()> {
    if s == 0 || s >= n {
        return Err(Error::OutOfRange {
            index: s,
            lo: 1,
            hi: n.saturating_sub(1),
        });
    }
    Ok(())
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::config(format!("theta must lie in [0, 1); got {theta}")));
    }
    Ok(())
}

#[inline]
fn write_cusum(out: &mut [f64], left: &[f64], total: &[f64], n: usize, s: usize, theta: f64) {
    let w = cusum_weight(n, s, theta);
    let inv_left = 1.0 / s as f64;
    let inv_right = 1.0 / (n - s) as f64;
    for ((z, &l), &t) in out.iter_mut().zip(left).zip(total) {
        *z = w * (l * inv_left - (t - l) * inv_right);
    }
}

/// `Z_theta(s)` from prefix sums.
pub fn cusum_at(prefix: &PrefixSums, s: usize, theta: f64) -> Result<Vec<f64>> {
    check_split(prefix.n, s)?;
    check_theta(theta)?;
    let mut out = vec![0.0; prefix.p];
    write_cusum(&mut out, prefix.at(s), prefix.total(), prefix.n, s, theta);
    Ok(out)
}

/// Weighting and split range of a CUSUM scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CusumConfig {
    pub theta: f64,
    /// Boundary removal: the number of split points trimmed at each end for testing.
    pub boundary: usize,
    pub search_lo: usize,
    pub search_hi: usize,
}

impl CusumConfig {
    /// Test configuration: `theta = 1/2` and splits `boundary..=n - boundary`.
    pub fn for_test(n: usize, boundary: usize) -> Result<Self> {
        let cfg = Self {
            theta: STATIONARY_THETA,
            boundary,
            search_lo: boundary,
            search_hi: n.saturating_sub(boundary),
        };
        cfg.validate(n)?;
        Ok(cfg)
    }

    /// Untruncated scan over every split `1..=n-1`.
    pub fn full_range(n: usize, theta: f64) -> Result<Self> {
        let cfg = Self {
            theta,
            boundary: 1,
            search_lo: 1,
            search_hi: n.saturating_sub(1),
        };
        cfg.validate(n)?;
        Ok(cfg)
    }

    /// Scan over `boundary..=n - boundary` with arbitrary `theta`.
    pub fn truncated(n: usize, theta: f64, boundary: usize) -> Result<Self> {
        let cfg = Self {
            theta,
            ..Self::for_test(n, boundary)?
        };
        cfg.validate(n)?;
        Ok(cfg)
    }

    /// Same weighting and boundary with the search range narrowed to `lo..=hi`.
    pub fn with_range(self, lo: usize, hi: usize) -> Self {
        Self {
            search_lo: lo,
            search_hi: hi,
            ..self
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_theta(self.theta)?;
        if self.boundary == 0 || self.boundary > n / 2 {
            return Err(Error::config(format!(
                "boundary removal must lie in [1, {}] for n = {n}; got {}",
                n / 2,
                self.boundary
            )));
        }
        if self.search_lo == 0 || self.search_hi + 1 > n || self.search_lo > self.search_hi {
            return Err(Error::config(format!(
                "search range [{}, {}] is not inside [1, {}]",
                self.search_lo,
                self.search_hi,
                n.saturating_sub(1)
            )));
        }
        Ok(())
    }

    /// Number of splits scanned.
    pub fn width(&self) -> usize {
        self.search_hi + 1 - self.search_lo
    }
}

/// `Z_theta(s)` for every `s` of a search range, with per-split sup-norms.
#[derive(Clone, Debug, PartialEq)]
pub struct CusumProcess {
    s_lo: usize,
    p: usize,
    z: Vec<f64>,
    sup_norms: Vec<f64>,
}

impl CusumProcess {
    /// First split in the range.
    pub fn first_split(&self) -> usize {
        self.s_lo
    }

    /// Number of splits.
    pub fn len(&self) -> usize {
        self.sup_norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sup_norms.is_empty()
    }

    /// The split indices covered, in order.
    pub fn splits(&self) -> std::ops::Range<usize> {
        self.s_lo..self.s_lo + self.len()
    }

    /// `Z_theta(s)`; `s` must lie in [`Self::splits`].
    pub fn z(&self, s: usize) -> &[f64] {
        let k = s - self.s_lo;
        &self.z[k * self.p..(k + 1) * self.p]
    }

    /// `|Z_theta(s)|_inf` in split order.
    pub fn sup_norms(&self) -> &[f64] {
        &self.sup_norms
    }
}

#[inline]
pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Generalized CUSUM over the configured range in one streaming pass.
pub fn cusum_process(sample: &Sample, cfg: &CusumConfig) -> Result<CusumProcess> {
    let (n, p) = (sample.n(), sample.p());
    cfg.validate(n)?;
    // Differences of means are translation invariant; working relative to the
    // first row makes constant samples exactly zero.
    let origin = sample.row(0);
    let mut total = vec![0.0; p];
    for row in sample.rows() {
        for ((t, x), o) in total.iter_mut().zip(row).zip(origin) {
            *t += x - o;
        }
    }
    let width = cfg.width();
    let mut z = vec![0.0; width * p];
    let mut sup_norms = Vec::with_capacity(width);
    let mut running = vec![0.0; p];
    for s in 1..=cfg.search_hi {
        for ((acc, x), o) in running.iter_mut().zip(sample.row(s - 1)).zip(origin) {
            *acc += x - o;
        }
        if s >= cfg.search_lo {
            let k = s - cfg.search_lo;
            let out = &mut z[k * p..(k + 1) * p];
            write_cusum(out, &running, &total, n, s, cfg.theta);
            sup_norms.push(sup_norm(out));
        }
    }
    Ok(CusumProcess {
        s_lo: cfg.search_lo,
        p,
        z,
        sup_norms,
    })
}

/// Maximum of a scan together with where it is attained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanMax {
    pub value: f64,
    /// Smallest maximizing split.
    pub split: usize,
}

/// `T = max_s |Z(s)|_inf` over the process range.
pub fn test_statistic(process: &CusumProcess) -> Result<ScanMax> {
    argmax_first(process.sup_norms())
        .map(|(k, value)| ScanMax {
            value,
            split: process.s_lo + k,
        })
        .ok_or_else(|| Error::config("empty CUSUM search range"))
}

/// Index and value of the first maximum; `None` when empty.
pub(crate) fn argmax_first(values: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((k, v)),
        }
    }
    best
}

/// Expected generalized CUSUM `E[Z_theta(s)]`, `s = 1..n-1`, under a single
/// mean shift of size `delta` after time `m`.
///
/// The entry for split `s` is returned at index `s - 1`.
pub fn mean_shift_profile(n: usize, m: usize, delta: &[f64], theta: f64) -> Result<Vec<Vec<f64>>> {
    if m == 0 || m > n {
        return Err(Error::OutOfRange {
            index: m,
            lo: 1,
            hi: n,
        });
    }
    check_theta(theta)?;
    let nf = n as f64;
    let mf = m as f64;
    Ok((1..n)
        .map(|s| {
            let sf = s as f64;
            let rescale = (sf * (nf - sf) / nf).powf(0.5 - theta);
            let factor = if s <= m {
                -rescale * (sf / (nf * (nf - sf))).sqrt() * (nf - mf)
            } else {
                -rescale * ((nf - sf) / (nf * sf)).sqrt() * mf
            };
            delta.iter().map(|d| factor * d).collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step() -> Sample {
        Sample::from_series(&[0.0, 0.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn prefix_sums_of_step() {
        let ps = prefix_sums(&step());
        assert_eq!(ps.cumulative(), &[0.0, 0.0, 1.0, 2.0]);
        assert_eq!(ps.total(), &[2.0]);
        assert_eq!(ps.at(0), &[0.0]);
    }

    #[test]
    fn prefix_sums_small_buffers() {
        let ps = PrefixSums::from_row_major(2, &[0.0; 6]).unwrap();
        assert!(ps.cumulative().iter().all(|&v| v == 0.0));
        let ps = PrefixSums::from_row_major(2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(ps.cumulative(), &[1.0, 2.0, 4.0, 6.0]);
        assert!(PrefixSums::from_row_major(2, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn cusum_at_hand_values() {
        let ps = prefix_sums(&step());
        assert_eq!(cusum_at(&ps, 2, 0.5).unwrap(), vec![-1.0]);
        assert_eq!(cusum_at(&ps, 1, 0.0).unwrap(), vec![-0.5]);
    }

    #[test]
    fn cusum_at_rejects_bad_split_and_theta() {
        let ps = prefix_sums(&step());
        assert_eq!(
            cusum_at(&ps, 0, 0.5),
            Err(Error::OutOfRange { index: 0, lo: 1, hi: 3 })
        );
        assert!(cusum_at(&ps, 4, 0.5).is_err());
        assert!(cusum_at(&ps, 2, 1.0).is_err());
        assert!(cusum_at(&ps, 2, -0.1).is_err());
    }

    #[test]
    fn constant_sample_has_zero_cusum() {
        let x = Sample::from_rows(&[[3.0, -1.0]; 6]).unwrap();
        for theta in [0.0, 0.25, 0.5, 0.9] {
            let cfg = CusumConfig::full_range(6, theta).unwrap();
            let proc = cusum_process(&x, &cfg).unwrap();
            assert!(proc.sup_norms().iter().all(|&v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn process_of_step() {
        let cfg = CusumConfig::full_range(4, 0.5).unwrap();
        let proc = cusum_process(&step(), &cfg).unwrap();
        let expected = [1.0 / 3f64.sqrt(), 1.0, 1.0 / 3f64.sqrt()];
        for (a, b) in proc.sup_norms().iter().zip(expected) {
            assert!((a - b).abs() < 1e-4);
        }
        let t = test_statistic(&proc).unwrap();
        assert_eq!(t, ScanMax { value: 1.0, split: 2 });

        let only_two = cusum_process(&step(), &cfg.with_range(2, 2)).unwrap();
        assert_eq!(test_statistic(&only_two).unwrap().value, 1.0);
    }

    #[test]
    fn zero_process_attains_at_first_split() {
        let x = Sample::from_series(&[1.0; 8]).unwrap();
        let cfg = CusumConfig::for_test(8, 2).unwrap();
        let t = test_statistic(&cusum_process(&x, &cfg).unwrap()).unwrap();
        assert_eq!(t, ScanMax { value: 0.0, split: 2 });
    }

    #[test]
    fn config_validation() {
        assert!(CusumConfig::for_test(10, 0).is_err());
        assert!(CusumConfig::for_test(10, 6).is_err());
        let c = CusumConfig::for_test(10, 5).unwrap();
        assert_eq!((c.search_lo, c.search_hi), (5, 5));
        let c = CusumConfig::for_test(10, 1).unwrap();
        assert_eq!((c.search_lo, c.search_hi), (1, 9));
        assert!(CusumConfig::full_range(10, 1.0).is_err());
        let bad = CusumConfig::full_range(10, 0.5).unwrap().with_range(3, 10);
        assert!(bad.validate(10).is_err());
        let bad = CusumConfig::full_range(10, 0.5).unwrap().with_range(4, 3);
        assert!(bad.validate(10).is_err());
    }

    #[test]
    fn mean_shift_profile_of_step() {
        let prof = mean_shift_profile(4, 2, &[1.0], 0.5).unwrap();
        let expected = [-1.0 / 3f64.sqrt(), -1.0, -1.0 / 3f64.sqrt()];
        for (row, e) in prof.iter().zip(expected) {
            assert!((row[0] - e).abs() < 1e-12);
        }
        let zero = mean_shift_profile(10, 4, &[0.0, 0.0], 0.0).unwrap();
        assert!(zero.iter().flatten().all(|&v| v == 0.0));
        assert!(mean_shift_profile(10, 0, &[1.0], 0.5).is_err());
        assert!(mean_shift_profile(10, 11, &[1.0], 0.5).is_err());
    }

    #[test]
    fn no_change_when_m_equals_n() {
        let prof = mean_shift_profile(10, 10, &[2.0], 0.5).unwrap();
        // Shift after the last observation never appears in the data.
        assert!(prof.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax_first(&[1.0, 3.0, 3.0, 2.0]), Some((1, 3.0)));
        assert_eq!(argmax_first(&[]), None);
    }
}

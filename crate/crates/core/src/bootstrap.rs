//! Gaussian multiplier bootstrap for the sup-norm CUSUM statistic.
//!
//! A bootstrap draw multiplies the segment-centred observations by i.i.d.
//! standard normals `e_1, ..., e_n`:
//!
//! ```text
//! Z*(s) = sqrt((n-s)/(ns)) sum_{i<=s} e_i (X_i - Xbar_s^-)
//!       - sqrt(s/(n(n-s)))  sum_{i>s}  e_i (X_i - Xbar_s^+)
//! ```
//!
//! and `T* = max_s |Z*(s)|_inf`. With `P(s) = sum_{i<=s} e_i X_i` and
//! `E(s) = sum_{i<=s} e_i`, the left sum equals `P(s) - E(s) S(s)/s` (and the
//! right sum is the analogous tail expression), so a full draw is one O(np) pass.
//!
//! The block variant shares one multiplier across each contiguous block of `M`
//! observations; with `M = 1` it is the i.i.d. scheme.

use rayon::prelude::*;

use crate::cusum::{
    cusum_process, sup_norm, test_statistic, CusumConfig, PrefixSums,
    STATIONARY_THETA,
};
use crate::error::{Error, Result};
use crate::rng::{fill_standard_normal, StreamKey};
use crate::sample::Sample;

pub const DEFAULT_DRAWS: usize = 200;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Parameters of the bootstrap calibration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapConfig {
    /// Number of bootstrap draws `B`.
    pub draws: usize,
    /// Block length `M`; 1 is the i.i.d. multiplier bootstrap.
    pub block_size: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            draws: DEFAULT_DRAWS,
            block_size: 1,
            alpha: DEFAULT_ALPHA,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.draws == 0 {
            return Err(Error::config("bootstrap draws must be at least 1"));
        }
        if self.block_size == 0 || self.block_size > n {
            return Err(Error::config(format!(
                "block size must lie in [1, {n}]; got {}",
                self.block_size
            )));
        }
        check_alpha(self.alpha)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha must lie in (0, 1); got {alpha}")));
    }
    Ok(())
}

fn check_bootstrap_theta(cfg: &CusumConfig) -> Result<()> {
    if cfg.theta != STATIONARY_THETA {
        return Err(Error::config(format!(
            "the multiplier bootstrap calibrates the theta = 1/2 statistic; got theta = {}",
            cfg.theta
        )));
    }
    Ok(())
}

/// Number of blocks `ceil(n / M)`; the last block is shorter when `M` does not divide `n`.
pub fn block_count(n: usize, block_size: usize) -> usize {
    n.div_ceil(block_size)
}

/// Repeats each block multiplier over its `M` observations.
pub fn expand_block_multipliers(block: &[f64], block_size: usize, n: usize) -> Result<Vec<f64>> {
    if block_size == 0 {
        return Err(Error::config("block size must be at least 1"));
    }
    let blocks = block_count(n, block_size);
    if block.len() != blocks {
        return Err(Error::LengthMismatch {
            what: "block multipliers",
            expected: blocks,
            actual: block.len(),
        });
    }
    Ok((0..n).map(|i| block[i / block_size]).collect())
}

/// Prefix sums of one sample, reused across bootstrap draws.
///
/// The draws are invariant to translating every observation and to adding a
/// constant to every multiplier, so the kernel works with `X_i - X_1` and
/// `e_i - e_1`. Constant samples and single-block draws are then exactly zero.
#[derive(Clone, Debug)]
pub struct MultiplierKernel<'a> {
    sample: &'a Sample,
    centred: Vec<f64>,
    prefix: PrefixSums,
}

impl<'a> MultiplierKernel<'a> {
    pub fn new(sample: &'a Sample) -> Self {
        let origin = sample.row(0);
        let centred: Vec<f64> = sample
            .rows()
            .flat_map(|row| row.iter().zip(origin).map(|(x, o)| x - o))
            .collect();
        let prefix = PrefixSums::from_row_major(sample.p(), &centred)
            .expect("validated sample has whole rows");
        Self {
            sample,
            centred,
            prefix,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        let p = self.sample.p();
        &self.centred[i * p..(i + 1) * p]
    }

    pub fn sample(&self) -> &Sample {
        self.sample
    }

    /// Streams `Z*(s)` for `s = lo..=hi` into `visit`.
    pub fn scan<F>(&self, multipliers: &[f64], lo: usize, hi: usize, mut visit: F) -> Result<()>
    where
        F: FnMut(usize, &[f64]),
    {
        let (n, p) = (self.sample.n(), self.sample.p());
        if multipliers.len() != n {
            return Err(Error::LengthMismatch {
                what: "multipliers",
                expected: n,
                actual: multipliers.len(),
            });
        }
        for s in [lo, hi] {
            if s == 0 || s >= n {
                return Err(Error::OutOfRange {
                    index: s,
                    lo: 1,
                    hi: n - 1,
                });
            }
        }
        if lo > hi {
            return Ok(());
        }

        let origin = multipliers[0];
        let mut weighted_total = vec![0.0; p];
        let mut mult_total = 0.0;
        for (row, &e) in self.centred.chunks_exact(p).zip(multipliers) {
            let e = e - origin;
            mult_total += e;
            for (acc, &x) in weighted_total.iter_mut().zip(row) {
                *acc += e * x;
            }
        }

        let total = self.prefix.total();
        let nf = n as f64;
        let mut weighted = vec![0.0; p];
        let mut mult = 0.0;
        let mut z = vec![0.0; p];
        for s in 1..=hi {
            let e = multipliers[s - 1] - origin;
            mult += e;
            for (acc, &x) in weighted.iter_mut().zip(self.row(s - 1)) {
                *acc += e * x;
            }
            if s < lo {
                continue;
            }
            let sf = s as f64;
            let left_w = ((nf - sf) / (nf * sf)).sqrt();
            let right_w = (sf / (nf * (nf - sf))).sqrt();
            let left_mean_w = mult / sf;
            let right_mean_w = (mult_total - mult) / (nf - sf);
            let partial = self.prefix.at(s);
            for j in 0..p {
                let left = weighted[j] - left_mean_w * partial[j];
                let right = (weighted_total[j] - weighted[j]) - right_mean_w * (total[j] - partial[j]);
                z[j] = left_w * left - right_w * right;
            }
            visit(s, &z);
        }
        Ok(())
    }

    /// `Z*(s)` at a single split.
    pub fn cusum_at(&self, multipliers: &[f64], s: usize) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        self.scan(multipliers, s, s, |_, z| out = z.to_vec())?;
        Ok(out)
    }

    /// `T* = max_{s in range} |Z*(s)|_inf`.
    pub fn draw(&self, cfg: &CusumConfig, multipliers: &[f64]) -> Result<f64> {
        cfg.validate(self.sample.n())?;
        let mut best = 0.0_f64;
        self.scan(multipliers, cfg.search_lo, cfg.search_hi, |_, z| {
            best = best.max(sup_norm(z));
        })?;
        Ok(best)
    }

    /// Block draw with one multiplier per block of `block_size` observations.
    pub fn block_draw(&self, cfg: &CusumConfig, block: &[f64], block_size: usize) -> Result<f64> {
        let e = expand_block_multipliers(block, block_size, self.sample.n())?;
        self.draw(cfg, &e)
    }
}

/// `Z*(s)` for one multiplier vector.
pub fn multiplier_cusum_at(sample: &Sample, multipliers: &[f64], s: usize) -> Result<Vec<f64>> {
    MultiplierKernel::new(sample).cusum_at(multipliers, s)
}

/// One bootstrap statistic `T*` for the given multipliers.
pub fn bootstrap_draw(sample: &Sample, cfg: &CusumConfig, multipliers: &[f64]) -> Result<f64> {
    MultiplierKernel::new(sample).draw(cfg, multipliers)
}

/// One block bootstrap statistic `T#` for `ceil(n / block_size)` block multipliers.
pub fn block_bootstrap_draw(
    sample: &Sample,
    cfg: &CusumConfig,
    block_multipliers: &[f64],
    block_size: usize,
) -> Result<f64> {
    MultiplierKernel::new(sample).block_draw(cfg, block_multipliers, block_size)
}

/// Per-observation multipliers of draw `index`, from its own substream.
pub fn draw_multipliers(seed: u64, index: usize, n: usize, block_size: usize) -> Vec<f64> {
    let mut rng = StreamKey::new(seed).child(index as u64).rng();
    let mut block = vec![0.0; block_count(n, block_size)];
    fill_standard_normal(&mut rng, &mut block);
    if block_size == 1 {
        block
    } else {
        (0..n).map(|i| block[i / block_size]).collect()
    }
}

/// `alpha`-level critical value: the `ceil((1 - alpha) B)`-th smallest draw.
pub fn empirical_quantile(draws_sorted: &[f64], alpha: f64) -> Result<f64> {
    if draws_sorted.is_empty() {
        return Err(Error::config("empirical quantile of an empty draw set"));
    }
    check_alpha(alpha)?;
    let b = draws_sorted.len();
    // Absorb representation error such as (1 - 0.05) * 200 = 190.00000000000003.
    let target = (1.0 - alpha) * b as f64;
    let k = (target - 1e-9 * target.max(1.0)).ceil() as usize;
    Ok(draws_sorted[k.clamp(1, b) - 1])
}

/// Sorts in place with a total order on floats.
pub fn sort_draws(draws: &mut [f64]) {
    draws.sort_by(f64::total_cmp);
}

/// `B` bootstrap statistics sorted ascending; draw `b` uses substream `(seed, b)`.
pub fn bootstrap_distribution(
    sample: &Sample,
    ccfg: &CusumConfig,
    bcfg: &BootstrapConfig,
) -> Result<Vec<f64>> {
    check_bootstrap_theta(ccfg)?;
    ccfg.validate(sample.n())?;
    bcfg.validate(sample.n())?;
    let kernel = MultiplierKernel::new(sample);
    let n = sample.n();
    let mut draws = (0..bcfg.draws)
        .into_par_iter()
        .map(|b| {
            let e = draw_multipliers(bcfg.seed, b, n, bcfg.block_size);
            kernel.draw(ccfg, &e)
        })
        .collect::<Result<Vec<_>>>()?;
    sort_draws(&mut draws);
    Ok(draws)
}

/// Outcome of a bootstrap change-point test.
#[derive(Clone, Debug, PartialEq)]
pub struct TestResult {
    pub t_n: f64,
    /// Split attaining `t_n` (smallest on ties).
    pub attaining_s: usize,
    pub draws_sorted: Vec<f64>,
    pub quantile: f64,
    pub reject: bool,
}

impl TestResult {
    /// Critical value at another level from the same draws.
    pub fn quantile_at(&self, alpha: f64) -> Result<f64> {
        empirical_quantile(&self.draws_sorted, alpha)
    }

    pub fn rejects_at(&self, alpha: f64) -> Result<bool> {
        Ok(self.t_n > self.quantile_at(alpha)?)
    }
}

/// Rejects when the statistic strictly exceeds the bootstrap quantile.
pub fn decide(t_n: f64, draws_sorted: &[f64], alpha: f64) -> Result<(f64, bool)> {
    let q = empirical_quantile(draws_sorted, alpha)?;
    Ok((q, t_n > q))
}

/// Full test: statistic, bootstrap calibration, and decision.
pub fn run_test(sample: &Sample, ccfg: &CusumConfig, bcfg: &BootstrapConfig) -> Result<TestResult> {
    check_bootstrap_theta(ccfg)?;
    let t = test_statistic(&cusum_process(sample, ccfg)?)?;
    let draws_sorted = bootstrap_distribution(sample, ccfg, bcfg)?;
    let (quantile, reject) = decide(t.value, &draws_sorted, bcfg.alpha)?;
    Ok(TestResult {
        t_n: t.value,
        attaining_s: t.split,
        draws_sorted,
        quantile,
        reject,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> Sample {
        Sample::from_series(&[0.0, 1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn hand_evaluated_multiplier_cusum() {
        let z = multiplier_cusum_at(&ramp(), &[1.0, 0.0, 0.0, 0.0], 2).unwrap();
        assert!((z[0] + 0.25).abs() < 1e-15);
        let cfg = CusumConfig::for_test(4, 2).unwrap();
        let t = bootstrap_draw(&ramp(), &cfg, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((t - 0.25).abs() < 1e-15);
    }

    #[test]
    fn constant_multipliers_vanish() {
        let x = Sample::from_rows(&[[1.0, 5.0], [2.0, -1.0], [0.5, 3.0], [4.0, 4.0], [7.0, 0.0]])
            .unwrap();
        let cfg = CusumConfig::full_range(5, 0.5).unwrap();
        let t = bootstrap_draw(&x, &cfg, &[2.5; 5]).unwrap();
        assert!(t < 1e-12);
    }

    #[test]
    fn block_draw_hand_value() {
        let cfg = CusumConfig::full_range(4, 0.5).unwrap().with_range(1, 1);
        let t = block_bootstrap_draw(&ramp(), &cfg, &[1.0, 0.0], 2).unwrap();
        assert!((t - 1.0 / 12f64.sqrt()).abs() < 1e-12);
        assert!((t - 0.2887).abs() < 1e-4);
    }

    #[test]
    fn single_block_is_zero() {
        let cfg = CusumConfig::full_range(4, 0.5).unwrap();
        for e in [-3.0, 0.7, 12.0] {
            assert_eq!(block_bootstrap_draw(&ramp(), &cfg, &[e], 4).unwrap(), 0.0);
        }
    }

    #[test]
    fn ragged_last_block() {
        let e = expand_block_multipliers(&[1.0, 2.0, 3.0], 2, 5).unwrap();
        assert_eq!(e, vec![1.0, 1.0, 2.0, 2.0, 3.0]);
        assert!(expand_block_multipliers(&[1.0, 2.0], 2, 5).is_err());
        assert_eq!(block_count(10, 5), 2);
        assert_eq!(block_count(11, 5), 3);
    }

    #[test]
    fn length_and_range_errors() {
        let x = ramp();
        let k = MultiplierKernel::new(&x);
        assert!(matches!(
            k.cusum_at(&[1.0; 3], 1),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(k.cusum_at(&[1.0; 4], 4), Err(Error::OutOfRange { .. })));
        assert!(matches!(k.cusum_at(&[1.0; 4], 0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn quantile_examples() {
        let draws: Vec<f64> = (1..=200).map(f64::from).collect();
        assert_eq!(empirical_quantile(&draws, 0.05).unwrap(), 190.0);
        assert_eq!(empirical_quantile(&[5.0], 0.3).unwrap(), 5.0);
        assert_eq!(empirical_quantile(&[1.0, 2.0, 3.0], 0.5).unwrap(), 2.0);
        assert!(empirical_quantile(&[], 0.5).is_err());
        assert!(empirical_quantile(&[1.0], 0.0).is_err());
        assert!(empirical_quantile(&[1.0], 1.0).is_err());
    }

    #[test]
    fn quantile_on_alpha_grid_matches_integer_rank() {
        let draws: Vec<f64> = (1..=200).map(f64::from).collect();
        for i in 1..100 {
            let alpha = i as f64 / 100.0;
            // (1 - i/100) * 200 = 2 (100 - i) exactly.
            let rank = 2 * (100 - i);
            assert_eq!(empirical_quantile(&draws, alpha).unwrap(), rank as f64);
        }
    }

    #[test]
    fn constant_sample_never_rejects() {
        let x = Sample::from_rows(&[[2.0, 1.0]; 12]).unwrap();
        let ccfg = CusumConfig::for_test(12, 2).unwrap();
        let r = run_test(&x, &ccfg, &BootstrapConfig::default()).unwrap();
        assert_eq!(r.t_n, 0.0);
        assert!(r.draws_sorted.iter().all(|&d| d == 0.0));
        assert_eq!(r.quantile, 0.0);
        assert!(!r.reject);
    }

    #[test]
    fn tie_at_quantile_retains() {
        let (q, reject) = decide(3.0, &[1.0, 2.0, 3.0, 3.0], 0.5).unwrap();
        assert_eq!(q, 2.0);
        assert!(reject);
        let (q, reject) = decide(2.0, &[1.0, 2.0, 3.0, 3.0], 0.5).unwrap();
        assert_eq!(q, 2.0);
        assert!(!reject);
    }

    #[test]
    fn invalid_configs() {
        let x = Sample::from_series(&[0.0, 1.0, 0.5, 2.0, 1.0, 3.0]).unwrap();
        let ccfg = CusumConfig::for_test(6, 2).unwrap();
        let bad = [
            BootstrapConfig { draws: 0, ..Default::default() },
            BootstrapConfig { block_size: 0, ..Default::default() },
            BootstrapConfig { block_size: 7, ..Default::default() },
            BootstrapConfig { alpha: 1.5, ..Default::default() },
        ];
        for b in bad {
            assert!(matches!(run_test(&x, &ccfg, &b), Err(Error::InvalidConfig(_))));
        }
        let theta0 = CusumConfig { theta: 0.0, ..ccfg };
        assert!(run_test(&x, &theta0, &BootstrapConfig::default()).is_err());
    }

    #[test]
    fn draw_multipliers_are_block_constant() {
        let e = draw_multipliers(9, 3, 10, 4);
        assert_eq!(e.len(), 10);
        assert_eq!(e[0], e[3]);
        assert_eq!(e[4], e[7]);
        assert_eq!(e[8], e[9]);
        assert_ne!(e[3], e[4]);
        assert_eq!(e, draw_multipliers(9, 3, 10, 4));
    }
}

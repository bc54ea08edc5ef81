//! Reference procedures: the bootstrapped log-likelihood ratio test and the
//! known-covariance Gaussian-maxima oracle.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::bootstrap::{
    decide, draw_multipliers, sort_draws, BootstrapConfig, MultiplierKernel, TestResult,
};
use crate::cusum::{cusum_process, test_statistic, CusumConfig};
use crate::datagen::cholesky;
use crate::error::{Error, Result};
use crate::rng::{fill_standard_normal, StreamKey};
use crate::sample::Sample;

/// Unbiased sample covariance of the rows.
pub fn sample_covariance(sample: &Sample) -> DMatrix<f64> {
    let (n, p) = (sample.n(), sample.p());
    let x = DMatrix::from_row_slice(n, p, sample.values());
    let mean = x.row_mean();
    let mut centered = x;
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    (centered.transpose() * &centered) / (n as f64 - 1.0)
}

/// Cholesky factor of the sample covariance used by the log-likelihood statistics.
#[derive(Clone, Debug)]
pub struct Whitener {
    chol: Cholesky<f64, Dyn>,
}

impl Whitener {
    pub fn from_sample(sample: &Sample) -> Result<Self> {
        if sample.p() >= sample.n() {
            return Err(Error::config(format!(
                "log-likelihood ratio needs p < n; got p = {}, n = {}",
                sample.p(),
                sample.n()
            )));
        }
        Cholesky::new(sample_covariance(sample))
            .map(|chol| Self { chol })
            .ok_or_else(|| Error::numeric("sample covariance is singular"))
    }

    /// `zᵀ Σ̂⁻¹ z / 2`.
    pub fn half_quadratic_form(&self, z: &[f64]) -> f64 {
        let v = DVector::from_column_slice(z);
        let solved = self.chol.solve(&v);
        0.5 * v.dot(&solved)
    }
}

/// `max_s Z(s)ᵀ Σ̂⁻¹ Z(s) / 2` over the configured range.
pub fn loglik_statistic(sample: &Sample, cfg: &CusumConfig) -> Result<f64> {
    let whitener = Whitener::from_sample(sample)?;
    loglik_statistic_with(&whitener, sample, cfg)
}

fn loglik_statistic_with(whitener: &Whitener, sample: &Sample, cfg: &CusumConfig) -> Result<f64> {
    let process = cusum_process(sample, cfg)?;
    Ok(process
        .splits()
        .map(|s| whitener.half_quadratic_form(process.z(s)))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Bootstrap analog `max_s Z*(s)ᵀ Σ̂⁻¹ Z*(s) / 2`.
pub fn loglik_bootstrap_draw(
    kernel: &MultiplierKernel<'_>,
    whitener: &Whitener,
    cfg: &CusumConfig,
    multipliers: &[f64],
) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    kernel.scan(multipliers, cfg.search_lo, cfg.search_hi, |_, z| {
        best = best.max(whitener.half_quadratic_form(z));
    })?;
    Ok(best)
}

/// Log-likelihood ratio test calibrated by the multiplier bootstrap.
pub fn run_loglik_test(
    sample: &Sample,
    ccfg: &CusumConfig,
    bcfg: &BootstrapConfig,
) -> Result<TestResult> {
    ccfg.validate(sample.n())?;
    bcfg.validate(sample.n())?;
    let whitener = Whitener::from_sample(sample)?;
    let process = cusum_process(sample, ccfg)?;
    let (t_n, attaining_s) = process
        .splits()
        .map(|s| (whitener.half_quadratic_form(process.z(s)), s))
        .fold((f64::NEG_INFINITY, 0), |best, cur| if cur.0 > best.0 { cur } else { best });
    let kernel = MultiplierKernel::new(sample);
    let n = sample.n();
    let mut draws = (0..bcfg.draws)
        .into_par_iter()
        .map(|b| {
            let e = draw_multipliers(bcfg.seed, b, n, bcfg.block_size);
            loglik_bootstrap_draw(&kernel, &whitener, ccfg, &e)
        })
        .collect::<Result<Vec<_>>>()?;
    sort_draws(&mut draws);
    let (quantile, reject) = decide(t_n, &draws, bcfg.alpha)?;
    Ok(TestResult {
        t_n,
        attaining_s,
        draws_sorted: draws,
        quantile,
        reject,
    })
}

/// Known covariance and draw budget for the Gaussian-maxima oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleConfig {
    pub sigma: DMatrix<f64>,
    pub draws: usize,
    pub seed: u64,
}

pub const DEFAULT_ORACLE_DRAWS: usize = 1000;

/// Sorted draws of the Gaussian analog of `T_n` under known covariance `Σ`.
///
/// Draw `b` simulates `n` i.i.d. `N(0, Σ)` rows from substream `(seed, b)` and
/// evaluates the test statistic on them, which has the same law as the
/// maximum of the stacked Gaussian CUSUM vector.
pub fn oracle_gaussian_max(cfg: &OracleConfig, n: usize, ccfg: &CusumConfig) -> Result<Vec<f64>> {
    if cfg.draws == 0 {
        return Err(Error::config("oracle draws must be at least 1"));
    }
    ccfg.validate(n)?;
    let p = cfg.sigma.nrows();
    let l = cholesky(&cfg.sigma)?;
    let mut draws = (0..cfg.draws)
        .into_par_iter()
        .map(|b| {
            let mut rng = StreamKey::new(cfg.seed).child(b as u64).rng();
            let mut values = vec![0.0; n * p];
            let mut z = vec![0.0; p];
            for row in values.chunks_exact_mut(p) {
                fill_standard_normal(&mut rng, &mut z);
                for (i, out) in row.iter_mut().enumerate() {
                    *out = (0..=i).map(|k| l[(i, k)] * z[k]).sum();
                }
            }
            let sample = Sample::from_row_major(n, p, values)?;
            Ok(test_statistic(&cusum_process(&sample, ccfg)?)?.value)
        })
        .collect::<Result<Vec<_>>>()?;
    sort_draws(&mut draws);
    Ok(draws)
}

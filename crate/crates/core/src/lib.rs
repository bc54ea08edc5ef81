//! Change-point testing and localization for high-dimensional mean vectors.
//!
//! The test statistic is the sup-norm of the CUSUM process,
//! `T_n = max_{b <= s <= n-b} |Z_n(s)|_inf`, calibrated by a Gaussian
//! multiplier bootstrap (or its block variant for dependent data). Once a
//! change is detected, its location is estimated by maximizing the sup-norm of
//! a generalized CUSUM with weighting `theta` in `{0, 1/2}`.
//!
//! ```
//! use maxcusum::{run_test, BootstrapConfig, CusumConfig, Sample};
//!
//! let mut rows = vec![[0.0, 0.0]; 40];
//! for row in rows.iter_mut().skip(20) {
//!     row[0] = 3.0;
//! }
//! let x = Sample::from_rows(&rows).unwrap();
//! let ccfg = CusumConfig::for_test(40, 4).unwrap();
//! let result = run_test(&x, &ccfg, &BootstrapConfig::default()).unwrap();
//! assert_eq!(result.attaining_s, 20);
//! ```

pub mod benchmarks;
pub mod bootstrap;
pub mod cusum;
pub mod datagen;
pub mod error;
pub mod locate;
pub mod rng;
pub mod sample;

pub use bootstrap::{
    block_bootstrap_draw, bootstrap_distribution, bootstrap_draw, empirical_quantile,
    multiplier_cusum_at, run_test, BootstrapConfig, MultiplierKernel, TestResult,
};
pub use cusum::{
    cusum_at, cusum_process, mean_shift_profile, prefix_sums, test_statistic, CusumConfig,
    CusumProcess, PrefixSums, ScanMax,
};
pub use error::{Error, Result};
pub use locate::{estimate_location, LocationEstimate};
pub use rng::StreamKey;
pub use sample::Sample;

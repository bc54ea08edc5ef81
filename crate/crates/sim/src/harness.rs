//! Seed-deterministic execution of size, power and RMSE experiments.
//!
//! Replicate `r` of a noise cell draws its data from stream
//! `(seed, cell label, r, 0)` and seeds its bootstrap from `(seed, cell label, r, 1)`.
//! Replicates run in parallel and are folded in replicate order, so reports do
//! not depend on the number of workers.

use std::time::Instant;

use maxcusum::benchmarks::{oracle_gaussian_max, run_loglik_test, OracleConfig};
use maxcusum::bootstrap::bootstrap_distribution;
use maxcusum::datagen::{inject_shift, ScenarioGenerator, ScenarioSpec, SignalSpec};
use maxcusum::{
    cusum_process, empirical_quantile, estimate_location, test_statistic, BootstrapConfig,
    CusumConfig, Sample, StreamKey,
};
use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::plan::{ExperimentPlan, Method, Metric};
use crate::report::{proportion_se, CellRecord, ExperimentReport, ReportRow};

/// Runs the experiment named by `plan.metric`.
pub fn run(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    match plan.metric {
        Metric::Size => run_size(plan),
        Metric::Power => run_power(plan),
        Metric::Rmse => run_rmse(plan),
    }
}

/// Empirical rejection rates under the null over the whole alpha grid.
///
/// Emits per cell and method: one `rejection_rate` row per grid level, a
/// `size` row at `plan.alpha`, and `sup_error_in_size = max |R(alpha) - alpha|`.
pub fn run_size(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    plan.validate()?;
    for spec in &plan.scenarios {
        if !spec.signal.is_null(spec.n) {
            return Err(SimError::plan(format!(
                "size experiment needs a null scenario; `{}` carries a signal",
                spec.noise_label()
            )));
        }
    }
    if plan.signals.iter().any(|&d| d != 0.0) {
        return Err(SimError::plan("size experiment cannot take a nonzero signal grid"));
    }
    let mut alphas = plan.alpha_grid.clone();
    alphas.push(plan.alpha);
    execute(plan, |cell, out| {
        let flags = cell.replicates(plan, |noise, boot_seed| {
            let x = inject_shift(&noise, &cell.spec.mu, &cell.spec.signal)?;
            plan.methods
                .iter()
                .map(|&m| cell.rejections(plan, m, &x, boot_seed, &alphas))
                .collect::<Result<Vec<_>>>()
        })?;
        for (k, &method) in plan.methods.iter().enumerate() {
            let rate = |a: usize| {
                flags.iter().filter(|f| f[k][a]).count() as f64 / plan.replicates as f64
            };
            let base = cell.row(plan, Metric::Size, &method.to_string(), &cell.spec.signal);
            let mut sup = 0.0f64;
            for (a, &alpha) in plan.alpha_grid.iter().enumerate() {
                let r = rate(a);
                sup = sup.max((r - alpha).abs());
                out.push(ReportRow {
                    metric: "rejection_rate".into(),
                    alpha: Some(alpha),
                    value: r,
                    se: Some(proportion_se(r, plan.replicates)),
                    ..base.clone()
                });
            }
            let r = rate(plan.alpha_grid.len());
            out.push(ReportRow {
                metric: "size".into(),
                alpha: Some(plan.alpha),
                value: r,
                se: Some(proportion_se(r, plan.replicates)),
                ..base.clone()
            });
            out.push(ReportRow {
                metric: "sup_error_in_size".into(),
                value: sup,
                ..base
            });
        }
        Ok(())
    })
}

/// Rejection rate at `plan.alpha` for every signal variant and method.
pub fn run_power(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    plan.validate()?;
    let alphas = [plan.alpha];
    execute(plan, |cell, out| {
        let grid = plan.signal_grid(cell.spec)?;
        let flags = cell.replicates(plan, |noise, boot_seed| {
            let mut per = Vec::with_capacity(grid.len() * plan.methods.len());
            for signal in &grid {
                let x = inject_shift(&noise, &cell.spec.mu, signal)?;
                for &m in &plan.methods {
                    per.push(cell.rejections(plan, m, &x, boot_seed, &alphas)?[0]);
                }
            }
            Ok(per)
        })?;
        for (g, signal) in grid.iter().enumerate() {
            for (k, &method) in plan.methods.iter().enumerate() {
                let idx = g * plan.methods.len() + k;
                let r = flags.iter().filter(|f| f[idx]).count() as f64 / plan.replicates as f64;
                out.push(ReportRow {
                    alpha: Some(plan.alpha),
                    value: r,
                    se: Some(proportion_se(r, plan.replicates)),
                    ..cell.row(plan, Metric::Power, &method.to_string(), signal)
                });
            }
        }
        Ok(())
    })
}

/// RMSE of `m_hat / n` against `m / n` per signal variant, theta and truncation.
///
/// The standard error is the delta-method value `se(MSE) / (2 RMSE)`.
pub fn run_rmse(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    plan.validate()?;
    execute(plan, |cell, out| {
        let grid = plan.signal_grid(cell.spec)?;
        let n = cell.spec.n as f64;
        let errors = cell.replicates(plan, |noise, _| {
            let mut per = Vec::new();
            for signal in &grid {
                let x = inject_shift(&noise, &cell.spec.mu, signal)?;
                let truth = signal.change_location as f64 / n;
                for &theta in &plan.thetas {
                    for &b in &plan.truncations {
                        let est = estimate_location(&x, theta, Some(b))?;
                        per.push((est.t_hat - truth).powi(2));
                    }
                }
            }
            Ok(per)
        })?;
        let mut idx = 0;
        for signal in &grid {
            for &theta in &plan.thetas {
                for &b in &plan.truncations {
                    let (rmse, se) = rmse_with_se(errors.iter().map(|e| e[idx]), plan.replicates);
                    idx += 1;
                    out.push(ReportRow {
                        theta: Some(theta),
                        truncation: Some(b),
                        value: rmse,
                        se: Some(se),
                        ..cell.row(plan, Metric::Rmse, "argmax", signal)
                    });
                }
            }
        }
        Ok(())
    })
}

fn rmse_with_se(squared: impl Iterator<Item = f64> + Clone, r: usize) -> (f64, f64) {
    let rf = r as f64;
    let mse = squared.clone().sum::<f64>() / rf;
    let rmse = mse.sqrt();
    if r < 2 || rmse == 0.0 {
        return (rmse, 0.0);
    }
    let var = squared.map(|d| (d - mse).powi(2)).sum::<f64>() / (rf - 1.0);
    (rmse, (var / rf).sqrt() / (2.0 * rmse))
}

/// Shared driver: sets up the worker pool, visits cells in order, stamps wall time.
fn execute<F>(plan: &ExperimentPlan, mut per_cell: F) -> Result<ExperimentReport>
where
    F: FnMut(&Cell<'_>, &mut Vec<ReportRow>) -> Result<()> + Send,
{
    let start = Instant::now();
    let mut body = move || -> Result<(Vec<CellRecord>, Vec<ReportRow>)> {
        let mut cells = Vec::with_capacity(plan.scenarios.len());
        let mut rows = Vec::new();
        for spec in &plan.scenarios {
            let cell = Cell::new(plan, spec)?;
            per_cell(&cell, &mut rows)?;
            cells.push(CellRecord {
                scenario: spec.noise_label(),
                stream: cell.key.value(),
                oracle_seed: cell.oracle.as_ref().map(|o| o.0),
            });
        }
        Ok((cells, rows))
    };
    let (cells, rows) = match plan.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()?
            .install(body)?,
        None => body()?,
    };
    Ok(ExperimentReport {
        experiment: plan.metric,
        seed: plan.seed,
        replicates: plan.replicates,
        draws: plan.draws,
        boundary: plan.boundary,
        alpha: plan.alpha,
        alpha_grid: plan.alpha_grid.clone(),
        cells,
        rows,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Stream key of a noise cell: cells with equal noise labels share data.
pub fn cell_key(seed: u64, spec: &ScenarioSpec) -> StreamKey {
    StreamKey::new(seed).child_named(&spec.noise_label())
}

/// Data rng and bootstrap seed of replicate `r`.
pub fn replicate_streams(cell: StreamKey, r: usize) -> (maxcusum::rng::StreamRng, u64) {
    let key = cell.child(r as u64);
    (key.child(0).rng(), key.child(1).value())
}

struct Cell<'a> {
    spec: &'a ScenarioSpec,
    generator: ScenarioGenerator,
    key: StreamKey,
    ccfg: CusumConfig,
    /// Oracle seed and sorted draws, when the plan uses the oracle.
    oracle: Option<(u64, Vec<f64>)>,
}

impl<'a> Cell<'a> {
    fn new(plan: &ExperimentPlan, spec: &'a ScenarioSpec) -> Result<Self> {
        let key = cell_key(plan.seed, spec);
        let ccfg = CusumConfig::for_test(spec.n, plan.boundary)?;
        let oracle = if plan.methods.contains(&Method::Oracle) {
            let seed = key.child_named("oracle").value();
            let cfg = OracleConfig {
                sigma: spec.distribution.noise_covariance(spec.p),
                draws: plan.oracle_draws,
                seed,
            };
            Some((seed, oracle_gaussian_max(&cfg, spec.n, &ccfg)?))
        } else {
            None
        };
        Ok(Self {
            spec,
            generator: ScenarioGenerator::new(spec)?,
            key,
            ccfg,
            oracle,
        })
    }

    /// Maps every replicate's noise and bootstrap seed through `f`, in replicate order.
    fn replicates<T, F>(&self, plan: &ExperimentPlan, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(Sample, u64) -> Result<T> + Sync,
    {
        (0..plan.replicates)
            .into_par_iter()
            .map(|r| {
                let (mut rng, boot_seed) = replicate_streams(self.key, r);
                let noise = self.generator.noise(&mut rng)?;
                f(noise, boot_seed)
            })
            .collect()
    }

    /// Rejection indicator of `method` at each level in `alphas`.
    fn rejections(
        &self,
        plan: &ExperimentPlan,
        method: Method,
        x: &Sample,
        boot_seed: u64,
        alphas: &[f64],
    ) -> Result<Vec<bool>> {
        let bcfg = BootstrapConfig {
            draws: plan.draws,
            block_size: method.block_size(),
            alpha: plan.alpha,
            seed: boot_seed,
        };
        let owned;
        let (t, draws): (f64, &[f64]) = match method {
            Method::BootstrapCusum | Method::BlockBootstrapCusum(_) => {
                let t = test_statistic(&cusum_process(x, &self.ccfg)?)?.value;
                owned = bootstrap_distribution(x, &self.ccfg, &bcfg)?;
                (t, &owned)
            }
            Method::Loglik => {
                let res = run_loglik_test(x, &self.ccfg, &bcfg)?;
                owned = res.draws_sorted;
                (res.t_n, &owned)
            }
            Method::Oracle => {
                let t = test_statistic(&cusum_process(x, &self.ccfg)?)?.value;
                let draws = &self.oracle.as_ref().expect("oracle draws prepared").1;
                (t, draws)
            }
        };
        alphas
            .iter()
            .map(|&a| Ok(t > empirical_quantile(draws, a)?))
            .collect()
    }

    fn row(&self, plan: &ExperimentPlan, metric: Metric, method: &str, signal: &SignalSpec) -> ReportRow {
        let spec = self.spec;
        let change = !signal.is_null(spec.n) || signal.change_location < spec.n;
        ReportRow {
            experiment: metric.to_string(),
            method: method.into(),
            distribution: spec.distribution.family.label(),
            covariance: spec.distribution.covariance.label().into(),
            temporal: spec.temporal.label(),
            n: spec.n,
            p: spec.p,
            boundary: plan.boundary,
            signal: signal.pattern.label().into(),
            delta: signal.pattern.magnitude(),
            change_fraction: change.then(|| signal.change_location as f64 / spec.n as f64),
            theta: None,
            truncation: None,
            metric: metric.to_string(),
            alpha: None,
            value: 0.0,
            se: None,
            replicates: plan.replicates,
        }
    }
}

//! Experiment plans and their TOML representation.

use std::fmt;
use std::str::FromStr;

use maxcusum::datagen::{
    location_from_fraction, parse_family, CovarianceKind, DistributionSpec, ScenarioConfig,
    ScenarioSpec, SignalPattern, SignalSpec, TemporalSpec,
};
use maxcusum::CusumConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

pub const DEFAULT_REPLICATES: usize = 1000;
pub const DEFAULT_BOUNDARY_FRACTION: f64 = 0.05;

/// `{0.01, 0.02, ..., 0.99}`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..100).map(|k| k as f64 / 100.0).collect()
}

/// Calibrated test compared in size and power experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Sup-norm CUSUM with the i.i.d. multiplier bootstrap.
    BootstrapCusum,
    /// Sup-norm CUSUM with the block multiplier bootstrap of block size `M`.
    BlockBootstrapCusum(usize),
    /// Bootstrapped log-likelihood ratio statistic (needs `p < n`).
    Loglik,
    /// Sup-norm CUSUM against Gaussian maxima under the true covariance.
    Oracle,
}

impl Method {
    pub(crate) fn block_size(self) -> usize {
        match self {
            Method::BlockBootstrapCusum(m) => m,
            _ => 1,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::BootstrapCusum => f.write_str("bootstrap_cusum"),
            Method::BlockBootstrapCusum(m) => write!(f, "block_bootstrap_cusum({m})"),
            Method::Loglik => f.write_str("loglik"),
            Method::Oracle => f.write_str("oracle"),
        }
    }
}

impl FromStr for Method {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "bootstrap_cusum" | "bootstrap" => return Ok(Method::BootstrapCusum),
            "loglik" => return Ok(Method::Loglik),
            "oracle" => return Ok(Method::Oracle),
            _ => {}
        }
        let inner = s
            .strip_prefix("block_bootstrap_cusum(")
            .and_then(|rest| rest.strip_suffix(')'))
            .ok_or_else(|| SimError::plan(format!("unknown method `{s}`")))?;
        let m: usize = inner
            .trim()
            .parse()
            .map_err(|_| SimError::plan(format!("invalid block size in `{s}`")))?;
        if m == 0 {
            return Err(SimError::plan("block size must be at least 1"));
        }
        Ok(Method::BlockBootstrapCusum(m))
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Size,
    Power,
    Rmse,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Size => "size",
            Metric::Power => "power",
            Metric::Rmse => "rmse",
        })
    }
}

impl FromStr for Metric {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "size" => Ok(Metric::Size),
            "power" => Ok(Metric::Power),
            "rmse" => Ok(Metric::Rmse),
            other => Err(SimError::plan(format!(
                "unknown experiment `{other}`; expected size, power or rmse"
            ))),
        }
    }
}

/// A Monte Carlo experiment over one or more scenario cells.
///
/// Every scenario is a noise cell; signal grids (`signals` × `change_fractions`)
/// are applied on top of the same noise draws, and every method sees the same
/// data within a replicate.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub metric: Metric,
    pub scenarios: Vec<ScenarioSpec>,
    pub methods: Vec<Method>,
    pub replicates: usize,
    /// Bootstrap draws `B` per replicate.
    pub draws: usize,
    /// Boundary removal for the test statistic.
    pub boundary: usize,
    /// Level for power and the headline size row.
    pub alpha: f64,
    pub alpha_grid: Vec<f64>,
    /// `abs(delta)_inf` values; empty means the scenario's own signal.
    pub signals: Vec<f64>,
    /// `t_m = m / n` values; empty means the scenario's own change location.
    pub change_fractions: Vec<f64>,
    pub thetas: Vec<f64>,
    pub truncations: Vec<usize>,
    pub oracle_draws: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl ExperimentPlan {
    pub fn new(metric: Metric, scenario: ScenarioSpec) -> Self {
        let boundary = default_boundary(scenario.n);
        Self {
            metric,
            scenarios: vec![scenario],
            methods: vec![Method::BootstrapCusum],
            replicates: DEFAULT_REPLICATES,
            draws: maxcusum::bootstrap::DEFAULT_DRAWS,
            boundary,
            alpha: maxcusum::bootstrap::DEFAULT_ALPHA,
            alpha_grid: default_alpha_grid(),
            signals: Vec::new(),
            change_fractions: Vec::new(),
            thetas: vec![0.0, 0.5],
            truncations: vec![1],
            oracle_draws: maxcusum::benchmarks::DEFAULT_ORACLE_DRAWS,
            seed: 0,
            workers: None,
        }
    }

    /// Checks every invariant that does not depend on the experiment kind.
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(SimError::plan("plan has no scenarios"));
        }
        if self.methods.is_empty() {
            return Err(SimError::plan("plan has no methods"));
        }
        if self.replicates == 0 {
            return Err(SimError::plan("replicates must be at least 1"));
        }
        if self.draws == 0 {
            return Err(SimError::plan("bootstrap draws must be at least 1"));
        }
        if self.oracle_draws == 0 {
            return Err(SimError::plan("oracle draws must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(SimError::plan("workers must be at least 1"));
        }
        check_level("alpha", self.alpha)?;
        if self.alpha_grid.is_empty() {
            return Err(SimError::plan("alpha grid is empty"));
        }
        for &a in &self.alpha_grid {
            check_level("alpha grid entry", a)?;
        }
        if self.thetas.is_empty() || self.truncations.is_empty() {
            return Err(SimError::plan("theta and truncation grids must be nonempty"));
        }
        for &t in &self.thetas {
            if !(0.0..1.0).contains(&t) {
                return Err(SimError::plan(format!("theta must lie in [0, 1); got {t}")));
            }
        }
        for &f in &self.change_fractions {
            if !(0.0..=1.0).contains(&f) {
                return Err(SimError::plan(format!(
                    "change fraction must lie in [0, 1]; got {f}"
                )));
            }
        }
        for spec in &self.scenarios {
            spec.validate()?;
            let n = spec.n;
            CusumConfig::for_test(n, self.boundary)?;
            for &b in &self.truncations {
                CusumConfig::truncated(n, 0.5, b)?;
            }
            for method in &self.methods {
                match *method {
                    Method::BlockBootstrapCusum(m) if m == 0 || m > n => {
                        return Err(SimError::plan(format!(
                            "block size {m} must lie in [1, n = {n}]"
                        )))
                    }
                    Method::Loglik if spec.p >= n => {
                        return Err(SimError::plan(format!(
                            "loglik needs p < n; got p = {}, n = {n}",
                            spec.p
                        )))
                    }
                    Method::Oracle if spec.temporal != TemporalSpec::Iid => {
                        return Err(SimError::plan("oracle benchmark needs i.i.d. noise"))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Signal variants for a scenario: `change_fractions` × `signals`.
    pub fn signal_grid(&self, spec: &ScenarioSpec) -> Result<Vec<SignalSpec>> {
        let base = match spec.signal.pattern {
            SignalPattern::None => SignalPattern::Sparse { delta: 0.0 },
            other => other,
        };
        let magnitudes = if self.signals.is_empty() {
            if spec.signal.pattern == SignalPattern::None {
                return Err(SimError::plan(
                    "plan needs a signal grid or a scenario with a signal",
                ));
            }
            vec![spec.signal.pattern.magnitude()]
        } else {
            self.signals.clone()
        };
        let locations = if self.change_fractions.is_empty() {
            vec![spec.signal.change_location]
        } else {
            self.change_fractions
                .iter()
                .map(|&f| location_from_fraction(spec.n, f))
                .collect::<maxcusum::Result<_>>()?
        };
        let mut grid = Vec::with_capacity(locations.len() * magnitudes.len());
        for &m in &locations {
            for &d in &magnitudes {
                let signal = SignalSpec {
                    pattern: base.with_magnitude(d),
                    change_location: m,
                };
                signal.delta(spec.p)?;
                if m > spec.n {
                    return Err(SimError::plan(format!(
                        "change location {m} exceeds n = {}",
                        spec.n
                    )));
                }
                grid.push(signal);
            }
        }
        Ok(grid)
    }

    /// Parses a TOML plan. `expected` (from the command line) must agree with
    /// the file's `experiment` key when both are given.
    pub fn from_toml_str(text: &str, expected: Option<Metric>) -> Result<Self> {
        let file: PlanFile = toml::from_str(text).map_err(|e| SimError::plan(e.message()))?;
        file.into_plan(expected)
    }
}

fn default_boundary(n: usize) -> usize {
    ((DEFAULT_BOUNDARY_FRACTION * n as f64).floor() as usize).max(1)
}

fn check_level(what: &str, a: f64) -> Result<()> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(SimError::plan(format!("{what} must lie in (0, 1); got {a}")))
    }
}

/// On-disk plan: top-level experiment settings and a `[scenario]` table.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    experiment: Option<String>,
    seed: Option<u64>,
    replicates: Option<usize>,
    draws: Option<usize>,
    boundary: Option<usize>,
    boundary_fraction: Option<f64>,
    methods: Option<Vec<String>>,
    alpha: Option<f64>,
    alpha_grid: Option<Vec<f64>>,
    distributions: Option<Vec<String>>,
    covariances: Option<Vec<CovarianceKind>>,
    signals: Option<Vec<f64>>,
    change_fractions: Option<Vec<f64>>,
    thetas: Option<Vec<f64>>,
    truncations: Option<Vec<usize>>,
    oracle_draws: Option<usize>,
    workers: Option<usize>,
    scenario: ScenarioConfig,
}

impl PlanFile {
    fn into_plan(self, expected: Option<Metric>) -> Result<ExperimentPlan> {
        let declared = self.experiment.as_deref().map(Metric::from_str).transpose()?;
        let metric = match (declared, expected) {
            (Some(a), Some(b)) if a != b => {
                return Err(SimError::plan(format!(
                    "plan declares experiment `{a}` but `{b}` was requested"
                )))
            }
            (Some(m), _) | (None, Some(m)) => m,
            (None, None) => return Err(SimError::plan("missing key `experiment`")),
        };
        let base = self.scenario.to_spec()?;
        let scenarios = self.expand_scenarios(&base)?;
        let mut plan = ExperimentPlan::new(metric, base);
        plan.scenarios = scenarios;
        if let Some(v) = self.methods {
            plan.methods = v.iter().map(|m| m.parse()).collect::<Result<_>>()?;
        }
        plan.boundary = match (self.boundary, self.boundary_fraction) {
            (Some(_), Some(_)) => {
                return Err(SimError::plan("set at most one of boundary and boundary_fraction"))
            }
            (Some(b), None) => b,
            (None, Some(f)) => {
                if !(0.0..0.5).contains(&f) {
                    return Err(SimError::plan(format!(
                        "boundary_fraction must lie in [0, 0.5); got {f}"
                    )));
                }
                ((f * self.scenario.n as f64).floor() as usize).max(1)
            }
            (None, None) => plan.boundary,
        };
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { plan.$field = v; } )* };
        }
        set!(seed, replicates, draws, alpha, alpha_grid, signals, change_fractions, thetas,
             truncations, oracle_draws);
        plan.workers = self.workers;
        plan.validate()?;
        Ok(plan)
    }

    /// Cartesian product `distributions` × `covariances` around the base scenario.
    fn expand_scenarios(&self, base: &ScenarioSpec) -> Result<Vec<ScenarioSpec>> {
        let families = match &self.distributions {
            None => vec![base.distribution.family],
            Some(names) => names
                .iter()
                .map(|name| {
                    parse_family(
                        name,
                        self.scenario.t_dof,
                        self.scenario.contamination,
                        self.scenario.contamination_scale,
                    )
                })
                .collect::<maxcusum::Result<_>>()?,
        };
        let kinds = self
            .covariances
            .clone()
            .unwrap_or_else(|| vec![base.distribution.covariance]);
        if families.is_empty() || kinds.is_empty() {
            return Err(SimError::plan("distribution and covariance grids must be nonempty"));
        }
        let mut out = Vec::with_capacity(families.len() * kinds.len());
        for &family in &families {
            for &covariance in &kinds {
                let mut spec = base.clone();
                spec.distribution = DistributionSpec { family, covariance };
                out.push(spec);
            }
        }
        Ok(out)
    }
}

//! `maxcusum detect`: test for a mean change and locate it.

use std::fmt::Write as _;

use maxcusum::bootstrap::{bootstrap_distribution, empirical_quantile};
use maxcusum::{
    cusum_process, estimate_location, test_statistic, BootstrapConfig, CusumConfig, Sample,
};
use serde::Serialize;

use crate::error::CliError;

pub const DEFAULT_BOUNDARY_FRACTION: f64 = 0.05;

#[derive(Clone, Debug)]
pub enum Boundary {
    Fraction(f64),
    Absolute(usize),
}

impl Boundary {
    /// `floor(fraction * n)`, at least 1.
    pub fn resolve(&self, n: usize) -> Result<usize, CliError> {
        match *self {
            Boundary::Absolute(b) => Ok(b),
            Boundary::Fraction(f) => {
                if !(0.0..0.5).contains(&f) {
                    return Err(CliError::Config(format!(
                        "--boundary-frac must lie in [0, 0.5); got {f}"
                    )));
                }
                Ok(((f * n as f64).floor() as usize).max(1))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct DetectRequest {
    pub boundary: Boundary,
    pub blocks: Vec<usize>,
    pub draws: usize,
    pub alphas: Vec<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantileRow {
    /// Quantile level `1 - alpha`.
    pub level: f64,
    pub block_size: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decision {
    pub alpha: f64,
    pub block_size: usize,
    pub critical_value: f64,
    pub reject: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Location {
    pub theta: f64,
    pub m_hat: usize,
    pub t_hat: f64,
    /// Time label of the last pre-change observation, when labels were given.
    pub time: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectReport {
    pub n: usize,
    pub p: usize,
    pub boundary: usize,
    pub draws: usize,
    pub seed: u64,
    /// Series names from the CSV header.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<Vec<String>>,
    pub t_n: f64,
    pub attaining_s: usize,
    pub quantiles: Vec<QuantileRow>,
    pub decisions: Vec<Decision>,
    pub locations: Vec<Location>,
}

pub fn run(sample: &Sample, req: &DetectRequest) -> Result<DetectReport, CliError> {
    let n = sample.n();
    let boundary = req.boundary.resolve(n)?;
    if n < 2 * boundary {
        return Err(CliError::Config(format!(
            "boundary {boundary} needs n >= {}; got n = {n}",
            2 * boundary
        )));
    }
    if req.blocks.is_empty() || req.alphas.is_empty() {
        return Err(CliError::Config("--blocks and --alpha need at least one value".into()));
    }
    let ccfg = CusumConfig::for_test(n, boundary)?;
    let stat = test_statistic(&cusum_process(sample, &ccfg)?)?;

    let mut quantiles = Vec::new();
    let mut decisions = Vec::new();
    let mut per_block = Vec::with_capacity(req.blocks.len());
    for &m in &req.blocks {
        let bcfg = BootstrapConfig {
            draws: req.draws,
            block_size: m,
            alpha: req.alphas[0],
            seed: req.seed,
        };
        per_block.push((m, bootstrap_distribution(sample, &ccfg, &bcfg)?));
    }
    for &alpha in &req.alphas {
        for (m, draws) in &per_block {
            let q = empirical_quantile(draws, alpha)?;
            quantiles.push(QuantileRow {
                level: 1.0 - alpha,
                block_size: *m,
                value: q,
            });
            decisions.push(Decision {
                alpha,
                block_size: *m,
                critical_value: q,
                reject: stat.value > q,
            });
        }
    }

    let locations = [0.5, 0.0]
        .into_iter()
        .map(|theta| {
            let est = estimate_location(sample, theta, Some(boundary))?;
            Ok(Location {
                theta,
                m_hat: est.m_hat,
                t_hat: est.t_hat,
                time: sample.labels().map(|t| t[est.m_hat - 1].clone()),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    Ok(DetectReport {
        n,
        p: sample.p(),
        boundary,
        draws: req.draws,
        seed: req.seed,
        series: None,
        t_n: stat.value,
        attaining_s: stat.split,
        quantiles,
        decisions,
        locations,
    })
}

/// Plain-text rendering: quantile table with one row per level and one column per `M`.
pub fn render_text(r: &DetectReport) -> String {
    let blocks = unique(r.quantiles.iter().map(|q| q.block_size));
    let levels = unique(r.quantiles.iter().map(|q| q.level));
    let alphas = unique(r.decisions.iter().map(|d| d.alpha));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "n = {}, p = {}, boundary = {}, bootstrap draws = {}, seed = {}",
        r.n, r.p, r.boundary, r.draws, r.seed
    );
    let _ = writeln!(out, "T_n = {:.3} (attained at s = {})", r.t_n, r.attaining_s);
    let _ = writeln!(out);
    let _ = writeln!(out, "Quantiles of bootstrapped statistics");
    let header: String = blocks.iter().map(|m| format!("{:>10}", format!("M={m}"))).collect();
    let _ = writeln!(out, "{:<8}{header}", "");
    for &level in &levels {
        let cells: String = blocks
            .iter()
            .map(|&m| {
                r.quantiles
                    .iter()
                    .find(|q| q.level == level && q.block_size == m)
                    .map_or_else(|| format!("{:>10}", "-"), |q| format!("{:>10.3}", q.value))
            })
            .collect();
        let _ = writeln!(out, "{:<8}{cells}", format!("q_{}", fmt_level(level)));
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Decision (reject H0 when T_n exceeds the quantile)");
    let _ = writeln!(out, "{:<8}{header}", "");
    for &alpha in &alphas {
        let cells: String = blocks
            .iter()
            .map(|&m| {
                let d = r.decisions.iter().find(|d| d.alpha == alpha && d.block_size == m);
                let word = match d {
                    Some(d) if d.reject => "reject",
                    Some(_) => "accept",
                    None => "-",
                };
                format!("{word:>10}")
            })
            .collect();
        let _ = writeln!(out, "{:<8}{cells}", format!("a={alpha}"));
    }
    let _ = writeln!(out);
    for loc in &r.locations {
        let theta = if loc.theta == 0.5 { "1/2".to_string() } else { loc.theta.to_string() };
        let time = loc.time.as_deref().map(|t| format!(", last pre-change time {t}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "m_hat(theta={theta}) = {} (t = {:.3}){time}",
            loc.m_hat, loc.t_hat
        );
    }
    out
}

/// Distinct values in first-seen order.
fn unique<T: PartialEq>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn fmt_level(level: f64) -> String {
    let s = format!("{level:.4}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s).to_string()
}

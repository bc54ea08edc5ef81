//! Synthetic data for the simulation scenarios.
//!
//! Observations follow the single mean-shift model
//! `X_i = mu + delta * 1(i > m) + xi_i`, where the noise `xi_i` is drawn from a
//! Gaussian, elliptical t, or contaminated Gaussian law with one of three
//! spatial covariance structures, either i.i.d. over time or driven through a
//! VAR(1) recursion.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{fill_standard_normal, standard_normal, StreamKey};
use crate::sample::Sample;

/// Off-diagonal parameter of the compound-symmetry and AR covariance scenarios.
pub const SCENARIO_CORRELATION: f64 = 0.8;
/// Degrees of freedom of the elliptical t noise.
pub const DEFAULT_T_DOF: u32 = 6;
pub const DEFAULT_CONTAMINATION: f64 = 0.2;
pub const DEFAULT_CONTAMINATION_SCALE: f64 = 2.0;
/// Spectral norm of the VAR(1) coefficient matrix.
pub const DEFAULT_VAR1_NORM: f64 = 1.0 / 1.8;
pub const DEFAULT_BURN_IN: usize = 100;
/// Number of leading coordinates carrying a dense shift.
pub const DENSE_COORDINATES: usize = 50;

const POWER_ITERATION_TOL: f64 = 1e-10;
const POWER_ITERATION_MAX_ITER: usize = 1000;

/// Spatial dependence structure `V` of the noise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    /// `V = I`.
    Identity,
    /// `V = 0.8 J + 0.2 I`.
    CompoundSymmetry,
    /// `V_ij = 0.8^|i-j|`.
    Autoregressive,
}

impl CovarianceKind {
    pub fn label(self) -> &'static str {
        match self {
            CovarianceKind::Identity => "I",
            CovarianceKind::CompoundSymmetry => "II",
            CovarianceKind::Autoregressive => "III",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CovarianceSpec {
    pub kind: CovarianceKind,
    pub p: usize,
}

/// The `p × p` scenario matrix.
pub fn build_covariance(spec: CovarianceSpec) -> DMatrix<f64> {
    let rho = SCENARIO_CORRELATION;
    DMatrix::from_fn(spec.p, spec.p, |i, j| match spec.kind {
        CovarianceKind::Identity => f64::from(u8::from(i == j)),
        CovarianceKind::CompoundSymmetry => {
            if i == j {
                1.0
            } else {
                rho
            }
        }
        CovarianceKind::Autoregressive => rho.powi(i.abs_diff(j) as i32),
    })
}

/// Lower-triangular `L` with `L Lᵀ = V`; fails on a non-positive pivot.
pub fn cholesky(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !v.is_square() {
        return Err(Error::numeric(format!(
            "cholesky of a non-square {}x{} matrix",
            v.nrows(),
            v.ncols()
        )));
    }
    nalgebra::Cholesky::new(v.clone())
        .map(|c| c.unpack())
        .ok_or_else(|| Error::numeric("matrix is not positive definite"))
}

/// Noise law of one observation, up to the spatial matrix `V`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum NoiseFamily {
    /// `N(0, V)`.
    Gaussian,
    /// Elliptical t: `L z / sqrt(w / dof)` with `w ~ chi^2(dof)`; covariance `dof/(dof-2) V`.
    EllipticalT { dof: u32 },
    /// `N(0, V)` with probability `1 - epsilon`, else `N(0, scale^2 V)`.
    ContaminatedGaussian { epsilon: f64, scale: f64 },
    /// Identically zero noise; produces noiseless mean-shift data.
    Zero,
}

impl NoiseFamily {
    pub fn elliptical_t() -> Self {
        NoiseFamily::EllipticalT {
            dof: DEFAULT_T_DOF,
        }
    }

    pub fn contaminated() -> Self {
        NoiseFamily::ContaminatedGaussian {
            epsilon: DEFAULT_CONTAMINATION,
            scale: DEFAULT_CONTAMINATION_SCALE,
        }
    }

    /// `c` such that `Cov(xi) = c V`.
    pub fn covariance_factor(&self) -> f64 {
        match *self {
            NoiseFamily::Gaussian => 1.0,
            NoiseFamily::EllipticalT { dof } => f64::from(dof) / (f64::from(dof) - 2.0),
            NoiseFamily::ContaminatedGaussian { epsilon, scale } => {
                (1.0 - epsilon) + epsilon * scale * scale
            }
            NoiseFamily::Zero => 0.0,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            NoiseFamily::Gaussian => "gaussian".into(),
            NoiseFamily::EllipticalT { dof } => format!("t{dof}"),
            NoiseFamily::ContaminatedGaussian { epsilon, scale } => {
                format!("ctm_gaussian(eps={epsilon},scale={scale})")
            }
            NoiseFamily::Zero => "zero".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            NoiseFamily::EllipticalT { dof } if dof <= 2 => Err(Error::config(format!(
                "elliptical t needs more than 2 degrees of freedom; got {dof}"
            ))),
            NoiseFamily::ContaminatedGaussian { epsilon, scale }
                if !(epsilon > 0.0 && epsilon < 1.0) || scale.is_nan() || scale <= 0.0 =>
            {
                Err(Error::config(format!(
                    "contamination needs epsilon in (0, 1) and a positive scale; got epsilon = {epsilon}, scale = {scale}"
                )))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistributionSpec {
    pub family: NoiseFamily,
    pub covariance: CovarianceKind,
}

impl DistributionSpec {
    /// True covariance `Cov(xi_i)` in dimension `p`.
    pub fn noise_covariance(&self, p: usize) -> DMatrix<f64> {
        build_covariance(CovarianceSpec {
            kind: self.covariance,
            p,
        }) * self.family.covariance_factor()
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.family.label(), self.covariance.label())
    }
}

/// Draws i.i.d. rows from a [`DistributionSpec`] with a cached Cholesky factor.
#[derive(Clone, Debug)]
pub struct NoiseSampler {
    family: NoiseFamily,
    p: usize,
    // None when V = I.
    factor: Option<DMatrix<f64>>,
}

impl NoiseSampler {
    pub fn new(spec: &DistributionSpec, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::config("dimension p must be at least 1"));
        }
        spec.family.validate()?;
        let factor = match spec.covariance {
            CovarianceKind::Identity => None,
            kind => Some(cholesky(&build_covariance(CovarianceSpec { kind, p }))?),
        };
        Ok(Self {
            family: spec.family,
            p,
            factor,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Writes one noise vector into `out`; `scratch` must have length `p`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64], scratch: &mut [f64]) {
        if self.family == NoiseFamily::Zero {
            out.fill(0.0);
            return;
        }
        fill_standard_normal(rng, scratch);
        match &self.factor {
            None => out.copy_from_slice(scratch),
            Some(l) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (k, z) in scratch.iter().enumerate().take(i + 1) {
                        acc += l[(i, k)] * z;
                    }
                    *o = acc;
                }
            }
        }
        let scale = match self.family {
            NoiseFamily::Gaussian | NoiseFamily::Zero => 1.0,
            NoiseFamily::EllipticalT { dof } => {
                let chi2: f64 = (0..dof).map(|_| standard_normal(rng).powi(2)).sum();
                1.0 / (chi2 / f64::from(dof)).sqrt()
            }
            NoiseFamily::ContaminatedGaussian { epsilon, scale } => {
                if rng.random::<f64>() < epsilon {
                    scale
                } else {
                    1.0
                }
            }
        };
        if scale != 1.0 {
            out.iter_mut().for_each(|v| *v *= scale);
        }
    }
}

/// `n` i.i.d. noise rows.
pub fn sample_noise<R: Rng + ?Sized>(
    dist: &DistributionSpec,
    n: usize,
    p: usize,
    rng: &mut R,
) -> Result<Sample> {
    let sampler = NoiseSampler::new(dist, p)?;
    sample_iid(&sampler, n, rng)
}

fn sample_iid<R: Rng + ?Sized>(sampler: &NoiseSampler, n: usize, rng: &mut R) -> Result<Sample> {
    let p = sampler.p;
    let mut values = vec![0.0; n * p];
    let mut scratch = vec![0.0; p];
    for row in values.chunks_exact_mut(p) {
        sampler.sample_into(rng, row, &mut scratch);
    }
    Sample::from_row_major(n, p, values)
}

/// Largest singular value by power iteration on `AᵀA`.
///
/// Stops once successive Rayleigh quotients agree to within `1e-10` relative;
/// fails after 1000 iterations.
pub fn spectral_norm(a: &DMatrix<f64>) -> Result<f64> {
    let ata = a.transpose() * a;
    let p = ata.ncols();
    if p == 0 {
        return Ok(0.0);
    }
    // Fixed start, not orthogonal to generic eigenvectors.
    let mut v = DVector::from_fn(p, |i, _| 1.0 + (i as f64 + 1.0).sqrt() * 1e-3);
    v /= v.norm();
    let mut previous = f64::NAN;
    for _ in 0..POWER_ITERATION_MAX_ITER {
        let w = &ata * &v;
        let lambda = v.dot(&w);
        if lambda <= 0.0 {
            return Ok(0.0);
        }
        if (lambda - previous).abs() <= POWER_ITERATION_TOL * lambda {
            return Ok(lambda.sqrt());
        }
        previous = lambda;
        v = &w / w.norm();
    }
    Err(Error::numeric(format!(
        "power iteration did not converge in {POWER_ITERATION_MAX_ITER} iterations"
    )))
}

/// Random `p × p` coefficient with i.i.d. `N(0, 1)` entries rescaled to spectral norm `target`.
pub fn make_var1_coefficient_with_norm<R: Rng + ?Sized>(
    p: usize,
    target: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if p == 0 {
        return Err(Error::config("dimension p must be at least 1"));
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::config(format!(
            "VAR(1) spectral norm must lie in (0, 1) for stationarity; got {target}"
        )));
    }
    let mut a = DMatrix::from_fn(p, p, |_, _| standard_normal(rng));
    let norm = spectral_norm(&a)?;
    a *= target / norm;
    Ok(a)
}

/// VAR(1) coefficient with the default spectral norm `1/1.8`.
pub fn make_var1_coefficient<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    make_var1_coefficient_with_norm(p, DEFAULT_VAR1_NORM, rng)
}

fn var1_recursion<R: Rng + ?Sized>(
    a: &DMatrix<f64>,
    innovations: &NoiseSampler,
    n: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Sample> {
    let p = innovations.p;
    if a.nrows() != p || a.ncols() != p {
        return Err(Error::LengthMismatch {
            what: "VAR(1) coefficient dimension",
            expected: p,
            actual: a.nrows(),
        });
    }
    let mut state = vec![0.0; p];
    let mut next = vec![0.0; p];
    let mut eta = vec![0.0; p];
    let mut scratch = vec![0.0; p];
    let mut values = Vec::with_capacity(n * p);
    for t in 0..burn_in + n {
        innovations.sample_into(rng, &mut eta, &mut scratch);
        for (i, out) in next.iter_mut().enumerate() {
            let mut acc = eta[i];
            for (k, s) in state.iter().enumerate() {
                acc += a[(i, k)] * s;
            }
            *out = acc;
        }
        std::mem::swap(&mut state, &mut next);
        if t >= burn_in {
            values.extend_from_slice(&state);
        }
    }
    Sample::from_row_major(n, p, values)
}

/// `xi_i = A xi_{i-1} + eta_i` from `xi_0 = 0`, discarding the first `burn_in` steps.
pub fn sample_var1<R: Rng + ?Sized>(
    a: &DMatrix<f64>,
    innovation: &DistributionSpec,
    n: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Sample> {
    let sampler = NoiseSampler::new(innovation, a.nrows())?;
    var1_recursion(a, &sampler, n, burn_in, rng)
}

/// Temporal dependence of the noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TemporalSpec {
    Iid,
    /// VAR(1) with a random coefficient generated from `coefficient_seed`.
    Var1 {
        coefficient_seed: u64,
        spectral_norm: f64,
        burn_in: usize,
    },
}

impl TemporalSpec {
    pub fn var1(coefficient_seed: u64) -> Self {
        TemporalSpec::Var1 {
            coefficient_seed,
            spectral_norm: DEFAULT_VAR1_NORM,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            TemporalSpec::Iid => "iid".into(),
            TemporalSpec::Var1 {
                coefficient_seed,
                spectral_norm,
                burn_in,
            } => format!("var1(seed={coefficient_seed},norm={spectral_norm:.6},burn_in={burn_in})"),
        }
    }
}

/// Shape of the mean shift `delta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SignalPattern {
    None,
    /// `delta = (delta_1, 0, ..., 0)`.
    Sparse { delta: f64 },
    /// The first `coordinates` entries equal `magnitude`.
    Dense { coordinates: usize, magnitude: f64 },
}

impl SignalPattern {
    pub fn dense(magnitude: f64) -> Self {
        SignalPattern::Dense {
            coordinates: DENSE_COORDINATES,
            magnitude,
        }
    }

    /// `|delta|_inf`.
    pub fn magnitude(&self) -> f64 {
        match *self {
            SignalPattern::None => 0.0,
            SignalPattern::Sparse { delta } => delta.abs(),
            SignalPattern::Dense { magnitude, .. } => magnitude.abs(),
        }
    }

    /// Same pattern with `|delta|_inf` replaced.
    pub fn with_magnitude(&self, value: f64) -> Self {
        match *self {
            SignalPattern::None | SignalPattern::Sparse { .. } => SignalPattern::Sparse { delta: value },
            SignalPattern::Dense { coordinates, .. } => SignalPattern::Dense {
                coordinates,
                magnitude: value,
            },
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SignalPattern::None => "none",
            SignalPattern::Sparse { .. } => "sparse",
            SignalPattern::Dense { .. } => "dense",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalSpec {
    pub pattern: SignalPattern,
    /// Last pre-change time point `m`; `m = n` means no change.
    pub change_location: usize,
}

impl SignalSpec {
    pub fn none(n: usize) -> Self {
        Self {
            pattern: SignalPattern::None,
            change_location: n,
        }
    }

    /// The shift vector in dimension `p`.
    pub fn delta(&self, p: usize) -> Result<Vec<f64>> {
        let mut d = vec![0.0; p];
        match self.pattern {
            SignalPattern::None => {}
            SignalPattern::Sparse { delta } => d[0] = delta,
            SignalPattern::Dense {
                coordinates,
                magnitude,
            } => {
                if coordinates > p {
                    return Err(Error::config(format!(
                        "dense shift over {coordinates} coordinates needs p >= {coordinates}; got p = {p}"
                    )));
                }
                d[..coordinates].fill(magnitude);
            }
        }
        Ok(d)
    }

    /// No change point: zero shift or `m = n`.
    pub fn is_null(&self, n: usize) -> bool {
        self.pattern.magnitude() == 0.0 || self.change_location >= n
    }
}

/// Adds `mu` to every row and `delta` to rows after the change location.
pub fn inject_shift(noise: &Sample, mu: &[f64], signal: &SignalSpec) -> Result<Sample> {
    let (n, p) = (noise.n(), noise.p());
    if mu.len() != p {
        return Err(Error::LengthMismatch {
            what: "mean vector",
            expected: p,
            actual: mu.len(),
        });
    }
    if signal.change_location > n {
        return Err(Error::OutOfRange {
            index: signal.change_location,
            lo: 0,
            hi: n,
        });
    }
    let delta = signal.delta(p)?;
    let mut out = noise.clone();
    let m = signal.change_location;
    for (i, row) in out.values_mut().chunks_exact_mut(p).enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x += mu[j];
            if i >= m {
                *x += delta[j];
            }
        }
    }
    Ok(out)
}

/// One simulation cell: noise law, temporal structure, signal, and mean.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub n: usize,
    pub p: usize,
    pub distribution: DistributionSpec,
    pub temporal: TemporalSpec,
    pub signal: SignalSpec,
    pub mu: Vec<f64>,
}

impl ScenarioSpec {
    /// Null scenario with i.i.d. noise and zero mean.
    pub fn null(n: usize, p: usize, distribution: DistributionSpec) -> Self {
        Self {
            n,
            p,
            distribution,
            temporal: TemporalSpec::Iid,
            signal: SignalSpec::none(n),
            mu: vec![0.0; p],
        }
    }

    pub fn with_signal(mut self, signal: SignalSpec) -> Self {
        self.signal = signal;
        self
    }

    pub fn with_temporal(mut self, temporal: TemporalSpec) -> Self {
        self.temporal = temporal;
        self
    }

    /// Label of everything except the signal; cells sharing it share noise streams.
    pub fn noise_label(&self) -> String {
        format!(
            "n={}/p={}/{}/{}",
            self.n,
            self.p,
            self.distribution.label(),
            self.temporal.label()
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < crate::sample::MIN_OBSERVATIONS || self.p == 0 {
            return Err(Error::config(format!(
                "scenario needs n >= {} and p >= 1; got n = {}, p = {}",
                crate::sample::MIN_OBSERVATIONS,
                self.n,
                self.p
            )));
        }
        if self.mu.len() != self.p {
            return Err(Error::LengthMismatch {
                what: "mean vector",
                expected: self.p,
                actual: self.mu.len(),
            });
        }
        if self.signal.change_location > self.n {
            return Err(Error::config(format!(
                "change location {} exceeds n = {}",
                self.signal.change_location, self.n
            )));
        }
        self.signal.delta(self.p)?;
        self.distribution.family.validate()
    }
}

/// Prepared sampler for a scenario: Cholesky factor and VAR coefficient are built once.
#[derive(Clone, Debug)]
pub struct ScenarioGenerator {
    spec: ScenarioSpec,
    sampler: NoiseSampler,
    var1: Option<(DMatrix<f64>, usize)>,
}

impl ScenarioGenerator {
    pub fn new(spec: &ScenarioSpec) -> Result<Self> {
        spec.validate()?;
        let sampler = NoiseSampler::new(&spec.distribution, spec.p)?;
        let var1 = match spec.temporal {
            TemporalSpec::Iid => None,
            TemporalSpec::Var1 {
                coefficient_seed,
                spectral_norm,
                burn_in,
            } => {
                let mut rng = StreamKey::new(coefficient_seed).rng();
                let a = make_var1_coefficient_with_norm(spec.p, spectral_norm, &mut rng)?;
                Some((a, burn_in))
            }
        };
        Ok(Self {
            spec: spec.clone(),
            sampler,
            var1,
        })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn var1_coefficient(&self) -> Option<&DMatrix<f64>> {
        self.var1.as_ref().map(|(a, _)| a)
    }

    /// Noise `xi_1, ..., xi_n` only.
    pub fn noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Sample> {
        match &self.var1 {
            None => sample_iid(&self.sampler, self.spec.n, rng),
            Some((a, burn_in)) => var1_recursion(a, &self.sampler, self.spec.n, *burn_in, rng),
        }
    }

    /// Full observation matrix.
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Sample> {
        self.generate_with_signal(&self.spec.signal, rng)
    }

    /// Observations with the scenario's noise and mean but a different signal.
    pub fn generate_with_signal<R: Rng + ?Sized>(
        &self,
        signal: &SignalSpec,
        rng: &mut R,
    ) -> Result<Sample> {
        let noise = self.noise(rng)?;
        inject_shift(&noise, &self.spec.mu, signal)
    }
}

/// Plain-text (TOML `key = value`) description of a scenario.
///
/// | key | meaning | default |
/// |-----|---------|---------|
/// | `n`, `p` | sample size and dimension | required |
/// | `distribution` | `gaussian`, `elliptical_t`, `contaminated_gaussian`, `zero` | `gaussian` |
/// | `t_dof` | elliptical t degrees of freedom | 6 |
/// | `contamination`, `contamination_scale` | contaminated Gaussian weight and scale | 0.2, 2.0 |
/// | `covariance` | `identity`, `compound_symmetry`, `autoregressive` | `identity` |
/// | `temporal` | `iid` or `var1` | `iid` |
/// | `var1_seed`, `var1_norm`, `burn_in` | VAR(1) coefficient seed, spectral norm, burn-in | 0, 1/1.8, 100 |
/// | `signal` | `none`, `sparse`, `dense` | `none` |
/// | `delta` | shift magnitude `abs(delta)_inf` | 0 |
/// | `dense_coordinates` | coordinates shifted by a dense signal | 50 |
/// | `change_location` | `m` as an index, or | `n` |
/// | `change_fraction` | `m` as a fraction of `n` (rounded) | |
/// | `mean` | common value of every entry of `mu` | 0 |
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub p: usize,
    #[serde(default = "default_distribution")]
    pub distribution: String,
    #[serde(default = "default_t_dof")]
    pub t_dof: u32,
    #[serde(default = "default_contamination")]
    pub contamination: f64,
    #[serde(default = "default_contamination_scale")]
    pub contamination_scale: f64,
    #[serde(default)]
    pub covariance: Option<CovarianceKind>,
    #[serde(default = "default_temporal")]
    pub temporal: String,
    #[serde(default)]
    pub var1_seed: u64,
    #[serde(default = "default_var1_norm")]
    pub var1_norm: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_signal")]
    pub signal: String,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_dense")]
    pub dense_coordinates: usize,
    #[serde(default)]
    pub change_location: Option<usize>,
    #[serde(default)]
    pub change_fraction: Option<f64>,
    #[serde(default)]
    pub mean: f64,
}

fn default_distribution() -> String {
    "gaussian".into()
}
fn default_t_dof() -> u32 {
    DEFAULT_T_DOF
}
fn default_contamination() -> f64 {
    DEFAULT_CONTAMINATION
}
fn default_contamination_scale() -> f64 {
    DEFAULT_CONTAMINATION_SCALE
}
fn default_temporal() -> String {
    "iid".into()
}
fn default_var1_norm() -> f64 {
    DEFAULT_VAR1_NORM
}
fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}
fn default_signal() -> String {
    "none".into()
}
fn default_dense() -> usize {
    DENSE_COORDINATES
}

/// Parses a noise family name with the given parameters.
pub fn parse_family(name: &str, t_dof: u32, contamination: f64, scale: f64) -> Result<NoiseFamily> {
    match name {
        "gaussian" => Ok(NoiseFamily::Gaussian),
        "elliptical_t" | "t" => Ok(NoiseFamily::EllipticalT { dof: t_dof }),
        "contaminated_gaussian" | "ctm_gaussian" => Ok(NoiseFamily::ContaminatedGaussian {
            epsilon: contamination,
            scale,
        }),
        "zero" => Ok(NoiseFamily::Zero),
        other => Err(Error::config(format!("unknown distribution `{other}`"))),
    }
}

/// Change location `round(fraction * n)`.
pub fn location_from_fraction(n: usize, fraction: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::config(format!(
            "change fraction must lie in [0, 1]; got {fraction}"
        )));
    }
    Ok((fraction * n as f64).round() as usize)
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn to_spec(&self) -> Result<ScenarioSpec> {
        let family = parse_family(
            &self.distribution,
            self.t_dof,
            self.contamination,
            self.contamination_scale,
        )?;
        let temporal = match self.temporal.as_str() {
            "iid" => TemporalSpec::Iid,
            "var1" => TemporalSpec::Var1 {
                coefficient_seed: self.var1_seed,
                spectral_norm: self.var1_norm,
                burn_in: self.burn_in,
            },
            other => return Err(Error::config(format!("unknown temporal structure `{other}`"))),
        };
        let pattern = match self.signal.as_str() {
            "none" => SignalPattern::None,
            "sparse" => SignalPattern::Sparse { delta: self.delta },
            "dense" => SignalPattern::Dense {
                coordinates: self.dense_coordinates,
                magnitude: self.delta,
            },
            other => return Err(Error::config(format!("unknown signal pattern `{other}`"))),
        };
        let change_location = match (self.change_location, self.change_fraction) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "set at most one of change_location and change_fraction",
                ))
            }
            (Some(m), None) => m,
            (None, Some(f)) => location_from_fraction(self.n, f)?,
            (None, None) => self.n,
        };
        let spec = ScenarioSpec {
            n: self.n,
            p: self.p,
            distribution: DistributionSpec {
                family,
                covariance: self.covariance.unwrap_or(CovarianceKind::Identity),
            },
            temporal,
            signal: SignalSpec {
                pattern,
                change_location,
            },
            mu: vec![self.mean; self.p],
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cov(kind: CovarianceKind, p: usize) -> DMatrix<f64> {
        build_covariance(CovarianceSpec { kind, p })
    }

    #[test]
    fn scenario_matrices() {
        let cs = cov(CovarianceKind::CompoundSymmetry, 3);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(cs[(i, j)], if i == j { 1.0 } else { 0.8 });
            }
        }
        let ar = cov(CovarianceKind::Autoregressive, 3);
        assert_eq!(ar[(0, 1)], 0.8);
        assert!((ar[(0, 2)] - 0.64).abs() < 1e-15);
        assert_eq!(ar[(2, 0)], ar[(0, 2)]);
        assert_eq!(cov(CovarianceKind::Identity, 2), DMatrix::identity(2, 2));
    }

    #[test]
    fn cholesky_hand_factor() {
        let v = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 5.0]);
        let l = cholesky(&v).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2.0]);
        assert!((l - expected).abs().max() < 1e-15);
        assert_eq!(cholesky(&DMatrix::identity(3, 3)).unwrap(), DMatrix::identity(3, 3));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(cholesky(&v), Err(Error::Numeric(_))));
        assert!(cholesky(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn scenario_matrices_factor() {
        for kind in [
            CovarianceKind::Identity,
            CovarianceKind::CompoundSymmetry,
            CovarianceKind::Autoregressive,
        ] {
            let v = cov(kind, 40);
            let l = cholesky(&v).unwrap();
            assert!((&l * l.transpose() - &v).abs().max() < 1e-10);
        }
    }

    #[test]
    fn covariance_factors() {
        assert_eq!(NoiseFamily::elliptical_t().covariance_factor(), 1.5);
        assert!((NoiseFamily::contaminated().covariance_factor() - 1.6).abs() < 1e-15);
        assert_eq!(NoiseFamily::Gaussian.covariance_factor(), 1.0);
    }

    #[test]
    fn family_validation() {
        let bad = [
            NoiseFamily::EllipticalT { dof: 2 },
            NoiseFamily::ContaminatedGaussian { epsilon: 0.0, scale: 2.0 },
            NoiseFamily::ContaminatedGaussian { epsilon: 1.0, scale: 2.0 },
            NoiseFamily::ContaminatedGaussian { epsilon: 0.2, scale: 0.0 },
        ];
        for family in bad {
            let spec = DistributionSpec {
                family,
                covariance: CovarianceKind::Identity,
            };
            assert!(NoiseSampler::new(&spec, 3).is_err());
        }
    }

    #[test]
    fn scalar_var1_coefficient() {
        let mut rng = StreamKey::new(3).rng();
        let a = make_var1_coefficient(1, &mut rng).unwrap();
        assert!((a[(0, 0)].abs() - 1.0 / 1.8).abs() < 1e-12);
    }

    #[test]
    fn var1_norm_target_checked() {
        let mut rng = StreamKey::new(3).rng();
        assert!(make_var1_coefficient_with_norm(4, 1.0, &mut rng).is_err());
        assert!(make_var1_coefficient_with_norm(0, 0.5, &mut rng).is_err());
    }

    #[test]
    fn shift_injection() {
        let noise = Sample::from_row_major(6, 2, vec![0.0; 12]).unwrap();
        let mu = [1.0, -1.0];
        let none = inject_shift(&noise, &mu, &SignalSpec::none(6)).unwrap();
        assert!(none.rows().all(|r| r == mu));

        let sparse = SignalSpec {
            pattern: SignalPattern::Sparse { delta: 0.5 },
            change_location: 4,
        };
        let x = inject_shift(&noise, &mu, &sparse).unwrap();
        for i in 0..6 {
            let bump = if i >= 4 { 0.5 } else { 0.0 };
            assert_eq!(x.row(i), &[1.0 + bump, -1.0]);
        }
        // m = n: shift never applies.
        let late = SignalSpec {
            pattern: SignalPattern::Sparse { delta: 3.0 },
            change_location: 6,
        };
        assert_eq!(inject_shift(&noise, &mu, &late).unwrap(), none);
        assert!(late.is_null(6));
    }

    #[test]
    fn sparse_shift_at_half() {
        let noise = Sample::from_row_major(500, 3, vec![0.0; 1500]).unwrap();
        let signal = SignalSpec {
            pattern: SignalPattern::Sparse { delta: 0.63 },
            change_location: 250,
        };
        let x = inject_shift(&noise, &[0.0; 3], &signal).unwrap();
        for (i, row) in x.rows().enumerate() {
            let expect = if i >= 250 { 0.63 } else { 0.0 };
            assert_eq!(row, &[expect, 0.0, 0.0]);
        }
    }

    #[test]
    fn dense_shift_needs_enough_coordinates() {
        let noise = Sample::from_row_major(4, 10, vec![0.0; 40]).unwrap();
        let dense = SignalSpec {
            pattern: SignalPattern::dense(1.0),
            change_location: 2,
        };
        assert!(matches!(
            inject_shift(&noise, &[0.0; 10], &dense),
            Err(Error::InvalidConfig(_))
        ));
        let noise = Sample::from_row_major(4, 60, vec![0.0; 240]).unwrap();
        let x = inject_shift(&noise, &[0.0; 60], &dense).unwrap();
        assert!(x.row(3)[..50].iter().all(|&v| v == 1.0));
        assert!(x.row(3)[50..].iter().all(|&v| v == 0.0));
        assert!(x.row(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scenario_config_round_trip() {
        let text = r#"
            n = 200
            p = 50
            distribution = "elliptical_t"
            covariance = "autoregressive"
            signal = "sparse"
            delta = 0.6
            change_fraction = 0.1
            mean = 1.5
        "#;
        let spec = ScenarioConfig::from_toml_str(text).unwrap().to_spec().unwrap();
        assert_eq!(spec.signal.change_location, 20);
        assert_eq!(spec.distribution.family, NoiseFamily::EllipticalT { dof: 6 });
        assert_eq!(spec.distribution.covariance, CovarianceKind::Autoregressive);
        assert_eq!(spec.mu, vec![1.5; 50]);
        assert_eq!(spec.signal.pattern, SignalPattern::Sparse { delta: 0.6 });
    }

    #[test]
    fn scenario_config_errors() {
        let unknown = ScenarioConfig::from_toml_str("n = 10\np = 2\ncolour = 3").unwrap_err();
        assert!(unknown.to_string().contains("colour"));
        assert!(ScenarioConfig::from_toml_str("p = 2").is_err());
        let cfg = ScenarioConfig::from_toml_str("n = 10\np = 2\ndistribution = \"cauchy\"").unwrap();
        assert!(cfg.to_spec().is_err());
        let cfg = ScenarioConfig::from_toml_str(
            "n = 10\np = 2\nchange_location = 3\nchange_fraction = 0.5",
        )
        .unwrap();
        assert!(cfg.to_spec().is_err());
    }

    #[test]
    fn generator_is_seed_deterministic() {
        let spec = ScenarioSpec::null(
            30,
            4,
            DistributionSpec {
                family: NoiseFamily::contaminated(),
                covariance: CovarianceKind::CompoundSymmetry,
            },
        )
        .with_temporal(TemporalSpec::var1(11));
        let g = ScenarioGenerator::new(&spec).unwrap();
        let a = g.generate(&mut StreamKey::new(8).rng()).unwrap();
        let b = g.generate(&mut StreamKey::new(8).rng()).unwrap();
        let c = g.generate(&mut StreamKey::new(9).rng()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let g2 = ScenarioGenerator::new(&spec).unwrap();
        assert_eq!(g.var1_coefficient(), g2.var1_coefficient());
    }

    #[test]
    fn zero_var1_coefficient_is_iid() {
        let dist = DistributionSpec {
            family: NoiseFamily::Gaussian,
            covariance: CovarianceKind::Identity,
        };
        let a = DMatrix::zeros(3, 3);
        let var = sample_var1(&a, &dist, 10, 5, &mut StreamKey::new(1).rng()).unwrap();
        let mut rng = StreamKey::new(1).rng();
        // Burn-in consumes the first five innovations.
        let iid = sample_noise(&dist, 15, 3, &mut rng).unwrap();
        assert_eq!(var.values(), &iid.values()[15..]);
    }
}

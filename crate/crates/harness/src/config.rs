//! Experiment configuration: schema, validation, canonical hashing, and
//! built-in presets.
//!
//! A config is one TOML document with run-level fields at the top and a
//! single `[experiment.<kind>]` table selecting what to compute. Configs
//! round-trip losslessly through serialization, and the 16-hex-digit
//! configuration hash stamped into every output covers exactly the
//! result-determining fields (seed, replications, experiment); output
//! location and thread count are excluded because results are independent
//! of both by construction.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

use shelab_core::rng::{streams, StreamKey};
use shelab_core::solver::{
    BoundaryCondition, DriftSpec, RecordSpec, Scheme, SigmaSpec, SolverConfig,
};
use shelab_core::{Error, Result};

/// Partition steps must be at least this many fine-grid steps wide for a
/// variation sum to probe the continuum rather than the discretization.
pub const SCALE_SEPARATION: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Base seed; every replicate derives its noise stream from
    /// `(seed, stream, replicate)`.
    pub seed: u64,
    pub replications: usize,
    /// Worker threads for the replication loop. Outputs are byte-identical
    /// for any value.
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Artifact directory; the `--out` flag overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub experiment: Experiment,
}

fn default_threads() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Compare the covariance quadrature oracle against the closed forms
    /// on the equal-time and equal-space sections.
    OracleCheck(OracleCheckSpec),
    /// Power variations of exact linear samples against their limits.
    LinearVariation(LinearVariationSpec),
    /// Power variations of nonlinear finite-difference paths against the
    /// realized-path limits.
    NonlinearVariation(NonlinearVariationSpec),
    /// Monte Carlo recovery of the diffusivity from exact linear samples.
    Estimate(EstimateSpec),
    /// Clipped-error decay of an estimator across partition counts.
    RateStudy(RateStudySpec),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::OracleCheck(_) => "oracle-check",
            Experiment::LinearVariation(_) => "linear-variation",
            Experiment::NonlinearVariation(_) => "nonlinear-variation",
            Experiment::Estimate(_) => "estimate",
            Experiment::RateStudy(_) => "rate-study",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisChoice {
    Space,
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    Spatial,
    Temporal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeChoice {
    Explicit,
    SemiImplicit,
}

impl SchemeChoice {
    pub fn to_scheme(self) -> Scheme {
        match self {
            SchemeChoice::Explicit => Scheme::Explicit,
            SchemeChoice::SemiImplicit => Scheme::SemiImplicit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum BcChoice {
    Periodic,
    Dirichlet { value: f64 },
    Neumann,
}

impl BcChoice {
    pub fn to_bc(self) -> BoundaryCondition {
        match self {
            BcChoice::Periodic => BoundaryCondition::Periodic,
            BcChoice::Dirichlet { value } => BoundaryCondition::Dirichlet { value },
            BcChoice::Neumann => BoundaryCondition::Neumann,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum SigmaChoice {
    Constant { level: f64 },
    Affine { offset: f64, slope: f64 },
    /// `offset + amplitude * sin(x)`.
    Smooth { offset: f64, amplitude: f64 },
    /// `|x|^exponent` on nonnegative states.
    Power { exponent: f64 },
}

impl SigmaChoice {
    pub fn to_spec(self) -> SigmaSpec {
        match self {
            SigmaChoice::Constant { level } => SigmaSpec::Constant { level },
            SigmaChoice::Affine { offset, slope } => SigmaSpec::Affine { offset, slope },
            SigmaChoice::Smooth { offset, amplitude } => SigmaSpec::Smooth { offset, amplitude },
            SigmaChoice::Power { exponent } => SigmaSpec::Power { exponent },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum DriftChoice {
    #[default]
    None,
    Linear { slope: f64 },
}

impl DriftChoice {
    pub fn to_spec(self) -> DriftSpec {
        match self {
            DriftChoice::None => DriftSpec::None,
            DriftChoice::Linear { slope } => DriftSpec::Linear { slope },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum InitialChoice {
    Constant { value: f64 },
    /// `amplitude * sin(2 pi mode (x - a)/(b - a))`.
    Sine { amplitude: f64, mode: u32 },
}

impl Default for InitialChoice {
    fn default() -> Self {
        InitialChoice::Constant { value: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCheckSpec {
    pub alpha: f64,
    pub sigma: f64,
    /// Points per axis; each section contributes `grid_points^2` rows.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Largest time coordinate probed.
    #[serde(default = "default_unit")]
    pub t_max: f64,
    /// Largest spatial separation probed on the equal-time section.
    #[serde(default = "default_unit")]
    pub separation_max: f64,
}

fn default_grid_points() -> usize {
    20
}

fn default_unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearVariationSpec {
    pub axis: AxisChoice,
    pub alpha: f64,
    /// Constant noise level of the linear model.
    pub sigma: f64,
    /// The coordinate held fixed: `t > 0` for `axis = "space"`, `x` for
    /// `axis = "time"`.
    pub fixed_coordinate: f64,
    /// Observation interval along the axis; for `axis = "time"` the lower
    /// endpoint must be positive.
    pub interval: [f64; 2],
    /// Strictly increasing partition counts; the largest sets the exact
    /// sampling resolution and the others are integer subsamples of it.
    pub partition_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearVariationSpec {
    pub axis: AxisChoice,
    pub alpha: f64,
    pub domain: [f64; 2],
    pub nx: usize,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: SchemeChoice,
    pub bc: BcChoice,
    pub sigma: SigmaChoice,
    #[serde(default)]
    pub drift: DriftChoice,
    #[serde(default)]
    pub initial: InitialChoice,
    /// Snapshot time for `axis = "space"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_time: Option<f64>,
    /// Trace location for `axis = "time"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_position: Option<f64>,
    /// Trace recording period in steps.
    #[serde(default = "default_trace_every")]
    pub trace_every: usize,
    /// Variation interval along the axis.
    pub interval: [f64; 2],
    /// Partition step for `axis = "space"`; must be a multiple of `dx`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    /// Partition count for `axis = "time"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partitions: Option<usize>,
    /// With a Dirichlet or Neumann boundary, the variation interval (or
    /// trace location) must stay at least this fraction of the domain away
    /// from each wall.
    #[serde(default = "default_guard")]
    pub boundary_guard: f64,
}

fn default_trace_every() -> usize {
    1
}

fn default_guard() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSpec {
    pub method: MethodChoice,
    /// True diffusivity generating the exact samples.
    pub alpha: f64,
    /// Constant noise level of the linear model.
    pub sigma: f64,
    pub fixed_coordinate: f64,
    pub interval: [f64; 2],
    /// Partition count; also the exact sampling resolution.
    pub partitions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateStudySpec {
    pub method: MethodChoice,
    pub alpha: f64,
    pub sigma: f64,
    pub fixed_coordinate: f64,
    pub interval: [f64; 2],
    pub partition_counts: Vec<usize>,
}

/// View of the result-determining fields, serialized for hashing.
#[derive(Serialize)]
struct HashView<'a> {
    seed: u64,
    replications: usize,
    experiment: &'a Experiment,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical serialization
    /// of (seed, replications, experiment).
    pub fn hash(&self) -> String {
        let view = HashView {
            seed: self.seed,
            replications: self.replications,
            experiment: &self.experiment,
        };
        let canonical = toml::to_string(&view).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be at least 1"));
        }
        if self.threads == 0 {
            return Err(Error::invalid("threads", "must be at least 1"));
        }
        match &self.experiment {
            Experiment::OracleCheck(s) => s.validate(),
            Experiment::LinearVariation(s) => s.validate(),
            Experiment::NonlinearVariation(s) => s.validate(self.seed).map(|_| ()),
            Experiment::Estimate(s) => s.validate(),
            Experiment::RateStudy(s) => s.validate(),
        }
    }
}

fn check_interval(interval: [f64; 2], what: &str) -> Result<()> {
    let [lo, hi] = interval;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid(what, format!("need lo < hi, got [{lo}, {hi}]")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid("alpha", "must be positive and finite"));
    }
    Ok(())
}

fn check_sigma_level(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid("sigma", "must be nonnegative and finite"));
    }
    Ok(())
}

fn check_counts(counts: &[usize], what: &str) -> Result<usize> {
    if counts.is_empty() {
        return Err(Error::invalid(what, "need at least one partition count"));
    }
    if counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(what, "partition counts must be strictly increasing"));
    }
    let finest = *counts.last().expect("non-empty");
    for &n in counts {
        if n == 0 || !finest.is_multiple_of(n) {
            return Err(Error::invalid(
                what,
                format!("count {n} does not divide the finest count {finest}"),
            ));
        }
    }
    Ok(finest)
}

/// `x` must be an integer multiple of `unit` (relative slack 1e-9).
fn check_multiple(x: f64, unit: f64, what: &str) -> Result<u64> {
    let ratio = x / unit;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * ratio.abs().max(1.0) {
        return Err(Error::invalid(
            what,
            format!("{x} is not a positive integer multiple of {unit}"),
        ));
    }
    Ok(rounded as u64)
}

impl OracleCheckSpec {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        check_sigma_level(self.sigma)?;
        if self.grid_points < 2 {
            return Err(Error::invalid("grid_points", "need at least 2 per axis"));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::invalid("t_max", "must be positive"));
        }
        if !(self.separation_max.is_finite() && self.separation_max > 0.0) {
            return Err(Error::invalid("separation_max", "must be positive"));
        }
        // keep the equal-time covariance well above underflow at the
        // shortest time probed: exp(-d^2 / (8 alpha t_min)) >= e^-12
        let t_min = self.t_max / self.grid_points as f64;
        let decay = self.separation_max.powi(2) / (8.0 * self.alpha * t_min);
        if decay > 12.0 {
            return Err(Error::invalid(
                "separation_max",
                format!(
                    "separation {} decays the covariance by e^-{decay:.1} at the shortest \
                     time {t_min}; shrink it below {:.4} or raise t_max",
                    self.separation_max,
                    (12.0 * 8.0 * self.alpha * t_min).sqrt()
                ),
            ));
        }
        Ok(())
    }
}

impl LinearVariationSpec {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        check_sigma_level(self.sigma)?;
        check_interval(self.interval, "interval")?;
        check_counts(&self.partition_counts, "partition_counts")?;
        match self.axis {
            AxisChoice::Space => {
                if !(self.fixed_coordinate.is_finite() && self.fixed_coordinate > 0.0) {
                    return Err(Error::invalid(
                        "fixed_coordinate",
                        "the snapshot time must be positive",
                    ));
                }
            }
            AxisChoice::Time => {
                if self.interval[0] <= 0.0 {
                    return Err(Error::invalid(
                        "interval",
                        "the temporal interval must start after 0",
                    ));
                }
                if !self.fixed_coordinate.is_finite() {
                    return Err(Error::invalid("fixed_coordinate", "must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// Everything `validate` resolves about a nonlinear run: reused by both the
/// runner and `describe`.
#[derive(Debug, Clone)]
pub struct NonlinearPlan {
    /// Validated solver configuration for replicate 0.
    pub solver: SolverConfig,
    /// Partition count of the variation.
    pub partitions: usize,
    /// Partition step along the axis.
    pub window: f64,
    /// Spacing of the observed section (`dx` in space, `trace_every * dt`
    /// in time).
    pub observation_spacing: f64,
}

impl NonlinearVariationSpec {
    /// Build the solver configuration for one replicate.
    pub fn solver_config(&self, seed: u64, replicate: u64) -> SolverConfig {
        let record = match self.axis {
            AxisChoice::Space => RecordSpec {
                snapshot_times: self.snapshot_time.into_iter().collect(),
                trace_positions: vec![],
                trace_every: self.trace_every.max(1),
            },
            AxisChoice::Time => RecordSpec {
                snapshot_times: vec![],
                trace_positions: self.trace_position.into_iter().collect(),
                trace_every: self.trace_every.max(1),
            },
        };
        SolverConfig {
            alpha: self.alpha,
            domain: (self.domain[0], self.domain[1]),
            nx: self.nx,
            dt: self.dt,
            t_end: self.t_end,
            scheme: self.scheme.to_scheme(),
            bc: self.bc.to_bc(),
            sigma: self.sigma.to_spec(),
            drift: self.drift.to_spec(),
            record,
            key: StreamKey::new(seed, streams::SOLVER_NOISE, replicate),
        }
    }

    /// Initial state matching the boundary condition's storage layout.
    pub fn initial_state(&self) -> Vec<f64> {
        let len = self.bc.to_bc().state_len(self.nx);
        let (a, b) = (self.domain[0], self.domain[1]);
        let dx = (b - a) / self.nx as f64;
        match self.initial {
            InitialChoice::Constant { value } => vec![value; len],
            InitialChoice::Sine { amplitude, mode } => (0..len)
                .map(|i| {
                    let x = a + i as f64 * dx;
                    amplitude
                        * (2.0 * std::f64::consts::PI * mode as f64 * (x - a) / (b - a)).sin()
                })
                .collect(),
        }
    }

    pub fn validate(&self, seed: u64) -> Result<NonlinearPlan> {
        check_alpha(self.alpha)?;
        check_interval(self.domain, "domain")?;
        check_interval(self.interval, "interval")?;
        if !(0.0..0.5).contains(&self.boundary_guard) {
            return Err(Error::invalid(
                "boundary_guard",
                "must be a fraction in [0, 0.5)",
            ));
        }
        let solver = self.solver_config(seed, 0);
        solver.validate()?;
        let dx = solver.dx();
        let (a, b) = solver.domain;
        let guard = self.boundary_guard * (b - a);
        let [lo, hi] = self.interval;

        let plan = match self.axis {
            AxisChoice::Space => {
                if self.snapshot_time.is_none() {
                    return Err(Error::invalid(
                        "snapshot_time",
                        "required when axis = \"space\"",
                    ));
                }
                if self.trace_position.is_some() || self.partitions.is_some() {
                    return Err(Error::invalid(
                        "experiment",
                        "axis = \"space\" takes snapshot_time and window, \
                         not trace_position or partitions",
                    ));
                }
                let window = self.window.ok_or_else(|| {
                    Error::invalid("window", "required when axis = \"space\"")
                })?;
                let stride = check_multiple(window, dx, "window")?;
                if stride < SCALE_SEPARATION as u64 {
                    return Err(Error::invalid(
                        "window",
                        format!(
                            "{window} is only {stride} grid steps; scale separation \
                             needs at least {SCALE_SEPARATION} (window >= {})",
                            SCALE_SEPARATION as f64 * dx
                        ),
                    ));
                }
                let n = check_multiple(hi - lo, window, "interval length")? as usize;
                check_multiple(lo - a + dx, dx, "interval start offset")?;
                if matches!(self.bc, BcChoice::Periodic) {
                    if hi - lo > (b - a) * (1.0 + 1e-9) {
                        return Err(Error::invalid(
                            "interval",
                            "longer than one period of the domain",
                        ));
                    }
                } else {
                    if lo < a + guard - 1e-12 || hi > b - guard + 1e-12 {
                        return Err(Error::invalid(
                            "interval",
                            format!(
                                "[{lo}, {hi}] must stay {guard} away from the \
                                 Dirichlet/Neumann walls of [{a}, {b}]"
                            ),
                        ));
                    }
                }
                NonlinearPlan {
                    solver,
                    partitions: n,
                    window,
                    observation_spacing: dx,
                }
            }
            AxisChoice::Time => {
                let x = self.trace_position.ok_or_else(|| {
                    Error::invalid("trace_position", "required when axis = \"time\"")
                })?;
                if self.snapshot_time.is_some() || self.window.is_some() {
                    return Err(Error::invalid(
                        "experiment",
                        "axis = \"time\" takes trace_position and partitions, \
                         not snapshot_time or window",
                    ));
                }
                let n = self.partitions.ok_or_else(|| {
                    Error::invalid("partitions", "required when axis = \"time\"")
                })?;
                if n == 0 {
                    return Err(Error::invalid("partitions", "must be at least 1"));
                }
                if !(a..=b).contains(&x) {
                    return Err(Error::invalid("trace_position", "outside the domain"));
                }
                if !matches!(self.bc, BcChoice::Periodic)
                    && (x < a + guard - 1e-12 || x > b - guard + 1e-12)
                {
                    return Err(Error::invalid(
                        "trace_position",
                        format!("{x} must stay {guard} away from the walls of [{a}, {b}]"),
                    ));
                }
                if lo <= 0.0 {
                    return Err(Error::invalid("interval", "T1 must be positive"));
                }
                if hi > self.t_end * (1.0 + 1e-9) {
                    return Err(Error::invalid("interval", "T2 exceeds the horizon t_end"));
                }
                let spacing = self.trace_every.max(1) as f64 * self.dt;
                let window = (hi - lo) / n as f64;
                let stride = check_multiple(window, spacing, "partition step")?;
                if stride < SCALE_SEPARATION as u64 {
                    return Err(Error::invalid(
                        "partitions",
                        format!(
                            "partition step {window} is only {stride} trace samples; \
                             scale separation needs at least {SCALE_SEPARATION} \
                             (lower trace_every or partitions)"
                        ),
                    ));
                }
                check_multiple(lo + spacing, spacing, "interval start")?;
                NonlinearPlan {
                    solver,
                    partitions: n,
                    window,
                    observation_spacing: spacing,
                }
            }
        };
        Ok(plan)
    }
}

impl EstimateSpec {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        check_sigma_level(self.sigma)?;
        check_interval(self.interval, "interval")?;
        if self.partitions == 0 {
            return Err(Error::invalid("partitions", "must be at least 1"));
        }
        match self.method {
            MethodChoice::Spatial => {
                if !(self.fixed_coordinate.is_finite() && self.fixed_coordinate > 0.0) {
                    return Err(Error::invalid(
                        "fixed_coordinate",
                        "the snapshot time must be positive",
                    ));
                }
            }
            MethodChoice::Temporal => {
                if self.interval[0] <= 0.0 {
                    return Err(Error::invalid("interval", "T1 must be positive"));
                }
            }
        }
        Ok(())
    }
}

impl RateStudySpec {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        check_sigma_level(self.sigma)?;
        check_interval(self.interval, "interval")?;
        check_counts(&self.partition_counts, "partition_counts")?;
        match self.method {
            MethodChoice::Spatial => {
                if !(self.fixed_coordinate.is_finite() && self.fixed_coordinate > 0.0) {
                    return Err(Error::invalid(
                        "fixed_coordinate",
                        "the snapshot time must be positive",
                    ));
                }
            }
            MethodChoice::Temporal => {
                if self.interval[0] <= 0.0 {
                    return Err(Error::invalid("interval", "T1 must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// A built-in experiment definition.
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub config: fn() -> ExperimentConfig,
}

/// The built-in presets, mirroring the headline experiments.
pub const PRESETS: &[Preset] = &[
    Preset {
        name: "oracle",
        summary: "covariance quadrature vs closed forms on an (s,t,x,y) grid \
                  (diagnostic, no sampling)",
        config: preset_oracle,
    },
    Preset {
        name: "linear-space",
        summary: "spatial quadratic variation of exact samples on [0,1] at t=1 \
                  (limit 1/2 at unit parameters)",
        config: preset_linear_space,
    },
    Preset {
        name: "linear-time",
        summary: "temporal quartic variation of exact samples on [1,2] \
                  (limit 3/pi at unit parameters)",
        config: preset_linear_time,
    },
    Preset {
        name: "nonlinear-space",
        summary: "spatial quadratic variation of nonlinear paths, sigma = 2 + sin, \
                  periodic [0,1], dx = 2^-10",
        config: preset_nonlinear_space,
    },
    Preset {
        name: "nonlinear-time",
        summary: "temporal quartic variation of the same nonlinear paths at x = 0.5 \
                  over [0.125, 0.25]",
        config: preset_nonlinear_time,
    },
    Preset {
        name: "estimate-temporal",
        summary: "temporal estimate of alpha = 2 from exact samples, n = 4096",
        config: preset_estimate_temporal,
    },
    Preset {
        name: "estimate-spatial",
        summary: "spatial estimate of alpha = 2 from exact samples, n = 4096",
        config: preset_estimate_spatial,
    },
    Preset {
        name: "rate-study",
        summary: "clipped-error decay of the temporal estimator over n in {512, 2048, 8192}",
        config: preset_rate_study,
    },
];

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    PRESETS.iter().find(|p| p.name == name).map(|p| (p.config)())
}

fn preset_oracle() -> ExperimentConfig {
    ExperimentConfig {
        seed: 1000,
        replications: 1,
        threads: 1,
        out_dir: Some(PathBuf::from("results/oracle")),
        experiment: Experiment::OracleCheck(OracleCheckSpec {
            alpha: 1.0,
            sigma: 1.0,
            grid_points: 20,
            t_max: 1.0,
            separation_max: 1.0,
        }),
    }
}

fn preset_linear_space() -> ExperimentConfig {
    ExperimentConfig {
        seed: 1001,
        replications: 500,
        threads: 1,
        out_dir: Some(PathBuf::from("results/linear-space")),
        experiment: Experiment::LinearVariation(LinearVariationSpec {
            axis: AxisChoice::Space,
            alpha: 1.0,
            sigma: 1.0,
            fixed_coordinate: 1.0,
            interval: [0.0, 1.0],
            partition_counts: vec![256, 1024, 4096],
        }),
    }
}

fn preset_linear_time() -> ExperimentConfig {
    ExperimentConfig {
        seed: 1002,
        replications: 500,
        threads: 1,
        out_dir: Some(PathBuf::from("results/linear-time")),
        experiment: Experiment::LinearVariation(LinearVariationSpec {
            axis: AxisChoice::Time,
            alpha: 1.0,
            sigma: 1.0,
            fixed_coordinate: 0.0,
            interval: [1.0, 2.0],
            partition_counts: vec![256, 1024, 4096],
        }),
    }
}

// dx = 2^-10 and dt = dx^2/4 = 2^-22, written exactly
const THM_DX: f64 = 1.0 / 1024.0;
const THM_DT: f64 = THM_DX * THM_DX / 4.0;

fn preset_nonlinear_space() -> ExperimentConfig {
    ExperimentConfig {
        seed: 1003,
        replications: 20,
        threads: 1,
        out_dir: Some(PathBuf::from("results/nonlinear-space")),
        experiment: Experiment::NonlinearVariation(NonlinearVariationSpec {
            axis: AxisChoice::Space,
            alpha: 1.0,
            domain: [0.0, 1.0],
            nx: 1024,
            dt: THM_DT,
            t_end: 0.25,
            scheme: SchemeChoice::Explicit,
            bc: BcChoice::Periodic,
            sigma: SigmaChoice::Smooth { offset: 2.0, amplitude: 1.0 },
            drift: DriftChoice::None,
            initial: InitialChoice::Constant { value: 0.0 },
            snapshot_time: Some(0.25),
            trace_position: None,
            trace_every: 1,
            interval: [0.0, 1.0],
            window: Some(16.0 * THM_DX),
            partitions: None,
            boundary_guard: 0.1,
        }),
    }
}

fn preset_nonlinear_time() -> ExperimentConfig {
    ExperimentConfig {
        seed: 1004,
        replications: 20,
        threads: 1,
        out_dir: Some(PathBuf::from("results/nonlinear-time")),
        experiment: Experiment::NonlinearVariation(NonlinearVariationSpec {
            axis: AxisChoice::Time,
            alpha: 1.0,
            domain: [0.0, 1.0],
            nx: 1024,
            dt: THM_DT,
            t_end: 0.25,
            scheme: SchemeChoice::Explicit,
            bc: BcChoice::Periodic,
            sigma: SigmaChoice::Smooth { offset: 2.0, amplitude: 1.0 },
            drift: DriftChoice::None,
            initial: InitialChoice::Constant { value: 0.0 },
            snapshot_time: None,
            trace_position: Some(0.5),
            trace_every: 128,
            interval: [0.125, 0.25],
            window: None,
            partitions: Some(512),
            boundary_guard: 0.1,
        }),
    }
}

fn preset_estimate_temporal() -> ExperimentConfig {
    ExperimentConfig {
        seed: 1005,
        replications: 20,
        threads: 1,
        out_dir: Some(PathBuf::from("results/estimate-temporal")),
        experiment: Experiment::Estimate(EstimateSpec {
            method: MethodChoice::Temporal,
            alpha: 2.0,
            sigma: 1.0,
            fixed_coordinate: 0.0,
            interval: [1.0, 2.0],
            partitions: 4096,
        }),
    }
}

fn preset_estimate_spatial() -> ExperimentConfig {
    ExperimentConfig {
        seed: 1006,
        replications: 20,
        threads: 1,
        out_dir: Some(PathBuf::from("results/estimate-spatial")),
        experiment: Experiment::Estimate(EstimateSpec {
            method: MethodChoice::Spatial,
            alpha: 2.0,
            sigma: 1.0,
            fixed_coordinate: 1.0,
            interval: [0.0, 1.0],
            partitions: 4096,
        }),
    }
}

fn preset_rate_study() -> ExperimentConfig {
    ExperimentConfig {
        seed: 1007,
        replications: 50,
        threads: 1,
        out_dir: Some(PathBuf::from("results/rate-study")),
        experiment: Experiment::RateStudy(RateStudySpec {
            method: MethodChoice::Temporal,
            alpha: 1.0,
            sigma: 1.0,
            fixed_coordinate: 0.0,
            interval: [1.0, 2.0],
            partition_counts: vec![512, 2048, 8192],
        }),
    }
}

//! Drift-parameter estimators built from the variation limits.
//!
//! Inverting the two variation identities (see [`crate::variations`]) with
//! `sigma` known turns each realized variation sum into an estimate of the
//! diffusivity `alpha`:
//!
//! ```text
//!     alpha_hat_temporal = (3 (T2 - T1) / (n pi)) * sum_j sigma^4(X_{t_j}(x))
//!                          / sum_j (X_{t_j}(x) - X_{t_{j-1}}(x))^4
//!
//!     alpha_hat_spatial  = ((A2 - A1) / (2 n))    * sum_j sigma^2(X_t(x_j))
//!                          / sum_j (X_t(x_j) - X_t(x_{j-1}))^2
//! ```
//!
//! with both sums running over the same `n`-step partition (`sigma` is
//! evaluated at right endpoints). Plugging the exact limit value of the
//! variation sum into either formula returns `alpha` identically, and the
//! estimate is strictly decreasing in the variation sum, so a rough path
//! (large variation) reads as a small diffusivity.
//!
//! [`rate_study`] runs the Monte Carlo error scan
//! `n -> E[|alpha_hat - alpha| /\ 1]` on exact linear samples. Only the
//! monotone decrease of that error is a testable claim; the literature
//! suggests an `n^(-3/20)` envelope for the temporal estimator under a
//! joint refinement of the observation mesh, so reports carry that exponent
//! as a reference line next to the fitted slope without asserting it (a
//! fixed observation interval, as here, typically steepens the fit toward
//! the `n^(-1/2)` Monte Carlo scaling of the variation sums themselves).

use crate::error::{Error, Result};
use crate::linear_exact::{GaussianFieldSampler, SpaceGrid, TimeGrid};
use crate::kernels::PhysicalParams;
use crate::numerics::{log_log_slope, NeumaierSum};
use crate::rng::{streams, StreamKey};
use crate::solver::SigmaSpec;
use crate::variations::{partition_indices, power_variation, SampledPath};

/// Which variation identity an estimate inverts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMethod {
    /// Quadratic variation of a fixed-time snapshot.
    Spatial,
    /// Quartic variation of a fixed-location trace.
    Temporal,
}

impl EstimatorMethod {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorMethod::Spatial => "spatial",
            EstimatorMethod::Temporal => "temporal",
        }
    }
}

/// Reference exponent quoted for the temporal estimator's clipped-error
/// decay; informational only, never asserted.
pub const TEMPORAL_REFERENCE_RATE: f64 = -3.0 / 20.0;

/// Extract the `n + 1` partition values over `interval` from a stored path.
fn partition_values(path: &SampledPath, interval: (f64, f64), n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("partition", "need at least one increment"));
    }
    let window = (interval.1 - interval.0) / n as f64;
    let (start_idx, stride, resolved_n) = partition_indices(path, window, interval)?;
    debug_assert_eq!(resolved_n, n);
    Ok((0..=n).map(|k| path.value(start_idx + k * stride)).collect())
}

/// Shared estimator core: `prefactor * sum_j sigma^(2q)(v_j) / sum |dv|^(2q)`
/// with right-endpoint `sigma` evaluation.
fn invert_variation(
    partition: &[f64],
    sigma: &SigmaSpec,
    p: u32,
    prefactor: f64,
    what: &str,
) -> Result<f64> {
    let variation = power_variation(partition, p)?;
    if variation == 0.0 {
        return Err(Error::Degenerate {
            why: format!("{what}: variation sum vanished (deterministic or constant path)"),
        });
    }
    let mut sigma_sum = NeumaierSum::new();
    for v in &partition[1..] {
        let s = sigma.eval(*v);
        sigma_sum.add(s.powi(p as i32));
    }
    let alpha_hat = prefactor * sigma_sum.value() / variation;
    if !alpha_hat.is_finite() {
        return Err(Error::Degenerate {
            why: format!("{what}: estimate is not finite"),
        });
    }
    Ok(alpha_hat)
}

/// Temporal estimator of `alpha` from a fixed-location trace:
/// `(3 (T2 - T1) / (n pi)) * sum_j sigma^4(X_{t_j}) / sum_j (increment)^4`
/// over the `n`-step partition of `[T1, T2]` (integer subsampling of the
/// trace grid; `T1 > 0`).
pub fn alpha_hat_temporal(
    trace: &SampledPath,
    sigma: &SigmaSpec,
    interval: (f64, f64),
    n: usize,
) -> Result<f64> {
    sigma.validate()?;
    if interval.0 <= 0.0 {
        return Err(Error::invalid(
            "temporal interval",
            format!("T1 must be positive, got {}", interval.0),
        ));
    }
    let partition = partition_values(trace, interval, n)?;
    let prefactor = 3.0 * (interval.1 - interval.0) / (n as f64 * std::f64::consts::PI);
    invert_variation(&partition, sigma, 4, prefactor, "temporal estimator")
}

/// Spatial estimator of `alpha` from a fixed-time snapshot:
/// `((A2 - A1) / (2 n)) * sum_j sigma^2(X(x_j)) / sum_j (increment)^2`
/// over the `n`-step partition of `[A1, A2]`.
pub fn alpha_hat_spatial(
    snapshot: &SampledPath,
    sigma: &SigmaSpec,
    interval: (f64, f64),
    n: usize,
) -> Result<f64> {
    sigma.validate()?;
    let partition = partition_values(snapshot, interval, n)?;
    let prefactor = (interval.1 - interval.0) / (2.0 * n as f64);
    invert_variation(&partition, sigma, 2, prefactor, "spatial estimator")
}

/// One partition count's worth of Monte Carlo aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub n: usize,
    pub mean_alpha_hat: f64,
    /// `E[|alpha_hat - alpha| /\ 1]` estimate; always in `[0, 1]`.
    pub mean_clipped_error: f64,
}

/// Monte Carlo summary of an estimator run, including the rate-fitting
/// table when several partition counts were studied.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub method: EstimatorMethod,
    /// Largest partition count studied; the headline numbers refer to it.
    pub n: usize,
    pub alpha_true: f64,
    /// Mean estimate at the largest partition count.
    pub alpha_hat: f64,
    pub replications: usize,
    /// Mean clipped error at the largest partition count.
    pub mean_abs_error: f64,
    /// Per-partition-count table, ascending in `n`.
    pub per_n: Vec<RatePoint>,
    /// Log-log slope of mean clipped error against `n`; NaN when only one
    /// partition count was studied.
    pub fitted_rate: f64,
    /// Reference exponent printed next to `fitted_rate`; not a claim about
    /// this observation scheme.
    pub reference_rate: f64,
}

/// Design of a Monte Carlo error study on exact linear samples
/// (constant `sigma`, the only case the exact sampler covers).
#[derive(Debug, Clone, PartialEq)]
pub struct RateStudyDesign {
    pub method: EstimatorMethod,
    pub alpha: f64,
    pub sigma_level: f64,
    /// `[T1, T2]` (temporal, `T1 > 0`) or `[A1, A2]` (spatial) observation
    /// interval.
    pub interval: (f64, f64),
    /// The coordinate held fixed: `x` for temporal, `t > 0` for spatial.
    pub fixed_coordinate: f64,
    /// Strictly increasing; every entry must divide the largest, which sets
    /// the sampling resolution (coarser partitions are integer subsamples).
    pub partition_counts: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
}

/// Run the clipped-error scan `n -> E[|alpha_hat - alpha| /\ 1]` over exact
/// linear samples: one covariance factorization at the finest partition
/// count, every coarser partition subsampled from the same realizations,
/// aggregation in replicate order.
pub fn rate_study(design: &RateStudyDesign) -> Result<EstimatorReport> {
    if design.replications == 0 {
        return Err(Error::invalid("rate study", "needs at least one replication"));
    }
    if design.partition_counts.is_empty() {
        return Err(Error::invalid("rate study", "needs at least one partition count"));
    }
    if design.partition_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "rate study",
            "partition counts must be strictly increasing",
        ));
    }
    let n_max = *design.partition_counts.last().expect("non-empty");
    for &n in &design.partition_counts {
        if n == 0 || !n_max.is_multiple_of(n) {
            return Err(Error::invalid(
                "rate study",
                format!("partition count {n} does not divide the finest count {n_max}"),
            ));
        }
    }
    let params = PhysicalParams::new(design.alpha, design.sigma_level)?;
    let sigma = SigmaSpec::Constant { level: design.sigma_level };
    let (lo, hi) = design.interval;
    let sampler = match design.method {
        EstimatorMethod::Temporal => {
            let grid = TimeGrid::new(lo, hi, n_max)?;
            GaussianFieldSampler::temporal(design.fixed_coordinate, &grid, &params)?
        }
        EstimatorMethod::Spatial => {
            let grid = SpaceGrid::new(lo, hi, n_max)?;
            GaussianFieldSampler::spatial(design.fixed_coordinate, &grid, &params)?
        }
    };
    let spacing = (hi - lo) / n_max as f64;

    let counts = &design.partition_counts;
    let mut alpha_sums = vec![NeumaierSum::new(); counts.len()];
    let mut error_sums = vec![NeumaierSum::new(); counts.len()];
    for r in 0..design.replications {
        let key = StreamKey::new(design.seed, streams::LINEAR_SAMPLER, r as u64);
        let values = sampler.sample(&key);
        let path = SampledPath::new(&values, lo, spacing)?;
        for (slot, &n) in counts.iter().enumerate() {
            let alpha_hat = match design.method {
                EstimatorMethod::Temporal => {
                    alpha_hat_temporal(&path, &sigma, design.interval, n)?
                }
                EstimatorMethod::Spatial => {
                    alpha_hat_spatial(&path, &sigma, design.interval, n)?
                }
            };
            alpha_sums[slot].add(alpha_hat);
            error_sums[slot].add((alpha_hat - design.alpha).abs().min(1.0));
        }
    }

    let reps = design.replications as f64;
    let per_n: Vec<RatePoint> = counts
        .iter()
        .zip(alpha_sums.iter().zip(error_sums.iter()))
        .map(|(&n, (a, e))| RatePoint {
            n,
            mean_alpha_hat: a.value() / reps,
            mean_clipped_error: e.value() / reps,
        })
        .collect();
    let xs: Vec<f64> = per_n.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = per_n.iter().map(|p| p.mean_clipped_error).collect();
    let fitted_rate = if per_n.len() >= 2 {
        log_log_slope(&xs, &ys)
    } else {
        f64::NAN
    };
    let last = per_n.last().expect("non-empty");
    Ok(EstimatorReport {
        method: design.method,
        n: last.n,
        alpha_true: design.alpha,
        alpha_hat: last.mean_alpha_hat,
        replications: design.replications,
        mean_abs_error: last.mean_clipped_error,
        per_n,
        fitted_rate,
        reference_rate: TEMPORAL_REFERENCE_RATE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{
        simulate, BoundaryCondition, DriftSpec, RecordSpec, Scheme, SolverConfig,
    };

    const PI: f64 = std::f64::consts::PI;

    /// Alternating path whose order-p variation is exactly `n * step^p`.
    fn sawtooth(n: usize, step: f64) -> Vec<f64> {
        (0..=n).map(|j| if j % 2 == 0 { 0.0 } else { step }).collect()
    }

    #[test]
    fn plug_in_consistency_recovers_alpha_exactly() {
        // temporal: n increments of size d with n d^4 equal to the limit
        // value 3 sigma^4 (T2 - T1) / (pi alpha) force alpha_hat == alpha
        let alpha = 1.7f64;
        let level = 1.3f64;
        let (t1, t2) = (1.0, 2.0);
        let n = 64;
        let d = (3.0 * level.powi(4) * (t2 - t1) / (PI * alpha * n as f64)).powf(0.25);
        let values = sawtooth(n, d);
        let trace = SampledPath::new(&values, t1, (t2 - t1) / n as f64).unwrap();
        let sigma = SigmaSpec::Constant { level };
        let got = alpha_hat_temporal(&trace, &sigma, (t1, t2), n).unwrap();
        assert!((got - alpha).abs() <= 1e-12 * alpha, "temporal {got}");

        // spatial: n d^2 equal to sigma^2 (A2 - A1) / (2 alpha)
        let (a1, a2) = (0.0, 1.0);
        let d2 = (level * level * (a2 - a1) / (2.0 * alpha * n as f64)).sqrt();
        let values2 = sawtooth(n, d2);
        let snap = SampledPath::new(&values2, a1, (a2 - a1) / n as f64).unwrap();
        let got2 = alpha_hat_spatial(&snap, &sigma, (a1, a2), n).unwrap();
        assert!((got2 - alpha).abs() <= 1e-12 * alpha, "spatial {got2}");
    }

    #[test]
    fn sigma_rescaling_scales_estimates_by_its_power() {
        // same path, sigma -> c sigma: temporal numerator picks up c^4 and
        // the variation sum is untouched, so alpha_hat scales by c^4
        // (spatial: c^2)
        let values = sawtooth(32, 0.37);
        let trace = SampledPath::new(&values, 1.0, 1.0 / 32.0).unwrap();
        let snap = SampledPath::new(&values, 0.0, 1.0 / 32.0).unwrap();
        let c = 1.9f64;
        let base = SigmaSpec::Constant { level: 0.8 };
        let scaled = SigmaSpec::Constant { level: 0.8 * c };
        let t0 = alpha_hat_temporal(&trace, &base, (1.0, 2.0), 32).unwrap();
        let t1 = alpha_hat_temporal(&trace, &scaled, (1.0, 2.0), 32).unwrap();
        assert!((t1 - c.powi(4) * t0).abs() <= 1e-12 * t1);
        let s0 = alpha_hat_spatial(&snap, &base, (0.0, 1.0), 32).unwrap();
        let s1 = alpha_hat_spatial(&snap, &scaled, (0.0, 1.0), 32).unwrap();
        assert!((s1 - c * c * s0).abs() <= 1e-12 * s1);

        // joint rescaling X -> c X, sigma -> c sigma leaves alpha_hat fixed
        let scaled_values: Vec<f64> = values.iter().map(|v| c * v).collect();
        let strace = SampledPath::new(&scaled_values, 1.0, 1.0 / 32.0).unwrap();
        let joint = alpha_hat_temporal(&strace, &scaled, (1.0, 2.0), 32).unwrap();
        assert!((joint - t0).abs() <= 1e-12 * t0);
    }

    #[test]
    fn estimate_is_strictly_decreasing_in_the_variation_sum() {
        let sigma = SigmaSpec::Constant { level: 1.0 };
        let small = sawtooth(16, 0.1);
        let large = sawtooth(16, 0.2);
        let ts = SampledPath::new(&small, 1.0, 1.0 / 16.0).unwrap();
        let tl = SampledPath::new(&large, 1.0, 1.0 / 16.0).unwrap();
        let a_small = alpha_hat_temporal(&ts, &sigma, (1.0, 2.0), 16).unwrap();
        let a_large = alpha_hat_temporal(&tl, &sigma, (1.0, 2.0), 16).unwrap();
        assert!(a_large < a_small);
        assert!(a_small > 0.0 && a_large > 0.0);
    }

    #[test]
    fn degenerate_paths_are_rejected() {
        let sigma = SigmaSpec::Constant { level: 1.0 };
        let flat = vec![3.0; 17];
        let trace = SampledPath::new(&flat, 1.0, 1.0 / 16.0).unwrap();
        let err = alpha_hat_temporal(&trace, &sigma, (1.0, 2.0), 16).unwrap_err();
        assert!(matches!(err, Error::Degenerate { .. }));
        let snap = SampledPath::new(&flat, 0.0, 1.0 / 16.0).unwrap();
        assert!(matches!(
            alpha_hat_spatial(&snap, &sigma, (0.0, 1.0), 16),
            Err(Error::Degenerate { .. })
        ));
        // T1 = 0 rejected for the temporal estimator
        assert!(alpha_hat_temporal(&trace, &sigma, (0.0, 1.0), 16).is_err());
        // n must divide the stored grid
        let bumpy = sawtooth(16, 0.5);
        let p = SampledPath::new(&bumpy, 1.0, 1.0 / 16.0).unwrap();
        assert!(alpha_hat_temporal(&p, &sigma, (1.0, 2.0), 7).is_err());
    }

    #[test]
    fn exact_samples_recover_alpha_within_monte_carlo_noise() {
        // temporal at n=1024: per-replicate sd of alpha_hat is ~11%, so the
        // 20-replicate mean carries ~2.4% standard error
        let alpha = 2.0;
        let params = PhysicalParams::new(alpha, 1.0).unwrap();
        let sigma = SigmaSpec::Constant { level: 1.0 };
        let n = 1024;
        let tgrid = TimeGrid::new(1.0, 2.0, n).unwrap();
        let sampler = GaussianFieldSampler::temporal(0.0, &tgrid, &params).unwrap();
        let base = StreamKey::new(410, streams::LINEAR_SAMPLER, 0);
        let paths = sampler.sample_batch(&base, 20);
        let mut mean = 0.0;
        for values in &paths {
            let trace = SampledPath::new(values, 1.0, tgrid.spacing()).unwrap();
            mean += alpha_hat_temporal(&trace, &sigma, (1.0, 2.0), n).unwrap();
        }
        mean /= 20.0;
        assert!(
            (mean - alpha).abs() < 0.10 * alpha,
            "temporal mean alpha_hat {mean}"
        );

        // spatial at n=1024: per-replicate sd ~4.4%, mean se ~1%
        let sgrid = SpaceGrid::new(0.0, 1.0, n).unwrap();
        let ssampler = GaussianFieldSampler::spatial(1.0, &sgrid, &params).unwrap();
        let spaths = ssampler.sample_batch(&StreamKey::new(411, streams::LINEAR_SAMPLER, 0), 20);
        let mut smean = 0.0;
        for values in &spaths {
            let snap = SampledPath::new(values, 0.0, sgrid.spacing()).unwrap();
            smean += alpha_hat_spatial(&snap, &sigma, (0.0, 1.0), n).unwrap();
        }
        smean /= 20.0;
        assert!(
            (smean - alpha).abs() < 0.05 * alpha,
            "spatial mean alpha_hat {smean}"
        );
    }

    #[test]
    fn nonlinear_solver_paths_feed_the_temporal_estimator() {
        // alpha = 2 with smooth sigma: estimate from the quartic variation
        // of a solver trace, averaged over 20 short replications
        let alpha = 2.0;
        let nx = 256usize;
        let dx = 1.0 / nx as f64;
        let dt = dx * dx / 8.0;
        let steps_per_rec = 32usize;
        let t_end = 0.125;
        let sigma = SigmaSpec::Smooth { offset: 2.0, amplitude: 1.0 };
        let mut mean = 0.0;
        let reps = 20u64;
        for r in 0..reps {
            let cfg = SolverConfig {
                alpha,
                domain: (0.0, 1.0),
                nx,
                dt,
                t_end,
                scheme: Scheme::Explicit,
                bc: BoundaryCondition::Periodic,
                sigma,
                drift: DriftSpec::None,
                record: RecordSpec {
                    snapshot_times: vec![],
                    trace_positions: vec![0.5],
                    trace_every: steps_per_rec,
                },
                key: StreamKey::new(902, streams::SOLVER_NOISE, r),
            };
            let record = simulate(&cfg, &vec![0.0; nx]).unwrap();
            let trace = &record.traces[0];
            let spacing = steps_per_rec as f64 * dt;
            let path = SampledPath::new(&trace.values, 0.0, spacing).unwrap();
            // [t_end/2, t_end] partitioned at the trace resolution
            let n = ((t_end / 2.0) / spacing).round() as usize;
            mean +=
                alpha_hat_temporal(&path, &sigma, (t_end / 2.0, t_end), n).unwrap();
        }
        mean /= reps as f64;
        assert!(
            (mean - alpha).abs() < 0.20 * alpha,
            "nonlinear temporal mean alpha_hat {mean}"
        );
    }

    #[test]
    fn nonlinear_solver_snapshots_feed_the_spatial_estimator() {
        // alpha = 1/2, sigma = 1: spatial estimate from a snapshot's
        // quadratic variation, 20 replications
        let alpha = 0.5;
        let nx = 256usize;
        let dx = 1.0 / nx as f64;
        let dt = dx * dx / 2.0;
        let t_end = 0.0625;
        let sigma = SigmaSpec::Constant { level: 1.0 };
        let n = 32; // window 8 dx
        let mut mean = 0.0;
        let reps = 20u64;
        for r in 0..reps {
            let cfg = SolverConfig {
                alpha,
                domain: (0.0, 1.0),
                nx,
                dt,
                t_end,
                scheme: Scheme::Explicit,
                bc: BoundaryCondition::Periodic,
                sigma,
                drift: DriftSpec::None,
                record: RecordSpec {
                    snapshot_times: vec![t_end],
                    trace_positions: vec![],
                    trace_every: 1,
                },
                key: StreamKey::new(903, streams::SOLVER_NOISE, r),
            };
            let record = simulate(&cfg, &vec![0.0; nx]).unwrap();
            let snap = &record.snapshots[0];
            let path = SampledPath::new_periodic(&snap.state.values, 0.0, dx).unwrap();
            mean += alpha_hat_spatial(&path, &sigma, (0.0, 1.0), n).unwrap();
        }
        mean /= reps as f64;
        assert!(
            (mean - alpha).abs() < 0.20 * alpha,
            "nonlinear spatial mean alpha_hat {mean}"
        );
    }

    #[test]
    fn rate_study_errors_shrink_with_partition_count() {
        let design = RateStudyDesign {
            method: EstimatorMethod::Temporal,
            alpha: 1.0,
            sigma_level: 1.0,
            interval: (1.0, 2.0),
            fixed_coordinate: 0.0,
            partition_counts: vec![64, 256, 1024],
            replications: 30,
            seed: 2028,
        };
        let report = rate_study(&design).unwrap();
        assert_eq!(report.method, EstimatorMethod::Temporal);
        assert_eq!(report.n, 1024);
        assert_eq!(report.per_n.len(), 3);
        let errs: Vec<f64> = report.per_n.iter().map(|p| p.mean_clipped_error).collect();
        assert!(
            errs[0] > errs[1] && errs[1] > errs[2],
            "clipped errors not decreasing: {errs:?}"
        );
        assert!(errs.iter().all(|e| (0.0..=1.0).contains(e)));
        assert!(report.fitted_rate < 0.0, "fitted rate {}", report.fitted_rate);
        assert_eq!(report.reference_rate, -0.15);
        assert!((report.alpha_hat - 1.0).abs() < 0.15);
        assert_eq!(report.mean_abs_error, errs[2]);
    }

    #[test]
    fn rate_study_spatial_method_also_contracts() {
        let design = RateStudyDesign {
            method: EstimatorMethod::Spatial,
            alpha: 1.0,
            sigma_level: 1.0,
            interval: (0.0, 1.0),
            fixed_coordinate: 1.0,
            partition_counts: vec![64, 512],
            replications: 20,
            seed: 2029,
        };
        let report = rate_study(&design).unwrap();
        let errs: Vec<f64> = report.per_n.iter().map(|p| p.mean_clipped_error).collect();
        assert!(errs[0] > errs[1], "clipped errors not decreasing: {errs:?}");
    }

    #[test]
    fn rate_study_validates_its_design() {
        let mut design = RateStudyDesign {
            method: EstimatorMethod::Temporal,
            alpha: 1.0,
            sigma_level: 1.0,
            interval: (1.0, 2.0),
            fixed_coordinate: 0.0,
            partition_counts: vec![64, 256],
            replications: 0,
            seed: 1,
        };
        assert!(rate_study(&design).is_err());
        design.replications = 2;
        design.partition_counts = vec![];
        assert!(rate_study(&design).is_err());
        design.partition_counts = vec![256, 64];
        assert!(rate_study(&design).is_err());
        design.partition_counts = vec![96, 256];
        assert!(rate_study(&design).is_err());
    }
}

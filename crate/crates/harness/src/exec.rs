//! Experiment execution and artifact emission.
//!
//! Runners compute everything in memory first and hand back named artifact
//! files; nothing touches the filesystem until a run has fully succeeded,
//! so failures never leave partial outputs behind. Every artifact carries
//! the configuration hash, CSV floats use the shortest round-trip decimal
//! form, and the replication loop is split across `threads` workers in a
//! fixed round-robin so outputs are byte-identical for any thread count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use shelab_core::estimation::{
    alpha_hat_spatial, alpha_hat_temporal, rate_study, EstimatorMethod, RateStudyDesign,
    TEMPORAL_REFERENCE_RATE,
};
use shelab_core::kernels::{
    cov_equal_space, cov_equal_time, cov_oracle, CovarianceQuery, PhysicalParams,
};
use shelab_core::linear_exact::{GaussianFieldSampler, SpaceGrid, TimeGrid};
use shelab_core::numerics::NeumaierSum;
use shelab_core::rng::{streams, StreamKey};
use shelab_core::solver::{cfl_check, simulate, SigmaSpec};
use shelab_core::variations::{
    spatial_quadratic_report, temporal_quartic_report, SampledPath, VariationReport,
};
use shelab_core::{Error, Result};

use crate::config::{
    AxisChoice, EstimateSpec, Experiment, ExperimentConfig, LinearVariationSpec, MethodChoice,
    NonlinearVariationSpec, OracleCheckSpec, RateStudySpec,
};
use crate::{io_err, HarnessError, HarnessResult};

/// One output file, still in memory.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

impl Artifact {
    fn text(name: impl Into<String>, contents: String) -> Self {
        Artifact { name: name.into(), contents: contents.into_bytes() }
    }

    /// UTF-8 view of a text artifact.
    pub fn as_text(&self) -> std::borrow::Cow<'_, str> {
        String::from_utf8_lossy(&self.contents)
    }
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub files: Vec<Artifact>,
    /// One-line result statement for the terminal.
    pub headline: String,
}

/// Execute the experiment described by `cfg`. Pure with respect to the
/// filesystem; artifacts are returned, not written.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut out = match &cfg.experiment {
        Experiment::OracleCheck(spec) => run_oracle(cfg, spec)?,
        Experiment::LinearVariation(spec) => run_linear(cfg, spec)?,
        Experiment::NonlinearVariation(spec) => run_nonlinear(cfg, spec)?,
        Experiment::Estimate(spec) => run_estimate(cfg, spec)?,
        Experiment::RateStudy(spec) => run_rate(cfg, spec)?,
    };
    out.files.insert(0, Artifact::text("config.toml", cfg.to_toml()));
    Ok(out)
}

/// Write artifacts plus a manifest to `dir`, atomically (temp file +
/// rename per artifact; the manifest goes last, so its presence marks a
/// complete run). Returns the written paths.
pub fn write_artifacts(
    dir: &Path,
    cfg: &ExperimentConfig,
    output: &RunOutput,
) -> HarnessResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
    let mut written = Vec::new();
    for artifact in &output.files {
        written.push(write_atomic(dir, &artifact.name, &artifact.contents)?);
    }
    let mut manifest = String::new();
    let _ = writeln!(manifest, "# shelab manifest");
    let _ = writeln!(manifest, "config_hash={}", cfg.hash());
    let _ = writeln!(manifest, "kind={}", cfg.experiment.kind());
    let _ = writeln!(manifest, "seed={}", cfg.seed);
    let _ = writeln!(manifest, "replications={}", cfg.replications);
    let _ = writeln!(
        manifest,
        "rerun=shelab run --config {}/config.toml",
        dir.display()
    );
    for artifact in &output.files {
        let _ = writeln!(manifest, "output={} bytes={}", artifact.name, artifact.contents.len());
    }
    written.push(write_atomic(dir, "manifest.txt", manifest.as_bytes())?);
    Ok(written)
}

fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> HarnessResult<PathBuf> {
    let tmp = dir.join(format!(".{name}.tmp"));
    let path = dir.join(name);
    fs::write(&tmp, contents).map_err(io_err(format!("writing {}", tmp.display())))?;
    fs::rename(&tmp, &path).map_err(io_err(format!("renaming to {}", path.display())))?;
    Ok(path)
}

/// Run `f` over replicate indices `0..replications` on a fixed round-robin
/// worker pool, returning results in replicate order regardless of thread
/// count or scheduling.
fn run_replicates<T, F>(replications: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    if threads <= 1 || replications <= 1 {
        return (0..replications as u64).map(f).collect();
    }
    let workers = threads.min(replications);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                scope.spawn(move || {
                    let mut chunk = Vec::new();
                    let mut r = w as u64;
                    while (r as usize) < replications {
                        chunk.push((r, f(r)));
                        r += workers as u64;
                    }
                    chunk
                })
            })
            .collect();
        let mut keyed: Vec<(u64, Result<T>)> = Vec::with_capacity(replications);
        for handle in handles {
            keyed.extend(handle.join().expect("replication worker panicked"));
        }
        keyed.sort_by_key(|(r, _)| *r);
        keyed.into_iter().map(|(_, result)| result).collect()
    })
}

fn csv_preamble(cfg: &ExperimentConfig, header: &str) -> String {
    format!("# config={} seed={}\n{header}\n", cfg.hash(), cfg.seed)
}

fn summary_preamble(cfg: &ExperimentConfig) -> String {
    format!(
        "shelab summary\nkind={}\nconfig_hash={}\nseed={} replications={} threads={}\n\n",
        cfg.experiment.kind(),
        cfg.hash(),
        cfg.seed,
        cfg.replications,
        cfg.threads,
    )
}

fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mut sum = NeumaierSum::new();
    for &v in values {
        sum.add(v);
    }
    let mean = sum.value() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let mut sq = NeumaierSum::new();
    for &v in values {
        sq.add((v - mean) * (v - mean));
    }
    (mean, sq.value() / (n - 1.0))
}

// ---------------------------------------------------------------- oracle

fn run_oracle(cfg: &ExperimentConfig, spec: &OracleCheckSpec) -> Result<RunOutput> {
    let params = PhysicalParams::new(spec.alpha, spec.sigma)?;
    let k = spec.grid_points;
    let mut rows = Vec::with_capacity(2 * k * k);
    let mut max_abs = 0.0f64;
    let mut max_rel = 0.0f64;

    let mut push = |section: &str, s: f64, t: f64, x: f64, y: f64, closed: f64| -> Result<()> {
        let query = CovarianceQuery::new(s, t, x, y)?;
        let quad = cov_oracle(&query, &params)?;
        let abs = (quad - closed).abs();
        let rel = abs / closed.abs();
        max_abs = max_abs.max(abs);
        max_rel = max_rel.max(rel);
        rows.push(format!("{section},{s},{t},{x},{y},{closed},{quad},{abs},{rel}"));
        Ok(())
    };

    for i in 0..k {
        let t = spec.t_max * (i + 1) as f64 / k as f64;
        for j in 0..k {
            let d = spec.separation_max * j as f64 / (k - 1) as f64;
            let closed = cov_equal_time(t, 0.0, d, &params);
            push("equal-time", t, t, 0.0, d, closed)?;
        }
    }
    for i in 0..k {
        let s = spec.t_max * (i + 1) as f64 / k as f64;
        for j in 0..k {
            let t = s + spec.t_max * j as f64 / (k - 1) as f64;
            let closed = cov_equal_space(s, t, &params);
            push("equal-space", s, t, 0.0, 0.0, closed)?;
        }
    }

    let mut csv = csv_preamble(cfg, "section,s,t,x,y,closed_form,quadrature,abs_diff,rel_diff");
    for row in &rows {
        csv.push_str(row);
        csv.push('\n');
    }

    let mut summary = summary_preamble(cfg);
    let _ = writeln!(
        summary,
        "covariance oracle vs closed forms (alpha={}, sigma={})",
        spec.alpha, spec.sigma
    );
    let _ = writeln!(
        summary,
        "comparisons: {} ({k}x{k} per section, equal-time and equal-space)",
        rows.len()
    );
    let _ = writeln!(summary, "max_abs_diff={max_abs:e}");
    let _ = writeln!(summary, "max_rel_diff={max_rel:e}");
    let headline = format!(
        "oracle check: {} comparisons, max relative difference {max_rel:.3e}",
        rows.len()
    );
    Ok(RunOutput {
        files: vec![
            Artifact::text("oracle.csv", csv),
            Artifact::text("summary.txt", summary),
        ],
        headline,
    })
}

// ---------------------------------------------------------- linear kinds

fn variation_csv(cfg: &ExperimentConfig, rows: &[(u64, &VariationReport)]) -> String {
    let mut csv = csv_preamble(
        cfg,
        "replicate,axis,p,n,delta,empirical,target,rel_error,seed",
    );
    for (replicate, report) in rows {
        let axis = match report.axis {
            shelab_core::variations::Axis::Space => "space",
            shelab_core::variations::Axis::Time => "time",
        };
        let _ = writeln!(
            csv,
            "{replicate},{axis},{},{},{},{},{},{},{}",
            report.p,
            report.n,
            report.window,
            report.empirical,
            report.target,
            report.relative_error,
            cfg.seed,
        );
    }
    csv
}

fn run_linear(cfg: &ExperimentConfig, spec: &LinearVariationSpec) -> Result<RunOutput> {
    let finest = *spec.partition_counts.last().expect("validated non-empty");
    let [lo, hi] = spec.interval;
    let params = PhysicalParams::new(spec.alpha, spec.sigma)?;
    let sigma = SigmaSpec::Constant { level: spec.sigma };
    let sampler = match spec.axis {
        AxisChoice::Space => {
            let grid = SpaceGrid::new(lo, hi, finest)?;
            GaussianFieldSampler::spatial(spec.fixed_coordinate, &grid, &params)?
        }
        AxisChoice::Time => {
            let grid = TimeGrid::new(lo, hi, finest)?;
            GaussianFieldSampler::temporal(spec.fixed_coordinate, &grid, &params)?
        }
    };
    let spacing = (hi - lo) / finest as f64;

    let per_replicate = run_replicates(cfg.replications, cfg.threads, |r| {
        let key = StreamKey::new(cfg.seed, streams::LINEAR_SAMPLER, r);
        let values = sampler.sample(&key);
        let path = SampledPath::new(&values, lo, spacing)?;
        spec.partition_counts
            .iter()
            .map(|&n| match spec.axis {
                AxisChoice::Space => spatial_quadratic_report(
                    &path,
                    spec.fixed_coordinate,
                    &sigma,
                    spec.alpha,
                    (hi - lo) / n as f64,
                    (lo, hi),
                ),
                AxisChoice::Time => temporal_quartic_report(
                    &path,
                    spec.fixed_coordinate,
                    &sigma,
                    spec.alpha,
                    (lo, hi),
                    n,
                ),
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rows = Vec::new();
    for (r, reports) in per_replicate.iter().enumerate() {
        for report in reports {
            rows.push((r as u64, report));
        }
    }
    let csv = variation_csv(cfg, &rows);

    // per-count aggregates; the target is the same constant every replicate
    let mut scan = csv_preamble(cfg, "n,replications,mean,variance,standard_error,target");
    let mut summary = summary_preamble(cfg);
    let axis_name = match spec.axis {
        AxisChoice::Space => "space (quadratic variation)",
        AxisChoice::Time => "time (quartic variation)",
    };
    let _ = writeln!(
        summary,
        "exact linear samples, axis={axis_name}, alpha={}, sigma={}",
        spec.alpha, spec.sigma
    );
    let mut headline = String::new();
    let mut variances = Vec::new();
    for (slot, &n) in spec.partition_counts.iter().enumerate() {
        let empiricals: Vec<f64> =
            per_replicate.iter().map(|reports| reports[slot].empirical).collect();
        let target = per_replicate[0][slot].target;
        let (mean, variance) = mean_and_variance(&empiricals);
        let se = (variance / empiricals.len() as f64).sqrt();
        let _ = writeln!(scan, "{n},{},{mean},{variance},{se},{target}", empiricals.len());
        let deviation = if se > 0.0 { (mean - target).abs() / se } else { 0.0 };
        let _ = writeln!(
            summary,
            "n={n}: mean={mean:.6} target={target:.6} (|mean-target| = {deviation:.2} se, \
             se={se:.2e}, variance={variance:.3e})"
        );
        variances.push(variance);
        if n == finest {
            headline = format!(
                "linear variation: n={n} mean {mean:.6} vs target {target:.6} \
                 ({deviation:.2} se over {} replications)",
                empiricals.len()
            );
        }
    }
    let decreasing = variances.windows(2).all(|w| w[1] < w[0]);
    let _ = writeln!(
        summary,
        "sample variance strictly decreasing across partition counts: {}",
        if decreasing { "yes" } else { "no" }
    );

    Ok(RunOutput {
        files: vec![
            Artifact::text("variation.csv", csv),
            Artifact::text("scan.csv", scan),
            Artifact::text("summary.txt", summary),
        ],
        headline,
    })
}

// ------------------------------------------------------- nonlinear kinds

fn run_nonlinear(cfg: &ExperimentConfig, spec: &NonlinearVariationSpec) -> Result<RunOutput> {
    let plan = spec.validate(cfg.seed)?;
    let [lo, hi] = spec.interval;
    let sigma = spec.sigma.to_spec();
    let x0 = spec.initial_state();

    // raw exports come from replicate 0: one representative realization,
    // reproducible from (config, seed)
    struct Raw {
        path_rows: String,
        final_time: f64,
        final_state: Vec<f64>,
    }

    let results = run_replicates(cfg.replications, cfg.threads, |r| {
        let solver_cfg = spec.solver_config(cfg.seed, r);
        let record = simulate(&solver_cfg, &x0)?;
        let report = match spec.axis {
            AxisChoice::Space => {
                let want = spec.snapshot_time.expect("validated");
                let snap = record
                    .snapshots
                    .iter()
                    .min_by(|a, b| {
                        let da = (a.requested_time - want).abs();
                        let db = (b.requested_time - want).abs();
                        da.partial_cmp(&db).expect("finite times")
                    })
                    .expect("simulate always records at least the final state");
                let values = &snap.state.values;
                let path = if matches!(solver_cfg.bc, shelab_core::solver::BoundaryCondition::Periodic)
                {
                    SampledPath::new_periodic(values, solver_cfg.domain.0, solver_cfg.dx())?
                } else {
                    SampledPath::new(values, solver_cfg.domain.0, solver_cfg.dx())?
                };
                spatial_quadratic_report(
                    &path,
                    snap.state.time,
                    &sigma,
                    spec.alpha,
                    plan.window,
                    (lo, hi),
                )?
            }
            AxisChoice::Time => {
                let trace = &record.traces[0];
                let path = SampledPath::new(&trace.values, 0.0, plan.observation_spacing)?;
                temporal_quartic_report(
                    &path,
                    trace.position,
                    &sigma,
                    spec.alpha,
                    (lo, hi),
                    plan.partitions,
                )?
            }
        };
        let raw = (r == 0).then(|| {
            let mut rows = String::from("index,coordinate,value\n");
            match spec.axis {
                AxisChoice::Space => {
                    let snap = &record.snapshots[0].state;
                    for (i, v) in snap.values.iter().enumerate() {
                        let _ = writeln!(rows, "{i},{},{v}", solver_cfg.node_position(i));
                    }
                }
                AxisChoice::Time => {
                    let trace = &record.traces[0];
                    for (j, (t, v)) in trace.times.iter().zip(&trace.values).enumerate() {
                        let _ = writeln!(rows, "{j},{t},{v}");
                    }
                }
            }
            let last = record.snapshots.last().expect("final state always recorded");
            Raw {
                path_rows: rows,
                final_time: last.state.time,
                final_state: last.state.values.clone(),
            }
        });
        Ok((report, record.clamp_count, record.total_updates, raw))
    })?;

    let rows: Vec<(u64, &VariationReport)> = results
        .iter()
        .enumerate()
        .map(|(r, (report, _, _, _))| (r as u64, report))
        .collect();
    let csv = variation_csv(cfg, &rows);

    let rel_errors: Vec<f64> =
        results.iter().map(|(rep, _, _, _)| rep.relative_error).collect();
    let (mean_rel, _) = mean_and_variance(&rel_errors);
    let max_rel = rel_errors.iter().cloned().fold(0.0f64, f64::max);
    let clamps: u64 = results.iter().map(|(_, c, _, _)| *c).sum();
    let updates: u64 = results.iter().map(|(_, _, u, _)| *u).sum();

    let mut summary = summary_preamble(cfg);
    let axis_name = match spec.axis {
        AxisChoice::Space => "space (quadratic variation of a snapshot)",
        AxisChoice::Time => "time (quartic variation of a trace)",
    };
    let _ = writeln!(summary, "nonlinear solver paths, axis={axis_name}");
    let _ = writeln!(
        summary,
        "solver: alpha={} nx={} dx={} dt={} t_end={} scheme={:?} bc={:?}",
        spec.alpha,
        spec.nx,
        plan.solver.dx(),
        spec.dt,
        spec.t_end,
        plan.solver.scheme,
        plan.solver.bc,
    );
    let _ = writeln!(
        summary,
        "variation: window={} partitions={} over [{lo}, {hi}]",
        plan.window, plan.partitions
    );
    let _ = writeln!(summary, "site updates: {updates} total, clamped {clamps}");
    let _ = writeln!(summary, "mean_rel_error={mean_rel}");
    let _ = writeln!(summary, "max_rel_error={max_rel}");
    for tol in [0.05, 0.10, 0.15, 0.20] {
        let within = rel_errors.iter().filter(|e| **e <= tol).count();
        let _ = writeln!(
            summary,
            "within {:>2.0}%: {within} of {} replications",
            tol * 100.0,
            rel_errors.len()
        );
    }
    let headline = format!(
        "nonlinear variation: mean relative error {:.2}% (max {:.2}%) over {} replications",
        100.0 * mean_rel,
        100.0 * max_rel,
        rel_errors.len()
    );

    let raw = results[0].3.as_ref().expect("replicate 0 captures raw output");
    let path_name = match spec.axis {
        AxisChoice::Space => "snapshot.csv",
        AxisChoice::Time => "trace.csv",
    };
    let hash = cfg.hash();
    let path_csv = format!("# config={hash} seed={} replicate=0\n{}", cfg.seed, raw.path_rows);
    let ckpt = crate::checkpoint::encode(&hash, raw.final_time, &raw.final_state);
    let _ = writeln!(
        summary,
        "raw exports from replicate 0: {path_name} ({} rows), state.ckpt (t={}, {} values)",
        raw.path_rows.lines().count() - 1,
        raw.final_time,
        raw.final_state.len()
    );

    Ok(RunOutput {
        files: vec![
            Artifact::text("variation.csv", csv),
            Artifact::text(path_name, path_csv),
            Artifact { name: "state.ckpt".into(), contents: ckpt },
            Artifact::text("summary.txt", summary),
        ],
        headline,
    })
}

// ---------------------------------------------------------------- estimate

fn run_estimate(cfg: &ExperimentConfig, spec: &EstimateSpec) -> Result<RunOutput> {
    let [lo, hi] = spec.interval;
    let n = spec.partitions;
    let params = PhysicalParams::new(spec.alpha, spec.sigma)?;
    let sigma = SigmaSpec::Constant { level: spec.sigma };
    let sampler = match spec.method {
        MethodChoice::Spatial => {
            let grid = SpaceGrid::new(lo, hi, n)?;
            GaussianFieldSampler::spatial(spec.fixed_coordinate, &grid, &params)?
        }
        MethodChoice::Temporal => {
            let grid = TimeGrid::new(lo, hi, n)?;
            GaussianFieldSampler::temporal(spec.fixed_coordinate, &grid, &params)?
        }
    };
    let spacing = (hi - lo) / n as f64;

    let estimates = run_replicates(cfg.replications, cfg.threads, |r| {
        let key = StreamKey::new(cfg.seed, streams::LINEAR_SAMPLER, r);
        let values = sampler.sample(&key);
        let path = SampledPath::new(&values, lo, spacing)?;
        match spec.method {
            MethodChoice::Spatial => alpha_hat_spatial(&path, &sigma, (lo, hi), n),
            MethodChoice::Temporal => alpha_hat_temporal(&path, &sigma, (lo, hi), n),
        }
    })?;

    let method = match spec.method {
        MethodChoice::Spatial => "spatial",
        MethodChoice::Temporal => "temporal",
    };
    let mut csv = csv_preamble(
        cfg,
        "replicate,method,n,alpha_true,alpha_hat,abs_error,clipped_error",
    );
    for (r, alpha_hat) in estimates.iter().enumerate() {
        let abs = (alpha_hat - spec.alpha).abs();
        let _ = writeln!(
            csv,
            "{r},{method},{n},{},{alpha_hat},{abs},{}",
            spec.alpha,
            abs.min(1.0)
        );
    }

    let (mean, variance) = mean_and_variance(&estimates);
    let rel_dev = (mean - spec.alpha).abs() / spec.alpha;
    let mut summary = summary_preamble(cfg);
    let _ = writeln!(
        summary,
        "{method} estimator on exact linear samples (alpha={}, sigma={}, n={n})",
        spec.alpha, spec.sigma
    );
    let _ = writeln!(summary, "mean_alpha_hat={mean}");
    let _ = writeln!(summary, "sd_alpha_hat={}", variance.sqrt());
    let _ = writeln!(summary, "relative_deviation={rel_dev}");
    let headline = format!(
        "{method} estimate: mean alpha_hat {mean:.4} vs true {} \
         ({:.2}% off, {} replications)",
        spec.alpha,
        100.0 * rel_dev,
        estimates.len()
    );

    Ok(RunOutput {
        files: vec![
            Artifact::text("estimates.csv", csv),
            Artifact::text("summary.txt", summary),
        ],
        headline,
    })
}

// -------------------------------------------------------------- rate study

fn run_rate(cfg: &ExperimentConfig, spec: &RateStudySpec) -> Result<RunOutput> {
    let design = RateStudyDesign {
        method: match spec.method {
            MethodChoice::Spatial => EstimatorMethod::Spatial,
            MethodChoice::Temporal => EstimatorMethod::Temporal,
        },
        alpha: spec.alpha,
        sigma_level: spec.sigma,
        interval: (spec.interval[0], spec.interval[1]),
        fixed_coordinate: spec.fixed_coordinate,
        partition_counts: spec.partition_counts.clone(),
        replications: cfg.replications,
        seed: cfg.seed,
    };
    let report = rate_study(&design)?;

    let mut csv = csv_preamble(cfg, "n,mean_alpha_hat,mean_clipped_error");
    for point in &report.per_n {
        let _ = writeln!(
            csv,
            "{},{},{}",
            point.n, point.mean_alpha_hat, point.mean_clipped_error
        );
    }

    let decreasing = report
        .per_n
        .windows(2)
        .all(|w| w[1].mean_clipped_error < w[0].mean_clipped_error);
    let mut summary = summary_preamble(cfg);
    let _ = writeln!(
        summary,
        "{} estimator rate study (alpha={}, sigma={})",
        report.method.name(),
        spec.alpha,
        spec.sigma
    );
    for point in &report.per_n {
        let _ = writeln!(
            summary,
            "n={}: mean_alpha_hat={:.6} mean_clipped_error={:.6}",
            point.n, point.mean_alpha_hat, point.mean_clipped_error
        );
    }
    let _ = writeln!(
        summary,
        "mean clipped error strictly decreasing: {}",
        if decreasing { "yes" } else { "no" }
    );
    let _ = writeln!(
        summary,
        "fitted_rate={:.4} (reference {} for comparison only; the reference \
         applies to a jointly refined observation scheme)",
        report.fitted_rate, TEMPORAL_REFERENCE_RATE
    );
    let headline = format!(
        "rate study: clipped error {} across n={:?}, fitted slope {:.3} (reference {})",
        if decreasing { "decreasing" } else { "NOT decreasing" },
        spec.partition_counts,
        report.fitted_rate,
        TEMPORAL_REFERENCE_RATE
    );

    Ok(RunOutput {
        files: vec![
            Artifact::text("rate.csv", csv),
            Artifact::text("summary.txt", summary),
        ],
        headline,
    })
}

// ---------------------------------------------------------------- describe

/// Human-readable execution plan. Always returns the plan text for a
/// parseable config; the accompanying error, if any, is the validation
/// failure the run would hit.
pub fn describe(cfg: &ExperimentConfig) -> (String, Option<Error>) {
    let mut plan = String::new();
    let _ = writeln!(plan, "experiment: {}", cfg.experiment.kind());
    let _ = writeln!(plan, "config hash: {}", cfg.hash());
    let _ = writeln!(
        plan,
        "seed: {}  replications: {}  threads: {}",
        cfg.seed, cfg.replications, cfg.threads
    );
    match &cfg.experiment {
        Experiment::OracleCheck(s) => {
            let _ = writeln!(plan, "parameters: alpha={} sigma={}", s.alpha, s.sigma);
            let _ = writeln!(
                plan,
                "grid: {0}x{0} per section (equal-time, equal-space), {1} comparisons total",
                s.grid_points,
                2 * s.grid_points * s.grid_points
            );
            let _ = writeln!(
                plan,
                "times in (0, {}], separations in [0, {}]",
                s.t_max, s.separation_max
            );
            let _ = writeln!(plan, "replications: not used by this kind");
        }
        Experiment::LinearVariation(s) => {
            let finest = *s.partition_counts.last().unwrap_or(&0);
            let dim = finest + 1;
            let _ = writeln!(
                plan,
                "axis: {}  alpha={} sigma={} fixed coordinate {}",
                match s.axis {
                    AxisChoice::Space => "space",
                    AxisChoice::Time => "time",
                },
                s.alpha,
                s.sigma,
                s.fixed_coordinate
            );
            let _ = writeln!(
                plan,
                "interval [{}, {}], partition counts {:?} (finest grid {} nodes)",
                s.interval[0], s.interval[1], s.partition_counts, dim
            );
            let _ = writeln!(
                plan,
                "covariance factor: {dim}x{dim}, {:.1} MiB \
                 (construction peaks at twice that)",
                (dim * dim * 8) as f64 / (1024.0 * 1024.0)
            );
            let _ = writeln!(
                plan,
                "estimated work: {:.2e} flops factorization + {:.2e} flops sampling",
                (dim as f64).powi(3) / 3.0,
                cfg.replications as f64 * (dim as f64).powi(2)
            );
        }
        Experiment::NonlinearVariation(s) => {
            describe_nonlinear(&mut plan, cfg, s);
        }
        Experiment::Estimate(s) => {
            let dim = s.partitions + 1;
            let _ = writeln!(
                plan,
                "method: {}  alpha={} sigma={} fixed coordinate {}",
                match s.method {
                    MethodChoice::Spatial => "spatial",
                    MethodChoice::Temporal => "temporal",
                },
                s.alpha,
                s.sigma,
                s.fixed_coordinate
            );
            let _ = writeln!(
                plan,
                "interval [{}, {}], n={} ({} nodes)",
                s.interval[0], s.interval[1], s.partitions, dim
            );
            let _ = writeln!(
                plan,
                "covariance factor: {dim}x{dim}, {:.1} MiB",
                (dim * dim * 8) as f64 / (1024.0 * 1024.0)
            );
        }
        Experiment::RateStudy(s) => {
            let finest = *s.partition_counts.last().unwrap_or(&0);
            let dim = finest + 1;
            let _ = writeln!(
                plan,
                "method: {}  alpha={} sigma={}",
                match s.method {
                    MethodChoice::Spatial => "spatial",
                    MethodChoice::Temporal => "temporal",
                },
                s.alpha,
                s.sigma
            );
            let _ = writeln!(
                plan,
                "interval [{}, {}], partition counts {:?}",
                s.interval[0], s.interval[1], s.partition_counts
            );
            let _ = writeln!(
                plan,
                "covariance factor: {dim}x{dim}, {:.1} MiB; coarser partitions \
                 subsample the same realizations",
                (dim * dim * 8) as f64 / (1024.0 * 1024.0)
            );
            let _ = writeln!(
                plan,
                "reference rate: {TEMPORAL_REFERENCE_RATE} (informational)"
            );
            let _ = writeln!(plan, "threads: replication loop runs in-core; flag unused");
        }
    }
    let validation = cfg.validate().err();
    if let Some(e) = &validation {
        let _ = writeln!(plan, "validation: FAILED - {e}");
    } else {
        let _ = writeln!(plan, "validation: ok");
    }
    (plan, validation)
}

fn describe_nonlinear(plan: &mut String, cfg: &ExperimentConfig, s: &NonlinearVariationSpec) {
    let solver = s.solver_config(cfg.seed, 0);
    let dx = solver.dx();
    let steps = solver.n_steps();
    let state_len = solver.bc.state_len(solver.nx);
    let _ = writeln!(
        plan,
        "solver: alpha={} domain=[{}, {}] nx={} dx={dx} dt={} steps={steps}",
        s.alpha, s.domain[0], s.domain[1], s.nx, s.dt
    );
    let _ = writeln!(
        plan,
        "scheme: {:?}, bc: {:?}, sigma: {:?}, drift: {:?}",
        solver.scheme, solver.bc, solver.sigma, solver.drift
    );
    match cfl_check(&solver) {
        Ok(report) => {
            let _ = writeln!(
                plan,
                "stability: ratio {:.4} (largest stable dt {:.4e}){}",
                report.ratio,
                report.max_dt,
                report
                    .advisory
                    .as_deref()
                    .map(|a| format!("; {a}"))
                    .unwrap_or_default()
            );
        }
        Err(e) => {
            let _ = writeln!(plan, "stability: {e}");
        }
    }
    let per_rep = state_len as u64 * steps;
    let _ = writeln!(
        plan,
        "predicted site updates: {:.3e} per replication, {:.3e} total",
        per_rep as f64,
        per_rep as f64 * cfg.replications as f64
    );
    // recording plan, mirroring the solver's snapping rule
    match s.axis {
        AxisChoice::Space => {
            if let Some(t) = s.snapshot_time {
                let step = (t / s.dt).round().min(steps as f64).max(0.0) as u64;
                let dist = (step as f64 * s.dt - t).abs();
                let _ = writeln!(
                    plan,
                    "snapshot: t={t} -> step {step} (snap distance {dist:e})"
                );
            }
            if let Some(w) = s.window {
                let _ = writeln!(
                    plan,
                    "variation: window {w} = {:.0} grid steps, {} increments over \
                     [{}, {}]",
                    w / dx,
                    ((s.interval[1] - s.interval[0]) / w).round(),
                    s.interval[0],
                    s.interval[1]
                );
            }
        }
        AxisChoice::Time => {
            if let Some(x) = s.trace_position {
                let mut node = ((x - s.domain[0]) / dx).round() as usize;
                if matches!(s.bc, crate::config::BcChoice::Periodic) {
                    node %= s.nx;
                } else {
                    node = node.min(state_len - 1);
                }
                let position = s.domain[0] + node as f64 * dx;
                let _ = writeln!(
                    plan,
                    "trace: x={x} -> node {node} at {position} \
                     (snap distance {:e})",
                    (position - x).abs()
                );
            }
            let spacing = s.trace_every.max(1) as f64 * s.dt;
            let samples = steps / s.trace_every.max(1) as u64 + 1;
            let _ = writeln!(
                plan,
                "trace resolution: every {} steps = {spacing:e} time units, \
                 {samples} samples",
                s.trace_every.max(1)
            );
            if let Some(n) = s.partitions {
                let _ = writeln!(
                    plan,
                    "variation: {n} partitions of [{}, {}], step {:e} = {:.0} trace samples",
                    s.interval[0],
                    s.interval[1],
                    (s.interval[1] - s.interval[0]) / n as f64,
                    (s.interval[1] - s.interval[0]) / n as f64 / spacing
                );
            }
        }
    }
    let track_bytes = match s.axis {
        AxisChoice::Space => state_len * 8 * 2,
        AxisChoice::Time => ((steps / s.trace_every.max(1) as u64 + 1) * 8) as usize,
    };
    let _ = writeln!(
        plan,
        "memory: {:.1} KiB state buffers + {:.1} KiB recording per replication",
        (4 * state_len * 8) as f64 / 1024.0,
        track_bytes as f64 / 1024.0
    );
}

/// Run end to end: execute and write artifacts into `out_dir`.
pub fn run_to_directory(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> HarnessResult<(RunOutput, Vec<PathBuf>)> {
    let output = run(cfg).map_err(HarnessError::Core)?;
    let written = write_artifacts(out_dir, cfg, &output)?;
    Ok((output, written))
}

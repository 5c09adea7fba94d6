//! Finite-difference integration of the nonlinear equation
//!
//! ```text
//!     dX = alpha * Laplacian(X) dt + b(X) dt + sigma(X) dW
//! ```
//!
//! on a bounded interval with periodic, Dirichlet, or Neumann boundaries.
//!
//! Space is discretized on `nx` cells of width `dx`; the driving noise is
//! the cell average of space-time white noise over a `dx x dt` cell, which
//! has variance `1/(dx dt)`, so each site receives an independent standard
//! normal scaled by `sqrt(dt/dx)` per step. Two time steppers share that
//! noise convention:
//!
//! * explicit Euler, stable for `2 alpha dt / dx^2 <= 1` (checked);
//! * semi-implicit Euler, with the Laplacian solved implicitly through a
//!   (cyclic) tridiagonal system and the noise and drift kept explicit;
//!   unconditionally stable in the linear part.
//!
//! Determinism contract: a simulation is a pure function of
//! `(SolverConfig, initial field)`; all noise comes from the sequential
//! stream addressed by `SolverConfig::key`, drawn site-major within each
//! step, so records are bit-identical across runs and machines regardless
//! of how replications are scheduled.
//!
//! The recorded output ([`SpaceTimeRecord`]) carries spatial snapshots at
//! requested times (snapped to steps), temporal traces at requested
//! positions (snapped to nodes) sampled every `trace_every` steps, and a
//! count of the clamp events applied when the `Power` noise coefficient
//! requires the state to stay nonnegative.

use crate::error::{Error, Result};
use crate::numerics::{solve_cyclic_tridiagonal, solve_tridiagonal};
use crate::rng::{CounterRng, StreamKey};
use rand_distr::{Distribution, StandardNormal};

/// Noise coefficient `sigma(x)` menu.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaSpec {
    /// `sigma(x) = level`, `level >= 0`.
    Constant { level: f64 },
    /// `sigma(x) = offset + slope * x`.
    Affine { offset: f64, slope: f64 },
    /// `sigma(x) = offset + amplitude * sin(x)`, bounded and smooth.
    Smooth { offset: f64, amplitude: f64 },
    /// `sigma(x) = max(x, 0)^exponent`, `exponent` in `(0, 1)`.
    ///
    /// Not Lipschitz at zero; the integrator keeps the state nonnegative by
    /// clamping and counts every clamp event.
    Power { exponent: f64 },
}

impl SigmaSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SigmaSpec::Constant { level } => {
                if !(level.is_finite() && level >= 0.0) {
                    return Err(Error::invalid(
                        "sigma",
                        format!("constant level must be nonnegative, got {level}"),
                    ));
                }
            }
            SigmaSpec::Affine { offset, slope } => {
                if !(offset.is_finite() && slope.is_finite()) {
                    return Err(Error::invalid("sigma", "affine coefficients must be finite"));
                }
            }
            SigmaSpec::Smooth { offset, amplitude } => {
                if !(offset.is_finite() && amplitude.is_finite()) {
                    return Err(Error::invalid("sigma", "smooth coefficients must be finite"));
                }
            }
            SigmaSpec::Power { exponent } => {
                if !(exponent > 0.0 && exponent < 1.0) {
                    return Err(Error::invalid(
                        "sigma",
                        format!("power exponent must lie in (0, 1), got {exponent}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `sigma(x)`.
    #[inline(always)]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            SigmaSpec::Constant { level } => level,
            SigmaSpec::Affine { offset, slope } => offset + slope * x,
            SigmaSpec::Smooth { offset, amplitude } => offset + amplitude * x.sin(),
            SigmaSpec::Power { exponent } => {
                if x > 0.0 {
                    x.powf(exponent)
                } else {
                    0.0
                }
            }
        }
    }

    /// Global Lipschitz constant, `None` for the non-Lipschitz `Power`.
    pub fn lipschitz_constant(&self) -> Option<f64> {
        match *self {
            SigmaSpec::Constant { .. } => Some(0.0),
            SigmaSpec::Affine { slope, .. } => Some(slope.abs()),
            SigmaSpec::Smooth { amplitude, .. } => Some(amplitude.abs()),
            SigmaSpec::Power { .. } => None,
        }
    }

    /// `K` with `|sigma(x)| <= K (1 + |x|)` for all `x`.
    pub fn linear_growth_bound(&self) -> f64 {
        match *self {
            SigmaSpec::Constant { level } => level,
            SigmaSpec::Affine { offset, slope } => offset.abs().max(slope.abs()),
            SigmaSpec::Smooth { offset, amplitude } => offset.abs() + amplitude.abs(),
            // max(x,0)^e <= 1 + |x| for exponents in (0,1)
            SigmaSpec::Power { .. } => 1.0,
        }
    }

    /// Whether the integrator must keep the state nonnegative.
    pub fn requires_nonnegative_state(&self) -> bool {
        matches!(self, SigmaSpec::Power { .. })
    }
}

/// Drift `b(x)` menu.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftSpec {
    None,
    /// `b(x) = slope * x`, Lipschitz with constant `|slope|`.
    Linear { slope: f64 },
}

impl DriftSpec {
    pub fn validate(&self) -> Result<()> {
        if let DriftSpec::Linear { slope } = self {
            if !slope.is_finite() {
                return Err(Error::invalid("drift", "slope must be finite"));
            }
        }
        Ok(())
    }

    #[inline(always)]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            DriftSpec::None => 0.0,
            DriftSpec::Linear { slope } => slope * x,
        }
    }

    pub fn lipschitz_constant(&self) -> f64 {
        match *self {
            DriftSpec::None => 0.0,
            DriftSpec::Linear { slope } => slope.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    /// `X(a) = X(b)` identified; the state holds the `nx` nodes
    /// `a, a + dx, ..., b - dx`.
    Periodic,
    /// Both endpoints pinned at `value`; the state holds all `nx + 1` nodes.
    Dirichlet { value: f64 },
    /// Zero-flux ends via ghost reflection; the state holds all `nx + 1`
    /// nodes.
    Neumann,
}

impl BoundaryCondition {
    /// Number of state values for `nx` cells.
    pub fn state_len(&self, nx: usize) -> usize {
        match self {
            BoundaryCondition::Periodic => nx,
            _ => nx + 1,
        }
    }

    /// Number of independent noise values per step: every node that is
    /// actually updated receives noise (Dirichlet endpoints are pinned).
    pub fn noise_len(&self, nx: usize) -> usize {
        match self {
            BoundaryCondition::Periodic => nx,
            BoundaryCondition::Dirichlet { .. } => nx - 1,
            BoundaryCondition::Neumann => nx + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Explicit,
    SemiImplicit,
}

/// What to record along a simulation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecordSpec {
    /// Times at which to copy the whole field (snapped to the nearest
    /// step). The final state is always recorded even if not requested.
    pub snapshot_times: Vec<f64>,
    /// Locations whose value is recorded over time (snapped to the nearest
    /// node).
    pub trace_positions: Vec<f64>,
    /// Record traces every this many steps (all multiples of it, starting
    /// at step 0). Must be at least 1.
    pub trace_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Diffusion coefficient, `>= 0` (zero degenerates to independent site
    /// dynamics and is allowed for noise-scaling diagnostics).
    pub alpha: f64,
    /// Interval `[a, b]`.
    pub domain: (f64, f64),
    /// Number of grid cells; `dx = (b - a)/nx`.
    pub nx: usize,
    pub dt: f64,
    /// Horizon; the simulation runs `round(t_end/dt)` steps.
    pub t_end: f64,
    pub scheme: Scheme,
    pub bc: BoundaryCondition,
    pub sigma: SigmaSpec,
    pub drift: DriftSpec,
    pub record: RecordSpec,
    /// Noise stream address; replications use distinct replicate indices.
    pub key: StreamKey,
}

impl SolverConfig {
    pub fn dx(&self) -> f64 {
        (self.domain.1 - self.domain.0) / self.nx as f64
    }

    /// Diffusion number `alpha dt / dx^2`.
    pub fn mu(&self) -> f64 {
        self.alpha * self.dt / (self.dx() * self.dx())
    }

    pub fn n_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    /// Position of state index `i`.
    pub fn node_position(&self, i: usize) -> f64 {
        self.domain.0 + i as f64 * self.dx()
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.domain;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::invalid("domain", format!("need a < b, got [{a}, {b}]")));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::invalid("alpha", "must be finite and nonnegative"));
        }
        if self.nx < 3 {
            return Err(Error::invalid("nx", "need at least 3 cells"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::invalid("t_end", "must be nonnegative"));
        }
        self.sigma.validate()?;
        self.drift.validate()?;
        if self.record.trace_every == 0 {
            return Err(Error::invalid("trace_every", "must be at least 1"));
        }
        let t_final = self.n_steps() as f64 * self.dt;
        for &t in &self.record.snapshot_times {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::invalid("snapshot time", "must be finite and nonnegative"));
            }
            if t > t_final + 0.5 * self.dt {
                return Err(Error::invalid(
                    "snapshot time",
                    format!("requested t = {t} lies beyond the horizon {t_final}"),
                ));
            }
        }
        for &x in &self.record.trace_positions {
            if !(x.is_finite() && x >= a && x <= b) {
                return Err(Error::invalid(
                    "trace position",
                    format!("requested x = {x} lies outside [{a}, {b}]"),
                ));
            }
        }
        if self.scheme == Scheme::Explicit {
            cfl_check(self)?;
        }
        Ok(())
    }
}

/// Stability report for a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CflReport {
    /// `2 alpha dt / dx^2`; the explicit scheme requires `<= 1`.
    pub ratio: f64,
    /// Largest admissible `dt` for the explicit scheme.
    pub max_dt: f64,
    /// Accuracy note for stable-but-coarse semi-implicit configurations.
    pub advisory: Option<String>,
}

/// Check time-step stability.
///
/// Explicit scheme: passes iff `2 alpha dt / dx^2 <= 1`, otherwise returns
/// the violation with the maximal admissible `dt`. Semi-implicit: always
/// passes; an advisory is attached when `dt > dx`, where the splitting
/// error typically dominates.
pub fn cfl_check(cfg: &SolverConfig) -> Result<CflReport> {
    let dx = cfg.dx();
    let ratio = 2.0 * cfg.alpha * cfg.dt / (dx * dx);
    let max_dt = if cfg.alpha > 0.0 {
        dx * dx / (2.0 * cfg.alpha)
    } else {
        f64::INFINITY
    };
    match cfg.scheme {
        Scheme::Explicit => {
            if ratio > 1.0 {
                Err(Error::CflViolation { ratio, max_dt })
            } else {
                Ok(CflReport { ratio, max_dt, advisory: None })
            }
        }
        Scheme::SemiImplicit => {
            let advisory = (cfg.dt > dx).then(|| {
                format!(
                    "dt = {} exceeds dx = {dx}; the implicit step is stable but its \
                     splitting error grows with dt",
                    cfg.dt
                )
            });
            Ok(CflReport { ratio, max_dt, advisory })
        }
    }
}

/// The evolving field: node values at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub time: f64,
    pub values: Vec<f64>,
}

/// One recorded snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// Requested time (equals `time` for the always-recorded final state).
    pub requested_time: f64,
    /// Distance between the requested time and the recording step.
    pub snap_distance: f64,
    pub state: FieldState,
}

/// One recorded trace: the field value at a fixed node over time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub requested_position: f64,
    /// Node the request snapped to.
    pub node_index: usize,
    /// Position of that node.
    pub position: f64,
    /// Distance between the requested and snapped positions.
    pub snap_distance: f64,
    /// Recording times, uniformly spaced by `trace_every * dt`.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Everything a simulation records.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeRecord {
    pub snapshots: Vec<Snapshot>,
    pub traces: Vec<Trace>,
    /// Number of site updates clamped to zero (Power noise coefficient).
    pub clamp_count: u64,
    /// Total site updates performed, to put `clamp_count` in proportion.
    pub total_updates: u64,
    /// Noise stream the run consumed.
    pub key: StreamKey,
    pub steps: u64,
    /// Horizon actually reached, `steps * dt`.
    pub t_end: f64,
}

/// One explicit Euler step; returns the advanced state.
///
/// `noise` holds one standard normal per updated node
/// ([`BoundaryCondition::noise_len`]). Convenience wrapper over the
/// buffer-reusing engine that [`simulate`] runs.
pub fn step_explicit(
    state: &FieldState,
    cfg: &SolverConfig,
    noise: &[f64],
) -> Result<FieldState> {
    step_once(state, cfg, noise, Scheme::Explicit)
}

/// One semi-implicit Euler step: drift and noise explicit, Laplacian
/// implicit via a (cyclic) tridiagonal solve.
pub fn step_semi_implicit(
    state: &FieldState,
    cfg: &SolverConfig,
    noise: &[f64],
) -> Result<FieldState> {
    step_once(state, cfg, noise, Scheme::SemiImplicit)
}

fn step_once(
    state: &FieldState,
    cfg: &SolverConfig,
    noise: &[f64],
    scheme: Scheme,
) -> Result<FieldState> {
    assert_eq!(
        state.values.len(),
        cfg.bc.state_len(cfg.nx),
        "state length inconsistent with boundary condition"
    );
    assert_eq!(noise.len(), cfg.bc.noise_len(cfg.nx), "noise length mismatch");
    let mut engine = Engine::new(cfg, scheme);
    let mut next = state.values.clone();
    let mut clamps = 0u64;
    let ok = engine.advance(&state.values, &mut next, noise, &mut clamps);
    if !ok {
        return Err(Error::BlowUp { step: 0, time: state.time });
    }
    Ok(FieldState { time: state.time + cfg.dt, values: next })
}

/// Shared per-run constants and scratch for the two steppers.
struct Engine<'c> {
    cfg: &'c SolverConfig,
    scheme: Scheme,
    mu: f64,
    noise_scale: f64,
    /// Tridiagonal bands of `I - mu L` for the semi-implicit scheme
    /// (Dirichlet: interior system; Neumann: full system with reflected
    /// first/last rows).
    bands: Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
    rhs: Vec<f64>,
}

impl<'c> Engine<'c> {
    fn new(cfg: &'c SolverConfig, scheme: Scheme) -> Self {
        let mu = cfg.mu();
        let noise_scale = (cfg.dt / cfg.dx()).sqrt();
        let bands = (scheme == Scheme::SemiImplicit).then(|| {
            let n = match cfg.bc {
                BoundaryCondition::Periodic => cfg.nx,
                BoundaryCondition::Dirichlet { .. } => cfg.nx - 1,
                BoundaryCondition::Neumann => cfg.nx + 1,
            };
            let mut lower = vec![-mu; n.saturating_sub(1)];
            let mut upper = vec![-mu; n.saturating_sub(1)];
            let diag = vec![1.0 + 2.0 * mu; n];
            if matches!(cfg.bc, BoundaryCondition::Neumann) && n >= 2 {
                // ghost reflection doubles the off-diagonal at both ends
                upper[0] = -2.0 * mu;
                lower[n - 2] = -2.0 * mu;
            }
            (lower, diag, upper)
        });
        Engine { cfg, scheme, mu, noise_scale, bands, rhs: Vec::new() }
    }

    /// Advance `cur` into `next`; returns false on a non-finite value.
    fn advance(&mut self, cur: &[f64], next: &mut [f64], noise: &[f64], clamps: &mut u64) -> bool {
        match self.scheme {
            Scheme::Explicit => self.advance_explicit(cur, next, noise, clamps),
            Scheme::SemiImplicit => self.advance_semi_implicit(cur, next, noise, clamps),
        }
    }

    fn advance_explicit(
        &self,
        cur: &[f64],
        next: &mut [f64],
        noise: &[f64],
        clamps: &mut u64,
    ) -> bool {
        let cfg = self.cfg;
        let dt = cfg.dt;
        let mu = self.mu;
        let ns = self.noise_scale;
        let drift = &cfg.drift;
        let clamp = cfg.sigma.requires_nonnegative_state();
        // monomorphize the hot loop per noise-coefficient variant so that
        // sigma inlines into the site update
        macro_rules! run {
            ($sigma:expr) => {
                explicit_pass(cur, next, noise, &cfg.bc, mu, dt, ns, $sigma, drift, clamp, clamps)
            };
        }
        match cfg.sigma {
            SigmaSpec::Constant { level } => run!(move |_x: f64| level),
            SigmaSpec::Affine { offset, slope } => run!(move |x: f64| offset + slope * x),
            SigmaSpec::Smooth { offset, amplitude } => {
                run!(move |x: f64| offset + amplitude * x.sin())
            }
            SigmaSpec::Power { exponent } => {
                run!(move |x: f64| if x > 0.0 { x.powf(exponent) } else { 0.0 })
            }
        }
    }

    fn advance_semi_implicit(
        &mut self,
        cur: &[f64],
        next: &mut [f64],
        noise: &[f64],
        clamps: &mut u64,
    ) -> bool {
        let cfg = self.cfg;
        let dt = cfg.dt;
        let ns = self.noise_scale;
        let mu = self.mu;
        let sigma = &cfg.sigma;
        let drift = &cfg.drift;
        self.rhs.clear();
        let solved = match cfg.bc {
            BoundaryCondition::Periodic => {
                self.rhs.extend(cur.iter().zip(noise).map(|(&x, &z)| {
                    x + drift.eval(x) * dt + sigma.eval(x) * z * ns
                }));
                solve_cyclic_tridiagonal(-mu, 1.0 + 2.0 * mu, -mu, &self.rhs)
            }
            BoundaryCondition::Dirichlet { value } => {
                let n = cur.len();
                self.rhs.extend(cur[1..n - 1].iter().zip(noise).map(|(&x, &z)| {
                    x + drift.eval(x) * dt + sigma.eval(x) * z * ns
                }));
                // pinned endpoints enter the first and last interior rows
                let m = self.rhs.len();
                self.rhs[0] += mu * value;
                self.rhs[m - 1] += mu * value;
                let (lower, diag, upper) = self.bands.as_ref().expect("bands prebuilt");
                solve_tridiagonal(lower, diag, upper, &self.rhs)
            }
            BoundaryCondition::Neumann => {
                self.rhs.extend(cur.iter().zip(noise).map(|(&x, &z)| {
                    x + drift.eval(x) * dt + sigma.eval(x) * z * ns
                }));
                let (lower, diag, upper) = self.bands.as_ref().expect("bands prebuilt");
                solve_tridiagonal(lower, diag, upper, &self.rhs)
            }
        };
        let mut interior = match solved {
            Ok(v) => v,
            Err(_) => return false,
        };
        let clamp = sigma.requires_nonnegative_state();
        if clamp {
            for v in interior.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                    *clamps += 1;
                }
            }
        }
        let mut ok = true;
        match cfg.bc {
            BoundaryCondition::Dirichlet { value } => {
                let n = next.len();
                next[0] = value;
                next[n - 1] = value;
                next[1..n - 1].copy_from_slice(&interior);
            }
            _ => next.copy_from_slice(&interior),
        }
        for &v in next.iter() {
            ok &= v.is_finite();
        }
        ok
    }
}

/// Explicit update of every site; returns false if any produced value is
/// non-finite. The interior loop is branch-free modulo the (predictable)
/// clamp test.
#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn explicit_pass(
    cur: &[f64],
    next: &mut [f64],
    noise: &[f64],
    bc: &BoundaryCondition,
    mu: f64,
    dt: f64,
    ns: f64,
    sigma: impl Fn(f64) -> f64,
    drift: &DriftSpec,
    clamp: bool,
    clamps: &mut u64,
) -> bool {
    let n = cur.len();
    let mut ok = true;
    let mut clamped = 0u64;
    let site = |xm: f64, x0: f64, xp: f64, z: f64| -> f64 {
        x0 + mu * (xp - 2.0 * x0 + xm) + drift.eval(x0) * dt + sigma(x0) * z * ns
    };
    let mut emit = |slot: &mut f64, v: f64| {
        let v = if clamp && v < 0.0 {
            clamped += 1;
            0.0
        } else {
            v
        };
        ok &= v.is_finite();
        *slot = v;
    };
    match *bc {
        BoundaryCondition::Periodic => {
            emit(&mut next[0], site(cur[n - 1], cur[0], cur[1], noise[0]));
            for ((w, z), slot) in cur
                .windows(3)
                .zip(noise[1..].iter())
                .zip(next[1..].iter_mut())
            {
                emit(slot, site(w[0], w[1], w[2], *z));
            }
            emit(&mut next[n - 1], site(cur[n - 2], cur[n - 1], cur[0], noise[n - 1]));
        }
        BoundaryCondition::Dirichlet { value } => {
            next[0] = value;
            next[n - 1] = value;
            for ((w, z), slot) in cur
                .windows(3)
                .zip(noise.iter())
                .zip(next[1..].iter_mut())
            {
                emit(slot, site(w[0], w[1], w[2], *z));
            }
        }
        BoundaryCondition::Neumann => {
            // ghost reflection: X_{-1} = X_1 and X_{n} = X_{n-2}
            emit(&mut next[0], site(cur[1], cur[0], cur[1], noise[0]));
            for ((w, z), slot) in cur
                .windows(3)
                .zip(noise[1..].iter())
                .zip(next[1..].iter_mut())
            {
                emit(slot, site(w[0], w[1], w[2], *z));
            }
            emit(&mut next[n - 1], site(cur[n - 2], cur[n - 1], cur[n - 2], noise[n - 1]));
        }
    }
    *clamps += clamped;
    ok
}

/// Run the full simulation described by `cfg` from the initial field `x0`.
///
/// `x0` must match the state length of the boundary condition
/// ([`BoundaryCondition::state_len`]), be finite, and be nonnegative when
/// the noise coefficient is `Power`. Dirichlet endpoints are owned by the
/// boundary condition: their entries are set to the boundary value.
///
/// The returned record is a pure function of `(cfg, x0)`.
pub fn simulate(cfg: &SolverConfig, x0: &[f64]) -> Result<SpaceTimeRecord> {
    cfg.validate()?;
    let state_len = cfg.bc.state_len(cfg.nx);
    if x0.len() != state_len {
        return Err(Error::invalid(
            "initial field",
            format!("expected {state_len} values for this boundary condition, got {}", x0.len()),
        ));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial field", "values must be finite"));
    }
    if cfg.sigma.requires_nonnegative_state() && x0.iter().any(|&v| v < 0.0) {
        return Err(Error::invalid(
            "initial field",
            "Power noise coefficient requires nonnegative initial data",
        ));
    }

    let n_steps = cfg.n_steps();
    let dt = cfg.dt;

    // snap snapshot requests to steps; always record the final state
    let mut snap_steps: Vec<(u64, f64, f64)> = cfg
        .record
        .snapshot_times
        .iter()
        .map(|&t| {
            let step = (t / dt).round().min(n_steps as f64).max(0.0) as u64;
            (step, t, (step as f64 * dt - t).abs())
        })
        .collect();
    let final_requested = snap_steps.iter().any(|&(s, _, _)| s == n_steps);
    if !final_requested {
        snap_steps.push((n_steps, n_steps as f64 * dt, 0.0));
    }
    snap_steps.sort_by_key(|&(s, _, _)| s);

    // snap trace requests to nodes
    let dx = cfg.dx();
    let mut traces: Vec<Trace> = cfg
        .record
        .trace_positions
        .iter()
        .map(|&x| {
            let idx_max = state_len - 1;
            let mut node = ((x - cfg.domain.0) / dx).round() as usize;
            if matches!(cfg.bc, BoundaryCondition::Periodic) {
                node %= cfg.nx;
            } else {
                node = node.min(idx_max);
            }
            let position = cfg.node_position(node);
            Trace {
                requested_position: x,
                node_index: node,
                position,
                snap_distance: (position - x).abs(),
                times: Vec::new(),
                values: Vec::new(),
            }
        })
        .collect();

    let mut cur = x0.to_vec();
    if let BoundaryCondition::Dirichlet { value } = cfg.bc {
        cur[0] = value;
        cur[state_len - 1] = value;
    }
    let mut next = vec![0.0; state_len];
    let noise_len = cfg.bc.noise_len(cfg.nx);
    let mut noise = vec![0.0; noise_len];
    let mut rng = CounterRng::new(&cfg.key);
    let mut engine = Engine::new(cfg, cfg.scheme);
    let mut clamp_count = 0u64;
    let mut snapshots = Vec::with_capacity(snap_steps.len());
    let mut snap_cursor = 0;

    let record_at = |step: u64,
                         state: &[f64],
                         snapshots: &mut Vec<Snapshot>,
                         traces: &mut Vec<Trace>,
                         snap_cursor: &mut usize| {
        let time = step as f64 * dt;
        while *snap_cursor < snap_steps.len() && snap_steps[*snap_cursor].0 == step {
            let (_, requested, dist) = snap_steps[*snap_cursor];
            snapshots.push(Snapshot {
                requested_time: requested,
                snap_distance: dist,
                state: FieldState { time, values: state.to_vec() },
            });
            *snap_cursor += 1;
        }
        if step.is_multiple_of(cfg.record.trace_every as u64) {
            for trace in traces.iter_mut() {
                trace.times.push(time);
                trace.values.push(state[trace.node_index]);
            }
        }
    };

    record_at(0, &cur, &mut snapshots, &mut traces, &mut snap_cursor);
    for step in 0..n_steps {
        for slot in noise.iter_mut() {
            *slot = StandardNormal.sample(&mut rng);
        }
        let ok = engine.advance(&cur, &mut next, &noise, &mut clamp_count);
        if !ok {
            return Err(Error::BlowUp { step: step + 1, time: (step + 1) as f64 * dt });
        }
        std::mem::swap(&mut cur, &mut next);
        record_at(step + 1, &cur, &mut snapshots, &mut traces, &mut snap_cursor);
    }

    Ok(SpaceTimeRecord {
        snapshots,
        traces,
        clamp_count,
        total_updates: n_steps * noise_len as u64,
        key: cfg.key,
        steps: n_steps,
        t_end: n_steps as f64 * dt,
    })
}

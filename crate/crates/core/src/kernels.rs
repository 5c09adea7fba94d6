//! Heat kernel and the exact second-order structure of the linear equation.
//!
//! For the linear stochastic heat equation on the whole line (zero drift,
//! constant noise level `sigma`, diffusion coefficient `alpha`, zero initial
//! condition), the solution is the Gaussian field
//!
//! ```text
//!     X_t(x) = sigma * Integral_0^t Integral_R G_{alpha(t-r)}(x - u) W(dr, du)
//! ```
//!
//! with `G` the heat kernel. Its covariance reduces to a single time
//! integral of the kernel along the diagonal,
//!
//! ```text
//!     E[X_t(x) X_s(y)] = sigma^2 * Integral_0^s
//!         (4 pi alpha (s + t - 2r))^(-1/2)
//!         * exp(-(x-y)^2 / (4 alpha (s + t - 2r))) dr,       s <= t,
//! ```
//!
//! which this module evaluates three ways:
//!
//! * [`cov_equal_time`] — closed form on the `s = t` section (erf-based);
//! * [`cov_equal_space`] — closed form on the `x = y` section;
//! * [`cov_oracle`] — adaptive quadrature for arbitrary admissible
//!   arguments, used as the independent check of the closed forms and for
//!   joint space-time sampling.
//!
//! Everything is computed for `alpha = sigma = 1` and rescaled through
//! `Cov_{alpha,sigma}(s, t; x, y) = (sigma^2/alpha) * Cov_{1,1}(alpha s, alpha t; x, y)`,
//! which follows from substituting `r -> alpha r` in the integral above.
//!
//! The small-scale increment asymptotics that drive the variation limits are
//! exposed exactly ([`spatial_increment_var`], [`temporal_increment_var`])
//! and as their leading terms `delta sigma^2/(2 alpha)` and
//! `sqrt(delta) sigma^2/sqrt(pi alpha)`. The fourth-moment bookkeeping for
//! quartic variations uses the Gaussian pair identities in
//! [`gaussian_x2y2`] / [`gaussian_x4y4`].

use crate::erf::erf;
use crate::error::{Error, Result};
use crate::numerics::adaptive_simpson;

use std::f64::consts::PI;

/// Relative tolerance requested from the covariance quadrature.
const ORACLE_REL_TOL: f64 = 1e-11;
/// Absolute floor protecting the tolerance when the integral is tiny.
const ORACLE_ABS_FLOOR: f64 = 1e-14;

/// Diffusion coefficient and constant noise level of the linear equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub alpha: f64,
    pub sigma: f64,
}

impl PhysicalParams {
    pub fn new(alpha: f64, sigma: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid("alpha", format!("must be positive, got {alpha}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid("sigma", format!("must be nonnegative, got {sigma}")));
        }
        Ok(PhysicalParams { alpha, sigma })
    }

    /// `alpha = 1`, `sigma = 1`.
    pub fn unit() -> Self {
        PhysicalParams { alpha: 1.0, sigma: 1.0 }
    }

    /// `sigma^2 / alpha`, the prefactor of every rescaled covariance.
    fn level(&self) -> f64 {
        self.sigma * self.sigma / self.alpha
    }
}

/// Arguments of a general covariance evaluation, `0 <= s <= t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceQuery {
    pub s: f64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl CovarianceQuery {
    pub fn new(s: f64, t: f64, x: f64, y: f64) -> Result<Self> {
        if !(s.is_finite() && t.is_finite() && x.is_finite() && y.is_finite()) {
            return Err(Error::invalid("covariance query", "arguments must be finite"));
        }
        if s < 0.0 || t < s {
            return Err(Error::invalid(
                "covariance query",
                format!("times must satisfy 0 <= s <= t, got s = {s}, t = {t}"),
            ));
        }
        Ok(CovarianceQuery { s, t, x, y })
    }
}

/// Heat kernel `G_{alpha t}(x) = (4 pi alpha t)^(-1/2) exp(-x^2/(4 alpha t))`.
///
/// Requires `t > 0`. Positive, even in `x`, and integrates to one in `x`.
pub fn heat_kernel(t: f64, x: f64, params: &PhysicalParams) -> f64 {
    assert!(t > 0.0 && t.is_finite(), "heat kernel needs t > 0, got {t}");
    let tau = params.alpha * t;
    (-x * x / (4.0 * tau)).exp() / (4.0 * PI * tau).sqrt()
}

/// Equal-time covariance section for `alpha = sigma = 1`:
/// `C(tau; d) = sqrt(tau/(2 pi)) e^{-d^2/(8 tau)} + (d/4) erf(d/(2 sqrt(2 tau))) - d/4`.
fn cov_equal_time_unit(tau: f64, d: f64) -> f64 {
    debug_assert!(d >= 0.0);
    if tau == 0.0 {
        return 0.0;
    }
    (tau / (2.0 * PI)).sqrt() * (-d * d / (8.0 * tau)).exp()
        + 0.25 * d * (erf(d / (2.0 * (2.0 * tau).sqrt())) - 1.0)
}

/// `E[X_t(x) X_t(y)]` in closed form.
///
/// Even and strictly decreasing in `|x - y|`, maximal on the diagonal where
/// it equals `sigma^2 sqrt(t/(2 pi alpha))`, and vanishing as the
/// separation grows. Requires `t >= 0`.
pub fn cov_equal_time(t: f64, x: f64, y: f64, params: &PhysicalParams) -> f64 {
    assert!(t >= 0.0 && t.is_finite(), "equal-time covariance needs t >= 0, got {t}");
    params.level() * cov_equal_time_unit(params.alpha * t, (x - y).abs())
}

/// `E[X_t(x) X_s(x)]` in closed form:
/// `sigma^2/(2 sqrt(pi alpha)) (sqrt(t+s) - sqrt(t-s))`.
///
/// Requires `0 <= s <= t`. On the diagonal this is
/// `sigma^2 sqrt(t/(2 pi alpha))`, consistent with [`cov_equal_time`].
pub fn cov_equal_space(s: f64, t: f64, params: &PhysicalParams) -> f64 {
    assert!(
        s >= 0.0 && t >= s && t.is_finite(),
        "equal-space covariance needs 0 <= s <= t, got s = {s}, t = {t}"
    );
    params.sigma * params.sigma / (2.0 * (PI * params.alpha).sqrt())
        * ((t + s).sqrt() - (t - s).sqrt())
}

/// General covariance by adaptive quadrature.
///
/// Substituting `u = sqrt(alpha(s + t - 2r))` in the defining integral gives
///
/// ```text
///     Cov = sigma^2/alpha * (1/(2 sqrt(pi)))
///           * Integral_{sqrt(alpha(t-s))}^{sqrt(alpha(t+s))} exp(-d^2/(4u^2)) du,
/// ```
///
/// whose integrand is bounded and smooth on the whole interval (it tends to
/// zero with all derivatives as `u -> 0`), so the `s = t` endpoint
/// singularity of the raw integrand never appears. Errors if the adaptive
/// subdivision cannot reach its tolerance.
pub fn cov_oracle(query: &CovarianceQuery, params: &PhysicalParams) -> Result<f64> {
    if query.s == 0.0 {
        return Ok(0.0);
    }
    let d = (query.x - query.y).abs();
    let lo = (params.alpha * (query.t - query.s)).sqrt();
    let hi = (params.alpha * (query.t + query.s)).sqrt();
    let integrand = move |u: f64| {
        if u == 0.0 {
            // limit value: 1 on the diagonal, 0 off it
            if d == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            (-d * d / (4.0 * u * u)).exp()
        }
    };
    let quad = adaptive_simpson(&integrand, lo, hi, ORACLE_REL_TOL, ORACLE_ABS_FLOOR);
    if !quad.converged {
        return Err(Error::QuadratureNonConvergence {
            achieved: quad.error_bound,
            requested: (ORACLE_REL_TOL * quad.value.abs()).max(ORACLE_ABS_FLOOR),
        });
    }
    Ok(params.level() / (2.0 * PI.sqrt()) * quad.value)
}

/// Exact variance of a spatial increment,
/// `E[(X_t(x + delta) - X_t(x))^2] = 2 (C(t; 0) - C(t; delta))`.
///
/// Equals `delta sigma^2/(2 alpha) + O(delta^2)` as `delta -> 0`.
pub fn spatial_increment_var(delta: f64, t: f64, params: &PhysicalParams) -> f64 {
    assert!(t >= 0.0 && delta.is_finite());
    let d = delta.abs();
    let tau = params.alpha * t;
    2.0 * params.level() * (cov_equal_time_unit(tau, 0.0) - cov_equal_time_unit(tau, d))
}

/// Leading term of [`spatial_increment_var`]: `delta sigma^2 / (2 alpha)`.
pub fn spatial_increment_var_leading(delta: f64, params: &PhysicalParams) -> f64 {
    delta.abs() * params.sigma * params.sigma / (2.0 * params.alpha)
}

/// Exact variance of a temporal increment,
/// `E[(X_{t+delta}(x) - X_t(x))^2]`, from the equal-space closed form.
///
/// Written in cancellation-free form
///
/// ```text
///     sigma^2/(2 sqrt(pi alpha)) * ( 2 sqrt(delta)
///         + delta/(sqrt(2(t+delta)) + sqrt(2t+delta))
///         - delta/(sqrt(2t) + sqrt(2t+delta)) )
/// ```
///
/// Equals `sqrt(delta) sigma^2/sqrt(pi alpha) + O(delta^2)` as `delta -> 0`.
pub fn temporal_increment_var(delta: f64, t: f64, params: &PhysicalParams) -> f64 {
    assert!(delta >= 0.0 && t >= 0.0);
    let td = 2.0 * t + delta;
    let bracket = 2.0 * delta.sqrt() + delta / ((2.0 * (t + delta)).sqrt() + td.sqrt())
        - delta / ((2.0 * t).sqrt() + td.sqrt());
    params.sigma * params.sigma / (2.0 * (PI * params.alpha).sqrt()) * bracket
}

/// Leading term of [`temporal_increment_var`]:
/// `sqrt(delta) sigma^2 / sqrt(pi alpha)`.
pub fn temporal_increment_var_leading(delta: f64, params: &PhysicalParams) -> f64 {
    assert!(delta >= 0.0);
    delta.sqrt() * params.sigma * params.sigma / (PI * params.alpha).sqrt()
}

/// Second moments of a centered Gaussian pair `(X, Y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPairMoments {
    pub vxx: f64,
    pub vyy: f64,
    pub vxy: f64,
}

impl GaussianPairMoments {
    pub fn new(vxx: f64, vyy: f64, vxy: f64) -> Result<Self> {
        if !(vxx >= 0.0 && vyy >= 0.0 && vxy.is_finite()) {
            return Err(Error::invalid(
                "Gaussian pair moments",
                "variances must be nonnegative and finite",
            ));
        }
        // 2x2 covariance must be positive semidefinite (tiny slack for
        // moments assembled from rounded covariance evaluations)
        if vxy * vxy > vxx * vyy * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::invalid(
                "Gaussian pair moments",
                format!("|vxy| = {} exceeds sqrt(vxx*vyy) = {}", vxy.abs(), (vxx * vyy).sqrt()),
            ));
        }
        Ok(GaussianPairMoments { vxx, vyy, vxy })
    }
}

/// `E[X^2 Y^2] = vxx vyy + 2 vxy^2` for a centered Gaussian pair.
pub fn gaussian_x2y2(m: &GaussianPairMoments) -> f64 {
    m.vxx * m.vyy + 2.0 * m.vxy * m.vxy
}

/// `E[X^4 Y^4] = 9 (vxx vyy)^2 + 72 vxx vyy vxy^2 + 24 vxy^4` for a centered
/// Gaussian pair. At `X = Y` the coefficients collapse to
/// `105 sigma^8 = E[X^8]`.
pub fn gaussian_x4y4(m: &GaussianPairMoments) -> f64 {
    let p = m.vxx * m.vyy;
    let c2 = m.vxy * m.vxy;
    9.0 * p * p + 72.0 * p * c2 + 24.0 * c2 * c2
}

//! Shared numerical building blocks: compensated summation, adaptive
//! quadrature, dense symmetric matrices with semidefinite Cholesky,
//! tridiagonal solvers, and least-squares fitting.

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// compensated summation
// ---------------------------------------------------------------------------

/// Neumaier-compensated accumulator. The correction term also catches the
/// case where the addend dominates the running sum, which plain Kahan loses.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline(always)]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline(always)]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator of addends.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = NeumaierSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

// ---------------------------------------------------------------------------
// dot products and small dense kernels
// ---------------------------------------------------------------------------

/// Dot product with four independent accumulators so the loop vectorizes.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[2]) + (acc[1] + acc[3]);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

// ---------------------------------------------------------------------------
// dense symmetric matrices and Cholesky
// ---------------------------------------------------------------------------

/// Square matrix in row-major storage. Used for covariance matrices and
/// their lower-triangular Cholesky factors.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Build a symmetric matrix from entries on and below the diagonal.
    pub fn from_symmetric_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline(always)]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline(always)]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..self.n).fold(0.0, |m, i| m.max(self.get(i, i)))
    }

    pub fn max_symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn add_to_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += v;
        }
    }

    /// Symmetric matrix-vector product (uses full storage).
    pub fn sym_matvec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    /// In-place lower Cholesky factorization with semidefinite tolerance.
    ///
    /// Zero pivots (within `n * eps * max_diag`) produce a zero column, so
    /// rank-deficient covariances (e.g. `sigma = 0`) factor cleanly. A pivot
    /// below `-tol` reports the index and value. On success the strict upper
    /// triangle is zeroed.
    pub fn cholesky_in_place(&mut self) -> std::result::Result<(), (usize, f64)> {
        let n = self.n;
        let scale = self.max_diagonal().max(f64::MIN_POSITIVE);
        let tol = scale * f64::EPSILON * (n.max(16) as f64);
        for i in 0..n {
            let (above, current) = self.data.split_at_mut(i * n);
            let row_i = &mut current[..n];
            for j in 0..i {
                let row_j = &above[j * n..j * n + j + 1];
                let s = dot(&row_i[..j], &row_j[..j]);
                let piv = row_j[j];
                row_i[j] = if piv == 0.0 {
                    0.0
                } else {
                    (row_i[j] - s) / piv
                };
            }
            let d = row_i[i] - dot(&row_i[..i], &row_i[..i]);
            if d < -tol {
                return Err((i, d));
            }
            row_i[i] = if d <= tol { 0.0 } else { d.sqrt() };
        }
        for i in 0..n {
            for j in i + 1..n {
                self.data[i * n + j] = 0.0;
            }
        }
        Ok(())
    }

    /// `out = L * z` for a lower-triangular `self`.
    pub fn lower_matvec(&self, z: &[f64], out: &mut [f64]) {
        assert_eq!(z.len(), self.n);
        assert_eq!(out.len(), self.n);
        for i in 0..self.n {
            out[i] = dot(&self.row(i)[..=i], &z[..=i]);
        }
    }

    /// `out = L * Z` for a lower-triangular `self` and `k` right-hand sides.
    ///
    /// `z` and `out` hold `n x k` matrices row-major. Batching reuses each
    /// factor row across all right-hand sides, which matters when the factor
    /// no longer fits in cache.
    pub fn lower_matmul(&self, z: &[f64], out: &mut [f64], k: usize) {
        let n = self.n;
        assert_eq!(z.len(), n * k);
        assert_eq!(out.len(), n * k);
        for i in 0..n {
            let row = &self.row(i)[..=i];
            let acc = &mut out[i * k..(i + 1) * k];
            acc.fill(0.0);
            for (j, &lij) in row.iter().enumerate() {
                if lij != 0.0 {
                    let zrow = &z[j * k..(j + 1) * k];
                    for b in 0..k {
                        acc[b] += lij * zrow[b];
                    }
                }
            }
        }
    }

    /// Largest absolute entry of `L * L^T - self_reference`.
    pub fn reconstruction_defect(factor: &DenseMatrix, reference: &DenseMatrix) -> f64 {
        assert_eq!(factor.n, reference.n);
        let n = factor.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                let m = j.min(i) + 1;
                let v = dot(&factor.row(i)[..m], &factor.row(j)[..m]);
                worst = worst.max((v - reference.get(i, j)).abs());
            }
        }
        worst
    }

    /// Power-iteration estimate of the smallest eigenvalue (for diagnostics
    /// on factorization failure). Iterates on `s*I - A` where `s` bounds the
    /// spectral radius from above.
    pub fn smallest_eigenvalue_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let s = (0..n)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut v: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { 1.0 } else { -0.5 })
            .collect();
        let mut av = vec![0.0; n];
        let mut lambda = 0.0;
        for _ in 0..60 {
            self.sym_matvec(&v, &mut av);
            // w = s*v - A*v
            for i in 0..n {
                av[i] = s * v[i] - av[i];
            }
            let norm = dot(&av, &av).sqrt();
            if norm == 0.0 {
                return s;
            }
            for i in 0..n {
                v[i] = av[i] / norm;
            }
            lambda = norm;
        }
        s - lambda
    }
}

/// Cholesky with an escalating diagonal jitter ladder.
///
/// Tries jitter 0 first, then `1e-14 .. 1e-10` (relative to the largest
/// diagonal entry) in decade steps. Returns the factor and the jitter that
/// succeeded. If even the largest jitter fails, reports the offending pivot
/// and a smallest-eigenvalue estimate.
pub fn cholesky_with_jitter(matrix: &DenseMatrix) -> Result<(DenseMatrix, f64)> {
    let scale = matrix.max_diagonal().max(f64::MIN_POSITIVE);
    let mut last_failure = (0usize, 0.0f64, 0.0f64);
    for &rel in &[0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10] {
        let jitter = rel * scale;
        let mut factor = matrix.clone();
        if jitter > 0.0 {
            factor.add_to_diagonal(jitter);
        }
        match factor.cholesky_in_place() {
            Ok(()) => return Ok((factor, jitter)),
            Err((index, pivot)) => last_failure = (index, pivot, jitter),
        }
    }
    Err(Error::NotPositiveSemidefinite {
        index: last_failure.0,
        pivot: last_failure.1,
        jitter: last_failure.2,
        eig_min: matrix.smallest_eigenvalue_estimate(),
    })
}

// ---------------------------------------------------------------------------
// adaptive quadrature
// ---------------------------------------------------------------------------

/// Outcome of adaptive Simpson integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Accumulated Richardson error bound.
    pub error_bound: f64,
    pub converged: bool,
    pub evaluations: usize,
}

struct SimpsonState<'a, F: Fn(f64) -> f64> {
    f: &'a F,
    sum: NeumaierSum,
    error: NeumaierSum,
    evaluations: usize,
    converged: bool,
}

/// Adaptive Simpson quadrature with Richardson acceptance test.
///
/// The per-interval tolerance starts at
/// `max(abs_floor, rel_tol * |coarse estimate|)` and halves with each
/// bisection. Intervals still failing at the depth cap are accepted with
/// their error recorded and `converged` cleared.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            error_bound: 0.0,
            converged: true,
            evaluations: 0,
        };
    }
    // Coarse pass to set the relative-tolerance scale: 32-panel Simpson.
    let panels = 32;
    let h = (b - a) / panels as f64;
    let mut coarse = NeumaierSum::new();
    for k in 0..panels {
        let x0 = a + k as f64 * h;
        let x2 = x0 + h;
        let x1 = 0.5 * (x0 + x2);
        coarse.add(h / 6.0 * (f(x0) + 4.0 * f(x1) + f(x2)));
    }
    let scale = coarse.value().abs();
    let tol = (rel_tol * scale).max(abs_floor);

    let mut state = SimpsonState {
        f,
        sum: NeumaierSum::new(),
        error: NeumaierSum::new(),
        evaluations: 3 * panels,
        converged: true,
    };
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    state.evaluations += 3;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_recurse(&mut state, a, b, fa, fm, fb, whole, tol, 60);
    QuadResult {
        value: state.sum.value(),
        error_bound: state.error.value(),
        converged: state.converged,
        evaluations: state.evaluations,
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<F: Fn(f64) -> f64>(
    state: &mut SimpsonState<F>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = (state.f)(lm);
    let frm = (state.f)(rm);
    state.evaluations += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // Interval width underflow: accept whatever we have.
    let degenerate = m <= a || b <= m;
    if delta.abs() <= 15.0 * tol || degenerate {
        state.sum.add(left + right + delta / 15.0);
        state.error.add(delta.abs() / 15.0);
        return;
    }
    if depth == 0 {
        state.sum.add(left + right + delta / 15.0);
        state.error.add(delta.abs() / 15.0);
        state.converged = false;
        return;
    }
    simpson_recurse(state, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
    simpson_recurse(state, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// ---------------------------------------------------------------------------
// tridiagonal solvers
// ---------------------------------------------------------------------------

/// Thomas algorithm for `lower[i-1] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// `lower` and `upper` have length `n - 1`. No pivoting; callers pass
/// diagonally dominant systems.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(n >= 1);
    assert_eq!(lower.len(), n - 1);
    assert_eq!(upper.len(), n - 1);
    assert_eq!(rhs.len(), n);
    let mut c = vec![0.0; n - 1];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv == 0.0 {
        return Err(Error::invalid("tridiagonal system", "zero pivot at row 0"));
    }
    if n > 1 {
        c[0] = upper[0] / piv;
    }
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - lower[i - 1] * c[i - 1];
        if piv == 0.0 {
            return Err(Error::invalid(
                "tridiagonal system",
                format!("zero pivot at row {i}"),
            ));
        }
        if i < n - 1 {
            c[i] = upper[i] / piv;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Cyclic tridiagonal solve (periodic wrap corners) via Sherman-Morrison.
///
/// Solves the `n x n` system whose rows are
/// `lower x[i-1] + diag x[i] + upper x[i+1] = rhs[i]` with indices modulo
/// `n`, i.e. corner entries `A[0][n-1] = lower` and `A[n-1][0] = upper`.
/// Constant coefficients are all the solver needs.
pub fn solve_cyclic_tridiagonal(
    lower: f64,
    diag: f64,
    upper: f64,
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = rhs.len();
    assert!(n >= 3, "cyclic system needs at least 3 unknowns");
    let gamma = -diag;
    let mut dmod = vec![diag; n];
    dmod[0] = diag - gamma;
    dmod[n - 1] = diag - lower * upper / gamma;
    let sub = vec![lower; n - 1];
    let sup = vec![upper; n - 1];
    let y = solve_tridiagonal(&sub, &dmod, &sup, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = upper;
    let z = solve_tridiagonal(&sub, &dmod, &sup, &u)?;
    // v = (1, 0, ..., 0, lower/gamma)
    let vy = y[0] + lower / gamma * y[n - 1];
    let vz = z[0] + lower / gamma * z[n - 1];
    let factor = vy / (1.0 + vz);
    Ok(y.iter().zip(&z).map(|(yi, zi)| yi - factor * zi).collect())
}

// ---------------------------------------------------------------------------
// fitting and distributions
// ---------------------------------------------------------------------------

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need at least two points to fit a line");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `log y` against `log x`; inputs must be positive.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).0
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * (1.0 + crate::erf::erf(x / std::f64::consts::SQRT_2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_tail() {
        let mut s = NeumaierSum::new();
        for &v in &[1.0, 1e100, 1.0, -1e100] {
            s.add(v);
        }
        assert_eq!(s.value(), 2.0);
        let naive: f64 = [1.0, 1e100, 1.0, -1e100].iter().sum();
        assert_eq!(naive, 0.0);
    }

    #[test]
    fn simpson_integrates_polynomial_exactly() {
        let q = adaptive_simpson(&|x: f64| x * x * x + 2.0 * x, 0.0, 2.0, 1e-12, 1e-15);
        assert!(q.converged);
        assert!((q.value - 8.0).abs() < 1e-12, "value = {}", q.value);
    }

    #[test]
    fn simpson_matches_gaussian_integral() {
        // integral of exp(-x^2) over [0, 3] = sqrt(pi)/2 * erf(3)
        let q = adaptive_simpson(&|x: f64| (-x * x).exp(), 0.0, 3.0, 1e-12, 1e-15);
        let want = 0.5 * std::f64::consts::PI.sqrt() * 0.9999779095030014;
        assert!(q.converged);
        assert!((q.value - want).abs() < 1e-11, "value = {}", q.value);
    }

    #[test]
    fn simpson_handles_flat_cutoff_integrand() {
        // the covariance-oracle integrand shape: exp(-c/u^2), flat near zero
        let c = 0.25;
        let q = adaptive_simpson(&|u: f64| (-c / (u * u)).exp(), 0.0, 1.0, 1e-11, 1e-14);
        assert!(q.converged);
        // reference: mpmath, 30 digits
        let want = 0.353854864031439303351789462048;
        assert!(
            (q.value - want).abs() < 1e-10,
            "value = {}, err = {}",
            q.value,
            (q.value - want).abs()
        );
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn cholesky_factors_known_matrix() {
        // A = L L^T with L = [[2,0,0],[6,1,0],[-8,5,3]]
        let l_true = [[2.0, 0.0, 0.0], [6.0, 1.0, 0.0], [-8.0, 5.0, 3.0]];
        let mut a = DenseMatrix::zeros(3);
        for i in 0..3 {
            for j in 0..3 {
                let mut v = 0.0;
                for k in 0..3 {
                    v += l_true[i][k] * l_true[j][k];
                }
                a.set(i, j, v);
            }
        }
        let (factor, jitter) = cholesky_with_jitter(&a).unwrap();
        assert_eq!(jitter, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (factor.get(i, j) - l_true[i][j]).abs() < 1e-12,
                    "L[{i}][{j}] = {}",
                    factor.get(i, j)
                );
            }
        }
    }

    #[test]
    fn cholesky_accepts_zero_matrix() {
        let a = DenseMatrix::zeros(5);
        let (factor, jitter) = cholesky_with_jitter(&a).unwrap();
        assert_eq!(jitter, 0.0);
        assert!(factor.row(4).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cholesky_rejects_indefinite_matrix() {
        let mut a = DenseMatrix::zeros(2);
        a.set(0, 0, 1.0);
        a.set(1, 1, 1.0);
        a.set(0, 1, 2.0);
        a.set(1, 0, 2.0);
        let err = cholesky_with_jitter(&a).unwrap_err();
        match err {
            Error::NotPositiveSemidefinite { eig_min, .. } => {
                // eigenvalues are 3 and -1
                assert!((eig_min - (-1.0)).abs() < 1e-6, "eig_min = {eig_min}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn lower_matvec_and_matmul_agree() {
        let mut l = DenseMatrix::zeros(4);
        let entries = [
            (0, 0, 1.5),
            (1, 0, -0.5),
            (1, 1, 2.0),
            (2, 1, 0.25),
            (2, 2, 1.0),
            (3, 0, 3.0),
            (3, 3, 0.5),
        ];
        for &(i, j, v) in &entries {
            l.set(i, j, v);
        }
        let zs = [
            [0.3, -1.2, 0.7, 2.0],
            [1.0, 0.0, -0.5, 0.25],
            [-2.0, 0.5, 0.0, 1.0],
        ];
        let k = zs.len();
        let mut flat = vec![0.0; 4 * k];
        for (b, z) in zs.iter().enumerate() {
            for i in 0..4 {
                flat[i * k + b] = z[i];
            }
        }
        let mut batched = vec![0.0; 4 * k];
        l.lower_matmul(&flat, &mut batched, k);
        for (b, z) in zs.iter().enumerate() {
            let mut single = vec![0.0; 4];
            l.lower_matvec(z, &mut single);
            for i in 0..4 {
                assert!(
                    (batched[i * k + b] - single[i]).abs() < 1e-15,
                    "mismatch at row {i} rhs {b}"
                );
            }
        }
    }

    #[test]
    fn tridiagonal_solution_satisfies_system() {
        let lower = [1.0, -2.0, 0.5];
        let diag = [4.0, 5.0, 4.0, 3.0];
        let upper = [-1.0, 2.0, 1.0];
        let rhs = [1.0, -3.0, 2.0, 0.5];
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for i in 0..4 {
            let mut v = diag[i] * x[i];
            if i > 0 {
                v += lower[i - 1] * x[i - 1];
            }
            if i < 3 {
                v += upper[i] * x[i + 1];
            }
            assert!((v - rhs[i]).abs() < 1e-12, "row {i}: {v} vs {}", rhs[i]);
        }
    }

    #[test]
    fn cyclic_tridiagonal_solution_satisfies_wrapped_system() {
        let (lo, di, up) = (-0.3, 2.0, -0.4);
        let rhs = [1.0, 0.0, -2.0, 3.0, 0.25];
        let n = rhs.len();
        let x = solve_cyclic_tridiagonal(lo, di, up, &rhs).unwrap();
        for i in 0..n {
            let v = lo * x[(i + n - 1) % n] + di * x[i] + up * x[(i + 1) % n];
            assert!((v - rhs[i]).abs() < 1e-12, "row {i}: {v} vs {}", rhs[i]);
        }
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| -2.5 * v + 0.75).collect();
        let (slope, intercept) = linear_fit(&x, &y);
        assert!((slope + 2.5).abs() < 1e-12);
        assert!((intercept - 0.75).abs() < 1e-12);
    }
}

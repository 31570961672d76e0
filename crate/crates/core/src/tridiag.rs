//! Real symmetric tridiagonal operators and the complex tridiagonal solve
//! behind the Crank-Nicolson steps.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    /// `off[i]` couples rows `i` and `i + 1`.
    ///
    /// # Panics
    /// If `off.len() + 1 != diag.len()` for a nonempty diagonal.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(
            diag.is_empty() && off.is_empty() || off.len() + 1 == diag.len(),
            "off-diagonal length {} does not match dimension {}",
            off.len(),
            diag.len()
        );
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub fn with_added_diagonal(&self, extra: &[f64]) -> Self {
        Self {
            diag: self.diag.iter().zip(extra).map(|(a, b)| a + b).collect(),
            off: self.off.clone(),
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        let mut y: Vec<Complex64> = self.diag.iter().zip(x).map(|(d, v)| v * d).collect();
        for i in 0..n.saturating_sub(1) {
            y[i] += x[i + 1] * self.off[i];
            y[i + 1] += x[i] * self.off[i];
        }
        y
    }

    pub fn apply_real(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| v * d).collect();
        for i in 0..n.saturating_sub(1) {
            y[i] += x[i + 1] * self.off[i];
            y[i + 1] += x[i] * self.off[i];
        }
        y
    }

    /// Real part of `Σ conj(x)·(T x)`, unweighted.
    pub fn quadratic_form(&self, x: &[Complex64]) -> f64 {
        let mut acc: f64 = self.diag.iter().zip(x).map(|(d, v)| d * v.norm_sqr()).sum();
        for i in 0..self.dim().saturating_sub(1) {
            acc += 2.0 * self.off[i] * (x[i].conj() * x[i + 1]).re;
        }
        acc
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// Magnitude used to scale tolerances.
    pub fn scale(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    /// Number of eigenvalues strictly below `lambda` (Sturm sequence).
    pub fn count_below(&self, lambda: f64) -> usize {
        let tiny = f64::EPSILON * self.scale();
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.dim() {
            let coupling = if i > 0 { self.off[i - 1].powi(2) / d } else { 0.0 };
            d = self.diag[i] - lambda - coupling;
            if d.abs() < tiny {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The k-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let tol = 2.0 * f64::EPSILON * self.scale();
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Solves a complex tridiagonal system by the Thomas algorithm. `sub[i]`
/// sits at row `i + 1`, column `i`; `sup[i]` at row `i`, column `i + 1`.
pub(crate) fn solve_tridiagonal(
    sub: &[Complex64],
    diag: &[Complex64],
    sup: &[Complex64],
    rhs: &[Complex64],
) -> Vec<Complex64> {
    let n = diag.len();
    let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    if n == 0 {
        return x;
    }
    let mut denom = diag[0];
    if n > 1 {
        c_prime[0] = sup[0] / denom;
    }
    x[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i - 1] * c_prime[i - 1];
        if i + 1 < n {
            c_prime[i] = sup[i] / denom;
        }
        x[i] = (rhs[i] - sub[i - 1] * x[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c_prime[i] * next;
    }
    x
}

/// Real symmetric positive-definite tridiagonal solve, used for inverse
/// iteration just below the lowest eigenvalue.
pub(crate) fn solve_real_tridiagonal(t: &SymTridiagonal, shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = t.dim();
    let mut c_prime = vec![0.0; n];
    let mut x = vec![0.0; n];
    if n == 0 {
        return x;
    }
    let mut denom = t.diag[0] - shift;
    if n > 1 {
        c_prime[0] = t.off[0] / denom;
    }
    x[0] = rhs[0] / denom;
    for i in 1..n {
        denom = t.diag[i] - shift - t.off[i - 1] * c_prime[i - 1];
        if i + 1 < n {
            c_prime[i] = t.off[i] / denom;
        }
        x[i] = (rhs[i] - t.off[i - 1] * x[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c_prime[i] * next;
    }
    x
}

//! Real symmetric tridiagonal eigensolver: Sturm-sequence bisection for the
//! eigenvalues and inverse iteration for the eigenvectors.

use crate::error::{domain, Result};

/// Absolute width at which eigenvalue bisection stops.
pub const EIGEN_TOL: f64 = 1e-12;

const MAX_BISECTIONS: usize = 400;
const INVERSE_ITERATIONS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    /// Guard replacing vanishing pivots in the Sturm recurrence.
    pivot_min: f64,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(domain("tridiagonal needs n diagonal and n-1 off-diagonal entries"));
        }
        if diag.iter().chain(off.iter()).any(|v| !v.is_finite()) {
            return Err(domain("tridiagonal entries must be finite"));
        }
        let max_off_sq = off.iter().map(|e| e * e).fold(1.0, f64::max);
        Ok(Self {
            diag,
            off,
            pivot_min: f64::MIN_POSITIVE * max_off_sq,
        })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// Number of eigenvalues strictly below `x` (negative pivots of `T - x I`).
    pub fn sturm_count(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < self.pivot_min {
            q = -self.pivot_min;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            let e = self.off[i - 1];
            q = (self.diag[i] - x) - e * e / q;
            if q.abs() < self.pivot_min {
                q = -self.pivot_min;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        let pad = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        (lo - pad, hi + pad)
    }

    /// The `k` smallest eigenvalues in ascending order.
    ///
    /// Every Sturm count taken while isolating one eigenvalue also tightens the
    /// brackets of the others, so later bisections start from narrow intervals.
    pub fn smallest_eigenvalues(&self, k: usize) -> Vec<f64> {
        let k = k.min(self.len());
        let (g_lo, g_hi) = self.gershgorin();
        let mut lower = vec![g_lo; k];
        let mut upper = vec![g_hi; k];
        let mut values = Vec::with_capacity(k);
        for j in 0..k {
            let (mut lo, mut hi) = (lower[j], upper[j]);
            if j > 0 {
                lo = lo.max(lower[j - 1]);
            }
            for _ in 0..MAX_BISECTIONS {
                if hi - lo <= EIGEN_TOL {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let c = self.sturm_count(mid);
                for i in j..k {
                    if i < c {
                        upper[i] = upper[i].min(mid);
                    } else {
                        lower[i] = lower[i].max(mid);
                    }
                }
                if c > j {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            values.push(0.5 * (lo + hi));
        }
        values
    }

    /// `y = T x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.off[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Unit eigenvector for the (simple) eigenvalue closest to `shift`, by inverse
    /// iteration. Returns the vector and the relative residual
    /// `‖T x - shift x‖ / max(1, |shift|)`.
    pub fn eigenvector(&self, shift: f64) -> (Vec<f64>, f64) {
        let n = self.len();
        if n == 1 {
            return (vec![1.0], (self.diag[0] - shift).abs() / shift.abs().max(1.0));
        }
        let scale = self
            .diag
            .iter()
            .chain(self.off.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let lu = TridiagonalLu::factor(&self.diag, &self.off, shift, f64::EPSILON * scale);
        // Deterministic start vector with no special alignment to any mode.
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_034).sin()).collect();
        for _ in 0..INVERSE_ITERATIONS {
            lu.solve(&mut x);
            normalize(&mut x);
        }
        let tx = self.apply(&x);
        let residual = tx
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - shift * b).powi(2))
            .sum::<f64>()
            .sqrt()
            / shift.abs().max(1.0);
        (x, residual)
    }
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

/// LU factorization with partial pivoting of `T - shift I`.
struct TridiagonalLu {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper1: Vec<f64>,
    upper2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(diag: &[f64], off: &[f64], shift: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
        let mut dl = off.to_vec();
        let mut du = off.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n - 1];
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        Self {
            lower: dl,
            diag: d,
            upper1: du,
            upper2: du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.lower[i] * b[i];
            } else {
                b[i + 1] -= self.lower[i] * b[i];
            }
        }
        b[n - 1] /= self.diag[n - 1];
        if n >= 2 {
            b[n - 2] = (b[n - 2] - self.upper1[n - 2] * b[n - 1]) / self.diag[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.upper1[i] * b[i + 1] - self.upper2[i] * b[i + 2]) / self.diag[i];
        }
    }
}

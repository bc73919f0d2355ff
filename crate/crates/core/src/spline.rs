//! Clamped C² cubic spline on a strictly increasing knot set.

use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    moments: Vec<f64>,
}

impl CubicSpline {
    /// Builds the spline with prescribed end slopes.
    pub fn clamped(knots: &[f64], values: &[f64], slope_start: f64, slope_end: f64) -> Result<Self> {
        let n = knots.len();
        if n < 3 || values.len() != n {
            return Err(domain("spline needs at least 3 knots and matching values"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain("spline knots must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("spline values must be finite"));
        }
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let slope = |i: usize| (values[i + 1] - values[i]) / h[i];

        // Tridiagonal system for the moments.
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 2.0 * h[0];
        sup[0] = h[0];
        rhs[0] = 6.0 * (slope(0) - slope_start);
        for i in 1..n - 1 {
            sub[i] = h[i - 1];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            sup[i] = h[i];
            rhs[i] = 6.0 * (slope(i) - slope(i - 1));
        }
        sub[n - 1] = h[n - 2];
        diag[n - 1] = 2.0 * h[n - 2];
        rhs[n - 1] = 6.0 * (slope_end - slope(n - 2));

        // Thomas algorithm; the matrix is strictly diagonally dominant.
        for i in 1..n {
            let m = sub[i] / diag[i - 1];
            diag[i] -= m * sup[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        let mut moments = vec![0.0; n];
        moments[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            moments[i] = (rhs[i] - sup[i] * moments[i + 1]) / diag[i];
        }
        Ok(Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            moments,
        })
    }

    pub fn start(&self) -> f64 {
        self.knots[0]
    }

    pub fn end(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value, first and second derivative at `x`. Outside the knot range the end
    /// cubic pieces are extended.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.knots.len();
        let i = match self.knots.partition_point(|&k| k <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        let value = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let d2 = a * m0 + b * m1;
        (value, d1, d2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubic_with_exact_slopes() {
        let p = |x: f64| 1.0 + x - 0.5 * x * x + 0.25 * x * x * x;
        let dp = |x: f64| 1.0 - x + 0.75 * x * x;
        let knots: Vec<f64> = (0..7).map(|i| i as f64 * 0.3).collect();
        let values: Vec<f64> = knots.iter().map(|&x| p(x)).collect();
        let s = CubicSpline::clamped(&knots, &values, dp(0.0), dp(1.8)).unwrap();
        for x in [0.0, 0.17, 0.9, 1.33, 1.8] {
            let (v, d1, d2) = s.eval(x);
            assert!((v - p(x)).abs() < 1e-12);
            assert!((d1 - dp(x)).abs() < 1e-11);
            assert!((d2 - (-1.0 + 1.5 * x)).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(CubicSpline::clamped(&[0.0, 1.0], &[0.0, 1.0], 0.0, 0.0).is_err());
        assert!(CubicSpline::clamped(&[0.0, 1.0, 1.0], &[0.0, 1.0, 2.0], 0.0, 0.0).is_err());
    }
}

//! Small numerical kernels shared by the rest of the crate: adaptive Simpson
//! quadrature, log-gamma, unit-sphere areas and a monotone bisection root finder.

use std::f64::consts::PI;

/// Absolute tolerance used for every one-dimensional integral in the crate.
pub const QUAD_TOL: f64 = 1e-12;

const MAX_DEPTH: u32 = 48;
const INITIAL_PANELS: usize = 16;

/// Integrates `f` over `[a, b]` with adaptive Simpson to absolute tolerance `tol`.
///
/// The interval is first split into a fixed number of panels so that sharply
/// peaked integrands are not misjudged by the first five samples.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let width = (hi - lo) / INITIAL_PANELS as f64;
    let panel_tol = tol / INITIAL_PANELS as f64;
    let mut total = 0.0;
    for p in 0..INITIAL_PANELS {
        let x0 = lo + p as f64 * width;
        let x1 = if p + 1 == INITIAL_PANELS { hi } else { x0 + width };
        let m = 0.5 * (x0 + x1);
        let (f0, fm, f1) = (f(x0), f(m), f(x1));
        let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total += simpson_step(&f, x0, x1, f0, fm, f1, whole, panel_tol, MAX_DEPTH);
    }
    sign * total
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Natural log of the gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Log of the area of the unit sphere S^{d-1} in R^d: ln(2 pi^{d/2} / Gamma(d/2)).
pub fn ln_unit_sphere_area(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    std::f64::consts::LN_2 + half * PI.ln() - ln_gamma(half)
}

/// Area of the unit sphere S^{d-1} in R^d (so `unit_sphere_area(2) = 2 pi`).
pub fn unit_sphere_area(d: usize) -> f64 {
    ln_unit_sphere_area(d).exp()
}

/// Finds `x` in `[lo, hi]` with `g(x) = target` for nondecreasing `g`, by bisection
/// until the bracket collapses to adjacent floats.
pub fn bisect_increasing<G: Fn(f64) -> f64>(g: G, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `n` points evenly spaced in `[a, b]`, or log-spaced when `log` is set.
pub fn grid(a: f64, b: f64, count: usize, log: bool) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..count)
            .map(|i| {
                let s = i as f64 / (count - 1) as f64;
                if i == 0 {
                    a
                } else if i + 1 == count {
                    b
                } else if log {
                    (a.ln() + s * (b.ln() - a.ln())).exp()
                } else {
                    a + s * (b - a)
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_and_trig() {
        let v = adaptive_simpson(|x| x * x * x, 0.0, 2.0, QUAD_TOL);
        assert!((v - 4.0).abs() < 1e-13);
        let v = adaptive_simpson(f64::sin, 0.0, PI, QUAD_TOL);
        assert!((v - 2.0).abs() < 1e-12);
        let v = adaptive_simpson(f64::sin, PI, 0.0, QUAD_TOL);
        assert!((v + 2.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_peaked_integrand() {
        // integral of sin^199 over [0, pi] = sqrt(pi) Gamma(100) / Gamma(100.5)
        let exact = (0.5 * PI.ln() + ln_gamma(100.0) - ln_gamma(100.5)).exp();
        let v = adaptive_simpson(|x| x.sin().powi(199), 0.0, PI, QUAD_TOL);
        assert!((v - exact).abs() < 1e-11, "{v} vs {exact}");
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        // large d stays finite in log space
        assert!(ln_unit_sphere_area(400).is_finite());
    }

    #[test]
    fn lgamma_values() {
        assert!(ln_gamma(1.0).abs() < 1e-15);
        assert!((ln_gamma(0.5) - 0.5 * PI.ln()).abs() < 1e-15);
        assert!((ln_gamma(10.0) - 362880f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn bisection_and_grid() {
        let x = bisect_increasing(|x| x * x, 2.0, 0.0, 2.0);
        assert!((x - 2f64.sqrt()).abs() < 1e-15);
        let g = grid(0.05, 5.0, 16, true);
        assert_eq!(g.len(), 16);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[15], 5.0);
        assert!((g[1] / g[0] - g[2] / g[1]).abs() < 1e-12);
    }
}

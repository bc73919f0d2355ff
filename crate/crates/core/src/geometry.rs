//! Rotationally symmetric model manifolds `dr² + f(r)² g_{S^{n-1}}` with a
//! smooth pole at `r = 0` and boundary at `r = r_max`, together with the
//! curvature/convexity certificate and the comparison-sphere volume profile.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Hypothesis, Result};
use crate::numerics::{adaptive_simpson, bisect_increasing, unit_sphere_area, QUAD_TOL};
use crate::spline::CubicSpline;

/// Warp profile and its first two derivatives at one radius. `one_minus_df2`
/// carries `1 - f'²` separately so that the tangential curvature stays accurate
/// near the pole, where it is a ratio of two vanishing quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpSample {
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
    pub one_minus_df2: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Warp {
    /// `f(r) = scale · sin(r / scale)` with `scale = √((n-1)/ρ₀)`.
    Round { rho0: f64, scale: f64 },
    /// `f(r) = r · g(r)` with `g` a clamped cubic spline through `f_i / r_i`,
    /// `g(0) = 1`, `g'(0) = 0`, which pins `f(0) = 0`, `f'(0) = 1`, `f''(0) = 0`.
    Sampled { ratio: CubicSpline, samples: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpedProductModel {
    n: usize,
    r_max: f64,
    warp: Warp,
    cap_fraction: Option<f64>,
}

/// Builds the geodesic cap of the round n-sphere of Ricci curvature `rho0`, cut
/// at radius `cap_fraction · (π/2) · √((n-1)/rho0)`.
pub fn make_round_cap(n: usize, rho0: f64, cap_fraction: f64) -> Result<WarpedProductModel> {
    if n < 2 {
        return Err(Error::InvalidModel(format!("dimension n = {n} must be at least 2")));
    }
    if !(rho0 > 0.0) || !rho0.is_finite() {
        return Err(Error::InvalidModel(format!("rho0 = {rho0} must be positive")));
    }
    if !(cap_fraction > 0.0) {
        return Err(Error::InvalidModel(format!(
            "cap_fraction = {cap_fraction} must be positive"
        )));
    }
    let scale = ((n - 1) as f64 / rho0).sqrt();
    if cap_fraction > 1.0 {
        return Err(Error::Hypothesis {
            hypothesis: Hypothesis::ConvexBoundary,
            value: (cap_fraction * PI / 2.0).tan().recip() / scale,
        });
    }
    Ok(WarpedProductModel {
        n,
        r_max: cap_fraction * PI / 2.0 * scale,
        warp: Warp::Round { rho0, scale },
        cap_fraction: Some(cap_fraction),
    })
}

/// Builds a model from warp samples `f(r_i)` on the uniform grid
/// `r_i = i · r_max / (len - 1)`; `samples[0]` must be 0.
pub fn make_warped(n: usize, r_max: f64, samples: &[f64]) -> Result<WarpedProductModel> {
    if n < 2 {
        return Err(Error::InvalidModel(format!("dimension n = {n} must be at least 2")));
    }
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::InvalidModel(format!("r_max = {r_max} must be positive")));
    }
    if samples.len() < 4 {
        return Err(Error::InvalidModel("need at least 4 warp samples".into()));
    }
    if samples[0].abs() > 1e-12 {
        return Err(Error::InvalidModel(format!(
            "warp must vanish at the pole, got f(0) = {}",
            samples[0]
        )));
    }
    if let Some(i) = samples.iter().skip(1).position(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidModel(format!("warp sample {} is not positive", i + 1)));
    }
    let m = samples.len() - 1;
    let h = r_max / m as f64;
    let knots: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    let mut ratios = Vec::with_capacity(m + 1);
    ratios.push(1.0);
    ratios.extend((1..=m).map(|i| samples[i] / knots[i]));
    let end_slope = (11.0 * ratios[m] - 18.0 * ratios[m - 1] + 9.0 * ratios[m - 2] - 2.0 * ratios[m - 3]) / (6.0 * h);
    let ratio = CubicSpline::clamped(&knots, &ratios, 0.0, end_slope)?;
    Ok(WarpedProductModel {
        n,
        r_max,
        warp: Warp::Sampled {
            ratio,
            samples: samples.to_vec(),
        },
        cap_fraction: None,
    })
}

impl WarpedProductModel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn is_round(&self) -> bool {
        matches!(self.warp, Warp::Round { .. })
    }

    /// Nominal curvature of a round cap.
    pub fn rho0(&self) -> Option<f64> {
        match self.warp {
            Warp::Round { rho0, .. } => Some(rho0),
            Warp::Sampled { .. } => None,
        }
    }

    pub fn cap_fraction(&self) -> Option<f64> {
        self.cap_fraction
    }

    /// Raw warp samples of a sampled model.
    pub fn warp_samples(&self) -> Option<&[f64]> {
        match &self.warp {
            Warp::Round { .. } => None,
            Warp::Sampled { samples, .. } => Some(samples),
        }
    }

    pub fn warp(&self, r: f64) -> WarpSample {
        match &self.warp {
            Warp::Round { scale, .. } => {
                let (s, c) = (r / scale).sin_cos();
                WarpSample {
                    f: scale * s,
                    df: c,
                    d2f: -s / scale,
                    one_minus_df2: s * s,
                }
            }
            Warp::Sampled { ratio, .. } => {
                let (g, dg, d2g) = ratio.eval(r);
                let df = g + r * dg;
                // 1 - (g + r g')² = (1 - g)(1 + g) - r g' (2g + r g')
                let one_minus_df2 = (1.0 - g) * (1.0 + g) - r * dg * (2.0 * g + r * dg);
                WarpSample {
                    f: r * g,
                    df,
                    d2f: 2.0 * dg + r * d2g,
                    one_minus_df2,
                }
            }
        }
    }

    /// Warp weight `f(r)^{n-1}`.
    pub fn weight(&self, r: f64) -> f64 {
        self.warp(r).f.powi(self.n as i32 - 1)
    }

    /// Largest warp value on `[0, r_max]`, used for the angular completeness bound.
    pub fn max_warp(&self) -> f64 {
        match &self.warp {
            Warp::Round { scale, .. } => scale * (self.r_max / scale).min(PI / 2.0).sin(),
            Warp::Sampled { .. } => {
                let steps = 4000;
                (0..=steps)
                    .map(|i| self.warp(self.r_max * i as f64 / steps as f64).f)
                    .fold(0.0, f64::max)
                    * (1.0 + 1e-6)
            }
        }
    }

    /// Smaller of the radial and tangential Ricci eigenvalues at radius `r > 0`.
    pub fn ricci_min(&self, r: f64) -> f64 {
        let w = self.warp(r);
        let n = self.n as f64;
        let radial = -(n - 1.0) * w.d2f / w.f;
        let tangential = -w.d2f / w.f + (n - 2.0) * w.one_minus_df2 / (w.f * w.f);
        radial.min(tangential)
    }

    /// Volume of the sub-cap `{r <= radius}` (clamped to the model).
    pub fn ball_volume_at_pole(&self, radius: f64) -> f64 {
        let top = radius.clamp(0.0, self.r_max);
        unit_sphere_area(self.n) * adaptive_simpson(|r| self.weight(r), 0.0, top, QUAD_TOL)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    /// Certified Ricci lower bound.
    pub rho_eff: f64,
    /// Smallest eigenvalue of the second fundamental form of the boundary.
    pub pi_min: f64,
    pub volume: f64,
    pub diameter: f64,
    /// False when `diameter` is only the upper estimate `2 r_max`.
    pub diameter_exact: bool,
}

/// Measures curvature, convexity, volume and diameter without enforcing the
/// hypotheses.
pub fn measure_geometry(model: &WarpedProductModel) -> GeometryReport {
    let grid_points = match &model.warp {
        Warp::Round { .. } => 1000,
        Warp::Sampled { samples, .. } => 10 * samples.len(),
    };
    let r_max = model.r_max;
    let ricci = |r: f64| model.ricci_min(r);
    let mut best = (f64::INFINITY, 1usize);
    for i in 1..=grid_points {
        let v = ricci(r_max * i as f64 / grid_points as f64);
        if v < best.0 {
            best = (v, i);
        }
    }
    let step = r_max / grid_points as f64;
    let lo = ((best.1 - 1) as f64 * step).max(0.5 * step);
    let hi = r_max * (best.1 + 1).min(grid_points) as f64 / grid_points as f64;
    let rho_eff = best.0.min(golden_min(ricci, lo, hi));

    let end = model.warp(r_max);
    let volume = model.ball_volume_at_pole(r_max);
    GeometryReport {
        rho_eff,
        pi_min: end.df / end.f,
        volume,
        diameter: 2.0 * r_max,
        diameter_exact: model.is_round(),
    }
}

/// Certifies `Ric >= rho_eff > 0` and a convex boundary, and returns the
/// geometric quantities consumed by the bounds.
pub fn curvature_report(model: &WarpedProductModel) -> Result<GeometryReport> {
    let report = measure_geometry(model);
    if !(report.rho_eff > 0.0) {
        return Err(Error::Hypothesis {
            hypothesis: Hypothesis::PositiveRicci,
            value: report.rho_eff,
        });
    }
    // The hemisphere has f'(r_max) = cos(pi/2) which rounds to ~6e-17.
    if report.pi_min < -1e-12 {
        return Err(Error::Hypothesis {
            hypothesis: Hypothesis::ConvexBoundary,
            value: report.pi_min,
        });
    }
    Ok(report)
}

fn golden_min<F: Fn(f64) -> f64>(g: F, mut a: f64, mut b: f64) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..80 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + phi * (b - a);
            gd = g(d);
        }
    }
    gc.min(gd)
}

/// Diameter `π √((n-1)/ρ)` of the comparison sphere.
pub fn comparison_diameter(rho: f64, n: usize) -> f64 {
    PI * ((n - 1) as f64 / rho).sqrt()
}

fn check_comparison_args(rho: f64, n: usize) -> Result<()> {
    if n < 2 {
        return Err(domain(format!("comparison volume needs n >= 2, got {n}")));
    }
    if !(rho > 0.0) {
        return Err(domain(format!("comparison volume needs rho > 0, got {rho}")));
    }
    Ok(())
}

/// `V_ρ(s) = ∫₀ˢ sin^{n-1}(√(ρ/(n-1)) u) du` for `0 <= s <= π √((n-1)/ρ)`.
pub fn comparison_volume(rho: f64, n: usize, s: f64) -> Result<f64> {
    check_comparison_args(rho, n)?;
    let top = comparison_diameter(rho, n);
    if !(s >= 0.0) || s > top * (1.0 + 1e-12) {
        return Err(domain(format!("s = {s} outside [0, {top}]")));
    }
    Ok(comparison_volume_unchecked(rho, n, s.min(top)))
}

fn comparison_volume_unchecked(rho: f64, n: usize, s: f64) -> f64 {
    let kappa = (rho / (n - 1) as f64).sqrt();
    let power = n as i32 - 1;
    adaptive_simpson(|u| (kappa * u).sin().powi(power), 0.0, s, QUAD_TOL)
}

/// Inverse of [`comparison_volume`] by bracketed bisection.
pub fn comparison_volume_inverse(rho: f64, n: usize, v: f64) -> Result<f64> {
    check_comparison_args(rho, n)?;
    let top = comparison_diameter(rho, n);
    let full = comparison_volume_unchecked(rho, n, top);
    if !(v >= 0.0) || v > full * (1.0 + 1e-12) {
        return Err(domain(format!("v = {v} outside [0, {full}]")));
    }
    if v == 0.0 {
        return Ok(0.0);
    }
    Ok(bisect_increasing(
        |s| comparison_volume_unchecked(rho, n, s),
        v,
        0.0,
        top,
    ))
}

/// A point `(r, θ)`: radius from the pole and an angle along one great circle of
/// the angular sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub r: f64,
    pub theta: f64,
}

impl Point {
    pub fn new(r: f64, theta: f64) -> Self {
        Self { r, theta }
    }

    pub fn radial(r: f64) -> Self {
        Self { r, theta: 0.0 }
    }
}

/// Intrinsic distance between two co-planar points. Co-radial pairs are exact on
/// every model (the radius is 1-Lipschitz and the meridian realizes it); general
/// pairs are supported on round caps only.
pub fn geodesic_distance(model: &WarpedProductModel, x: Point, y: Point) -> Result<f64> {
    // a fixed argument order makes the result bitwise symmetric
    let (x, y) = if (x.r, x.theta) <= (y.r, y.theta) {
        (x, y)
    } else {
        (y, x)
    };
    let dtheta = angle_gap(x.theta, y.theta);
    if dtheta == 0.0 {
        return Ok((x.r - y.r).abs());
    }
    match model.warp {
        Warp::Round { scale, .. } => {
            let (a1, a2) = (x.r / scale, y.r / scale);
            // haversine form, accurate for short distances
            let h = (0.5 * (a1 - a2)).sin().powi(2) + a1.sin() * a2.sin() * (0.5 * dtheta).sin().powi(2);
            Ok(2.0 * scale * h.clamp(0.0, 1.0).sqrt().asin())
        }
        Warp::Sampled { .. } => Err(Error::Unsupported(
            "geodesic distance between non-co-radial points needs a round cap".into(),
        )),
    }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

//! Closed-form evaluators for the explicit heat-kernel, Harnack, trace and
//! eigenvalue bounds on a compact manifold with `Ric >= ρ > 0` and convex
//! boundary. Everything here is a pure function of `(n, ρ, μ(M), D(M))` and
//! time or index arguments.
//!
//! Quantities that overflow for large `n` or `k` are assembled in log space with
//! `exp_m1`/`ln_1p`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::{comparison_diameter, comparison_volume, comparison_volume_inverse};
use crate::numerics::ln_gamma;

use std::f64::consts::{LN_2, PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub rho: f64,
    pub mu: f64,
    pub diam: f64,
}

impl BoundInputs {
    pub fn new(n: usize, rho: f64, mu: f64, diam: f64) -> Result<Self> {
        if n < 2 {
            return Err(domain(format!("n = {n} must be at least 2")));
        }
        for (name, v) in [("rho", rho), ("mu", mu), ("diam", diam)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(domain(format!("{name} = {v} must be positive and finite")));
            }
        }
        Ok(Self { n, rho, mu, diam })
    }
}

fn half_n(n: usize) -> f64 {
    n as f64 / 2.0
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("time must be positive, got {t}")))
    }
}

/// `ln(1 - e^{-2ρt/3})`.
fn ln_one_minus_decay(rho: f64, t: f64) -> f64 {
    (-(-2.0 * rho * t / 3.0).exp_m1()).ln()
}

/// Coefficients of the gradient estimate
/// `|∇ ln P_t f|² <= a · ΔP_t f / P_t f + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiYauCoeffs {
    pub a: f64,
    pub b: f64,
}

pub fn liyau_coeffs(n: usize, rho: f64, t: f64) -> Result<LiYauCoeffs> {
    check_time(t)?;
    let x = 2.0 * rho * t / 3.0;
    let a = (-x).exp();
    // (nρ/3) e^{-2x} / (1 - e^{-x})
    let b = n as f64 * rho / 3.0 * (-2.0 * x).exp() / -(-x).exp_m1();
    Ok(LiYauCoeffs { a, b })
}

/// Natural log of the Harnack factor; `+∞` at `s = 0`.
pub fn ln_harnack_factor(n: usize, rho: f64, s: f64, t: f64, d: f64) -> Result<f64> {
    if !(s >= 0.0) || !(t > s) || !t.is_finite() {
        return Err(domain(format!("Harnack factor needs 0 <= s < t, got s = {s}, t = {t}")));
    }
    if !(d >= 0.0) {
        return Err(domain(format!("distance must be nonnegative, got {d}")));
    }
    if s == 0.0 {
        return Ok(f64::INFINITY);
    }
    let power = half_n(n) * (ln_one_minus_decay(rho, t) - ln_one_minus_decay(rho, s));
    // e^{2ρt/3} - e^{2ρs/3} = e^{2ρs/3} (e^{2ρ(t-s)/3} - 1)
    let gap = (2.0 * rho * s / 3.0).exp() * (2.0 * rho * (t - s) / 3.0).exp_m1();
    Ok(power + rho / 6.0 * d * d / gap)
}

/// Multiplicative factor `H` in `P_s f(x) <= H · P_t f(y)` for `0 <= s < t`,
/// `d = d(x, y)`. The `s = 0` factor diverges and is returned as `+∞`.
pub fn harnack_factor(n: usize, rho: f64, s: f64, t: f64, d: f64) -> Result<f64> {
    Ok(ln_harnack_factor(n, rho, s, t, d)?.exp())
}

/// Lower and upper on-diagonal bounds for `p(t, x, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
}

pub fn ondiag_bounds(n: usize, rho: f64, mu: f64, t: f64) -> Result<Sandwich> {
    check_time(t)?;
    let common = -half_n(n) * ln_one_minus_decay(rho, t);
    Ok(Sandwich {
        lower: (half_n(n) * (rho / (6.0 * PI)).ln() + common).exp(),
        upper: (common - mu.ln()).exp(),
    })
}

/// Lower and upper bounds for the heat trace `Σ e^{-λ_k t}`.
pub fn trace_bounds(n: usize, rho: f64, mu: f64, t: f64) -> Result<Sandwich> {
    let on = ondiag_bounds(n, rho, mu, t)?;
    Ok(Sandwich {
        lower: on.lower * mu,
        upper: on.upper * mu,
    })
}

/// `r(t) = (3n/ρ)(e^{4ρt/3} - e^{2ρt/3})`, the squared ball radius in the
/// volume-refined upper bound.
pub fn r_of_t(n: usize, rho: f64, t: f64) -> f64 {
    let x = 2.0 * rho * t / 3.0;
    3.0 * n as f64 / rho * x.exp() * x.exp_m1()
}

/// Crossover time `τ = (3/2ρ) ln((1 + √(1 + 4ρD²/3n))/2)`, where `r(τ) = D²`.
pub fn crossover_time(n: usize, rho: f64, diam: f64) -> f64 {
    let x = 4.0 * rho * diam * diam / (3.0 * n as f64);
    // (1 + √(1+x))/2 = 1 + (√(1+x) - 1)/2 and √(1+x) - 1 = x/(√(1+x) + 1)
    1.5 / rho * (0.5 * x / ((1.0 + x).sqrt() + 1.0)).ln_1p()
}

/// Prefactor `(1 + e^{-2ρt/3})^{n/2} e^{n/2}` shared by the ball-volume bounds.
fn ball_prefactor_ln(n: usize, rho: f64, t: f64) -> f64 {
    half_n(n) * ((-2.0 * rho * t / 3.0).exp().ln_1p() + 1.0)
}

/// `p(t,x,x) <= (1 + e^{-2ρt/3})^{n/2} e^{n/2} / μ(B(x, √r(t)))` for a known
/// ball volume.
pub fn ball_upper(n: usize, rho: f64, ball_volume: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    if !(ball_volume > 0.0) {
        return Err(domain(format!("ball volume must be positive, got {ball_volume}")));
    }
    Ok((ball_prefactor_ln(n, rho, t) - ball_volume.ln()).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    SmallTime,
    LargeTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedUpper {
    pub value: f64,
    pub branch: Branch,
    pub r_of_t: f64,
    pub tau: f64,
    /// Set when `√r(t)` exceeded the comparison diameter and `V_ρ(√r(t))` was
    /// clamped to its maximum.
    pub clamped: bool,
}

/// Diameter-dependent upper bound on `p(t, x, x)` via Bishop-Gromov comparison.
pub fn refined_upper(inputs: &BoundInputs, t: f64) -> Result<RefinedUpper> {
    check_time(t)?;
    let BoundInputs { n, rho, mu, diam } = *inputs;
    let tau = crossover_time(n, rho, diam);
    let r = r_of_t(n, rho, t);
    let base = ball_prefactor_ln(n, rho, t) - mu.ln();
    if t >= tau {
        return Ok(RefinedUpper {
            value: base.exp(),
            branch: Branch::LargeTime,
            r_of_t: r,
            tau,
            clamped: false,
        });
    }
    let top = comparison_diameter(rho, n);
    let radius = r.sqrt();
    let clamped = radius > top;
    let v_diam = comparison_volume(rho, n, clamp_to_comparison(diam, top)?)?;
    let v_ball = comparison_volume(rho, n, radius.min(top))?;
    Ok(RefinedUpper {
        value: (base + v_diam.ln() - v_ball.ln()).exp(),
        branch: Branch::SmallTime,
        r_of_t: r,
        tau,
        clamped,
    })
}

/// Diameters of admissible models never exceed the comparison diameter; allow
/// for the last bits of a certified curvature that rounds slightly high.
fn clamp_to_comparison(diam: f64, top: f64) -> Result<f64> {
    if diam > top * (1.0 + 1e-9) {
        return Err(domain(format!(
            "diameter {diam} exceeds the comparison diameter {top}; curvature bound inconsistent"
        )));
    }
    Ok(diam.min(top))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenLowerBounds {
    pub bound1: f64,
    /// Present only when `k > 2^{n/2} e^n - e^{n/2}`.
    pub bound2: Option<f64>,
}

/// `2^{n/2} e^n - e^{n/2}`; `bound2` is valid for indices strictly above it.
pub fn bound2_threshold(n: usize) -> f64 {
    let h = half_n(n);
    h.exp() * ((h * LN_2 + h).exp() - 1.0)
}

/// `−nρ / (3 ln(1 − (1 + e^{−n/2}k)^{−2/n}))`, with the `k = 0` limit 0.
pub fn eigen_bound1(n: usize, rho: f64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let x = (k as f64 * (-nf / 2.0).exp()).ln_1p();
    // 1 - (1 + k e^{-n/2})^{-2/n} = -expm1(-2x/n)
    let ln_gap = (-(-2.0 * x / nf).exp_m1()).ln();
    -nf * rho / (3.0 * ln_gap)
}

/// Diameter-dependent bound, or `None` below the validity threshold.
pub fn eigen_bound2(n: usize, rho: f64, diam: f64, k: u64) -> Result<Option<f64>> {
    if !(k as f64 > bound2_threshold(n)) {
        return Ok(None);
    }
    let nf = n as f64;
    let top = comparison_diameter(rho, n);
    let v_diam = comparison_volume(rho, n, clamp_to_comparison(diam, top)?)?;
    let ln_v = half_n(n) * (LN_2 + 1.0) - (k as f64 * (-nf / 2.0).exp()).ln_1p() + v_diam.ln();
    let s = comparison_volume_inverse(rho, n, ln_v.exp())?;
    let x = 4.0 * rho * s * s / (3.0 * nf);
    let ln_mid = (0.5 * x / ((1.0 + x).sqrt() + 1.0)).ln_1p();
    Ok(Some(nf * rho / (3.0 * ln_mid)))
}

pub fn eigen_lower_bounds(n: usize, rho: f64, diam: f64, k: u64) -> Result<EigenLowerBounds> {
    Ok(EigenLowerBounds {
        bound1: eigen_bound1(n, rho, k),
        bound2: eigen_bound2(n, rho, diam, k)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptotics {
    /// `(nρ/3e) k^{2/n}`.
    pub lb1_asym: f64,
    /// `(n/2e²)(nρ/(n−1))^{1−1/n} (k/V_ρ(D))^{2/n}`, the stated large-k form of
    /// the diameter-dependent bound.
    pub lb2_asym: f64,
    /// Leading term obtained by expanding `eigen_bound2` directly:
    /// `V_ρ(s) ~ (ρ/(n−1))^{(n−1)/2} sⁿ/n` as `s → 0` gives `lb2_asym · n^{−1/n}`.
    pub lb2_leading: f64,
    /// Weyl law `((4π)^{n/2} Γ(1+n/2) k / μ)^{2/n}`.
    pub weyl: f64,
}

pub fn asymptotics(inputs: &BoundInputs, k: u64) -> Result<Asymptotics> {
    if k == 0 {
        return Err(domain("asymptotics need k >= 1"));
    }
    let BoundInputs { n, rho, mu, diam } = *inputs;
    let nf = n as f64;
    let ln_k = (k as f64).ln();
    let top = comparison_diameter(rho, n);
    let v_diam = comparison_volume(rho, n, clamp_to_comparison(diam, top)?)?;
    let lb1_asym = (nf * rho / (3.0 * std::f64::consts::E)).ln() + 2.0 / nf * ln_k;
    let lb2_asym =
        (nf / 2.0).ln() - 2.0 + (1.0 - 1.0 / nf) * (nf * rho / (nf - 1.0)).ln() + 2.0 / nf * (ln_k - v_diam.ln());
    let weyl = (4.0 * PI).ln() + 2.0 / nf * (ln_gamma(1.0 + nf / 2.0) + ln_k - mu.ln());
    Ok(Asymptotics {
        lb1_asym: lb1_asym.exp(),
        lb2_asym: lb2_asym.exp(),
        lb2_leading: (lb2_asym - nf.ln() / nf).exp(),
        weyl: weyl.exp(),
    })
}

/// Volume bound implied by the on-diagonal sandwich against the Bishop bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeBounds {
    /// `(6π/ρ)^{n/2}`.
    pub sandwich_bound: f64,
    /// Volume of the round n-sphere of radius `√((n−1)/ρ)`.
    pub bishop_bound: f64,
    pub ratio: f64,
    pub ln_sandwich_bound: f64,
    pub ln_bishop_bound: f64,
    pub ln_ratio: f64,
}

pub fn volume_bounds(n: usize, rho: f64) -> Result<VolumeBounds> {
    if n < 2 || !(rho > 0.0) {
        return Err(domain(format!(
            "volume bounds need n >= 2 and rho > 0, got n = {n}, rho = {rho}"
        )));
    }
    let nf = n as f64;
    let ln_sandwich = half_n(n) * (6.0 * PI / rho).ln();
    let ln_bishop =
        LN_2 + (nf + 1.0) / 2.0 * PI.ln() - ln_gamma((nf + 1.0) / 2.0) + half_n(n) * ((nf - 1.0) / rho).ln();
    Ok(VolumeBounds {
        sandwich_bound: ln_sandwich.exp(),
        bishop_bound: ln_bishop.exp(),
        ratio: (ln_sandwich - ln_bishop).exp(),
        ln_sandwich_bound: ln_sandwich,
        ln_bishop_bound: ln_bishop,
        ln_ratio: ln_sandwich - ln_bishop,
    })
}

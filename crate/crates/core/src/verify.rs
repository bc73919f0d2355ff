//! Numerical verification harness: evaluates each bound against spectral ground
//! truth on parameter grids and collects the outcomes in a
//! [`VerificationReport`].
//!
//! Every instance is evaluated on the configured mesh and, when refinement is on,
//! on a mesh twice as fine. Reported values come from the finer solution, and the
//! difference between the two joins truncation tails in the error budget. An
//! instance fails only if `rhs - lhs < -(relative · |rhs| + budget)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    asymptotics, ball_upper, bound2_threshold, eigen_bound1, eigen_bound2, harnack_factor, liyau_coeffs, ondiag_bounds,
    r_of_t, refined_upper, trace_bounds, BoundInputs,
};
use crate::config::{RunConfig, SolverConfig};
use crate::error::{Error, Result};
use crate::format::sig;
use crate::geometry::{
    comparison_diameter, curvature_report, geodesic_distance, GeometryReport, Point, WarpedProductModel,
};
use crate::numerics::grid;
use crate::spectral::{assemble_spectrum, RadialProjection, SpectrumTable};
use crate::spline::CubicSpline;

/// Largest acceptable ratio of truncation tail to the compared values.
pub const RESOLUTION_FRACTION: f64 = 0.01;
/// Largest acceptable relative trace tail at half the smallest generated time.
pub const TRACE_TAIL_TARGET: f64 = 1e-6;
/// Index used for the large-k ratio checks (raised for high dimensions).
pub const ASYMPTOTIC_K: u64 = 100_000_000;
pub const ASYMPTOTIC_BAND: f64 = 0.01;
/// Computed eigenvalues must lie within this factor of the Weyl law.
pub const WEYL_BAND: f64 = 2.0;
/// Radii per axis in Harnack pair and triple sampling.
const HARNACK_POINTS: usize = 5;
const ROUNDOFF: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CheckId {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    C9,
    C10,
    C11,
}

impl CheckId {
    pub const ALL: [CheckId; 11] = [
        CheckId::C1,
        CheckId::C2,
        CheckId::C3,
        CheckId::C4,
        CheckId::C5,
        CheckId::C6,
        CheckId::C7,
        CheckId::C8,
        CheckId::C9,
        CheckId::C10,
        CheckId::C11,
    ];

    pub fn all() -> Vec<CheckId> {
        Self::ALL.to_vec()
    }

    pub fn description(self) -> &'static str {
        match self {
            CheckId::C1 => "Li-Yau gradient estimate",
            CheckId::C2 => "Harnack inequality for P_t f",
            CheckId::C3 => "Harnack inequality for the heat kernel",
            CheckId::C4 => "on-diagonal kernel sandwich",
            CheckId::C5 => "ball-volume kernel upper bound",
            CheckId::C6 => "diameter-dependent kernel upper bound",
            CheckId::C7 => "heat trace sandwich",
            CheckId::C8 => "eigenvalue lower bounds",
            CheckId::C9 => "large-index consistency",
            CheckId::C10 => "submartingale inequality",
            CheckId::C11 => "gradient contraction",
        }
    }

    fn is_spectral(self) -> bool {
        matches!(self, CheckId::C7 | CheckId::C8 | CheckId::C9)
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown check id `{s}` (expected C1..C11)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped(String),
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped(_) => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub value: f64,
}

fn params(pairs: &[(&str, f64)]) -> Vec<Param> {
    pairs
        .iter()
        .map(|(name, value)| Param {
            name: (*name).to_string(),
            value: *value,
        })
        .collect()
}

/// One inequality instance `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_id: CheckId,
    pub variant: String,
    pub params: Vec<Param>,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    /// Tolerated shortfall: relative tolerance plus the numerical error budget.
    pub slack: f64,
    #[serde(flatten)]
    pub status: Status,
}

impl CheckResult {
    fn skipped(check_id: CheckId, variant: &str, params: Vec<Param>, reason: String) -> Self {
        Self {
            check_id,
            variant: variant.into(),
            params,
            lhs: 0.0,
            rhs: 0.0,
            margin: 0.0,
            slack: 0.0,
            status: Status::Skipped(reason),
        }
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckAggregate {
    pub check_id: CheckId,
    pub count: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    /// Smallest `margin + slack` among evaluated instances.
    pub min_margin: Option<f64>,
    /// Index into [`VerificationReport::results`] of that instance.
    pub worst: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub mesh_points: usize,
    pub refined_mesh_points: Option<usize>,
    pub l_max: usize,
    pub modes_per_l: usize,
    pub lambda_cut: f64,
    pub certified_eigenvalues: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub config: RunConfig,
    pub geometry: GeometryReport,
    pub bound_inputs: BoundInputs,
    pub spectrum: SpectrumMeta,
    pub t_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub aggregates: Vec<CheckAggregate>,
    pub results: Vec<CheckResult>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("report JSON: {e}")))
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.results.iter().filter(|r| r.status == Status::Fail)
    }

    /// Header of [`VerificationReport::csv_rows`].
    pub fn csv_header() -> Vec<&'static str> {
        vec![
            "check_id", "variant", "params", "lhs", "rhs", "margin", "slack", "status", "reason",
        ]
    }

    /// One row per result; parameters flatten to `name=value` pairs joined by `;`.
    pub fn csv_rows(&self, precision: usize) -> Vec<Vec<String>> {
        self.results
            .iter()
            .map(|r| {
                let params = r
                    .params
                    .iter()
                    .map(|p| format!("{}={}", p.name, sig(p.value, precision)))
                    .collect::<Vec<_>>()
                    .join(";");
                let reason = match &r.status {
                    Status::Skipped(reason) => reason.clone(),
                    _ => String::new(),
                };
                vec![
                    r.check_id.to_string(),
                    r.variant.clone(),
                    params,
                    sig(r.lhs, precision),
                    sig(r.rhs, precision),
                    sig(r.margin, precision),
                    sig(r.slack, precision),
                    r.status.label().to_string(),
                    reason,
                ]
            })
            .collect()
    }
}

/// Spectrum on the configured mesh and, optionally, on the doubled mesh.
#[derive(Debug, Clone)]
pub struct SpectrumPair {
    pub coarse: SpectrumTable,
    pub fine: Option<SpectrumTable>,
}

impl SpectrumPair {
    /// The most accurate available solution.
    pub fn best(&self) -> &SpectrumTable {
        self.fine.as_ref().unwrap_or(&self.coarse)
    }

    fn reference(&self) -> Option<&SpectrumTable> {
        self.fine.as_ref().map(|_| &self.coarse)
    }
}

pub fn solve_spectra(model: &WarpedProductModel, solver: &SolverConfig) -> Result<SpectrumPair> {
    let coarse = assemble_spectrum(model, solver.l_max, solver.mesh_points, solver.modes_per_l)?;
    let fine = if solver.refine {
        Some(assemble_spectrum(
            model,
            solver.l_max,
            2 * solver.mesh_points,
            solver.modes_per_l,
        )?)
    } else {
        None
    };
    Ok(SpectrumPair { coarse, fine })
}

/// Bound inputs from a certified geometry. The diameter is capped at the
/// comparison diameter, which bounds the true diameter.
pub fn bound_inputs(model: &WarpedProductModel, geometry: &GeometryReport) -> Result<BoundInputs> {
    let diam = geometry.diameter.min(comparison_diameter(geometry.rho_eff, model.n()));
    BoundInputs::new(model.n(), geometry.rho_eff, geometry.volume, diam)
}

/// Evaluation grids after applying defaults and the spectral tail target.
#[derive(Debug, Clone, PartialEq)]
pub struct Grids {
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub notes: Vec<String>,
}

/// Without a spectrum the generated time grid is used as configured.
pub fn build_grids(config: &RunConfig, spectrum: Option<&SpectrumTable>, rho: f64, r_max: f64) -> Result<Grids> {
    let mut notes = Vec::new();
    let tc = &config.grids.t;
    let t = match &tc.values {
        Some(values) => values.clone(),
        None => {
            let scale = if tc.scaled { 1.0 / rho } else { 1.0 };
            let (mut lo, hi) = (tc.min * scale, tc.max * scale);
            // Harnack checks evaluate at s = t/2.
            let resolved = |t: f64| -> Result<bool> {
                let Some(spectrum) = spectrum else { return Ok(true) };
                let tr = spectrum.heat_trace(0.5 * t)?;
                Ok(tr.tail_bound <= TRACE_TAIL_TARGET * tr.value)
            };
            if !resolved(lo)? {
                if !resolved(hi)? {
                    return Err(Error::Truncation(format!(
                        "trace tail exceeds {TRACE_TAIL_TARGET:e} relative even at t = {hi}; increase l_max"
                    )));
                }
                let (mut a, mut b) = (lo, hi);
                for _ in 0..60 {
                    let mid = (a * b).sqrt();
                    if resolved(mid)? {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                notes.push(format!(
                    "smallest time raised from {lo} to {b} to keep the trace tail below {TRACE_TAIL_TARGET:e}"
                ));
                lo = b;
            }
            grid(lo, hi.max(lo), tc.count, tc.log)
        }
    };
    let m = config.grids.r_count;
    let mut r: Vec<f64> = (0..m).map(|i| r_max * i as f64 / m as f64).collect();
    r.push(r_max);
    Ok(Grids { t, r, notes })
}

#[derive(Debug, Clone)]
enum Profile {
    /// `1 + ε cos²(πr/2R)`.
    Cos2(f64),
    /// `1 + ε cos(πr/2R)`.
    Cos(f64),
    Custom(CubicSpline),
}

/// Positive radial test function with analytic derivatives.
#[derive(Debug, Clone)]
struct TestFunction {
    label: &'static str,
    eps: Option<f64>,
    profile: Profile,
    r_max: f64,
}

impl TestFunction {
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        let k = PI / (2.0 * self.r_max);
        match &self.profile {
            Profile::Cos2(eps) => (
                1.0 + eps * (k * r).cos().powi(2),
                -eps * k * (2.0 * k * r).sin(),
                -2.0 * eps * k * k * (2.0 * k * r).cos(),
            ),
            Profile::Cos(eps) => (
                1.0 + eps * (k * r).cos(),
                -eps * k * (k * r).sin(),
                -eps * k * k * (k * r).cos(),
            ),
            Profile::Custom(spline) => spline.eval(r),
        }
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        self.eps.map(|e| vec![("eps", e)]).unwrap_or_default()
    }

    fn outward_slope(&self) -> f64 {
        self.eval(self.r_max).1
    }
}

fn custom_function(samples: &[f64], r_max: f64) -> Result<TestFunction> {
    let m = samples.len() - 1;
    let h = r_max / m as f64;
    let knots: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    let s = samples;
    let end = (11.0 * s[m] - 18.0 * s[m - 1] + 9.0 * s[m - 2] - 2.0 * s[m - 3]) / (6.0 * h);
    Ok(TestFunction {
        label: "custom",
        eps: None,
        profile: Profile::Custom(CubicSpline::clamped(&knots, samples, 0.0, end)?),
        r_max,
    })
}

/// `P_t f`, `P_t |f'|²` and `P_t Δf` on one mesh.
struct Projections<'a> {
    f: RadialProjection<'a>,
    grad2: RadialProjection<'a>,
    lap: RadialProjection<'a>,
    /// Largest retained radial eigenvalue.
    top: f64,
}

impl<'a> Projections<'a> {
    fn new(model: &WarpedProductModel, spectrum: &'a SpectrumTable, func: &TestFunction) -> Result<Self> {
        let n1 = (model.n() - 1) as f64;
        let centers = spectrum.mesh().centers();
        let mut f = Vec::with_capacity(centers.len());
        let mut grad2 = Vec::with_capacity(centers.len());
        let mut lap = Vec::with_capacity(centers.len());
        for &r in &centers {
            let (v, d1, d2) = func.eval(r);
            let w = model.warp(r);
            f.push(v);
            grad2.push(d1 * d1);
            lap.push(d2 + n1 * w.df / w.f * d1);
        }
        Ok(Self {
            f: spectrum.project_radial(&f)?,
            grad2: spectrum.project_radial(&grad2)?,
            lap: spectrum.project_radial(&lap)?,
            top: spectrum.sector(0).map(|m| m.lambda).last().unwrap_or(0.0),
        })
    }
}

struct Level<'a> {
    spectrum: &'a SpectrumTable,
    /// Indexed like [`Harness::functions`].
    projections: Vec<Projections<'a>>,
}

/// Outcome of one instance on one mesh.
#[derive(Debug, Clone, Copy)]
struct Eval {
    lhs: f64,
    rhs: f64,
    /// Truncation tail and rounding allowance.
    noise: f64,
}

type Job<'a> = Box<dyn Fn(&Level) -> Result<Eval> + Send + Sync + 'a>;

enum Instance<'a> {
    Run {
        id: CheckId,
        variant: String,
        params: Vec<Param>,
        job: Job<'a>,
    },
    Done(CheckResult),
}

struct Harness<'a> {
    model: &'a WarpedProductModel,
    inputs: BoundInputs,
    config: &'a RunConfig,
    grids: Grids,
    functions: Vec<TestFunction>,
    levels: Vec<Level<'a>>,
}

impl<'a> Harness<'a> {
    fn new(
        model: &'a WarpedProductModel,
        geometry: &GeometryReport,
        spectra: &'a SpectrumPair,
        config: &'a RunConfig,
    ) -> Result<Self> {
        let inputs = bound_inputs(model, geometry)?;
        let grids = build_grids(config, Some(&spectra.coarse), inputs.rho, model.r_max())?;
        let r_max = model.r_max();
        let mut functions = Vec::new();
        for &eps in &config.test_functions.eps {
            functions.push(TestFunction {
                label: "cos2",
                eps: Some(eps),
                profile: Profile::Cos2(eps),
                r_max,
            });
        }
        for &eps in &config.test_functions.eps {
            functions.push(TestFunction {
                label: "cos",
                eps: Some(eps),
                profile: Profile::Cos(eps),
                r_max,
            });
        }
        if let Some(samples) = &config.test_functions.samples {
            functions.push(custom_function(samples, r_max)?);
        }
        let mut levels = Vec::new();
        for spectrum in std::iter::once(spectra.best()).chain(spectra.reference()) {
            let projections = functions
                .iter()
                .map(|func| Projections::new(model, spectrum, func))
                .collect::<Result<Vec<_>>>()?;
            levels.push(Level { spectrum, projections });
        }
        Ok(Self {
            model,
            inputs,
            config,
            grids,
            functions,
            levels,
        })
    }

    fn functions_for(&self, family: &str) -> impl Iterator<Item = (usize, &TestFunction)> + '_ {
        let family = family.to_string();
        self.functions
            .iter()
            .enumerate()
            .filter(move |(_, f)| f.label == family || f.label == "custom")
    }

    fn harnack_radii(&self) -> Vec<f64> {
        let r = &self.grids.r;
        let last = r.len() - 1;
        let mut picks: Vec<f64> = (0..HARNACK_POINTS)
            .map(|i| r[(i * last + (HARNACK_POINTS - 1) / 2) / (HARNACK_POINTS - 1)])
            .collect();
        picks.dedup();
        picks
    }

    fn instances(&self, checks: &[CheckId]) -> Result<Vec<Instance<'a>>>
    where
        Self: 'a,
    {
        let mut out = Vec::new();
        for &id in &CheckId::ALL {
            if !checks.contains(&id) {
                continue;
            }
            match id {
                CheckId::C1 => self.c1(&mut out),
                CheckId::C2 => self.c2(&mut out)?,
                CheckId::C3 => self.c3(&mut out)?,
                CheckId::C4 => self.c4(&mut out),
                CheckId::C5 => self.c5(&mut out),
                CheckId::C6 => self.c6(&mut out)?,
                CheckId::C7 => self.c7(&mut out),
                CheckId::C8 => self.c8(&mut out)?,
                CheckId::C9 => self.c9(&mut out)?,
                CheckId::C10 => self.c10(&mut out),
                CheckId::C11 => self.c11(&mut out),
            }
        }
        Ok(out)
    }

    fn c1(&self, out: &mut Vec<Instance<'a>>) {
        let n = self.inputs.n;
        let rho = self.inputs.rho;
        for (fi, func) in self.functions_for("cos2") {
            for &t in &self.grids.t {
                for &r in &self.grids.r {
                    let mut p = func.params();
                    p.extend([("t", t), ("r", r)]);
                    out.push(Instance::Run {
                        id: CheckId::C1,
                        variant: func.label.into(),
                        params: params(&p),
                        job: Box::new(move |level| {
                            let proj = &level.projections[fi];
                            let v = proj.f.eval(t, r);
                            let c = liyau_coeffs(n, rho, t)?;
                            let lhs = (v.dr / v.value).powi(2);
                            let rhs = c.a * v.laplacian / v.value + c.b;
                            let rel = proj.f.tail_bound(t) * (1.0 + proj.top) / v.value;
                            Ok(Eval {
                                lhs,
                                rhs,
                                noise: rel * (1.0 + 2.0 * lhs.sqrt() + lhs + rhs.abs()),
                            })
                        }),
                    });
                }
            }
        }
    }

    fn c2(&self, out: &mut Vec<Instance<'a>>) -> Result<()> {
        let n = self.inputs.n;
        let rho = self.inputs.rho;
        let radii = self.harnack_radii();
        for (fi, func) in self.functions_for("cos2") {
            for &t in &self.grids.t {
                let s = 0.5 * t;
                for &rx in &radii {
                    for &ry in &radii {
                        let d = geodesic_distance(self.model, Point::radial(rx), Point::radial(ry))?;
                        let h = harnack_factor(n, rho, s, t, d)?;
                        let mut p = func.params();
                        p.extend([("s", s), ("t", t), ("rx", rx), ("ry", ry), ("d", d)]);
                        out.push(Instance::Run {
                            id: CheckId::C2,
                            variant: func.label.into(),
                            params: params(&p),
                            job: Box::new(move |level| {
                                let proj = &level.projections[fi].f;
                                Ok(Eval {
                                    lhs: proj.eval(s, rx).value,
                                    rhs: h * proj.eval(t, ry).value,
                                    noise: proj.tail_bound(s) + h * proj.tail_bound(t),
                                })
                            }),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn kernel_noise(&self, t: f64, tail: f64) -> Result<f64> {
        Ok(tail + ROUNDOFF * ondiag_bounds(self.inputs.n, self.inputs.rho, self.inputs.mu, t)?.upper)
    }

    fn c3(&self, out: &mut Vec<Instance<'a>>) -> Result<()> {
        let n = self.inputs.n;
        let rho = self.inputs.rho;
        let radii = self.harnack_radii();
        let mut triples: Vec<(&str, [Point; 3])> = Vec::new();
        for &a in &radii {
            for &b in &radii {
                for &c in &radii {
                    triples.push(("coradial", [Point::radial(a), Point::radial(b), Point::radial(c)]));
                }
            }
        }
        let planar = n == 2 && self.model.is_round();
        if planar {
            let few = [radii[1], radii[radii.len() / 2], radii[radii.len() - 1]];
            for &a in &few {
                for &b in &few {
                    for &c in &few {
                        triples.push((
                            "planar",
                            [
                                Point::new(a, 0.0),
                                Point::new(b, PI / 3.0),
                                Point::new(c, 2.0 * PI / 3.0),
                            ],
                        ));
                    }
                }
            }
        }
        for &t in &self.grids.t {
            let s = 0.5 * t;
            let noise_s = self.kernel_noise(s, 0.0)?;
            let noise_t = self.kernel_noise(t, 0.0)?;
            for &(variant, [x, y, z]) in &triples {
                let d = geodesic_distance(self.model, y, z)?;
                let h = harnack_factor(n, rho, s, t, d)?;
                let p = [
                    ("s", s),
                    ("t", t),
                    ("rx", x.r),
                    ("thx", x.theta),
                    ("ry", y.r),
                    ("thy", y.theta),
                    ("rz", z.r),
                    ("thz", z.theta),
                    ("d", d),
                ];
                out.push(Instance::Run {
                    id: CheckId::C3,
                    variant: variant.into(),
                    params: params(&p),
                    job: Box::new(move |level| {
                        let ks = level.spectrum.heat_kernel(x, y, s)?;
                        let kt = level.spectrum.heat_kernel(x, z, t)?;
                        Ok(Eval {
                            lhs: ks.value,
                            rhs: h * kt.value,
                            noise: ks.tail_bound + noise_s + h * (kt.tail_bound + noise_t),
                        })
                    }),
                });
            }
        }
        Ok(())
    }

    fn c4(&self, out: &mut Vec<Instance<'a>>) {
        let (n, rho, mu) = (self.inputs.n, self.inputs.rho, self.inputs.mu);
        let interior = &self.grids.r[..self.grids.r.len() - 1];
        for &t in &self.grids.t {
            for &r in interior {
                for side in ["lower", "upper"] {
                    out.push(Instance::Run {
                        id: CheckId::C4,
                        variant: side.into(),
                        params: params(&[("t", t), ("r", r)]),
                        job: Box::new(move |level| {
                            let k = level.spectrum.heat_kernel(Point::radial(r), Point::radial(r), t)?;
                            let b = ondiag_bounds(n, rho, mu, t)?;
                            let noise = k.tail_bound + ROUNDOFF * b.upper;
                            Ok(if side == "lower" {
                                Eval {
                                    lhs: b.lower,
                                    rhs: k.value,
                                    noise,
                                }
                            } else {
                                Eval {
                                    lhs: k.value,
                                    rhs: b.upper,
                                    noise,
                                }
                            })
                        }),
                    });
                }
            }
        }
    }

    fn c5(&self, out: &mut Vec<Instance<'a>>) {
        let (n, rho) = (self.inputs.n, self.inputs.rho);
        let model = self.model;
        for &t in &self.grids.t {
            for &r in &self.grids.r {
                let p = params(&[("t", t), ("r", r)]);
                if r != 0.0 {
                    out.push(Instance::Done(CheckResult::skipped(
                        CheckId::C5,
                        "ball",
                        p,
                        "ball volume available only for balls centered at the pole".into(),
                    )));
                    continue;
                }
                out.push(Instance::Run {
                    id: CheckId::C5,
                    variant: "ball".into(),
                    params: p,
                    job: Box::new(move |level| {
                        let k = level.spectrum.heat_kernel(Point::radial(0.0), Point::radial(0.0), t)?;
                        let ball = model.ball_volume_at_pole(r_of_t(n, rho, t).sqrt());
                        let rhs = ball_upper(n, rho, ball, t)?;
                        Ok(Eval {
                            lhs: k.value,
                            rhs,
                            noise: k.tail_bound + ROUNDOFF * rhs,
                        })
                    }),
                });
            }
        }
    }

    fn c6(&self, out: &mut Vec<Instance<'a>>) -> Result<()> {
        for &t in &self.grids.t {
            let bound = refined_upper(&self.inputs, t)?;
            let variant = match bound.branch {
                crate::bounds::Branch::SmallTime => "small_time",
                crate::bounds::Branch::LargeTime => "large_time",
            };
            for &r in &self.grids.r {
                let p = [("t", t), ("r", r), ("clamped", if bound.clamped { 1.0 } else { 0.0 })];
                out.push(Instance::Run {
                    id: CheckId::C6,
                    variant: variant.into(),
                    params: params(&p),
                    job: Box::new(move |level| {
                        let k = level.spectrum.heat_kernel(Point::radial(r), Point::radial(r), t)?;
                        Ok(Eval {
                            lhs: k.value,
                            rhs: bound.value,
                            noise: k.tail_bound + ROUNDOFF * bound.value,
                        })
                    }),
                });
            }
        }
        Ok(())
    }

    fn c7(&self, out: &mut Vec<Instance<'a>>) {
        let (n, rho, mu) = (self.inputs.n, self.inputs.rho, self.inputs.mu);
        for &t in &self.grids.t {
            for side in ["lower", "upper"] {
                out.push(Instance::Run {
                    id: CheckId::C7,
                    variant: side.into(),
                    params: params(&[("t", t)]),
                    job: Box::new(move |level| {
                        let tr = level.spectrum.heat_trace(t)?;
                        let b = trace_bounds(n, rho, mu, t)?;
                        let noise = tr.tail_bound + ROUNDOFF * b.upper;
                        Ok(if side == "lower" {
                            Eval {
                                lhs: b.lower,
                                rhs: tr.value,
                                noise,
                            }
                        } else {
                            Eval {
                                lhs: tr.value,
                                rhs: b.upper,
                                noise,
                            }
                        })
                    }),
                });
            }
        }
    }

    fn c8(&self, out: &mut Vec<Instance<'a>>) -> Result<()> {
        let (n, rho, diam) = (self.inputs.n, self.inputs.rho, self.inputs.diam);
        let certified = self.levels.iter().map(|l| l.spectrum.sorted().len()).min().unwrap_or(0);
        let threshold = bound2_threshold(n);
        for k in 0..=self.config.grids.k_max {
            let p = params(&[("k", k as f64)]);
            let mut variants = vec![("bound1", eigen_bound1(n, rho, k as u64))];
            if (k as f64) > threshold {
                if let Some(b2) = eigen_bound2(n, rho, diam, k as u64)? {
                    variants.push(("bound2", b2));
                }
            }
            for (variant, bound) in variants {
                if k >= certified {
                    out.push(Instance::Done(CheckResult::skipped(
                        CheckId::C8,
                        variant,
                        p.clone(),
                        format!("k exceeds the {certified} certified eigenvalues"),
                    )));
                    continue;
                }
                out.push(Instance::Run {
                    id: CheckId::C8,
                    variant: variant.into(),
                    params: p.clone(),
                    job: Box::new(move |level| {
                        Ok(Eval {
                            lhs: bound,
                            rhs: level.spectrum.sorted()[k],
                            noise: 0.0,
                        })
                    }),
                });
            }
        }
        Ok(())
    }

    fn c9(&self, out: &mut Vec<Instance<'a>>) -> Result<()> {
        let BoundInputs { n, rho, diam, .. } = self.inputs;
        let k = asymptotic_index(n);
        let asym = asymptotics(&self.inputs, k)?;
        let ratio1 = eigen_bound1(n, rho, k) / asym.lb1_asym;
        let kp = params(&[("k", k as f64)]);
        out.push(done_band(CheckId::C9, "bound1_ratio", kp.clone(), ratio1));
        match eigen_bound2(n, rho, diam, k)? {
            Some(b2) => out.push(done_band(CheckId::C9, "bound2_ratio", kp, b2 / asym.lb2_leading)),
            None => out.push(Instance::Done(CheckResult::skipped(
                CheckId::C9,
                "bound2_ratio",
                kp,
                "diameter bound not valid at this index".into(),
            ))),
        }
        let certified = self.levels.iter().map(|l| l.spectrum.sorted().len()).min().unwrap_or(0);
        let top = certified - 1;
        let weyl = asymptotics(&self.inputs, top as u64)?.weyl;
        out.push(Instance::Run {
            id: CheckId::C9,
            variant: "weyl_ratio".into(),
            params: params(&[("k", top as f64), ("weyl", weyl)]),
            job: Box::new(move |level| {
                Ok(Eval {
                    lhs: (level.spectrum.sorted()[top] / weyl).ln().abs(),
                    rhs: WEYL_BAND.ln(),
                    noise: 0.0,
                })
            }),
        });
        Ok(())
    }

    fn c10(&self, out: &mut Vec<Instance<'a>>) {
        for (fi, func) in self.functions_for("cos") {
            let slope = func.outward_slope();
            for &t in &self.grids.t {
                for &r in &self.grids.r {
                    let mut p = func.params();
                    p.extend([("t", t), ("r", r)]);
                    if slope > 0.0 {
                        out.push(Instance::Done(CheckResult::skipped(
                            CheckId::C10,
                            func.label,
                            params(&p),
                            format!("outward derivative {slope} is positive"),
                        )));
                        continue;
                    }
                    out.push(Instance::Run {
                        id: CheckId::C10,
                        variant: func.label.into(),
                        params: params(&p),
                        job: Box::new(move |level| {
                            let proj = &level.projections[fi];
                            let rhs = proj.f.eval(t, r).laplacian;
                            let lhs = proj.lap.eval(t, r).value;
                            Ok(Eval {
                                lhs,
                                rhs,
                                noise: proj.lap.tail_bound(t) + proj.f.tail_bound(t) * (1.0 + proj.top),
                            })
                        }),
                    });
                }
            }
        }
    }

    fn c11(&self, out: &mut Vec<Instance<'a>>) {
        let rho = self.inputs.rho;
        for (fi, func) in self.functions_for("cos2") {
            for &t in &self.grids.t {
                for &r in &self.grids.r {
                    let mut p = func.params();
                    p.extend([("t", t), ("r", r)]);
                    out.push(Instance::Run {
                        id: CheckId::C11,
                        variant: func.label.into(),
                        params: params(&p),
                        job: Box::new(move |level| {
                            let proj = &level.projections[fi];
                            let dr = proj.f.eval(t, r).dr;
                            let decay = (-2.0 * rho * t).exp();
                            let dtail = proj.f.tail_bound(t) * (1.0 + proj.top);
                            Ok(Eval {
                                lhs: dr * dr,
                                rhs: decay * proj.grad2.eval(t, r).value,
                                noise: dtail * (2.0 * dr.abs() + dtail) + decay * proj.grad2.tail_bound(t),
                            })
                        }),
                    });
                }
            }
        }
    }

    fn evaluate(&self, instance: Instance<'_>) -> Result<CheckResult> {
        let (id, variant, params, job) = match instance {
            Instance::Done(result) => return Ok(result),
            Instance::Run {
                id,
                variant,
                params,
                job,
            } => (id, variant, params, job),
        };
        let best = job(&self.levels[0])?;
        let mut budget = best.noise;
        if let Some(reference) = self.levels.get(1) {
            let other = job(reference)?;
            budget += (best.lhs - other.lhs).abs() + (best.rhs - other.rhs).abs() + other.noise;
        }
        let scale = best.lhs.abs().max(best.rhs.abs());
        let status = if !best.lhs.is_finite() || !best.rhs.is_finite() {
            Status::Skipped("non-finite value".into())
        } else if budget > RESOLUTION_FRACTION * scale && budget > 0.0 {
            Status::Skipped(format!(
                "numerical error budget {budget:.3e} exceeds {}% of the compared values",
                RESOLUTION_FRACTION * 100.0
            ))
        } else {
            let slack = self.config.tolerance.relative * best.rhs.abs() + budget;
            if best.rhs - best.lhs >= -slack {
                Status::Pass
            } else {
                Status::Fail
            }
        };
        let slack = self.config.tolerance.relative * best.rhs.abs() + budget;
        Ok(CheckResult {
            check_id: id,
            variant,
            params,
            lhs: best.lhs,
            rhs: best.rhs,
            margin: best.rhs - best.lhs,
            slack,
            status,
        })
    }

    fn run(&self, checks: &[CheckId]) -> Result<Vec<CheckResult>> {
        let instances = self.instances(checks)?;
        #[cfg(feature = "parallel")]
        let results: Vec<Result<CheckResult>> = instances.into_par_iter().map(|inst| self.evaluate(inst)).collect();
        #[cfg(not(feature = "parallel"))]
        let results: Vec<Result<CheckResult>> = instances.into_iter().map(|inst| self.evaluate(inst)).collect();
        results.into_iter().collect()
    }
}

/// Large index for the ratio checks: `ASYMPTOTIC_K`, raised well past the
/// validity threshold of the diameter bound in high dimension.
pub fn asymptotic_index(n: usize) -> u64 {
    let needed = 1e4 * (bound2_threshold(n) + 1.0);
    (ASYMPTOTIC_K as f64).max(needed).min(1e18) as u64
}

fn done_band(id: CheckId, variant: &str, params: Vec<Param>, ratio: f64) -> Instance<'static> {
    let lhs = (ratio - 1.0).abs();
    let rhs = ASYMPTOTIC_BAND;
    let mut params = params;
    params.push(Param {
        name: "ratio".into(),
        value: ratio,
    });
    Instance::Done(CheckResult {
        check_id: id,
        variant: variant.into(),
        params,
        lhs,
        rhs,
        margin: rhs - lhs,
        slack: 0.0,
        status: if lhs <= rhs { Status::Pass } else { Status::Fail },
    })
}

fn filtered(checks: &[CheckId], spectral: bool) -> Vec<CheckId> {
    checks.iter().copied().filter(|c| c.is_spectral() == spectral).collect()
}

/// Checks C1-C6, C10 and C11 on the configured grids.
pub fn run_pointwise_checks(
    model: &WarpedProductModel,
    spectra: &SpectrumPair,
    config: &RunConfig,
) -> Result<Vec<CheckResult>> {
    let geometry = curvature_report(model)?;
    Harness::new(model, &geometry, spectra, config)?.run(&filtered(&config.checks, false))
}

/// Checks C7-C9.
pub fn run_spectrum_checks(
    model: &WarpedProductModel,
    spectra: &SpectrumPair,
    config: &RunConfig,
) -> Result<Vec<CheckResult>> {
    let geometry = curvature_report(model)?;
    Harness::new(model, &geometry, spectra, config)?.run(&filtered(&config.checks, true))
}

pub fn aggregate(results: &[CheckResult], checks: &[CheckId]) -> Vec<CheckAggregate> {
    CheckId::ALL
        .iter()
        .filter(|id| checks.contains(id))
        .map(|&id| {
            let mut agg = CheckAggregate {
                check_id: id,
                count: 0,
                passed: 0,
                failed: 0,
                skipped: 0,
                min_margin: None,
                worst: None,
            };
            for (i, r) in results.iter().enumerate().filter(|(_, r)| r.check_id == id) {
                agg.count += 1;
                match r.status {
                    Status::Pass => agg.passed += 1,
                    Status::Fail => agg.failed += 1,
                    Status::Skipped(_) => {
                        agg.skipped += 1;
                        continue;
                    }
                }
                let m = r.margin + r.slack;
                if agg.min_margin.is_none_or(|best| m < best) {
                    agg.min_margin = Some(m);
                    agg.worst = Some(i);
                }
            }
            agg
        })
        .collect()
}

/// Builds the model, certifies its geometry, solves the spectrum and runs every
/// enabled check.
pub fn run_suite(config: &RunConfig) -> Result<VerificationReport> {
    let model = config.model.build()?;
    let geometry = curvature_report(&model)?;
    let spectra = solve_spectra(&model, &config.solver)?;
    run_suite_with(config, &model, &geometry, &spectra)
}

/// [`run_suite`] with a prepared model and spectrum.
pub fn run_suite_with(
    config: &RunConfig,
    model: &WarpedProductModel,
    geometry: &GeometryReport,
    spectra: &SpectrumPair,
) -> Result<VerificationReport> {
    let harness = Harness::new(model, geometry, spectra, config)?;
    let mut checks = config.checks.clone();
    checks.sort();
    checks.dedup();
    let results = harness.run(&checks)?;
    let aggregates = aggregate(&results, &checks);
    let verdict = if results.iter().any(|r| r.status == Status::Fail) {
        Verdict::Fail
    } else {
        Verdict::Pass
    };

    let mut notes = harness.grids.notes.clone();
    if checks.contains(&CheckId::C3) {
        notes.push(if model.n() == 2 && model.is_round() {
            "C3 samples co-radial and planar triples only".into()
        } else {
            "C3 samples co-radial triples only".into()
        });
    }
    if !geometry.diameter_exact {
        notes.push(format!(
            "diameter replaced by the upper estimate {} (paths through the pole)",
            harness.inputs.diam
        ));
    }
    if checks.contains(&CheckId::C9) {
        let k = asymptotic_index(model.n());
        let asym = asymptotics(&harness.inputs, k)?;
        if let Some(b2) = eigen_bound2(model.n(), harness.inputs.rho, harness.inputs.diam, k)? {
            notes.push(format!(
                "C9 compares the diameter bound with its leading term (n/2e²)(nρ/(n-1))^(1-1/n)(k/V(D))^(2/n)·n^(-1/n); \
                 without the n^(-1/n) factor the ratio at k = {k} is {}",
                b2 / asym.lb2_asym
            ));
        }
    }

    let coarse = &spectra.coarse;
    Ok(VerificationReport {
        config: config.clone(),
        geometry: *geometry,
        bound_inputs: harness.inputs,
        spectrum: SpectrumMeta {
            mesh_points: coarse.mesh().cells,
            refined_mesh_points: spectra.fine.as_ref().map(|s| s.mesh().cells),
            l_max: coarse.truncation().l_max,
            modes_per_l: coarse.truncation().modes_per_l,
            lambda_cut: spectra.best().truncation().lambda_cut,
            certified_eigenvalues: spectra.best().sorted().len(),
        },
        t_grid: harness.grids.t.clone(),
        r_grid: harness.grids.r.clone(),
        aggregates,
        results,
        notes,
        verdict,
    })
}

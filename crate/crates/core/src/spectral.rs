//! Neumann spectrum of a warped-product model by separation of variables.
//!
//! Each angular sector `l` reduces the Laplacian to the radial problem
//! `-(w u')'/w + l(l+n-2)/f² u = λ u` with `w = f^{n-1}`, Neumann at `r_max` and
//! regularity at the pole. The flux form is discretized on a cell-centered mesh
//! (nodes at `(i + ½) h`, so the pole singularity is never sampled), the
//! generalized problem `K u = λ M u` is symmetrized with `M^{-1/2}`, and the
//! resulting tridiagonal matrix is solved by Sturm bisection plus inverse
//! iteration.

use std::f64::consts::PI;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::geometry::{measure_geometry, Point, WarpedProductModel};
use crate::numerics::unit_sphere_area;
use crate::tridiag::SymTridiagonal;

pub const MIN_MESH_POINTS: usize = 64;

/// Inverse-iteration residual above which a mode is rejected.
const RESIDUAL_LIMIT: f64 = 1e-6;

/// Fraction of the trace (or kernel value) the truncation tail may reach before
/// the result carries a warning.
const TAIL_WARNING_FRACTION: f64 = 0.01;

/// Dimension of the degree-`l` spherical harmonics on `S^{n-1}`.
pub fn angular_multiplicity(n: usize, l: usize) -> u64 {
    assert!(n >= 2, "angular multiplicity needs n >= 2");
    if l == 0 {
        return 1;
    }
    if n == 2 {
        return 2;
    }
    // C(l+n-1, n-1) - C(l+n-3, n-1): homogeneous polynomials minus |x|² times lower degree
    let big = binomial((l + n - 1) as u128, (n - 1) as u128);
    let small = if l >= 2 {
        binomial((l + n - 3) as u128, (n - 1) as u128)
    } else {
        0
    };
    u64::try_from(big - small).unwrap_or(u64::MAX)
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Uniform cell-centered radial mesh on `[0, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialMesh {
    pub cells: usize,
    pub h: f64,
    pub r_max: f64,
}

impl RadialMesh {
    pub fn new(r_max: f64, cells: usize) -> Self {
        Self {
            cells,
            h: r_max / cells as f64,
            r_max,
        }
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.center(i)).collect()
    }
}

/// Four-point Lagrange interpolation at fractional index `x` over samples
/// addressed by (possibly ghost) integer index.
fn interp_cubic(x: f64, sample: impl Fn(isize) -> f64) -> f64 {
    let i = x.floor() as isize;
    let s = x - i as f64;
    let (p0, p1, p2, p3) = (sample(i - 1), sample(i), sample(i + 1), sample(i + 2));
    let w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3
}

/// One separated eigenpair `u_{l,j}(r) Y_l(θ)`.
///
/// `u` is sampled at the cell centers and normalized so that
/// `ω_{n-1} Σ u_i² w_i h = 1` (for `l = 0` this is the L²(M) normalization of the
/// radial eigenfunction itself). `du` holds the derivative at the `cells + 1`
/// faces; the Neumann face carries exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMode {
    pub l: usize,
    pub j: usize,
    pub lambda: f64,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    mesh: RadialMesh,
}

impl RadialMode {
    fn parity(&self) -> f64 {
        if self.l.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Cell value with ghost cells from the pole parity `u(-r) = (-1)^l u(r)` and
    /// even reflection across the Neumann boundary.
    fn cell(&self, i: isize) -> f64 {
        let n = self.mesh.cells as isize;
        if i < 0 {
            self.parity() * self.u[(-1 - i).min(n - 1) as usize]
        } else if i >= n {
            self.u[(2 * n - 1 - i).max(0) as usize]
        } else {
            self.u[i as usize]
        }
    }

    fn face(&self, k: isize) -> f64 {
        let n = self.mesh.cells as isize;
        if k < 0 {
            -self.parity() * self.du[(-k).min(n) as usize]
        } else if k > n {
            -self.du[(2 * n - k).max(0) as usize]
        } else {
            self.du[k as usize]
        }
    }

    pub fn value_at(&self, r: f64) -> f64 {
        if r == 0.0 && self.l > 0 {
            return 0.0;
        }
        interp_cubic(r / self.mesh.h - 0.5, |i| self.cell(i))
    }

    pub fn derivative_at(&self, r: f64) -> f64 {
        interp_cubic(r / self.mesh.h, |k| self.face(k))
    }

    pub fn mesh(&self) -> RadialMesh {
        self.mesh
    }
}

struct SectorOperator {
    matrix: SymTridiagonal,
    /// `√(w_i h)` used to undo the symmetrization.
    sqrt_mass: Vec<f64>,
}

fn sector_operator(model: &WarpedProductModel, l: usize, mesh: &RadialMesh) -> Result<SectorOperator> {
    let n = model.n();
    let cells = mesh.cells;
    let h = mesh.h;
    let centers: Vec<_> = (0..cells).map(|i| model.warp(mesh.center(i))).collect();
    let w_center: Vec<f64> = centers.iter().map(|s| s.f.powi(n as i32 - 1)).collect();
    // interior faces 1..cells-1; the pole face has w = 0 and the boundary face is Neumann
    let w_face: Vec<f64> = (0..=cells)
        .map(|k| {
            if k == 0 || k == cells {
                0.0
            } else {
                model.weight(k as f64 * h)
            }
        })
        .collect();
    if w_center.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidModel("warp must be positive at every mesh node".into()));
    }
    let angular = (l * (l + n - 2)) as f64;
    let mass: Vec<f64> = w_center.iter().map(|w| w * h).collect();
    let diag: Vec<f64> = (0..cells)
        .map(|i| {
            let stiffness = (w_face[i] + w_face[i + 1]) / h;
            let potential = angular / (centers[i].f * centers[i].f) * mass[i];
            (stiffness + potential) / mass[i]
        })
        .collect();
    let off: Vec<f64> = (0..cells - 1)
        .map(|i| -w_face[i + 1] / h / (mass[i] * mass[i + 1]).sqrt())
        .collect();
    Ok(SectorOperator {
        matrix: SymTridiagonal::new(diag, off)?,
        sqrt_mass: mass.iter().map(|m| m.sqrt()).collect(),
    })
}

/// The `num_modes` smallest eigenpairs of angular sector `l`.
pub fn solve_radial_modes(
    model: &WarpedProductModel,
    l: usize,
    mesh_points: usize,
    num_modes: usize,
) -> Result<Vec<RadialMode>> {
    if mesh_points < MIN_MESH_POINTS {
        return Err(domain(format!(
            "mesh_points = {mesh_points} must be at least {MIN_MESH_POINTS}"
        )));
    }
    if num_modes == 0 || num_modes > mesh_points {
        return Err(domain(format!("num_modes = {num_modes} must be in 1..={mesh_points}")));
    }
    let mesh = RadialMesh::new(model.r_max(), mesh_points);
    let op = sector_operator(model, l, &mesh)?;
    let omega = unit_sphere_area(model.n());
    let values = op.matrix.smallest_eigenvalues(num_modes);

    let mut modes = Vec::with_capacity(num_modes);
    for (j, &lambda) in values.iter().enumerate() {
        if j > 0 && !(lambda > values[j - 1]) {
            return Err(Error::Solver {
                l,
                j,
                reason: format!("eigenvalues not strictly increasing ({} then {lambda})", values[j - 1]),
            });
        }
        let (u, lambda) = if l == 0 && j == 0 {
            // constants are an exact null vector of the discrete flux operator
            if lambda.abs() > 1e-8 {
                return Err(Error::Solver {
                    l,
                    j,
                    reason: format!("ground state {lambda:e} is not zero"),
                });
            }
            let mass_total: f64 = op.sqrt_mass.iter().map(|m| m * m).sum();
            (vec![1.0 / (omega * mass_total).sqrt(); mesh_points], 0.0)
        } else {
            let (v, residual) = op.matrix.eigenvector(lambda);
            if !(residual < RESIDUAL_LIMIT) {
                return Err(Error::Solver {
                    l,
                    j,
                    reason: format!("inverse iteration residual {residual:e}"),
                });
            }
            let scale = 1.0 / omega.sqrt();
            let mut u: Vec<f64> = v.iter().zip(&op.sqrt_mass).map(|(v, m)| scale * v / m).collect();
            let peak = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if let Some(first) = u.iter().find(|x| x.abs() > 1e-6 * peak) {
                if *first < 0.0 {
                    u.iter_mut().for_each(|x| *x = -*x);
                }
            }
            (u, lambda)
        };
        let mut du = vec![0.0; mesh_points + 1];
        du[0] = if l % 2 == 1 { 2.0 * u[0] / mesh.h } else { 0.0 };
        for k in 1..mesh_points {
            du[k] = (u[k] - u[k - 1]) / mesh.h;
        }
        modes.push(RadialMode {
            l,
            j,
            lambda,
            u,
            du,
            mesh,
        });
    }
    Ok(modes)
}

/// Eigenvalue changes of one sector under two successive mesh doublings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeConvergence {
    pub l: usize,
    pub j: usize,
    pub lambda: [f64; 3],
    /// `(λ_N - λ_2N) / (λ_2N - λ_4N)`, ≈ 4 for a second-order scheme.
    pub ratio: f64,
}

pub fn mesh_convergence(
    model: &WarpedProductModel,
    l: usize,
    mesh_points: usize,
    num_modes: usize,
) -> Result<Vec<ModeConvergence>> {
    let levels: Vec<Vec<RadialMode>> = [1, 2, 4]
        .iter()
        .map(|m| solve_radial_modes(model, l, m * mesh_points, num_modes))
        .collect::<Result<_>>()?;
    Ok((0..num_modes)
        .map(|j| {
            let lambda = [levels[0][j].lambda, levels[1][j].lambda, levels[2][j].lambda];
            ModeConvergence {
                l,
                j,
                lambda,
                ratio: (lambda[0] - lambda[1]) / (lambda[1] - lambda[2]),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    pub l_max: usize,
    pub modes_per_l: usize,
    /// Every Neumann eigenvalue below this value is present in the table.
    pub lambda_cut: f64,
}

/// Heat-trace value with an upper estimate of the omitted tail.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceValue {
    pub value: f64,
    pub tail_bound: f64,
    pub warning: Option<String>,
}

/// Heat-kernel value with an upper estimate of the omitted tail.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub tail_bound: f64,
    pub warning: Option<String>,
}

/// `(P_t f, ∂_r P_t f, Δ P_t f)` at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemigroupValue {
    pub value: f64,
    pub dr: f64,
    pub laplacian: f64,
}

#[derive(Debug, Clone)]
pub struct SpectrumTable {
    n: usize,
    mesh: RadialMesh,
    omega: f64,
    /// `w = f^{n-1}` at the cell centers.
    cell_weight: Vec<f64>,
    volume: f64,
    rho_eff: Option<f64>,
    /// All computed modes, ordered by `(l, j)`.
    modes: Vec<RadialMode>,
    /// Indices of the certified modes (`λ < λ_cut`) in `(λ, l, j)` order.
    certified: Vec<usize>,
    sorted: Vec<f64>,
    truncation: Truncation,
}

/// Solves sectors `0..=l_max` and merges them into one certified spectrum.
pub fn assemble_spectrum(
    model: &WarpedProductModel,
    l_max: usize,
    mesh_points: usize,
    modes_per_l: usize,
) -> Result<SpectrumTable> {
    let geometry = measure_geometry(model);
    let solve = |l: usize| solve_radial_modes(model, l, mesh_points, modes_per_l);
    #[cfg(feature = "parallel")]
    let sectors: Vec<Result<Vec<RadialMode>>> = (0..=l_max).into_par_iter().map(solve).collect();
    #[cfg(not(feature = "parallel"))]
    let sectors: Vec<Result<Vec<RadialMode>>> = (0..=l_max).map(solve).collect();
    let mut modes = Vec::new();
    for sector in sectors {
        modes.extend(sector?);
    }

    let n = model.n();
    let next_l = (l_max + 1) as f64;
    // sectors beyond l_max start above l(l+n-2) / max f²
    let angular_cut = next_l * (next_l + n as f64 - 2.0) / model.max_warp().powi(2);
    let sector_cut = (0..=l_max)
        .filter_map(|l| modes.iter().filter(|m| m.l == l).map(|m| m.lambda).next_back())
        .fold(f64::INFINITY, f64::min);
    let lambda_cut = angular_cut.min(sector_cut);

    let mut certified: Vec<usize> = (0..modes.len()).filter(|&i| modes[i].lambda < lambda_cut).collect();
    certified.sort_by(|&a, &b| {
        modes[a]
            .lambda
            .total_cmp(&modes[b].lambda)
            .then(modes[a].l.cmp(&modes[b].l))
            .then(modes[a].j.cmp(&modes[b].j))
    });
    if certified.len() < 2 {
        return Err(Error::Truncation(format!(
            "no eigenvalue certified above zero (lambda_cut = {lambda_cut}); increase l_max or modes_per_l"
        )));
    }
    let mut sorted = Vec::new();
    for &i in &certified {
        let m = angular_multiplicity(n, modes[i].l);
        sorted.extend(std::iter::repeat_n(modes[i].lambda, m as usize));
    }
    let mesh = RadialMesh::new(model.r_max(), mesh_points);
    Ok(SpectrumTable {
        n,
        mesh,
        omega: unit_sphere_area(n),
        cell_weight: mesh.centers().into_iter().map(|r| model.weight(r)).collect(),
        volume: geometry.volume,
        rho_eff: (geometry.rho_eff > 0.0).then_some(geometry.rho_eff),
        modes,
        certified,
        sorted,
        truncation: Truncation {
            l_max,
            modes_per_l,
            lambda_cut,
        },
    })
}

impl SpectrumTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mesh(&self) -> RadialMesh {
        self.mesh
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn rho_eff(&self) -> Option<f64> {
        self.rho_eff
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn modes(&self) -> &[RadialMode] {
        &self.modes
    }

    /// Modes below `λ_cut`, in nondecreasing eigenvalue order.
    pub fn certified_modes(&self) -> impl Iterator<Item = &RadialMode> + '_ {
        self.certified.iter().map(move |&i| &self.modes[i])
    }

    pub fn multiplicity(&self, mode: &RadialMode) -> u64 {
        angular_multiplicity(self.n, mode.l)
    }

    /// Nondecreasing eigenvalues with multiplicity, all below `λ_cut`.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Sectors `l` modes, ordered by `j`.
    pub fn sector(&self, l: usize) -> impl Iterator<Item = &RadialMode> + '_ {
        self.modes.iter().filter(move |m| m.l == l)
    }

    /// Rigorous tail factor `e^{-λ_cut t/2} (1 - e^{-ρt/3})^{-n/2}`: the omitted
    /// part of `Σ e^{-λt}` is at most this, and of `p(t,x,x)` at most this over μ.
    fn tail_factor(&self, t: f64) -> f64 {
        match self.rho_eff {
            Some(rho) => {
                let decay = -0.5 * self.truncation.lambda_cut * t;
                let trace_upper = -(self.n as f64 / 2.0) * (-(-rho * t / 3.0).exp_m1()).ln();
                (decay + trace_upper).exp()
            }
            None => f64::INFINITY,
        }
    }

    /// `Σ_k e^{-λ_k t}` over the certified spectrum.
    pub fn heat_trace(&self, t: f64) -> Result<TraceValue> {
        if !(t > 0.0) {
            return Err(domain(format!("heat trace needs t > 0, got {t}")));
        }
        let value: f64 = self
            .certified_modes()
            .map(|m| self.multiplicity(m) as f64 * (-m.lambda * t).exp())
            .sum();
        let tail_bound = self.tail_factor(t);
        let warning = (tail_bound > TAIL_WARNING_FRACTION * value)
            .then(|| format!("trace tail bound {tail_bound:e} exceeds 1% of value {value:e} at t = {t}"));
        Ok(TraceValue {
            value,
            tail_bound,
            warning,
        })
    }

    /// Neumann heat kernel `p(t, x, y)`. Supported for co-radial pairs in any
    /// dimension and for arbitrary pairs when `n = 2`.
    pub fn heat_kernel(&self, x: Point, y: Point, t: f64) -> Result<KernelValue> {
        if !(t > 0.0) {
            return Err(domain(format!("heat kernel needs t > 0, got {t}")));
        }
        for p in [x, y] {
            if !(p.r >= 0.0) || p.r > self.mesh.r_max * (1.0 + 1e-12) {
                return Err(domain(format!("radius {} outside [0, {}]", p.r, self.mesh.r_max)));
            }
        }
        let dtheta = x.theta - y.theta;
        let coradial = dtheta.rem_euclid(2.0 * PI) == 0.0;
        if !coradial && self.n != 2 {
            return Err(Error::Unsupported(
                "off-diagonal kernel at non-co-radial points needs n = 2".into(),
            ));
        }
        let value: f64 = self
            .certified_modes()
            .map(|m| {
                let angular = if coradial {
                    self.multiplicity(m) as f64
                } else if m.l == 0 {
                    1.0
                } else {
                    2.0 * (m.l as f64 * dtheta).cos()
                };
                (-m.lambda * t).exp() * m.value_at(x.r) * m.value_at(y.r) * angular
            })
            .sum();
        let tail_bound = self.tail_factor(t) / self.volume;
        let warning = (tail_bound > TAIL_WARNING_FRACTION * value.abs())
            .then(|| format!("kernel tail bound {tail_bound:e} exceeds 1% of value {value:e} at t = {t}"));
        Ok(KernelValue {
            value,
            tail_bound,
            warning,
        })
    }

    /// Projects radial samples (one per cell center) onto the `l = 0` modes.
    pub fn project_radial(&self, samples: &[f64]) -> Result<RadialProjection<'_>> {
        if samples.len() != self.mesh.cells {
            return Err(domain(format!(
                "radial samples have length {}, mesh has {} cells",
                samples.len(),
                self.mesh.cells
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(domain("radial samples must be finite"));
        }
        let modes: Vec<&RadialMode> = self.sector(0).collect();
        let h = self.mesh.h;
        let weights: Vec<f64> = self.cell_weight.iter().map(|w| self.omega * w * h).collect();
        let coeffs = modes
            .iter()
            .map(|m| {
                samples
                    .iter()
                    .zip(&m.u)
                    .zip(&weights)
                    .map(|((f, u), w)| f * u * w)
                    .sum()
            })
            .collect();
        let l2_norm = samples.iter().zip(&weights).map(|(f, w)| f * f * w).sum::<f64>().sqrt();
        Ok(RadialProjection {
            spectrum: self,
            modes,
            coeffs,
            l2_norm,
        })
    }
}

/// A radial function expanded in the `l = 0` Neumann modes; evaluates `P_t f`.
#[derive(Debug, Clone)]
pub struct RadialProjection<'a> {
    spectrum: &'a SpectrumTable,
    modes: Vec<&'a RadialMode>,
    coeffs: Vec<f64>,
    l2_norm: f64,
}

impl RadialProjection<'_> {
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, t: f64, r: f64) -> SemigroupValue {
        let mut out = SemigroupValue {
            value: 0.0,
            dr: 0.0,
            laplacian: 0.0,
        };
        for (m, c) in self.modes.iter().zip(&self.coeffs) {
            let a = c * (-m.lambda * t).exp();
            out.value += a * m.value_at(r);
            out.dr += a * m.derivative_at(r);
            out.laplacian -= m.lambda * a * m.value_at(r);
        }
        out
    }

    /// `P_t f` at every cell center.
    pub fn sample(&self, t: f64) -> Vec<f64> {
        let cells = self.spectrum.mesh.cells;
        let mut out = vec![0.0; cells];
        for (m, c) in self.modes.iter().zip(&self.coeffs) {
            let a = c * (-m.lambda * t).exp();
            out.iter_mut().zip(&m.u).for_each(|(o, u)| *o += a * u);
        }
        out
    }

    /// Upper estimate of `|P_t f - (truncated P_t f)|` at any point:
    /// `‖f‖₂ · sqrt(e^{-Λ t} · sup p(t,·,·))` with `Λ` the largest retained
    /// radial eigenvalue.
    pub fn tail_bound(&self, t: f64) -> f64 {
        let last = self.modes.last().map_or(0.0, |m| m.lambda);
        match self.spectrum.rho_eff {
            Some(rho) => {
                let n = self.spectrum.n as f64;
                let upper = -(n / 2.0) * (-(-2.0 * rho * t / 3.0).exp_m1()).ln() - self.spectrum.volume.ln();
                self.l2_norm * (0.5 * (-last * t + upper)).exp()
            }
            None => f64::INFINITY,
        }
    }
}

/// `(P_t f, ∂_r P_t f, Δ P_t f)(r)` for a positive radial `f` sampled at the cell
/// centers of the spectrum's mesh.
pub fn apply_semigroup_radial(spectrum: &SpectrumTable, f: &[f64], t: f64, r: f64) -> Result<SemigroupValue> {
    if f.iter().any(|v| !(*v > 0.0)) {
        return Err(domain("semigroup test function must be strictly positive"));
    }
    if !(t >= 0.0) {
        return Err(domain(format!("semigroup time must be nonnegative, got {t}")));
    }
    Ok(spectrum.project_radial(f)?.eval(t, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_round_cap;

    fn hemisphere() -> WarpedProductModel {
        make_round_cap(2, 1.0, 1.0).unwrap()
    }

    /// Closed-form hemisphere spectrum: L(L+1) with Neumann multiplicity L+1.
    fn hemisphere_trace(t: f64) -> f64 {
        (0..200)
            .map(|l| (l + 1) as f64 * (-((l * (l + 1)) as f64) * t).exp())
            .sum()
    }

    #[test]
    fn multiplicities() {
        for l in 0..20 {
            assert_eq!(angular_multiplicity(3, l), 2 * l as u64 + 1);
        }
        assert_eq!(angular_multiplicity(2, 5), 2);
        assert_eq!(angular_multiplicity(2, 0), 1);
        // degree-2 harmonics on S^3: 10 quadratic monomials in 4 variables minus |x|²
        assert_eq!(angular_multiplicity(4, 2), 9);
        assert_eq!(angular_multiplicity(4, 1), 4);
    }

    #[test]
    fn hemisphere_sectors_match_legendre_oracle() {
        let m = hemisphere();
        let cases: [(usize, &[f64]); 3] = [(0, &[0.0, 6.0, 20.0]), (1, &[2.0, 12.0, 30.0]), (2, &[6.0, 20.0])];
        for (l, expected) in cases {
            let modes = solve_radial_modes(&m, l, 1000, expected.len()).unwrap();
            for (mode, &e) in modes.iter().zip(expected) {
                assert!(
                    (mode.lambda - e).abs() <= 1e-4 * e.max(1.0),
                    "l={l}: {} vs {e}",
                    mode.lambda
                );
            }
        }
    }

    #[test]
    fn mode_invariants() {
        let m = make_round_cap(3, 2.0, 0.7).unwrap();
        let omega = unit_sphere_area(3);
        for l in [0, 1, 3] {
            let modes = solve_radial_modes(&m, l, 400, 10).unwrap();
            let mesh = modes[0].mesh();
            let w: Vec<f64> = mesh.centers().iter().map(|&r| m.weight(r)).collect();
            for a in &modes {
                assert_eq!(*a.du.last().unwrap(), 0.0);
                assert_eq!(a.derivative_at(m.r_max()), 0.0);
                if l == 0 {
                    assert_eq!(a.du[0], 0.0);
                } else {
                    assert_eq!(a.value_at(0.0), 0.0);
                }
                for b in &modes {
                    let gram: f64 = (0..mesh.cells).map(|i| omega * a.u[i] * b.u[i] * w[i] * mesh.h).sum();
                    let expected = if a.j == b.j { 1.0 } else { 0.0 };
                    assert!((gram - expected).abs() < 1e-6, "l={l} ({},{}) gram {gram}", a.j, b.j);
                }
            }
            assert!(modes.windows(2).all(|p| p[1].lambda > p[0].lambda));
        }
    }

    #[test]
    fn ground_state_is_constant() {
        let m = make_round_cap(2, 1.0, 0.5).unwrap();
        let s = assemble_spectrum(&m, 4, 200, 4).unwrap();
        assert_eq!(s.sorted()[0], 0.0);
        assert!(s.sorted()[1] > 0.0);
        let ground = s.modes().iter().find(|md| md.l == 0 && md.j == 0).unwrap();
        let expected = 1.0 / s.volume().sqrt();
        assert!(ground.u.iter().all(|u| (u - expected).abs() < 1e-6));
    }

    #[test]
    fn hemisphere_sorted_spectrum() {
        let s = assemble_spectrum(&hemisphere(), 10, 800, 8).unwrap();
        let expected = [0.0, 2.0, 2.0, 6.0, 6.0, 6.0, 12.0, 12.0, 12.0, 12.0];
        for (v, e) in s.sorted().iter().zip(expected) {
            assert!((v - e).abs() <= 1e-4 * e.max(1.0), "{v} vs {e}");
        }
        assert!(s.sorted().windows(2).all(|p| p[1] >= p[0]));
        // l_max = 10 on the unit hemisphere: angular cut 11 * 11
        assert!(s.truncation().lambda_cut <= 121.0);
    }

    #[test]
    fn truncation_error_when_nothing_certified() {
        let err = assemble_spectrum(&hemisphere(), 3, 100, 1).unwrap_err();
        assert!(matches!(err, Error::Truncation(_)));
    }

    #[test]
    fn heat_trace_matches_closed_form() {
        let s = assemble_spectrum(&hemisphere(), 30, 1000, 20).unwrap();
        let tr = s.heat_trace(1.0).unwrap();
        assert!((tr.value - 1.278_131_410_158_967).abs() < 1e-5, "{}", tr.value);
        assert!((tr.value - hemisphere_trace(1.0)).abs() < 1e-5);
        assert!(tr.tail_bound < 1e-10 && tr.warning.is_none());
        let tr = s.heat_trace(2.0).unwrap();
        assert!((tr.value - 1.036_649_710_565_534).abs() < 1e-5);
        let tr = s.heat_trace(60.0).unwrap();
        assert!((tr.value - 1.0).abs() < 1e-12);
        assert!(s.heat_trace(0.0).is_err());
    }

    #[test]
    fn short_time_trace_warns() {
        let s = assemble_spectrum(&hemisphere(), 3, 200, 3).unwrap();
        let tr = s.heat_trace(1e-3).unwrap();
        assert!(tr.warning.is_some());
    }

    #[test]
    fn kernel_trace_identity_and_equilibrium() {
        let m = hemisphere();
        let s = assemble_spectrum(&m, 30, 600, 20).unwrap();
        let mesh = s.mesh();
        let omega = unit_sphere_area(2);
        let t = 0.5;
        // midpoint quadrature on the cell centers
        let integral: f64 = mesh
            .centers()
            .iter()
            .map(|&r| {
                omega * s.heat_kernel(Point::radial(r), Point::radial(r), t).unwrap().value * m.weight(r) * mesh.h
            })
            .sum();
        assert!((integral - s.heat_trace(t).unwrap().value).abs() < 1e-6);

        for r in [0.0, 0.7, PI / 2.0] {
            let p = s.heat_kernel(Point::radial(r), Point::radial(r), 40.0).unwrap();
            assert!((p.value - 1.0 / (2.0 * PI)).abs() < 1e-6);
        }
    }

    #[test]
    fn kernel_symmetry_and_support() {
        let s = assemble_spectrum(&hemisphere(), 20, 400, 12).unwrap();
        let x = Point::new(0.3, 0.0);
        let y = Point::new(1.2, 2.0);
        let a = s.heat_kernel(x, y, 0.4).unwrap().value;
        let b = s.heat_kernel(y, x, 0.4).unwrap().value;
        assert!((a - b).abs() < 1e-13 && a > 0.0);
        let s3 = assemble_spectrum(&make_round_cap(3, 2.0, 1.0).unwrap(), 6, 200, 6).unwrap();
        assert!(matches!(s3.heat_kernel(x, y, 0.4), Err(Error::Unsupported(_))));
        assert!(s3.heat_kernel(Point::radial(0.3), Point::radial(0.9), 0.4).is_ok());
    }

    #[test]
    fn semigroup_constants_invariant() {
        let s = assemble_spectrum(&make_round_cap(2, 1.0, 0.6).unwrap(), 4, 300, 30).unwrap();
        let ones = vec![1.0; s.mesh().cells];
        for t in [0.0, 0.1, 2.0] {
            for r in [0.0, 0.3, s.mesh().r_max] {
                let v = apply_semigroup_radial(&s, &ones, t, r).unwrap();
                assert!((v.value - 1.0).abs() < 1e-10);
                assert!(v.dr.abs() < 1e-8 && v.laplacian.abs() < 1e-8);
            }
        }
        let mut bad = ones.clone();
        bad[3] = 0.0;
        assert!(apply_semigroup_radial(&s, &bad, 1.0, 0.1).is_err());
        assert!(apply_semigroup_radial(&s, &ones, -1.0, 0.1).is_err());
    }

    #[test]
    fn semigroup_identity_and_heat_equation() {
        let model = make_round_cap(2, 1.0, 1.0).unwrap();
        let s = assemble_spectrum(&model, 2, 1000, 60).unwrap();
        let r_max = model.r_max();
        let f = |r: f64| 1.0 + 0.5 * (PI * r / (2.0 * r_max)).cos().powi(2);
        let samples: Vec<f64> = s.mesh().centers().iter().map(|&r| f(r)).collect();
        let proj = s.project_radial(&samples).unwrap();
        for r in [0.1, 0.8, 1.3] {
            assert!((proj.eval(0.0, r).value - f(r)).abs() < 1e-4);
        }
        // finite-difference oracle for ∂_t P_t f = Δ P_t f
        let step = 1e-4;
        for t in [0.1, 0.5, 2.0] {
            for r in [0.0, 0.6, r_max] {
                let fd = (proj.eval(t + step, r).value - proj.eval(t - step, r).value) / (2.0 * step);
                let lap = proj.eval(t, r).laplacian;
                assert!(
                    (fd - lap).abs() <= 1e-5 * lap.abs().max(1e-3),
                    "t={t} r={r}: {fd} vs {lap}"
                );
            }
        }
    }
}

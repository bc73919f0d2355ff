//! Browser bindings: every export takes plain numbers and returns a JSON string,
//! either the payload or `{"error": "..."}`.

use heatbound_core::bounds::{
    eigen_lower_bounds, liyau_coeffs, ondiag_bounds, refined_upper, trace_bounds, BoundInputs,
};
use heatbound_core::geometry::{curvature_report, make_round_cap};
use heatbound_core::numerics::grid;
use heatbound_core::spectral::assemble_spectrum;
use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_MESH: usize = 4000;
const MAX_L: usize = 80;

#[derive(Serialize)]
struct CurveRow {
    t: f64,
    liyau_a: f64,
    liyau_b: f64,
    ondiag_lower: f64,
    ondiag_upper: f64,
    trace_lower: f64,
    trace_upper: f64,
    refined_upper: f64,
}

/// Closed-form bound curves over a log-spaced time grid.
pub fn bound_curves(
    n: usize,
    rho: f64,
    mu: f64,
    diam: f64,
    t_min: f64,
    t_max: f64,
    count: usize,
) -> Result<Value, String> {
    let inputs = BoundInputs::new(n, rho, mu, diam).map_err(|e| e.to_string())?;
    if !(t_min > 0.0 && t_max >= t_min) || !(2..=2000).contains(&count) {
        return Err("need 0 < t_min <= t_max and 2 <= count <= 2000".into());
    }
    let rows = grid(t_min, t_max, count, true)
        .into_iter()
        .map(|t| {
            let c = liyau_coeffs(n, rho, t)?;
            let d = ondiag_bounds(n, rho, mu, t)?;
            let z = trace_bounds(n, rho, mu, t)?;
            Ok(CurveRow {
                t,
                liyau_a: c.a,
                liyau_b: c.b,
                ondiag_lower: d.lower,
                ondiag_upper: d.upper,
                trace_lower: z.lower,
                trace_upper: z.upper,
                refined_upper: refined_upper(&inputs, t)?.value,
            })
        })
        .collect::<heatbound_core::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    Ok(json!({ "inputs": inputs, "rows": rows }))
}

fn solve(
    n: usize,
    rho0: f64,
    cap_fraction: f64,
    mesh_points: usize,
    l_max: usize,
) -> Result<
    (
        heatbound_core::geometry::GeometryReport,
        heatbound_core::spectral::SpectrumTable,
    ),
    String,
> {
    if mesh_points > MAX_MESH || l_max > MAX_L {
        return Err(format!("mesh_points <= {MAX_MESH} and l_max <= {MAX_L} in the browser"));
    }
    let model = make_round_cap(n, rho0, cap_fraction).map_err(|e| e.to_string())?;
    let geometry = curvature_report(&model).map_err(|e| e.to_string())?;
    let modes = (mesh_points / 10).clamp(8, 40);
    let spectrum = assemble_spectrum(&model, l_max, mesh_points, modes).map_err(|e| e.to_string())?;
    Ok((geometry, spectrum))
}

/// Neumann spectrum of a round cap together with its heat trace and the trace
/// sandwich on a log-spaced time grid.
pub fn cap_spectrum(
    n: usize,
    rho0: f64,
    cap_fraction: f64,
    mesh_points: usize,
    l_max: usize,
    t_count: usize,
) -> Result<Value, String> {
    let (geometry, spectrum) = solve(n, rho0, cap_fraction, mesh_points, l_max)?;
    let (rho, mu) = (geometry.rho_eff, geometry.volume);
    let t_min = 0.05 / rho;
    let trace = grid(t_min, 5.0 / rho, t_count.clamp(2, 400), true)
        .into_iter()
        .map(|t| {
            let z = spectrum.heat_trace(t).map_err(|e| e.to_string())?;
            let s = trace_bounds(n, rho, mu, t).map_err(|e| e.to_string())?;
            Ok(json!({
                "t": t,
                "trace": z.value,
                "tail_bound": z.tail_bound,
                "lower": s.lower,
                "upper": s.upper,
            }))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let eigenvalues: Vec<f64> = spectrum.sorted().iter().take(60).copied().collect();
    Ok(json!({
        "geometry": geometry,
        "lambda_cut": spectrum.truncation().lambda_cut,
        "certified": spectrum.sorted().len(),
        "eigenvalues": eigenvalues,
        "trace": trace,
    }))
}

/// `bound1(k)` and `bound2(k)` against the computed `λ_k` of a round cap.
pub fn eigen_comparison(
    n: usize,
    rho0: f64,
    cap_fraction: f64,
    k_max: usize,
    mesh_points: usize,
    l_max: usize,
) -> Result<Value, String> {
    let (geometry, spectrum) = solve(n, rho0, cap_fraction, mesh_points, l_max)?;
    let sorted = spectrum.sorted();
    let rows = sorted
        .iter()
        .take(k_max + 1)
        .enumerate()
        .map(|(k, &lambda)| {
            let b = eigen_lower_bounds(n, geometry.rho_eff, geometry.diameter, k as u64).map_err(|e| e.to_string())?;
            Ok(json!({ "k": k, "lambda": lambda, "bound1": b.bound1, "bound2": b.bound2 }))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(json!({ "geometry": geometry, "rows": rows, "truncated": sorted.len() <= k_max }))
}

fn respond(result: Result<Value, String>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

#[wasm_bindgen(js_name = boundCurves)]
pub fn bound_curves_js(n: usize, rho: f64, mu: f64, diam: f64, t_min: f64, t_max: f64, count: usize) -> String {
    respond(bound_curves(n, rho, mu, diam, t_min, t_max, count))
}

#[wasm_bindgen(js_name = capSpectrum)]
pub fn cap_spectrum_js(
    n: usize,
    rho0: f64,
    cap_fraction: f64,
    mesh_points: usize,
    l_max: usize,
    t_count: usize,
) -> String {
    respond(cap_spectrum(n, rho0, cap_fraction, mesh_points, l_max, t_count))
}

#[wasm_bindgen(js_name = eigenComparison)]
pub fn eigen_comparison_js(
    n: usize,
    rho0: f64,
    cap_fraction: f64,
    k_max: usize,
    mesh_points: usize,
    l_max: usize,
) -> String {
    respond(eigen_comparison(n, rho0, cap_fraction, k_max, mesh_points, l_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn curves_at_unit_time() {
        let v = bound_curves(2, 1.0, 2.0 * PI, PI, 1.0, 1.0, 2).unwrap();
        let row = &v["rows"][0];
        assert!((row["ondiag_lower"].as_f64().unwrap() - 0.10902900568927315).abs() < 1e-12);
        assert!((row["trace_upper"].as_f64().unwrap() - 2.055_148_339_809_722).abs() < 1e-12);
        assert!((row["refined_upper"].as_f64().unwrap() - 0.6547466058090512).abs() < 1e-12);
    }

    #[test]
    fn hemisphere_spectrum_and_sandwich() {
        let v = cap_spectrum(2, 1.0, 1.0, 400, 12, 8).unwrap();
        let eig: Vec<f64> = v["eigenvalues"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        for (got, want) in eig.iter().zip([0.0, 2.0, 2.0, 6.0, 6.0, 6.0]) {
            assert!((got - want).abs() < 1e-3 * want.max(1.0));
        }
        for row in v["trace"].as_array().unwrap() {
            let z = row["trace"].as_f64().unwrap();
            assert!(row["lower"].as_f64().unwrap() <= z && z <= row["upper"].as_f64().unwrap());
        }
    }

    #[test]
    fn eigen_bounds_below_spectrum() {
        let v = eigen_comparison(2, 1.0, 1.0, 60, 400, 12).unwrap();
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 61);
        assert!(rows[12]["bound2"].is_null() && rows[13]["bound2"].is_number());
        for row in rows {
            let lambda = row["lambda"].as_f64().unwrap();
            assert!(row["bound1"].as_f64().unwrap() <= lambda + 1e-9);
            if let Some(b2) = row["bound2"].as_f64() {
                assert!(b2 <= lambda);
            }
        }
    }

    #[test]
    fn errors_are_json() {
        let text = cap_spectrum_js(2, 1.0, 1.2, 400, 12, 8);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert!(v["error"].as_str().unwrap().contains("convex"));
        assert!(bound_curves(2, 1.0, 1.0, 1.0, 2.0, 1.0, 5).is_err());
        assert!(cap_spectrum(2, 1.0, 1.0, 100_000, 12, 8).is_err());
    }
}

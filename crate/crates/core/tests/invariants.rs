use std::f64::consts::PI;
use std::sync::OnceLock;

use heatbound_core::bounds::{
    bound2_threshold, eigen_bound2, harnack_factor, liyau_coeffs, trace_bounds, volume_bounds,
};
use heatbound_core::geometry::{
    comparison_diameter, comparison_volume, comparison_volume_inverse, curvature_report, geodesic_distance,
    make_round_cap, Point,
};
use heatbound_core::spectral::{assemble_spectrum, SpectrumTable};
use proptest::prelude::*;

fn hemisphere_spectrum() -> &'static SpectrumTable {
    static SPECTRUM: OnceLock<SpectrumTable> = OnceLock::new();
    SPECTRUM.get_or_init(|| assemble_spectrum(&make_round_cap(2, 1.0, 1.0).unwrap(), 12, 600, 24).unwrap())
}

fn bump(eps: f64) -> (Vec<f64>, Vec<f64>) {
    let spectrum = hemisphere_spectrum();
    let big_r = PI / 2.0;
    let k = PI / (2.0 * big_r);
    let centers = spectrum.mesh().centers();
    let f = centers.iter().map(|r| 1.0 + eps * (k * r).cos().powi(2)).collect();
    let grad2 = centers
        .iter()
        .map(|r| (eps * k * (2.0 * k * r).sin()).powi(2))
        .collect();
    (f, grad2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_caps_certify_their_curvature(n in 2usize..6, rho0 in 0.1f64..10.0, fraction in 0.05f64..=1.0) {
        let model = make_round_cap(n, rho0, fraction).unwrap();
        let report = curvature_report(&model).unwrap();
        prop_assert!((report.rho_eff - rho0).abs() <= 1e-10 * rho0.max(1.0));
        prop_assert!(report.pi_min >= -1e-12);
        prop_assert!(report.volume > 0.0 && report.diameter > 0.0);
        let bound = volume_bounds(n, report.rho_eff).unwrap();
        prop_assert!(report.volume <= bound.sandwich_bound);
        let t = 1.0 / rho0;
        let s = trace_bounds(n, report.rho_eff, report.volume, t).unwrap();
        prop_assert!(s.lower <= s.upper);
    }

    #[test]
    fn comparison_volume_monotone_and_invertible(n in 2usize..8, rho in 0.1f64..5.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let top = comparison_diameter(rho, n);
        let (s1, s2) = (a.min(b) * top, a.max(b) * top);
        let (v1, v2) = (comparison_volume(rho, n, s1).unwrap(), comparison_volume(rho, n, s2).unwrap());
        if s2 > s1 + 1e-9 * top {
            prop_assert!(v1 < v2);
        }
        let back = comparison_volume_inverse(rho, n, v2).unwrap();
        // near the antipode V' vanishes and one ulp of V moves s by ulp/V'
        let slope = ((rho / (n - 1) as f64).sqrt() * s2).sin().abs().powi(n as i32 - 1);
        let conditioning = 8.0 * f64::EPSILON * v2 / slope;
        prop_assert!((back - s2).abs() <= 1e-8 + conditioning, "{} vs {}", back, s2);
    }

    #[test]
    fn geodesic_distance_is_a_metric(
        fraction in 0.2f64..=1.0,
        pts in proptest::array::uniform3((0.0f64..1.0, 0.0f64..(2.0 * PI))),
    ) {
        let model = make_round_cap(2, 1.0, fraction).unwrap();
        let p: Vec<Point> = pts.iter().map(|(x, th)| Point::new(x * model.r_max(), *th)).collect();
        let d = |a: Point, b: Point| geodesic_distance(&model, a, b).unwrap();
        prop_assert_eq!(d(p[0], p[1]), d(p[1], p[0]));
        prop_assert!(d(p[0], p[2]) <= d(p[0], p[1]) + d(p[1], p[2]) + 1e-12);
        prop_assert!(d(p[0], p[0]).abs() < 1e-12);
    }

    #[test]
    fn liyau_coefficients_decrease(n in 2usize..50, rho in 0.01f64..10.0, t in 1e-3f64..10.0, dt in 1e-3f64..1.0) {
        let (c0, c1) = (liyau_coeffs(n, rho, t).unwrap(), liyau_coeffs(n, rho, t + dt).unwrap());
        prop_assert!(c0.a > 0.0 && c0.a <= 1.0 && c0.b > 0.0);
        prop_assert!(c1.a < c0.a && c1.b < c0.b);
    }

    #[test]
    fn harnack_factor_at_least_one_and_relaxes(n in 2usize..20, rho in 0.1f64..5.0, t in 0.1f64..5.0, a in 0.05f64..0.95, d in 0.0f64..3.0) {
        let s = a * t;
        prop_assert!(harnack_factor(n, rho, s, t, d).unwrap() >= 1.0);
        let closer = harnack_factor(n, rho, 0.5 * (s + t), t, 0.0).unwrap();
        prop_assert!(closer <= harnack_factor(n, rho, s, t, 0.0).unwrap());
        prop_assert!(closer >= 1.0);
    }

    #[test]
    fn bound2_present_exactly_above_threshold(n in 2usize..5, k in 0u64..2000) {
        let present = eigen_bound2(n, 1.0, comparison_diameter(1.0, n), k).unwrap().is_some();
        prop_assert_eq!(present, k as f64 > bound2_threshold(n));
    }

    #[test]
    fn semigroup_is_markov_and_contracts_gradients(eps in 0.05f64..2.0, t in 0.05f64..3.0, x in 0.0f64..=1.0) {
        let spectrum = hemisphere_spectrum();
        let (f, grad2) = bump(eps);
        let r = x * PI / 2.0;
        let pf = spectrum.project_radial(&f).unwrap();
        let pg = spectrum.project_radial(&grad2).unwrap();
        let v = pf.eval(t, r);
        let slack = pf.tail_bound(t) + 1e-9;
        prop_assert!(v.value >= 1.0 - slack, "P_t f = {} below min f", v.value);
        prop_assert!(v.value <= 1.0 + eps + slack);
        // ρ = 1 on the hemisphere
        let rhs = (-2.0 * t).exp() * pg.eval(t, r).value;
        prop_assert!(v.dr * v.dr <= rhs + 2.0 * v.dr.abs() * slack + pg.tail_bound(t) + 1e-8);
    }

    #[test]
    fn heat_kernel_is_positive(a in 0.0f64..1.0, b in 0.0f64..1.0, theta in 0.0f64..PI, t in 0.3f64..3.0) {
        let spectrum = hemisphere_spectrum();
        let x = Point::radial(a * PI / 2.0);
        let y = Point::new(b * PI / 2.0, theta);
        let k = spectrum.heat_kernel(x, y, t).unwrap();
        prop_assert!(k.value > 0.0);
        prop_assert!(k.value >= k.tail_bound);
    }
}

#[test]
fn liyau_small_time_limit() {
    for n in [2, 3, 10] {
        let c = liyau_coeffs(n, 1.0, 1e-7).unwrap();
        assert!((c.b * 1e-7 - n as f64 / 2.0).abs() < 1e-6 * n as f64);
    }
}

#[test]
fn evaluators_are_bit_deterministic() {
    let a = trace_bounds(3, 0.7, 5.0, 0.3).unwrap();
    let b = trace_bounds(3, 0.7, 5.0, 0.3).unwrap();
    assert_eq!(a.lower.to_bits(), b.lower.to_bits());
    assert_eq!(a.upper.to_bits(), b.upper.to_bits());
    let s1 = hemisphere_spectrum().heat_trace(0.4).unwrap().value;
    let s2 = assemble_spectrum(&make_round_cap(2, 1.0, 1.0).unwrap(), 12, 600, 24)
        .unwrap()
        .heat_trace(0.4)
        .unwrap()
        .value;
    assert_eq!(s1.to_bits(), s2.to_bits());
}

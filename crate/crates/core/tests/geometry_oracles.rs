//! Graph shortest paths and closed forms as independent oracles for distances,
//! diameters and volumes on two-dimensional caps.

use std::f64::consts::PI;

use heatbound_core::geometry::{
    comparison_volume, curvature_report, geodesic_distance, make_round_cap, make_warped, measure_geometry, Point,
    WarpedProductModel,
};
use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};

const RINGS: usize = 40;
const SPOKES: usize = 180;
const REACH: isize = 4;

struct PolarGraph {
    graph: UnGraph<(f64, f64), f64>,
    /// `nodes[i][j]` for ring `i >= 1`; the pole is node 0.
    rings: Vec<Vec<NodeIndex>>,
    pole: NodeIndex,
}

/// Metric length of the straight segment in `(r, θ)` coordinates, an upper bound
/// for the distance between its endpoints.
fn segment_length(model: &WarpedProductModel, a: (f64, f64), b: (f64, f64)) -> f64 {
    let pieces = 8;
    let (dr, dt) = ((b.0 - a.0) / pieces as f64, (b.1 - a.1) / pieces as f64);
    (0..pieces)
        .map(|k| {
            let r = a.0 + (k as f64 + 0.5) * dr;
            (dr * dr + model.warp(r).f.powi(2) * dt * dt).sqrt()
        })
        .sum()
}

fn polar_graph(model: &WarpedProductModel) -> PolarGraph {
    let r_max = model.r_max();
    let mut graph = UnGraph::new_undirected();
    let pole = graph.add_node((0.0, 0.0));
    let rings: Vec<Vec<NodeIndex>> = (1..=RINGS)
        .map(|i| {
            let r = r_max * i as f64 / RINGS as f64;
            (0..SPOKES)
                .map(|j| graph.add_node((r, 2.0 * PI * j as f64 / SPOKES as f64)))
                .collect()
        })
        .collect();
    for (i, ring) in rings.iter().enumerate() {
        for (j, &a) in ring.iter().enumerate() {
            if i < REACH as usize {
                graph.add_edge(pole, a, graph[a].0);
            }
            for di in 0..=REACH {
                for dj in -REACH..=REACH {
                    if (di == 0 && dj <= 0) || i as isize + di >= RINGS as isize {
                        continue;
                    }
                    let jj = (j as isize + dj).rem_euclid(SPOKES as isize) as usize;
                    let b = rings[i + di as usize][jj];
                    let (pa, mut pb) = (graph[a], graph[b]);
                    pb.1 = pa.1 + dj as f64 * 2.0 * PI / SPOKES as f64;
                    graph.add_edge(a, b, segment_length(model, pa, pb));
                }
            }
        }
    }
    PolarGraph { graph, rings, pole }
}

impl PolarGraph {
    fn boundary(&self) -> &[NodeIndex] {
        &self.rings[RINGS - 1]
    }

    fn eccentricity(&self, source: NodeIndex) -> f64 {
        let dist = dijkstra(&self.graph, source, None, |e| *e.weight());
        self.boundary().iter().map(|b| dist[b]).fold(0.0, f64::max)
    }
}

#[test]
fn hemisphere_and_quarter_cap_diameters() {
    for (fraction, exact) in [(1.0, PI), (0.5, PI / 2.0)] {
        let model = make_round_cap(2, 1.0, fraction).unwrap();
        let g = polar_graph(&model);
        let oracle = g.eccentricity(g.boundary()[0]);
        let report = measure_geometry(&model);
        assert!(report.diameter_exact);
        assert!((oracle - exact).abs() < 1e-2 * exact, "graph {oracle} vs {exact}");
        assert!(
            (report.diameter - oracle).abs() < 1e-2 * exact,
            "{} vs graph {oracle}",
            report.diameter
        );
        assert!(
            oracle >= report.diameter * (1.0 - 1e-12),
            "graph paths never beat the geodesic"
        );
    }
}

#[test]
fn geodesic_distance_matches_graph() {
    let model = make_round_cap(2, 1.0, 0.8).unwrap();
    let g = polar_graph(&model);
    let sources = [(5, 0), (20, 30), (39, 90)];
    for (i, j) in sources {
        let source = g.rings[i][j];
        let dist = dijkstra(&g.graph, source, None, |e| *e.weight());
        let (r0, t0) = g.graph[source];
        for (ti, tj) in [(0, 0), (10, 100), (25, 60), (39, 0), (39, 120)] {
            let target = g.rings[ti][tj];
            let (r1, t1) = g.graph[target];
            let exact = geodesic_distance(&model, Point::new(r0, t0), Point::new(r1, t1)).unwrap();
            let graph = dist[&target];
            assert!(graph >= exact - 1e-12, "graph {graph} below geodesic {exact}");
            // graph paths only turn through finitely many directions
            assert!(graph - exact <= 2e-2 * exact, "graph {graph} vs geodesic {exact}");
        }
        let to_pole = geodesic_distance(&model, Point::new(r0, t0), Point::radial(0.0)).unwrap();
        assert!((dist[&g.pole] - to_pole).abs() < 1e-12);
    }
}

#[test]
fn warped_diameter_estimate_is_an_upper_bound() {
    let samples: Vec<f64> = (0..=40)
        .map(|i| {
            let r = 1.2 * i as f64 / 40.0;
            r.sin() * (1.0 - 0.05 * r * r)
        })
        .collect();
    let model = make_warped(2, 1.2, &samples).unwrap();
    let report = curvature_report(&model).unwrap();
    assert!(!report.diameter_exact);
    let g = polar_graph(&model);
    let oracle = g.eccentricity(g.boundary()[0]);
    assert!(
        oracle <= report.diameter,
        "graph diameter {oracle} above estimate {}",
        report.diameter
    );
    assert!(oracle > 0.8 * report.diameter);
}

#[test]
fn cap_volumes_match_closed_form() {
    let quarter = make_round_cap(2, 1.0, 0.5).unwrap();
    let v = curvature_report(&quarter).unwrap().volume;
    assert!((v - 1.840302369).abs() < 1e-8, "{v}");
    assert!((v - 2.0 * PI * (1.0 - (PI / 4.0).cos())).abs() < 1e-10);

    // n = 3 cap of scale s: 4π s³ ∫ sin²(u) du over [0, r/s]
    let cap = make_round_cap(3, 2.0, 0.6).unwrap();
    let a = cap.r_max();
    let exact = 4.0 * PI * (a / 2.0 - (2.0 * a).sin() / 4.0);
    assert!((curvature_report(&cap).unwrap().volume - exact).abs() < 1e-9 * exact);

    // the full comparison sphere of curvature 1 in dimension 2 has area 4π
    let v = comparison_volume(1.0, 2, PI).unwrap() * 2.0 * PI;
    assert!((v - 4.0 * PI).abs() < 1e-10);
}

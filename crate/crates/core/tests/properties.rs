use std::collections::BTreeMap;
use std::f64::consts::PI;

use proptest::prelude::*;
use rigidity_core::chart::Chart;
use rigidity_core::curvature::{phi_h, psi_h};
use rigidity_core::mesh::{Edge, PolyhedralMetric, Surface};
use rigidity_core::trig::{angles_from_lengths, matrix_p, TriangleLengths};
use rigidity_core::Geometry;

/// Two sides and the included angle; the third side comes from the cosine
/// law of the geometry, so the triangle is always realisable.
fn sas(g: Geometry, a: f64, b: f64, gamma: f64) -> [f64; 3] {
    let c = match g {
        Geometry::Euclidean => (a * a + b * b - 2.0 * a * b * gamma.cos()).sqrt(),
        Geometry::Hyperbolic => (a.cosh() * b.cosh() - a.sinh() * b.sinh() * gamma.cos()).acosh(),
        Geometry::Spherical => (a.cos() * b.cos() + a.sin() * b.sin() * gamma.cos()).acos(),
    };
    [a, b, c]
}

fn triangle(g: Geometry) -> impl Strategy<Value = TriangleLengths> {
    let hi = if g == Geometry::Spherical { 1.3 } else { 2.0 };
    (0.3..hi, 0.3..hi, 0.3..PI - 0.3).prop_filter_map("degenerate", move |(a, b, gamma)| {
        let l = sas(g, a, b, gamma);
        TriangleLengths::new(l, g).ok().filter(|t| t.in_moduli_space(1e-3))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn angle_sums(t in triangle(Geometry::Euclidean), th in triangle(Geometry::Hyperbolic), ts in triangle(Geometry::Spherical)) {
        prop_assert!((angles_from_lengths(&t).unwrap().sum() - PI).abs() < 1e-12);
        prop_assert!(angles_from_lengths(&th).unwrap().sum() < PI);
        prop_assert!(angles_from_lengths(&ts).unwrap().sum() > PI);
    }

    #[test]
    fn included_angle_is_recovered(a in 0.3..1.3f64, b in 0.3..1.3f64, gamma in 0.3..PI - 0.3) {
        for g in Geometry::ALL {
            let t = TriangleLengths::new(sas(g, a, b, gamma), g).unwrap();
            prop_assert!((angles_from_lengths(&t).unwrap()[2] - gamma).abs() < 1e-9, "{g}");
        }
    }

    #[test]
    fn p_is_positive_definite(t in triangle(Geometry::Hyperbolic)) {
        let p = matrix_p(&t).unwrap();
        prop_assert!(p.symmetric_eigen().eigenvalues.min() > 0.0);
    }

    #[test]
    fn chart_round_trip(h in -2.0..2.0f64, frac in 0.01..0.99f64) {
        let charts = [
            Chart::xi(h, Geometry::Hyperbolic).unwrap(),
            Chart::xi(h, Geometry::Spherical).unwrap(),
            Chart::gamma(h).unwrap(),
            Chart::g(h, Geometry::Hyperbolic).unwrap(),
        ];
        for c in charts {
            let t = match c.domain().1 {
                hi if hi.is_finite() => frac * hi,
                _ => 4.0 * frac,
            };
            let u = c.forward(t).unwrap();
            let back = c.inverse(u).unwrap();
            prop_assert!((back - t).abs() < 1e-9 * t.max(1.0), "{c:?}: {t} -> {u} -> {back}");
        }
    }

    #[test]
    fn euclidean_phi_equals_psi(
        (l12, a, b) in (0.5..2.0f64, 0.3..PI - 0.3, 0.3..PI - 0.3),
        (s, s2) in (0.2..0.8f64, 0.2..0.8f64),
        h in -2.0..2.0f64,
    ) {
        // two triangles on the edge 1-2, apexes 0 and 3 given by base
        // angles at vertex 1 and a position along the opposite side
        let apex = |angle: f64, along: f64| -> [f64; 2] {
            let r = along * l12 / angle.sin().max(0.2);
            [r * angle.cos(), r * angle.sin()]
        };
        let p1 = [0.0, 0.0];
        let p2 = [l12, 0.0];
        let p0 = apex(a, s);
        let p3 = { let q = apex(b, s2); [q[0], -q[1]] };
        let d = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).hypot(p[1] - q[1]);
        let surface = Surface::new(4, vec![[0, 1, 2], [1, 3, 2]]).unwrap();
        let map: BTreeMap<Edge, f64> = [
            (Edge(0, 1), d(p0, p1)),
            (Edge(0, 2), d(p0, p2)),
            (Edge(1, 2), l12),
            (Edge(1, 3), d(p1, p3)),
            (Edge(2, 3), d(p2, p3)),
        ]
        .into_iter()
        .collect();
        let metric = PolyhedralMetric::from_map(&surface, Geometry::Euclidean, &map);
        prop_assume!(metric.is_ok());
        let metric = metric.unwrap();
        let phi = phi_h(&surface, &metric, h).unwrap();
        let psi = psi_h(&surface, &metric, h).unwrap();
        prop_assert!((phi.to_vec()[0] - psi.to_vec()[0]).abs() < 1e-10);
    }
}

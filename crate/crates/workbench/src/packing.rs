//! Circle packings: interior radii from boundary radii, planar layout and
//! SVG output.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use rigidity_core::mesh::{CirclePackingMetric, Surface};
use rigidity_core::solver::{self, Outcome, ProblemSpec, SolveOptions, SolveReport};
use rigidity_core::energy::ProblemFlavor;
use rigidity_core::Geometry;
use serde::Serialize;

use crate::error::{Result, WorkbenchError};

/// Largest tangency or closure residual accepted for a layout.
pub const LAYOUT_TOL: f64 = 1e-6;

/// Solve for interior radii given radii on every boundary vertex and
/// `k_h` targets on the interior vertices (default 0).
pub fn complete_packing(
    surface: &Surface,
    geometry: Geometry,
    boundary: &BTreeMap<usize, f64>,
    targets: Option<Vec<f64>>,
    h: f64,
    options: &SolveOptions,
) -> Result<(CirclePackingMetric, SolveReport)> {
    let mut values = Vec::new();
    for &v in surface.boundary_vertices() {
        values.push(
            *boundary
                .get(&v)
                .ok_or_else(|| WorkbenchError::InvalidMesh(format!("no radius for boundary vertex {v}")))?,
        );
    }
    if let Some(v) = boundary.keys().find(|&&v| !surface.is_boundary_vertex(v)) {
        return Err(WorkbenchError::InvalidMesh(format!("vertex {v} is interior; its radius is solved for")));
    }
    let interior = surface.interior_vertices().len();
    let problem = ProblemSpec {
        surface: surface.clone(),
        geometry,
        h,
        flavor: ProblemFlavor::UPacking,
        boundary: values,
        targets: targets.unwrap_or_else(|| vec![0.0; interior]),
        initial_guess: None,
    };
    let report = solver::solve(&problem, options)?;
    if report.outcome == Outcome::NoGeometricSolution {
        return Err(WorkbenchError::NoGeometricSolution("no packing realises these targets".into()));
    }
    let radii = report.solution.values().to_vec();
    Ok((CirclePackingMetric::new(surface, geometry, radii)?, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Layout {
    pub centers: Vec<[f64; 2]>,
    pub radii: Vec<f64>,
    /// `max |‖c_u − c_v‖ − r_u − r_v|` over all edges.
    pub tangency_residual: f64,
    /// Largest disagreement when a vertex is reached a second time.
    pub closure_residual: f64,
}

impl Layout {
    pub fn residual(&self) -> f64 {
        self.tangency_residual.max(self.closure_residual)
    }
}

fn place_third(a: [f64; 2], b: [f64; 2], la: f64, lb: f64, lab: f64, side: f64) -> [f64; 2] {
    // la = |w - a|, lb = |w - b|; w left of a→b when side > 0
    let x = (la * la - lb * lb + lab * lab) / (2.0 * lab);
    let y = (la * la - x * x).max(0.0).sqrt() * side.signum();
    let ex = [(b[0] - a[0]) / lab, (b[1] - a[1]) / lab];
    [a[0] + x * ex[0] - y * ex[1], a[1] + x * ex[1] + y * ex[0]]
}

fn cross(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Lay out a Euclidean packing by breadth-first propagation across edges,
/// starting from triangle 0 with its first vertex at the origin.
pub fn layout(surface: &Surface, packing: &CirclePackingMetric) -> Result<Layout> {
    if packing.geometry != Geometry::Euclidean {
        return Err(WorkbenchError::InvalidMesh("layout needs a euclidean packing".into()));
    }
    let r = &packing.radii;
    let d = |u: usize, v: usize| r[u] + r[v];
    let n = surface.vertex_count();
    let mut centers: Vec<Option<[f64; 2]>> = vec![None; n];
    let mut closure: f64 = 0.0;

    let tris = surface.triangles();
    let [a, b, c] = tris[0];
    centers[a] = Some([0.0, 0.0]);
    centers[b] = Some([d(a, b), 0.0]);
    centers[c] = Some(place_third([0.0, 0.0], [d(a, b), 0.0], d(a, c), d(b, c), d(a, b), 1.0));

    let mut done = vec![false; tris.len()];
    done[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(t) = queue.pop_front() {
        for e in surface.triangle_edges(t) {
            for &s in surface.edge_triangles(e) {
                if done[s] {
                    continue;
                }
                done[s] = true;
                let edge = surface.edges()[e];
                let (u, v) = (edge.0, edge.1);
                let w = tris[s].into_iter().find(|&x| x != u && x != v).expect("triangle has three vertices");
                let old = tris[t].into_iter().find(|&x| x != u && x != v).expect("triangle has three vertices");
                let (pu, pv, po) = (centers[u].unwrap(), centers[v].unwrap(), centers[old].unwrap());
                // the new vertex goes across the shared edge from the old one
                let side = -cross(pu, pv, po);
                let pw = place_third(pu, pv, d(u, w), d(v, w), d(u, v), side);
                match centers[w] {
                    Some(q) => closure = closure.max((q[0] - pw[0]).hypot(q[1] - pw[1])),
                    None => centers[w] = Some(pw),
                }
                queue.push_back(s);
            }
        }
    }
    let centers: Vec<[f64; 2]> = centers.into_iter().map(|c| c.expect("connected surface")).collect();
    let tangency = surface
        .edges()
        .iter()
        .map(|e| {
            let (p, q) = (centers[e.0], centers[e.1]);
            ((p[0] - q[0]).hypot(p[1] - q[1]) - d(e.0, e.1)).abs()
        })
        .fold(0.0, f64::max);
    Ok(Layout {
        centers,
        radii: r.clone(),
        tangency_residual: tangency,
        closure_residual: closure,
    })
}

/// Layout, failing with [`WorkbenchError::LayoutInconsistent`] when the
/// circles do not fit together.
pub fn checked_layout(surface: &Surface, packing: &CirclePackingMetric) -> Result<Layout> {
    let l = layout(surface, packing)?;
    if !(l.residual() <= LAYOUT_TOL) {
        return Err(WorkbenchError::LayoutInconsistent(l.residual()));
    }
    Ok(l)
}

/// Circles and tangency graph in a 1000×1000 viewBox, y pointing up.
pub fn to_svg(surface: &Surface, layout: &Layout) -> String {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (c, r) in layout.centers.iter().zip(&layout.radii) {
        x0 = x0.min(c[0] - r);
        y0 = y0.min(c[1] - r);
        x1 = x1.max(c[0] + r);
        y1 = y1.max(c[1] + r);
    }
    let margin = 20.0;
    let scale = (1000.0 - 2.0 * margin) / (x1 - x0).max(y1 - y0);
    let ox = margin + 0.5 * ((1000.0 - 2.0 * margin) - scale * (x1 - x0));
    let oy = margin + 0.5 * ((1000.0 - 2.0 * margin) - scale * (y1 - y0));
    let map = |p: [f64; 2]| [ox + scale * (p[0] - x0), 1000.0 - (oy + scale * (p[1] - y0))];

    let mut s = String::new();
    s.push_str("<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1000 1000\">\n");
    s.push_str("<g fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"1.5\">\n");
    for (c, r) in layout.centers.iter().zip(&layout.radii) {
        let p = map(*c);
        let _ = writeln!(s, "<circle cx=\"{:.6}\" cy=\"{:.6}\" r=\"{:.6}\"/>", p[0], p[1], r * scale);
    }
    s.push_str("</g>\n<g stroke=\"#c0392b\" stroke-width=\"1\">\n");
    for e in surface.edges() {
        let (p, q) = (map(layout.centers[e.0]), map(layout.centers[e.1]));
        let _ = writeln!(s, "<line x1=\"{:.6}\" y1=\"{:.6}\" x2=\"{:.6}\" y2=\"{:.6}\"/>", p[0], p[1], q[0], q[1]);
    }
    s.push_str("</g>\n</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{hexagon_fan, two_ring_patch};

    fn unit_boundary(surface: &Surface) -> BTreeMap<usize, f64> {
        surface.boundary_vertices().iter().map(|&v| (v, 1.0)).collect()
    }

    #[test]
    fn three_tangent_circles() {
        let s = Surface::new(3, vec![[0, 1, 2]]).unwrap();
        let p = CirclePackingMetric::new(&s, Geometry::Euclidean, vec![1.0; 3]).unwrap();
        let l = checked_layout(&s, &p).unwrap();
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            let (a, b) = (l.centers[i], l.centers[j]);
            assert!(((a[0] - b[0]).hypot(a[1] - b[1]) - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn flowers() {
        for mesh in [hexagon_fan(), two_ring_patch()] {
            let s = &mesh.surface;
            let (p, _) = complete_packing(s, Geometry::Euclidean, &unit_boundary(s), None, 0.0, &SolveOptions::default()).unwrap();
            assert!(p.radii.iter().all(|r| (r - 1.0).abs() < 1e-10));
            let l = checked_layout(s, &p).unwrap();
            assert!(l.tangency_residual < 1e-9 && l.closure_residual < 1e-9);
            let svg = to_svg(s, &l);
            assert_eq!(svg.matches("<circle").count(), s.vertex_count());
            assert_eq!(svg, to_svg(s, &l));
        }
    }

    #[test]
    fn curved_targets_do_not_lay_out() {
        let mesh = hexagon_fan();
        let s = &mesh.surface;
        let (p, _) =
            complete_packing(s, Geometry::Euclidean, &unit_boundary(s), Some(vec![0.5]), 0.0, &SolveOptions::default()).unwrap();
        assert!(matches!(checked_layout(s, &p), Err(WorkbenchError::LayoutInconsistent(_))));
    }
}

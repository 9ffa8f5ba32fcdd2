//! Cyclic polygons from their side lengths.
//!
//! The diagonals of a triangulated polygon are found by the variational
//! solver with zero interior curvature (`φ₀ = 0` in the plane, `ψ₀ = 0` in
//! the hyperbolic plane), which makes opposite angles across each diagonal
//! inscribed-compatible. The circumradius and the vertex positions are
//! recovered afterwards from the sides alone.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rigidity_core::energy::ProblemFlavor;
use rigidity_core::mesh::{Edge, Surface};
use rigidity_core::solver::{self, Outcome, ProblemSpec, SolveOptions};
use rigidity_core::Geometry;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WorkbenchError};
use crate::generators::polygon_fan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonSpec {
    pub side_lengths: Vec<f64>,
    pub geometry: Geometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclicPolygon {
    pub geometry: Geometry,
    pub sides: Vec<f64>,
    pub triangles: Vec<[usize; 3]>,
    pub diagonals: BTreeMap<Edge, f64>,
    pub circumradius: f64,
    /// Whether the circumcentre lies inside the polygon.
    pub center_inside: bool,
    /// Euclidean coordinates, or Poincaré-disk coordinates with the
    /// circumcentre at the origin.
    pub vertices: Vec<[f64; 2]>,
    pub iterations: usize,
}

/// Solve with the fan triangulation from vertex 0.
pub fn cyclic_polygon_solve(spec: &PolygonSpec, options: &SolveOptions) -> Result<CyclicPolygon> {
    cyclic_polygon_solve_with(spec, &polygon_fan(spec.side_lengths.len()), options)
}

/// Solve with an arbitrary triangulation of the polygon `0, 1, …, n-1`;
/// side `i` joins vertices `i` and `i + 1 mod n`.
pub fn cyclic_polygon_solve_with(spec: &PolygonSpec, triangles: &[[usize; 3]], options: &SolveOptions) -> Result<CyclicPolygon> {
    let sides = &spec.side_lengths;
    let n = sides.len();
    if n < 3 {
        return Err(WorkbenchError::InvalidMesh(format!("a polygon needs at least 3 sides, got {n}")));
    }
    let flavor = match spec.geometry {
        Geometry::Euclidean => ProblemFlavor::WPhi,
        Geometry::Hyperbolic => ProblemFlavor::WPsi,
        Geometry::Spherical => {
            return Err(WorkbenchError::InvalidMesh("cyclic polygons are supported in euclidean and hyperbolic geometry".into()))
        }
    };
    if let Some(&bad) = sides.iter().find(|&&s| !spec.geometry.admits_length(s)) {
        return Err(WorkbenchError::InvalidMetric(format!("side length {bad} is not admissible")));
    }
    let total: f64 = sides.iter().sum();
    if let Some(i) = (0..n).find(|&i| sides[i] >= total - sides[i]) {
        return Err(WorkbenchError::NoCyclicPolygon(format!(
            "side {i} ({}) is not shorter than the sum of the others",
            sides[i]
        )));
    }

    let surface = Surface::new(n, triangles.to_vec())?;
    let side_of = |e: Edge| -> Option<usize> {
        if e.1 == e.0 + 1 {
            Some(e.0)
        } else if e.0 == 0 && e.1 == n - 1 {
            Some(n - 1)
        } else {
            None
        }
    };
    let mut boundary = Vec::new();
    for &e in surface.boundary_edges() {
        let edge = surface.edges()[e];
        let i = side_of(edge)
            .ok_or_else(|| WorkbenchError::InvalidMesh(format!("boundary edge {edge} is not a side of the polygon")))?;
        boundary.push(sides[i]);
    }
    if boundary.len() != n {
        return Err(WorkbenchError::InvalidMesh("triangulation does not span the polygon".into()));
    }

    let interior = surface.interior_edges().to_vec();
    let (lengths, iterations) = if interior.is_empty() {
        (Vec::new(), 0)
    } else {
        let problem = ProblemSpec {
            surface: surface.clone(),
            geometry: spec.geometry,
            h: 0.0,
            flavor,
            boundary,
            targets: vec![0.0; interior.len()],
            initial_guess: None,
        };
        let report = solver::solve(&problem, options)?;
        if report.outcome == Outcome::NoGeometricSolution {
            return Err(WorkbenchError::NoCyclicPolygon(
                "the energy minimiser leaves the space of triangulated polygons".into(),
            ));
        }
        let values = report.solution.values();
        (interior.iter().map(|&e| values[e]).collect(), report.iterations)
    };
    let diagonals = interior.iter().map(|&e| surface.edges()[e]).zip(lengths).collect();

    let circle = circumcircle(spec.geometry, sides)?;
    Ok(CyclicPolygon {
        geometry: spec.geometry,
        sides: sides.clone(),
        triangles: triangles.to_vec(),
        diagonals,
        circumradius: circle.radius,
        center_inside: circle.center_inside,
        vertices: circle.vertices,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circumcircle {
    pub radius: f64,
    pub center_inside: bool,
    pub central_angles: Vec<f64>,
    pub vertices: Vec<[f64; 2]>,
}

/// Circle through the vertices of the cyclic polygon with these sides.
///
/// With `q = s/2, ρ = R` (Euclidean) or `q = sinh(s/2), ρ = sinh R`
/// (hyperbolic) every side subtends `δ = 2 asin(q/ρ)`, or `2π` minus that
/// for the one side the centre lies beyond. `ρ` is found by bisection on
/// the closing condition `Σ δ = 2π`.
pub fn circumcircle(geometry: Geometry, sides: &[f64]) -> Result<Circumcircle> {
    let q: Vec<f64> = match geometry {
        Geometry::Euclidean => sides.iter().map(|s| 0.5 * s).collect(),
        Geometry::Hyperbolic => sides.iter().map(|s| (0.5 * s).sinh()).collect(),
        Geometry::Spherical => return Err(WorkbenchError::InvalidMesh("no circumcircle recovery on the sphere".into())),
    };
    let (imax, qmax) = q
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least three sides");
    let half = |rho: f64, qi: f64| 2.0 * (qi / rho).min(1.0).asin();
    let others = |rho: f64| -> f64 { q.iter().enumerate().filter(|&(i, _)| i != imax).map(|(_, &qi)| half(rho, qi)).sum() };

    let center_inside = others(qmax) + PI >= TAU;
    // both closing functions are increasing in ρ with a sign change
    let closing = |rho: f64| -> f64 {
        if center_inside {
            TAU - others(rho) - half(rho, qmax)
        } else {
            others(rho) - half(rho, qmax)
        }
    };
    let mut lo = qmax;
    let mut hi = 2.0 * qmax;
    let mut grow = 0;
    while closing(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 200 {
            return Err(WorkbenchError::NoCyclicPolygon("the sides do not close up on any circle".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if closing(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rho = 0.5 * (lo + hi);
    let mut central_angles: Vec<f64> = q.iter().map(|&qi| half(rho, qi)).collect();
    if !center_inside {
        central_angles[imax] = TAU - central_angles[imax];
    }
    let residual = central_angles.iter().sum::<f64>() - TAU;
    if !residual.is_finite() || residual.abs() > 1e-9 {
        return Err(WorkbenchError::NoCyclicPolygon(format!("central angles miss 2π by {residual:e}")));
    }
    let radius = match geometry {
        Geometry::Hyperbolic => rho.asinh(),
        _ => rho,
    };
    let draw = match geometry {
        Geometry::Hyperbolic => (0.5 * radius).tanh(),
        _ => radius,
    };
    let mut angle: f64 = 0.0;
    let vertices = central_angles
        .iter()
        .map(|d| {
            let p = [draw * angle.cos(), draw * angle.sin()];
            angle += d;
            p
        })
        .collect();
    Ok(Circumcircle {
        radius,
        center_inside,
        central_angles,
        vertices,
    })
}

//! Combinatorial bordered triangulated surfaces and metric containers.
//!
//! Edges are keyed by the sorted vertex pair and stored in lexicographic
//! order, so every vector indexed by edges is reproducible across runs.
//! Local triangle slot `i` refers to the vertex `triangles[t][i]` and to
//! the edge opposite it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::trig::TriangleLengths;

/// Canonical (sorted) vertex pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge(pub usize, pub usize);

impl Edge {
    pub fn new(a: usize, b: usize) -> Self {
        if a < b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0 == v || self.1 == v
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.0, self.1)
    }
}

impl FromStr for Edge {
    type Err = String;

    /// Parses `"i-j"` with decimal `i < j`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| format!("edge key '{s}' is not of the form i-j"))?;
        let a: usize = a.trim().parse().map_err(|_| format!("bad vertex index in '{s}'"))?;
        let b: usize = b.trim().parse().map_err(|_| format!("bad vertex index in '{s}'"))?;
        if a >= b {
            return Err(format!("edge key '{s}' must satisfy i < j"));
        }
        Ok(Edge(a, b))
    }
}

// Serialized as the "i-j" string so edges can key JSON objects.
impl serde::Serialize for Edge {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Edge {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = std::borrow::Cow::<'de, str>::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Immutable bordered triangulated surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    vertex_count: usize,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    edge_index: HashMap<Edge, usize>,
    edge_triangles: Vec<Vec<usize>>,
    edge_boundary: Vec<bool>,
    vertex_boundary: Vec<bool>,
    triangle_edges: Vec<[usize; 3]>,
    triangle_class: Vec<u8>,
    vertex_triangles: Vec<Vec<usize>>,
    interior_edges: Vec<usize>,
    boundary_edges: Vec<usize>,
    interior_vertices: Vec<usize>,
    boundary_vertices: Vec<usize>,
}

impl Surface {
    pub fn new(vertex_count: usize, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for tri in &triangles {
            if tri.iter().any(|&v| v >= vertex_count) {
                return Err(Error::BadIndex(*tri, "vertex index out of range"));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::BadIndex(*tri, "repeated vertex"));
            }
            let mut key = *tri;
            key.sort_unstable();
            if !seen.insert(key) {
                return Err(Error::BadIndex(*tri, "duplicate triangle"));
            }
        }

        let mut incidence: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let e = Edge::new(tri[(i + 1) % 3], tri[(i + 2) % 3]);
                incidence.entry(e).or_default().push(t);
            }
        }
        if let Some((e, _)) = incidence.iter().find(|(_, ts)| ts.len() > 2) {
            return Err(Error::NonManifoldEdge(e.0, e.1));
        }

        let edges: Vec<Edge> = incidence.keys().copied().collect();
        let edge_index: HashMap<Edge, usize> = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let edge_triangles: Vec<Vec<usize>> = incidence.into_values().collect();
        let edge_boundary: Vec<bool> = edge_triangles.iter().map(|ts| ts.len() == 1).collect();
        if !edge_boundary.iter().any(|&b| b) {
            return Err(Error::ClosedSurface);
        }

        let mut vertex_boundary = vec![false; vertex_count];
        for (e, &b) in edges.iter().zip(&edge_boundary) {
            if b {
                vertex_boundary[e.0] = true;
                vertex_boundary[e.1] = true;
            }
        }

        let mut vertex_triangles = vec![Vec::new(); vertex_count];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_triangles[v].push(t);
            }
        }
        if let Some(v) = vertex_triangles.iter().position(Vec::is_empty) {
            return Err(Error::IsolatedVertex(v));
        }

        let triangle_edges: Vec<[usize; 3]> = triangles
            .iter()
            .map(|tri| std::array::from_fn(|i| edge_index[&Edge::new(tri[(i + 1) % 3], tri[(i + 2) % 3])]))
            .collect();
        let triangle_class = triangle_edges
            .iter()
            .map(|te| te.iter().filter(|&&e| !edge_boundary[e]).count() as u8)
            .collect();

        let surface = Surface {
            vertex_count,
            interior_edges: (0..edges.len()).filter(|&e| !edge_boundary[e]).collect(),
            boundary_edges: (0..edges.len()).filter(|&e| edge_boundary[e]).collect(),
            interior_vertices: (0..vertex_count).filter(|&v| !vertex_boundary[v]).collect(),
            boundary_vertices: (0..vertex_count).filter(|&v| vertex_boundary[v]).collect(),
            triangles,
            edges,
            edge_index,
            edge_triangles,
            edge_boundary,
            vertex_boundary,
            triangle_edges,
            triangle_class,
            vertex_triangles,
        };
        if !surface.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(surface)
    }

    fn is_connected(&self) -> bool {
        let n = self.triangles.len();
        if n == 0 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(t) = stack.pop() {
            for &v in &self.triangles[t] {
                for &u in &self.vertex_triangles[v] {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_index(&self, e: Edge) -> Option<usize> {
        self.edge_index.get(&e).copied()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_boundary[e]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_boundary[v]
    }

    /// Triangles incident to edge `e` (one for boundary, two for interior).
    pub fn edge_triangles(&self, e: usize) -> &[usize] {
        &self.edge_triangles[e]
    }

    /// Edge indices opposite the three local vertex slots of triangle `t`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    /// Number of interior edges of each triangle.
    pub fn triangle_class(&self, t: usize) -> u8 {
        self.triangle_class[t]
    }

    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_triangles[v]
    }

    /// Vertex degree counted as number of incident triangles.
    pub fn vertex_degree(&self, v: usize) -> usize {
        self.vertex_triangles[v].len()
    }

    pub fn interior_edges(&self) -> &[usize] {
        &self.interior_edges
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior_vertices
    }

    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    /// Local slot of vertex `v` in triangle `t`.
    pub fn local_slot(&self, t: usize, v: usize) -> Option<usize> {
        self.triangles[t].iter().position(|&x| x == v)
    }

    /// Local slot of edge `e` in triangle `t` (equal to the slot of the
    /// vertex facing it).
    pub fn edge_slot(&self, t: usize, e: usize) -> Option<usize> {
        self.triangle_edges[t].iter().position(|&x| x == e)
    }

    /// Every triangle has at least one boundary edge.
    pub fn is_stripped(&self) -> bool {
        self.triangle_class.iter().all(|&c| c < 3)
    }
}

/// Edge lengths aligned with [`Surface::edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralMetric {
    pub geometry: Geometry,
    pub lengths: Vec<f64>,
}

impl PolyhedralMetric {
    pub fn new(surface: &Surface, geometry: Geometry, lengths: Vec<f64>) -> Result<Self> {
        if lengths.len() != surface.edges().len() {
            return Err(Error::LengthMismatch {
                expected: surface.edges().len(),
                got: lengths.len(),
            });
        }
        if let Some(&l) = lengths.iter().find(|&&l| !geometry.admits_length(l)) {
            return Err(Error::NonPositiveLength(l));
        }
        Ok(PolyhedralMetric { geometry, lengths })
    }

    /// Like [`PolyhedralMetric::new`] but also requires every triangle to be
    /// strictly admissible.
    pub fn validated(surface: &Surface, geometry: Geometry, lengths: Vec<f64>) -> Result<Self> {
        let metric = Self::new(surface, geometry, lengths)?;
        let bad = validate_metric(surface, &metric);
        if bad.is_empty() {
            Ok(metric)
        } else {
            Err(Error::InvalidMetric(bad))
        }
    }

    pub fn from_map(surface: &Surface, geometry: Geometry, map: &BTreeMap<Edge, f64>) -> Result<Self> {
        let lengths = surface
            .edges()
            .iter()
            .map(|e| map.get(e).copied().ok_or(Error::MissingEdgeLength(e.0, e.1)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(surface, geometry, lengths)
    }

    pub fn length(&self, surface: &Surface, e: Edge) -> Option<f64> {
        surface.edge_index(e).map(|i| self.lengths[i])
    }

    /// Length triple of triangle `t`, slot `i` opposite local vertex `i`.
    pub fn triangle(&self, surface: &Surface, t: usize) -> TriangleLengths {
        TriangleLengths {
            lengths: surface.triangle_edges(t).map(|e| self.lengths[e]),
            geometry: self.geometry,
        }
    }
}

/// Vertex radii aligned with vertex indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CirclePackingMetric {
    pub geometry: Geometry,
    pub radii: Vec<f64>,
}

impl CirclePackingMetric {
    pub fn new(surface: &Surface, geometry: Geometry, radii: Vec<f64>) -> Result<Self> {
        if geometry == Geometry::Spherical {
            return Err(Error::UnsupportedGeometry(geometry));
        }
        if radii.len() != surface.vertex_count() {
            return Err(Error::LengthMismatch {
                expected: surface.vertex_count(),
                got: radii.len(),
            });
        }
        if let Some(&r) = radii.iter().find(|&&r| !(r.is_finite() && r > 0.0)) {
            return Err(Error::NonPositiveRadius(r));
        }
        Ok(CirclePackingMetric { geometry, radii })
    }

    /// The polyhedral metric `d(uv) = r(u) + r(v)`.
    pub fn induced_metric(&self, surface: &Surface) -> PolyhedralMetric {
        PolyhedralMetric {
            geometry: self.geometry,
            lengths: surface
                .edges()
                .iter()
                .map(|e| self.radii[e.0] + self.radii[e.1])
                .collect(),
        }
    }
}

/// Triangles whose length triple is not strictly inside `Ω`.
pub fn validate_metric(surface: &Surface, metric: &PolyhedralMetric) -> Vec<usize> {
    (0..surface.triangles().len())
        .filter(|&t| !metric.triangle(surface, t).in_moduli_space(0.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn hexagon_fan() -> Surface {
        let tris = (1..=6).map(|i| [0, i, i % 6 + 1]).collect();
        Surface::new(7, tris).unwrap()
    }

    #[test]
    fn hexagon_fan_counts() {
        let s = hexagon_fan();
        assert_eq!(s.edges().len(), 12);
        assert_eq!(s.boundary_edges().len(), 6);
        assert_eq!(s.interior_edges().len(), 6);
        assert_eq!(s.interior_vertices(), &[0]);
        assert!((0..6).all(|t| s.triangle_class(t) == 2));
        assert!(s.is_stripped());
        assert!(s.interior_edges().iter().all(|&e| s.edges()[e].contains(0)));
    }

    #[test]
    fn single_and_pair() {
        let one = Surface::new(3, vec![[0, 1, 2]]).unwrap();
        assert_eq!(one.boundary_edges().len(), 3);
        assert_eq!(one.triangle_class(0), 0);
        assert!(one.is_stripped());

        let two = Surface::new(4, vec![[0, 1, 2], [1, 3, 2]]).unwrap();
        assert_eq!(two.interior_edges().len(), 1);
        assert_eq!(two.edges()[two.interior_edges()[0]], Edge(1, 2));
        assert_eq!(two.boundary_edges().len(), 4);
        assert_eq!(two.triangle_class(0), 1);
        assert_eq!(two.triangle_class(1), 1);
    }

    #[test]
    fn ring_around_fan_is_not_stripped() {
        // two-ring hexagonal patch: inner six triangles have no boundary edge
        let mut tris: Vec<[usize; 3]> = (1..=6).map(|i| [0, i, i % 6 + 1]).collect();
        for i in 0..6 {
            let a = 1 + i;
            let b = 1 + (i + 1) % 6;
            let o = 7 + 2 * i;
            let o1 = 7 + (2 * i + 1) % 12;
            let o2 = 7 + (2 * i + 2) % 12;
            tris.push([a, o, o1]);
            tris.push([a, o1, b]);
            tris.push([b, o1, o2]);
        }
        let s = Surface::new(19, tris).unwrap();
        assert!(!s.is_stripped());
        assert_eq!(s.interior_vertices().len(), 7);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(Surface::new(3, vec![[0, 1, 3]]), Err(Error::BadIndex(..))));
        assert!(matches!(Surface::new(3, vec![[0, 1, 1]]), Err(Error::BadIndex(..))));
        assert!(matches!(
            Surface::new(3, vec![[0, 1, 2], [2, 1, 0]]),
            Err(Error::BadIndex(..))
        ));
        assert!(matches!(
            Surface::new(5, vec![[0, 1, 2], [0, 1, 3], [0, 1, 4]]),
            Err(Error::NonManifoldEdge(0, 1))
        ));
        assert!(matches!(
            Surface::new(6, vec![[0, 1, 2], [3, 4, 5]]),
            Err(Error::Disconnected)
        ));
        // tetrahedron boundary is closed
        assert!(matches!(
            Surface::new(4, vec![[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]),
            Err(Error::ClosedSurface)
        ));
        assert!(matches!(Surface::new(4, vec![[0, 1, 2]]), Err(Error::IsolatedVertex(3))));
    }

    #[test]
    fn rebuild_is_identical() {
        let s = hexagon_fan();
        let again = Surface::new(s.vertex_count(), s.triangles().to_vec()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn edge_keys() {
        assert_eq!("3-7".parse::<Edge>().unwrap(), Edge(3, 7));
        assert!("7-3".parse::<Edge>().is_err());
        assert!("a-b".parse::<Edge>().is_err());
        assert_eq!(Edge::new(5, 2).to_string(), "2-5");
    }

    #[test]
    fn metric_validation() {
        let s = hexagon_fan();
        let unit = PolyhedralMetric::new(&s, Geometry::Euclidean, vec![1.0; 12]).unwrap();
        assert!(validate_metric(&s, &unit).is_empty());

        let flat = Surface::new(3, vec![[0, 1, 2]]).unwrap();
        let m = PolyhedralMetric::new(&flat, Geometry::Euclidean, vec![1.0, 1.0, 2.0]).unwrap();
        assert_eq!(validate_metric(&flat, &m), vec![0]);
        assert!(matches!(
            PolyhedralMetric::validated(&flat, Geometry::Euclidean, vec![1.0, 1.0, 2.0]),
            Err(Error::InvalidMetric(_))
        ));

        let big = PolyhedralMetric::new(&flat, Geometry::Spherical, vec![2.5; 3]).unwrap();
        assert_eq!(validate_metric(&flat, &big), vec![0]);

        let partial: BTreeMap<Edge, f64> = [(Edge(0, 1), 1.0), (Edge(1, 2), 1.0)].into_iter().collect();
        assert!(matches!(
            PolyhedralMetric::from_map(&flat, Geometry::Euclidean, &partial),
            Err(Error::MissingEdgeLength(0, 2))
        ));
    }

    #[test]
    fn packings_induce_valid_metrics() {
        let s = hexagon_fan();
        let radii = vec![0.3, 2.0, 0.01, 5.0, 1.0, 0.7, 3.3];
        for g in [Geometry::Euclidean, Geometry::Hyperbolic] {
            let p = CirclePackingMetric::new(&s, g, radii.clone()).unwrap();
            assert!(validate_metric(&s, &p.induced_metric(&s)).is_empty());
        }
        assert!(CirclePackingMetric::new(&s, Geometry::Spherical, radii).is_err());
    }
}

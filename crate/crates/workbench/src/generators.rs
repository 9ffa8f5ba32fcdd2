//! Built-in meshes, embedded metrics and sampled instances with known
//! answers.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rigidity_core::mesh::{PolyhedralMetric, Surface};
use rigidity_core::Geometry;
use spade::{DelaunayTriangulation, Point2, Triangulation};

/// A surface together with planar positions of its vertices.
#[derive(Debug, Clone)]
pub struct PlanarMesh {
    pub surface: Surface,
    pub positions: Vec<[f64; 2]>,
}

impl PlanarMesh {
    /// Edge lengths of the positions read in `geometry`, after scaling the
    /// plane by `scale`.
    ///
    /// Euclidean lengths are plane distances. Hyperbolic lengths treat the
    /// scaled points as points of the Poincaré disk, spherical ones map them
    /// onto the unit sphere by the exponential map at the north pole. Scale
    /// so that every point stays inside the unit disk (hyperbolic) or the
    /// open hemisphere (spherical).
    pub fn metric(&self, geometry: Geometry, scale: f64) -> PolyhedralMetric {
        let p: Vec<[f64; 2]> = self.positions.iter().map(|q| [q[0] * scale, q[1] * scale]).collect();
        let lengths = self
            .surface
            .edges()
            .iter()
            .map(|e| distance(geometry, p[e.0], p[e.1]))
            .collect();
        PolyhedralMetric::validated(&self.surface, geometry, lengths).expect("embedded meshes carry admissible metrics")
    }
}

pub fn distance(geometry: Geometry, p: [f64; 2], q: [f64; 2]) -> f64 {
    let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
    match geometry {
        Geometry::Euclidean => d2.sqrt(),
        Geometry::Hyperbolic => {
            let np = 1.0 - p[0] * p[0] - p[1] * p[1];
            let nq = 1.0 - q[0] * q[0] - q[1] * q[1];
            (1.0 + 2.0 * d2 / (np * nq)).acosh()
        }
        Geometry::Spherical => {
            let a = sphere_point(p);
            let b = sphere_point(q);
            let cross = [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ];
            let sin = (cross[0].powi(2) + cross[1].powi(2) + cross[2].powi(2)).sqrt();
            let cos = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            sin.atan2(cos)
        }
    }
}

fn sphere_point(p: [f64; 2]) -> [f64; 3] {
    let r = p[0].hypot(p[1]);
    if r == 0.0 {
        return [0.0, 0.0, 1.0];
    }
    let s = r.sin() / r;
    [p[0] * s, p[1] * s, r.cos()]
}

fn unit(angle: f64) -> [f64; 2] {
    [angle.cos(), angle.sin()]
}

/// Six triangles around vertex 0, boundary vertices 1..=6 on the unit circle.
pub fn hexagon_fan() -> PlanarMesh {
    let triangles = (1..=6).map(|i| [0, i, i % 6 + 1]).collect();
    let mut positions = vec![[0.0, 0.0]];
    positions.extend((0..6).map(|i| unit(i as f64 * PI / 3.0)));
    PlanarMesh {
        surface: Surface::new(7, triangles).expect("hexagon fan is a disk"),
        positions,
    }
}

/// Two rings of the regular triangular lattice around vertex 0: 19
/// vertices, 24 unit triangles, seven interior vertices.
pub fn two_ring_patch() -> PlanarMesh {
    let mut triangles: Vec<[usize; 3]> = (1..=6).map(|i| [0, i, i % 6 + 1]).collect();
    let mut positions = vec![[0.0, 0.0]; 19];
    for i in 0..6 {
        let a = 1 + i;
        let b = 1 + (i + 1) % 6;
        let o = 7 + 2 * i;
        let o1 = 7 + (2 * i + 1) % 12;
        let o2 = 7 + (2 * i + 2) % 12;
        triangles.extend([[a, o, o1], [a, o1, b], [b, o1, o2]]);
        let pa = unit(i as f64 * PI / 3.0);
        let pb = unit((i + 1) as f64 * PI / 3.0);
        positions[a] = pa;
        positions[o] = [2.0 * pa[0], 2.0 * pa[1]];
        positions[o1] = [pa[0] + pb[0], pa[1] + pb[1]];
    }
    PlanarMesh {
        surface: Surface::new(19, triangles).expect("two-ring patch is a disk"),
        positions,
    }
}

/// Delaunay triangulation of a jittered lattice disk: thirteen lattice
/// points within radius 1.8 moved by up to 0.1, inside twelve points on a
/// circle of radius 2.6. The result has 36 well-shaped triangles and
/// planar positions inside the disk of radius 2.6.
pub fn random_delaunay_disk<R: Rng>(rng: &mut R) -> PlanarMesh {
    let mut points = Vec::new();
    for i in -2i32..=2 {
        for j in -2i32..=2 {
            let p = [i as f64 + 0.5 * j as f64, j as f64 * 3f64.sqrt() / 2.0];
            if p[0].hypot(p[1]) < 1.8 {
                let r = 0.1 * rng.random::<f64>().sqrt();
                let a = TAU * rng.random::<f64>();
                points.push([p[0] + r * a.cos(), p[1] + r * a.sin()]);
            }
        }
    }
    let offset = rng.random::<f64>() * TAU / 12.0;
    points.extend((0..12).map(|k| {
        let a = offset + k as f64 * TAU / 12.0;
        [2.6 * a.cos(), 2.6 * a.sin()]
    }));
    let mut dt: DelaunayTriangulation<Point2<f64>> = DelaunayTriangulation::new();
    let mut handles = Vec::new();
    for p in &points {
        handles.push(dt.insert(Point2::new(p[0], p[1])).expect("finite lattice point"));
    }
    let index = |h: spade::handles::FixedVertexHandle| handles.iter().position(|&x| x == h).expect("inserted vertex");
    let triangles = dt
        .inner_faces()
        .map(|f| f.vertices().map(|v| index(v.fix())))
        .collect();
    PlanarMesh {
        surface: Surface::new(points.len(), triangles).expect("Delaunay triangulation of a disk"),
        positions: points,
    }
}

/// Band of `2n` triangles between two paths of `n + 1` vertices each;
/// every triangle has a boundary edge.
pub fn annulus_strip(n: usize) -> PlanarMesh {
    assert!(n >= 1, "strip needs at least one square");
    let m = n + 1;
    let mut triangles = Vec::with_capacity(2 * n);
    for i in 0..n {
        triangles.push([i, i + 1, m + i]);
        triangles.push([i + 1, m + i + 1, m + i]);
    }
    // bend the band along an arc so that lengths vary from edge to edge
    let mut positions = Vec::with_capacity(2 * m);
    for row in 0..2 {
        let radius = 1.5 + row as f64;
        for i in 0..m {
            let a = (i as f64 + 0.5 * row as f64) * PI / (1.5 * n as f64);
            positions.push([radius * a.cos(), radius * a.sin()]);
        }
    }
    PlanarMesh {
        surface: Surface::new(2 * m, triangles).expect("strip is a disk"),
        positions,
    }
}

/// Fan triangulation of an `n`-gon from vertex 0.
pub fn polygon_fan(n: usize) -> Vec<[usize; 3]> {
    (1..n.saturating_sub(1)).map(|i| [0, i, i + 1]).collect()
}

/// Alternating-diagonal triangulation of a hexagon: the central triangle
/// 0-2-4 with the three ears.
pub fn hexagon_alternating() -> Vec<[usize; 3]> {
    vec![[0, 1, 2], [2, 3, 4], [4, 5, 0], [0, 2, 4]]
}

/// A polygon inscribed in a circle, with the data needed to check a
/// reconstruction.
#[derive(Debug, Clone)]
pub struct CyclicSample {
    pub geometry: Geometry,
    pub radius: f64,
    /// Central angles subtended by each side, summing to `2π`.
    pub central_angles: Vec<f64>,
    pub sides: Vec<f64>,
}

impl CyclicSample {
    pub fn new(geometry: Geometry, radius: f64, central_angles: Vec<f64>) -> Self {
        let sides = central_angles.iter().map(|&d| chord(geometry, radius, d)).collect();
        CyclicSample {
            geometry,
            radius,
            central_angles,
            sides,
        }
    }

    /// Distance between vertices `i` and `j` of the polygon.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (i, j) = (i.min(j), i.max(j));
        chord(self.geometry, self.radius, self.central_angles[i..j].iter().sum())
    }
}

/// Chord of a circle of radius `radius` over central angle `delta`.
pub fn chord(geometry: Geometry, radius: f64, delta: f64) -> f64 {
    let half = (0.5 * delta).sin().abs();
    match geometry {
        Geometry::Euclidean => 2.0 * radius * half,
        Geometry::Hyperbolic => 2.0 * (radius.sinh() * half).asinh(),
        Geometry::Spherical => 2.0 * (radius.sin() * half).asin(),
    }
}

/// Random cyclic `n`-gon: central angles proportional to weights drawn
/// from `[0.25, 1]`, radius from a range suited to the geometry.
pub fn random_cyclic_polygon<R: Rng>(rng: &mut R, n: usize, geometry: Geometry) -> CyclicSample {
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.25..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let angles = weights.iter().map(|w| TAU * w / total).collect();
    let radius = match geometry {
        Geometry::Hyperbolic => rng.random_range(0.3..1.5),
        _ => rng.random_range(0.5..2.0),
    };
    CyclicSample::new(geometry, radius, angles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixed_meshes() {
        let fan = hexagon_fan();
        assert_eq!(fan.surface.interior_vertices(), &[0]);
        assert!(fan.metric(Geometry::Euclidean, 1.0).lengths.iter().all(|l| (l - 1.0).abs() < 1e-15));
        let ring = two_ring_patch();
        assert_eq!(ring.surface.triangles().len(), 24);
        assert_eq!(ring.surface.interior_vertices().len(), 7);
        let m = ring.metric(Geometry::Euclidean, 1.0);
        assert!(m.lengths.iter().all(|l| (l - 1.0).abs() < 1e-12));
    }

    #[test]
    fn delaunay_disk_is_a_disk() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let disk = random_delaunay_disk(&mut rng);
            assert_eq!(disk.surface.vertex_count(), 25);
            assert_eq!(disk.surface.triangles().len(), 36);
            for g in Geometry::ALL {
                let scale = if g == Geometry::Euclidean { 1.0 } else { 0.3 };
                let m = disk.metric(g, scale);
                assert!(rigidity_core::curvature::is_delaunay(&disk.surface, &m).unwrap_or(true));
            }
        }
    }

    #[test]
    fn strip_is_stripped() {
        let s = annulus_strip(5);
        assert!(s.surface.is_stripped());
        assert!(s.surface.interior_vertices().is_empty());
        assert_eq!(s.surface.interior_edges().len(), 9);
        s.metric(Geometry::Hyperbolic, 0.2);
    }

    #[test]
    fn chords() {
        assert!((chord(Geometry::Euclidean, 1.0, PI / 3.0) - 1.0).abs() < 1e-15);
        // cosh d = cosh²R − sinh²R cos δ
        let (r, d) = (0.8_f64, 1.1_f64);
        let expect = (r.cosh().powi(2) - r.sinh().powi(2) * d.cos()).acosh();
        assert!((chord(Geometry::Hyperbolic, r, d) - expect).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_cyclic_polygon(&mut rng, 7, Geometry::Euclidean);
        assert!((p.central_angles.iter().sum::<f64>() - TAU).abs() < 1e-12);
        assert!((p.distance(0, 1) - p.sides[0]).abs() < 1e-15);
    }
}

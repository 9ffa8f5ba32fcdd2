//! Discrete curvatures: the edge functionals `φ_h`, `ψ_h`, the vertex
//! curvature `k_h` of circle packings, and the Delaunay predicate.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::mesh::{CirclePackingMetric, Edge, PolyhedralMetric, Surface};
use crate::quadrature::GaussKronrod;
use crate::trig::{alphas, angles_from_lengths, TriangleAngles};

/// Default tolerance of [`is_delaunay`].
pub const DELAUNAY_EPS: f64 = 1e-12;

/// Integrand families `sin^h t`, `cos^h t`, `tan^h(t/2)`, `sinh^h t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    SinPow,
    CosPow,
    TanHalfPow,
    SinhPow,
}

impl KernelKind {
    fn eval(self, h: f64, t: f64) -> f64 {
        let base = match self {
            KernelKind::SinPow => t.sin(),
            KernelKind::CosPow => t.cos(),
            KernelKind::TanHalfPow => (0.5 * t).tan(),
            KernelKind::SinhPow => t.sinh(),
        };
        base.abs().powf(h)
    }

    /// Value at `t = c + s` for a singular point `c`, using the local
    /// reflection identities so that tiny offsets are resolved.
    fn eval_near(self, h: f64, c: f64, s: f64) -> f64 {
        let base = match self {
            KernelKind::SinPow => s.sin(),
            KernelKind::CosPow => s.sin(),
            KernelKind::TanHalfPow if (c / PI).round() as i64 % 2 == 0 => (0.5 * s).tan(),
            KernelKind::TanHalfPow => 1.0 / (0.5 * s).tan(),
            KernelKind::SinhPow => s.sinh(),
        };
        base.abs().powf(h)
    }

    /// Singular points inside `[lo, hi]` with the local power `p`, meaning
    /// the integrand behaves like `|t - s|^p` there. Only `p < 0` matters.
    fn singularities(self, h: f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut lattice = |offset: f64, period: f64, p: f64| {
            if p >= 0.0 {
                return;
            }
            let first = ((lo - offset) / period).ceil() as i64;
            let last = ((hi - offset) / period).floor() as i64;
            for n in first..=last {
                out.push((offset + n as f64 * period, p));
            }
        };
        match self {
            KernelKind::SinPow => lattice(0.0, PI, h),
            KernelKind::CosPow => lattice(FRAC_PI_2, PI, h),
            // zeros of tan(t/2) at 2nπ, poles at (2n+1)π
            KernelKind::TanHalfPow => {
                lattice(0.0, 2.0 * PI, h);
                lattice(PI, 2.0 * PI, -h);
            }
            KernelKind::SinhPow => lattice(0.0, f64::INFINITY, h),
        }
        out
    }

    fn closed_form(self, h: f64, a: f64, b: f64) -> Option<f64> {
        if h == 0.0 {
            return Some(b - a);
        }
        let anti: fn(f64) -> f64 = match (self, h) {
            (KernelKind::SinPow, 1.0) => |t| -t.cos(),
            (KernelKind::SinPow, 2.0) => |t| 0.5 * t - 0.25 * (2.0 * t).sin(),
            (KernelKind::SinPow, -2.0) => |t| -1.0 / t.tan(),
            (KernelKind::CosPow, 1.0) => f64::sin,
            (KernelKind::CosPow, 2.0) => |t| 0.5 * t + 0.25 * (2.0 * t).sin(),
            (KernelKind::CosPow, -2.0) => f64::tan,
            (KernelKind::TanHalfPow, 1.0) => |t| -2.0 * (0.5 * t).cos().abs().ln(),
            (KernelKind::TanHalfPow, -1.0) => |t| 2.0 * (0.5 * t).sin().abs().ln(),
            (KernelKind::SinhPow, 1.0) => f64::cosh,
            _ => return None,
        };
        Some(anti(b) - anti(a))
    }
}

fn kernel(kind: KernelKind, h: f64, a: f64, b: f64, allow_endpoint: bool) -> Result<f64> {
    if !(h.is_finite() && a.is_finite() && b.is_finite()) {
        return Err(Error::SingularIntegrand { a, b, h });
    }
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let sing = kind.singularities(h, lo, hi);
    let mut endpoint: [Option<f64>; 2] = [None, None];
    for &(s, p) in &sing {
        let at_lo = s == lo;
        let at_hi = s == hi;
        if !(at_lo || at_hi) || !allow_endpoint || p <= -1.0 {
            return Err(Error::SingularIntegrand { a, b, h });
        }
        endpoint[if at_lo { 0 } else { 1 }] = Some(p);
    }
    if endpoint == [None, None] {
        if let Some(v) = kind.closed_form(h, a, b) {
            return Ok(v);
        }
    }
    let gk = GaussKronrod::default();
    let near = |c: f64| move |s: f64| kind.eval_near(h, c, s);
    let value = match endpoint {
        [None, None] => gk.integrate(|t| kind.eval(h, t), lo, hi)?.value,
        [Some(p), None] => gk.integrate_power_singular(near(lo), lo, hi, p)?.value,
        [None, Some(p)] => -gk.integrate_power_singular(near(hi), hi, lo, p)?.value,
        [Some(p), Some(q)] => {
            let mid = 0.5 * (lo + hi);
            gk.integrate_power_singular(near(lo), lo, mid, p)?.value
                - gk.integrate_power_singular(near(hi), hi, mid, q)?.value
        }
    };
    Ok(if a < b { value } else { -value })
}

/// Signed `∫_a^b kernel^h`. The closed interval must avoid every
/// singularity of the integrand.
pub fn integral_kernel(kind: KernelKind, h: f64, a: f64, b: f64) -> Result<f64> {
    kernel(kind, h, a, b, false)
}

/// Like [`integral_kernel`] but also accepts an integrable singularity
/// (local power above `-1`) sitting exactly at an endpoint.
pub fn integral_kernel_improper(kind: KernelKind, h: f64, a: f64, b: f64) -> Result<f64> {
    kernel(kind, h, a, b, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeFlavor {
    Phi,
    Psi,
}

/// Curvature values on the interior edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCurvature {
    pub flavor: EdgeFlavor,
    pub h: f64,
    pub geometry: Geometry,
    pub values: BTreeMap<Edge, f64>,
}

impl EdgeCurvature {
    pub fn get(&self, e: Edge) -> Option<f64> {
        self.values.get(&e).copied()
    }

    /// Values in the order of [`Surface::interior_edges`].
    pub fn to_vec(&self) -> Vec<f64> {
        self.values.values().copied().collect()
    }
}

/// Curvature values on the interior vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexCurvature {
    pub h: f64,
    pub values: BTreeMap<usize, f64>,
}

impl VertexCurvature {
    pub fn get(&self, v: usize) -> Option<f64> {
        self.values.get(&v).copied()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.values.values().copied().collect()
    }
}

fn triangle_angles(surface: &Surface, metric: &PolyhedralMetric) -> Result<Vec<TriangleAngles>> {
    (0..surface.triangles().len())
        .map(|t| angles_from_lengths(&metric.triangle(surface, t)))
        .collect()
}

fn edge_curvature<F>(surface: &Surface, metric: &PolyhedralMetric, h: f64, flavor: EdgeFlavor, term: F) -> Result<EdgeCurvature>
where
    F: Fn(&TriangleAngles, usize) -> Result<f64>,
{
    let angles = triangle_angles(surface, metric)?;
    let mut values = BTreeMap::new();
    for &e in surface.interior_edges() {
        let mut sum = 0.0;
        for &t in surface.edge_triangles(e) {
            let slot = surface.edge_slot(t, e).expect("edge belongs to its triangle");
            sum += term(&angles[t], slot)?;
        }
        values.insert(surface.edges()[e], sum);
    }
    Ok(EdgeCurvature {
        flavor,
        h,
        geometry: metric.geometry,
        values,
    })
}

/// `φ_h(e) = ∫_a^{π/2} sin^h + ∫_{a'}^{π/2} sin^h` over the facing angles.
pub fn phi_h(surface: &Surface, metric: &PolyhedralMetric, h: f64) -> Result<EdgeCurvature> {
    edge_curvature(surface, metric, h, EdgeFlavor::Phi, |theta, i| {
        integral_kernel(KernelKind::SinPow, h, theta[i], FRAC_PI_2)
    })
}

/// `ψ_h(e) = ∫_0^{(b+c-a)/2} cos^h` summed over both triangles of `e`.
pub fn psi_h(surface: &Surface, metric: &PolyhedralMetric, h: f64) -> Result<EdgeCurvature> {
    edge_curvature(surface, metric, h, EdgeFlavor::Psi, |theta, i| {
        integral_kernel(KernelKind::CosPow, h, 0.0, -alphas(theta)[i])
    })
}

/// `k_h(v) = (2 - m/2)π - Σ ∫_{π/2}^{θ_i} tan^h(t/2)` on interior vertices.
pub fn k_h(surface: &Surface, packing: &CirclePackingMetric, h: f64) -> Result<VertexCurvature> {
    let metric = packing.induced_metric(surface);
    let angles = triangle_angles(surface, &metric)?;
    let mut values = BTreeMap::new();
    for &v in surface.interior_vertices() {
        let star = surface.vertex_triangles(v);
        let mut k = (2.0 - 0.5 * star.len() as f64) * PI;
        for &t in star {
            let slot = surface.local_slot(t, v).expect("vertex belongs to its triangle");
            k -= integral_kernel(KernelKind::TanHalfPow, h, FRAC_PI_2, angles[t][slot])?;
        }
        values.insert(v, k);
    }
    Ok(VertexCurvature { h, values })
}

/// Delaunay test `ψ_0(e) ≥ -eps` on every interior edge.
pub fn is_delaunay_with_tol(surface: &Surface, metric: &PolyhedralMetric, eps: f64) -> Result<bool> {
    if metric.geometry == Geometry::Spherical {
        return Err(Error::UnsupportedGeometry(Geometry::Spherical));
    }
    Ok(psi_h(surface, metric, 0.0)?.values.values().all(|&v| v >= -eps))
}

pub fn is_delaunay(surface: &Surface, metric: &PolyhedralMetric) -> Result<bool> {
    is_delaunay_with_tol(surface, metric, DELAUNAY_EPS)
}

/// Residual of `Σ_{v≺e} ψ_0(e) = 2π - k_0(v)` at an interior vertex, with
/// `k_0(v) = 2π - Σθ` read off the metric.
///
/// Every edge at an interior vertex is interior and both of its triangles
/// contain the vertex, so the identity applies to all interior vertices.
pub fn vertex_edge_identity_check(surface: &Surface, metric: &PolyhedralMetric, vertex: usize) -> Result<f64> {
    if vertex >= surface.vertex_count() {
        return Err(Error::NotApplicable("vertex index out of range"));
    }
    if surface.is_boundary_vertex(vertex) {
        return Err(Error::NotApplicable("vertex lies on the boundary"));
    }
    let psi = psi_h(surface, metric, 0.0)?;
    let angles = triangle_angles(surface, metric)?;
    let edge_sum: f64 = psi
        .values
        .iter()
        .filter(|(e, _)| e.contains(vertex))
        .map(|(_, v)| v)
        .sum();
    let angle_sum: f64 = surface
        .vertex_triangles(vertex)
        .iter()
        .map(|&t| angles[t][surface.local_slot(t, vertex).expect("vertex in star")])
        .sum();
    Ok(edge_sum - angle_sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn pair(geometry: Geometry, lengths: [f64; 5]) -> (Surface, PolyhedralMetric) {
        // edges sorted: 0-1, 0-2, 1-2 (shared), 1-3, 2-3
        let s = Surface::new(4, vec![[0, 1, 2], [1, 3, 2]]).unwrap();
        let m = PolyhedralMetric::new(&s, geometry, lengths.to_vec()).unwrap();
        (s, m)
    }

    fn kernel_by_quadrature(kind: KernelKind, h: f64, a: f64, b: f64) -> f64 {
        GaussKronrod::default().integrate(|t| kind.eval(h, t), a, b).unwrap().value
    }

    #[test]
    fn kernel_examples() {
        let sin = KernelKind::SinPow;
        assert!(close(integral_kernel(sin, 0.0, FRAC_PI_2, PI / 3.0).unwrap(), -0.5235987755982988, 1e-15));
        assert!(close(integral_kernel(sin, 1.0, FRAC_PI_2, PI).unwrap(), 1.0, 1e-15));
        assert!(close(
            integral_kernel(KernelKind::TanHalfPow, 0.0, FRAC_PI_2, PI / 3.0).unwrap(),
            -PI / 6.0,
            1e-15
        ));
        assert!(close(
            integral_kernel(KernelKind::CosPow, 2.0, 0.0, PI / 4.0).unwrap(),
            0.642699081698724,
            1e-14
        ));
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let cases = [
            (KernelKind::SinPow, [1.0, 2.0, -2.0], (0.3, 2.9)),
            (KernelKind::CosPow, [1.0, 2.0, -2.0], (-1.2, 1.4)),
            (KernelKind::TanHalfPow, [1.0, -1.0, 0.0], (0.2, 2.8)),
            (KernelKind::SinhPow, [1.0, 0.0, 0.0], (0.1, 2.5)),
        ];
        for (kind, hs, (a, b)) in cases {
            for h in hs {
                let fast = integral_kernel(kind, h, a, b).unwrap();
                let slow = kernel_by_quadrature(kind, h, a, b);
                assert!(close(fast, slow, 1e-12), "{kind:?} h={h}: {fast} vs {slow}");
                let back = integral_kernel(kind, h, b, a).unwrap();
                assert!(close(fast, -back, 1e-14));
            }
        }
    }

    #[test]
    fn generic_exponent_uses_quadrature() {
        // ∫_{π/3}^{π/2} sin^{1/2}, reference from 30-digit quadrature
        let v = integral_kernel(KernelKind::SinPow, 0.5, PI / 3.0, FRAC_PI_2).unwrap();
        assert!(close(v, 0.511549100259979574, 1e-14), "{v}");
    }

    #[test]
    fn singular_intervals_raise() {
        let err = |r: Result<f64>| matches!(r, Err(Error::SingularIntegrand { .. }));
        assert!(err(integral_kernel(KernelKind::SinPow, -2.0, 0.0, 1.0)));
        assert!(err(integral_kernel(KernelKind::SinPow, -0.5, 3.0, 3.5)));
        assert!(err(integral_kernel(KernelKind::CosPow, -1.0, 0.0, 2.0)));
        assert!(err(integral_kernel(KernelKind::TanHalfPow, -1.0, 0.0, 1.0)));
        assert!(err(integral_kernel(KernelKind::TanHalfPow, 2.0, 1.0, PI)));
        assert!(err(integral_kernel(KernelKind::SinhPow, -1.0, 0.0, 1.0)));
        // positive powers are harmless at zeros
        assert!(integral_kernel(KernelKind::SinPow, 2.0, 0.0, PI).is_ok());
    }

    #[test]
    fn improper_endpoints() {
        // ∫_0^{π/2} sin^{-1/2} = Γ(1/4)² / (2√(2π))
        let v = integral_kernel_improper(KernelKind::SinPow, -0.5, 0.0, FRAC_PI_2).unwrap();
        assert!(close(v, 2.622057554292119, 1e-11), "{v}");
        let w = integral_kernel_improper(KernelKind::SinPow, -0.5, PI, FRAC_PI_2).unwrap();
        assert!(close(w, -v, 1e-11));
        // both ends singular
        let both = integral_kernel_improper(KernelKind::SinPow, -0.5, 0.0, PI).unwrap();
        assert!(close(both, 2.0 * v, 1e-11));
        // tan(t/2)^{1/2} pole at π is integrable
        assert!(integral_kernel_improper(KernelKind::TanHalfPow, 0.5, FRAC_PI_2, PI).unwrap().is_finite());
        // non-integrable stays an error
        assert!(integral_kernel_improper(KernelKind::SinPow, -1.0, 0.0, 1.0).is_err());
        assert!(integral_kernel_improper(KernelKind::SinPow, -0.5, -0.1, 1.0).is_err());
    }

    #[test]
    fn equilateral_pair() {
        let (s, m) = pair(Geometry::Euclidean, [1.0; 5]);
        let e = Edge(1, 2);
        assert!(close(phi_h(&s, &m, 0.0).unwrap().get(e).unwrap(), FRAC_PI_3, 1e-14));
        assert!(close(phi_h(&s, &m, -2.0).unwrap().get(e).unwrap(), 1.1547005383792517, 1e-13));
        assert!(close(psi_h(&s, &m, 0.0).unwrap().get(e).unwrap(), FRAC_PI_3, 1e-14));
        assert_eq!(phi_h(&s, &m, 0.0).unwrap().values.len(), 1);
        assert!(is_delaunay(&s, &m).unwrap());
    }

    #[test]
    fn right_angles_give_zero() {
        // unit square split along the shared diagonal 1-2
        let d = 2f64.sqrt();
        let (s, m) = pair(Geometry::Euclidean, [1.0, 1.0, d, 1.0, 1.0]);
        for h in [-2.0, -0.5, 0.0, 1.3, 2.0] {
            assert!(close(phi_h(&s, &m, h).unwrap().get(Edge(1, 2)).unwrap(), 0.0, 1e-13));
        }
    }

    #[test]
    fn long_diagonal_is_not_delaunay() {
        let (s, m) = pair(Geometry::Euclidean, [2.0, 2.0, 3.5, 2.0, 2.0]);
        let psi = psi_h(&s, &m, 0.0).unwrap().get(Edge(1, 2)).unwrap();
        assert!(close(psi, -1.120150612453164, 1e-12), "{psi}");
        assert!(!is_delaunay(&s, &m).unwrap());
        let (s, m) = pair(Geometry::Spherical, [1.0; 5]);
        assert!(matches!(is_delaunay(&s, &m), Err(Error::UnsupportedGeometry(_))));
    }

    #[test]
    fn hexagon_fan_vertex_curvature() {
        let s = Surface::new(7, (1..=6).map(|i| [0, i, i % 6 + 1]).collect()).unwrap();
        let unit = CirclePackingMetric::new(&s, Geometry::Euclidean, vec![1.0; 7]).unwrap();
        assert!(close(k_h(&s, &unit, 0.0).unwrap().get(0).unwrap(), 0.0, 1e-13));

        let mut radii = vec![2.0; 7];
        radii[0] = 1.0;
        let p = CirclePackingMetric::new(&s, Geometry::Euclidean, radii).unwrap();
        let k = k_h(&s, &p, 0.0).unwrap().get(0).unwrap();
        assert!(close(k, -2.473546567544010, 1e-12), "{k}");
        // h = 1 cross-check against direct quadrature of the definition
        let theta = 1.459455312453933f64;
        let direct = -PI - 6.0 * kernel_by_quadrature(KernelKind::TanHalfPow, 1.0, FRAC_PI_2, theta);
        let k1 = k_h(&s, &p, 1.0).unwrap().get(0).unwrap();
        assert!(close(k1, direct, 1e-12), "{k1} vs {direct}");
        // the induced metric is Delaunay
        assert!(is_delaunay(&s, &p.induced_metric(&s)).unwrap());
    }

    #[test]
    fn identity_on_fan_center() {
        let s = Surface::new(7, (1..=6).map(|i| [0, i, i % 6 + 1]).collect()).unwrap();
        let lengths: Vec<f64> = (0..12).map(|i| 1.0 + 0.05 * ((i * 7 % 5) as f64)).collect();
        let m = PolyhedralMetric::validated(&s, Geometry::Hyperbolic, lengths).unwrap();
        assert!(vertex_edge_identity_check(&s, &m, 0).unwrap().abs() < 1e-12);
        assert!(matches!(
            vertex_edge_identity_check(&s, &m, 3),
            Err(Error::NotApplicable(_))
        ));
    }
}

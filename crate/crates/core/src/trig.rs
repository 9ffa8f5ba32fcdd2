//! Per-triangle trigonometry in the three model geometries.
//!
//! Indexing convention: `lengths[i]` is the side opposite vertex `i` and
//! `angles[i]` is the inner angle at vertex `i`, so `θ_i` faces `l_i`.

use std::f64::consts::PI;

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::geometry::Geometry;

/// Width of the band outside `[-1, 1]` in which cosine-law arguments are
/// treated as roundoff and clamped.
pub const ACOS_BAND: f64 = 1e-12;

#[inline]
fn others(i: usize) -> (usize, usize) {
    ((i + 1) % 3, (i + 2) % 3)
}

/// Three side lengths of a triangle in a given geometry.
///
/// Construction only checks that each length lies in `J` (positive, and
/// below `π` on the sphere); degenerate triples are representable so that
/// the constant extension can be evaluated on them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleLengths {
    pub lengths: [f64; 3],
    pub geometry: Geometry,
}

impl TriangleLengths {
    pub fn new(lengths: [f64; 3], geometry: Geometry) -> Result<Self> {
        for &l in &lengths {
            if !geometry.admits_length(l) {
                return Err(Error::NonPositiveLength(l));
            }
        }
        Ok(TriangleLengths { lengths, geometry })
    }

    pub fn euclidean(lengths: [f64; 3]) -> Result<Self> {
        Self::new(lengths, Geometry::Euclidean)
    }

    pub fn hyperbolic(lengths: [f64; 3]) -> Result<Self> {
        Self::new(lengths, Geometry::Hyperbolic)
    }

    pub fn spherical(lengths: [f64; 3]) -> Result<Self> {
        Self::new(lengths, Geometry::Spherical)
    }

    /// Membership in the open moduli space `Ω`, shrunk by `slack ≥ 0`.
    pub fn in_moduli_space(&self, slack: f64) -> bool {
        let l = self.lengths;
        let triangle = (0..3).all(|i| {
            let (j, k) = others(i);
            l[j] + l[k] > l[i] + slack
        });
        match self.geometry {
            Geometry::Spherical => triangle && l.iter().sum::<f64>() < 2.0 * PI - slack,
            _ => triangle,
        }
    }

    fn cos_angle(&self, i: usize) -> f64 {
        let (j, k) = others(i);
        let l = self.lengths;
        match self.geometry {
            Geometry::Euclidean => (l[j] * l[j] + l[k] * l[k] - l[i] * l[i]) / (2.0 * l[j] * l[k]),
            Geometry::Hyperbolic => {
                (l[j].cosh() * l[k].cosh() - l[i].cosh()) / (l[j].sinh() * l[k].sinh())
            }
            Geometry::Spherical => (l[i].cos() - l[j].cos() * l[k].cos()) / (l[j].sin() * l[k].sin()),
        }
    }
}

/// Inner angles, `angles[i]` at the vertex opposite `l_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleAngles {
    pub angles: [f64; 3],
}

impl TriangleAngles {
    pub fn sum(&self) -> f64 {
        self.angles.iter().sum()
    }
}

impl std::ops::Index<usize> for TriangleAngles {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.angles[i]
    }
}

fn clamped_acos(c: f64, lengths: [f64; 3]) -> Result<f64> {
    if !c.is_finite() || !(-1.0 - ACOS_BAND..=1.0 + ACOS_BAND).contains(&c) {
        return Err(Error::DegenerateTriangle(lengths));
    }
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Cosine-law angles of a triangle strictly inside `Ω`.
pub fn angles_from_lengths(t: &TriangleLengths) -> Result<TriangleAngles> {
    if !t.in_moduli_space(0.0) {
        return Err(Error::DegenerateTriangle(t.lengths));
    }
    let mut angles = [0.0; 3];
    for (i, a) in angles.iter_mut().enumerate() {
        *a = clamped_acos(t.cos_angle(i), t.lengths)?;
    }
    Ok(TriangleAngles { angles })
}

/// Angles extended by constants to all of `J³`.
///
/// Inside `Ω` this is the cosine law. Where `l_i ≥ l_j + l_k` the angle
/// facing `l_i` is `π` and the other two vanish. On the spherical region
/// `l_1 + l_2 + l_3 ≥ 2π` all three angles are `π`.
pub fn extended_angles(t: &TriangleLengths) -> TriangleAngles {
    if t.in_moduli_space(0.0) {
        if let Ok(a) = angles_from_lengths(t) {
            return a;
        }
    }
    let l = t.lengths;
    if t.geometry == Geometry::Spherical {
        let perimeter_gap = 2.0 * PI - l.iter().sum::<f64>();
        let worst = (0..3)
            .map(|i| {
                let (j, k) = others(i);
                l[j] + l[k] - l[i]
            })
            .fold(f64::INFINITY, f64::min);
        if perimeter_gap <= 0.0 || perimeter_gap < worst {
            return TriangleAngles { angles: [PI; 3] };
        }
    }
    // facing the longest side relative to the other two
    let i = (0..3)
        .min_by(|&a, &b| {
            let (ja, ka) = others(a);
            let (jb, kb) = others(b);
            (l[ja] + l[ka] - l[a]).total_cmp(&(l[jb] + l[kb] - l[b]))
        })
        .unwrap_or(0);
    let mut angles = [0.0; 3];
    angles[i] = PI;
    TriangleAngles { angles }
}

/// Analytic Jacobian `[∂θ_i/∂l_j]`.
pub fn angle_jacobian(t: &TriangleLengths) -> Result<Matrix3<f64>> {
    let theta = angles_from_lengths(t)?;
    let g = t.geometry;
    let m = t.lengths.map(|l| g.m(l));
    let mut jac = Matrix3::zeros();
    for i in 0..3 {
        let (j, k) = others(i);
        let diag = m[i] / (theta[i].sin() * m[j] * m[k]);
        jac[(i, i)] = diag;
        // ∂θ_i/∂l_j = -cos θ_k ∂θ_i/∂l_i, with k the remaining index
        jac[(i, j)] = -theta[k].cos() * diag;
        jac[(i, k)] = -theta[j].cos() * diag;
    }
    Ok(jac)
}

/// Inscribed-circle tangent lengths `r_i` and angle combinations `α_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxCoords {
    /// `r_i = (l_j + l_k - l_i) / 2`
    pub r: [f64; 3],
    /// `α_i = (θ_i - θ_j - θ_k) / 2`
    pub alpha: [f64; 3],
}

impl AuxCoords {
    /// `ζ = -(θ_1 + θ_2 + θ_3) / 2`, equal to `α_1 + α_2 + α_3`.
    pub fn zeta(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// Recovers `l_i = r_j + r_k`.
    pub fn lengths(&self) -> [f64; 3] {
        let r = self.r;
        [r[1] + r[2], r[0] + r[2], r[0] + r[1]]
    }
}

pub fn alphas(theta: &TriangleAngles) -> [f64; 3] {
    let a = theta.angles;
    [
        0.5 * (a[0] - a[1] - a[2]),
        0.5 * (a[1] - a[0] - a[2]),
        0.5 * (a[2] - a[0] - a[1]),
    ]
}

pub fn aux_coords(t: &TriangleLengths) -> Result<AuxCoords> {
    let theta = angles_from_lengths(t)?;
    let l = t.lengths;
    let r = [
        0.5 * (l[1] + l[2] - l[0]),
        0.5 * (l[0] + l[2] - l[1]),
        0.5 * (l[0] + l[1] - l[2]),
    ];
    Ok(AuxCoords {
        r,
        alpha: alphas(&theta),
    })
}

/// Which index-independent quantity of the tangent law to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentLaw {
    /// `cos α_i coth(l_i/2)` (hyperbolic), `cos α_i cot(l_i/2)` (spherical),
    /// `cos α_i / l_i` (Euclidean).
    HalfLength,
    /// `sinh r_i tan(θ_i/2)` (hyperbolic), `sin r_i tan(θ_i/2)` (spherical),
    /// `r_i tan(θ_i/2)` (Euclidean, the inradius).
    Inradius,
}

pub const TANGENT_LAW_TOL: f64 = 1e-9;

/// Common value of the tangent-law expression over the three indices.
pub fn tangent_law_invariant(t: &TriangleLengths, law: TangentLaw) -> Result<f64> {
    let theta = angles_from_lengths(t)?;
    let aux = aux_coords(t)?;
    let g = t.geometry;
    let values: [f64; 3] = std::array::from_fn(|i| {
        let l = t.lengths[i];
        match law {
            TangentLaw::HalfLength => {
                let c = aux.alpha[i].cos();
                match g {
                    Geometry::Euclidean => c / l,
                    Geometry::Hyperbolic => c / (0.5 * l).tanh(),
                    Geometry::Spherical => c / (0.5 * l).tan(),
                }
            }
            TangentLaw::Inradius => {
                let r = aux.r[i];
                let half = (0.5 * theta[i]).tan();
                match g {
                    Geometry::Euclidean => r * half,
                    Geometry::Hyperbolic => r.sinh() * half,
                    Geometry::Spherical => r.sin() * half,
                }
            }
        }
    });
    let mean = values.iter().sum::<f64>() / 3.0;
    let spread = values
        .iter()
        .map(|v| (v - mean).abs())
        .fold(0.0, f64::max);
    if spread > TANGENT_LAW_TOL * mean.abs().max(1.0) {
        return Err(Error::IndexMismatch(values));
    }
    Ok(mean)
}

/// The symmetric matrix `P` of a hyperbolic triangle (positive definite on `Ω`).
pub fn matrix_p(t: &TriangleLengths) -> Result<Matrix3<f64>> {
    if t.geometry != Geometry::Hyperbolic {
        return Err(Error::UnsupportedGeometry(t.geometry));
    }
    if !t.in_moduli_space(0.0) {
        return Err(Error::DegenerateTriangle(t.lengths));
    }
    let c = t.lengths.map(f64::cosh);
    let s = c[0] + c[1] + c[2] + 1.0;
    let mut p = Matrix3::zeros();
    for i in 0..3 {
        let (j, k) = others(i);
        p[(i, i)] = (0.5 * t.lengths[i]).tanh().powi(2) * s;
        let off = -c[i] - c[j] + c[k] + 1.0;
        p[(i, j)] = off;
        p[(j, i)] = off;
    }
    Ok(p)
}

/// `M = [1, -cos θ_k]`: positive semi-definite with kernel `(l_1, l_2, l_3)`
/// for Euclidean angles, positive definite for spherical ones.
pub fn matrix_m(theta: &TriangleAngles) -> Matrix3<f64> {
    let mut m = Matrix3::identity();
    for i in 0..3 {
        let (j, k) = others(i);
        let off = -theta[k].cos();
        m[(i, j)] = off;
        m[(j, i)] = off;
    }
    m
}

/// Side lengths of the triangle spanned by three mutually tangent circles
/// with radii `r` centred at the vertices: `l_i = r_j + r_k`.
pub fn packing_lengths(radii: [f64; 3], geometry: Geometry) -> Result<TriangleLengths> {
    if geometry == Geometry::Spherical {
        return Err(Error::UnsupportedGeometry(geometry));
    }
    for &r in &radii {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::NonPositiveRadius(r));
        }
    }
    TriangleLengths::new(
        [radii[1] + radii[2], radii[0] + radii[2], radii[0] + radii[1]],
        geometry,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn right_triangle_angles() {
        let t = TriangleLengths::euclidean([3.0, 4.0, 5.0]).unwrap();
        let a = angles_from_lengths(&t).unwrap();
        // high-precision cosine law
        assert!(close(a[0], 0.643_501_108_793_284_3, 1e-14));
        assert!(close(a[1], 0.927_295_218_001_612_2, 1e-14));
        assert!(close(a[2], PI / 2.0, 1e-14));
    }

    #[test]
    fn equilateral_and_octant() {
        let e = angles_from_lengths(&TriangleLengths::euclidean([1.0; 3]).unwrap()).unwrap();
        assert!(e.angles.iter().all(|&x| close(x, PI / 3.0, 1e-15)));
        let s = angles_from_lengths(&TriangleLengths::spherical([PI / 2.0; 3]).unwrap()).unwrap();
        assert!(s.angles.iter().all(|&x| close(x, PI / 2.0, 1e-15)));
    }

    #[test]
    fn hyperbolic_equilateral() {
        let h = angles_from_lengths(&TriangleLengths::hyperbolic([1.0; 3]).unwrap()).unwrap();
        for &x in &h.angles {
            assert!(close(x, 0.918_797_872_178_027_4, 1e-14));
            assert!(close(x.cos(), 0.606_776_133_517_036_3, 1e-14));
        }
        assert!(h.sum() < PI);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let t = TriangleLengths::euclidean([1.0, 1.0, 2.0]).unwrap();
        assert!(matches!(angles_from_lengths(&t), Err(Error::DegenerateTriangle(_))));
        assert!(TriangleLengths::euclidean([1.0, 0.0, 1.0]).is_err());
        assert!(TriangleLengths::spherical([1.0, 3.5, 1.0]).is_err());
        let big = TriangleLengths::spherical([2.5, 2.5, 2.5]).unwrap();
        assert!(!big.in_moduli_space(0.0));
    }

    #[test]
    fn extension_table() {
        let flat = extended_angles(&TriangleLengths::euclidean([1.0, 1.0, 2.0]).unwrap());
        assert_eq!(flat.angles, [0.0, 0.0, PI]);
        let inside = extended_angles(&TriangleLengths::euclidean([1.0, 1.0, 1.0]).unwrap());
        assert!(inside.angles.iter().all(|&x| close(x, PI / 3.0, 1e-15)));
        let hyp = extended_angles(&TriangleLengths::hyperbolic([1.0, 1.0, 2.5]).unwrap());
        assert_eq!(hyp.angles, [0.0, 0.0, PI]);
        let first = extended_angles(&TriangleLengths::euclidean([5.0, 1.0, 2.0]).unwrap());
        assert_eq!(first.angles, [PI, 0.0, 0.0]);
        let sph = extended_angles(&TriangleLengths::spherical([2.5, 2.5, 2.5]).unwrap());
        assert_eq!(sph.angles, [PI; 3]);
    }

    #[test]
    fn jacobian_entries() {
        let eq = angle_jacobian(&TriangleLengths::euclidean([1.0; 3]).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 / 3f64.sqrt() } else { -1.0 / 3f64.sqrt() };
                assert!(close(eq[(i, j)], want, 1e-12));
            }
        }
        let rt = angle_jacobian(&TriangleLengths::euclidean([3.0, 4.0, 5.0]).unwrap()).unwrap();
        assert!(close(rt[(2, 2)], 5.0 / 12.0, 1e-14));
        // angle sum is constant: columns sum to zero
        for j in 0..3 {
            assert!(rt.column(j).sum().abs() < 1e-14);
        }
    }

    #[test]
    fn aux_coordinates() {
        let a = aux_coords(&TriangleLengths::euclidean([3.0, 4.0, 5.0]).unwrap()).unwrap();
        assert_eq!(a.r, [3.0, 2.0, 1.0]);
        assert_eq!(a.lengths(), [3.0, 4.0, 5.0]);
        let eq = aux_coords(&TriangleLengths::euclidean([1.0; 3]).unwrap()).unwrap();
        assert!(eq.alpha.iter().all(|&x| close(x, -PI / 6.0, 1e-15)));
        assert!(close(eq.zeta(), -PI / 2.0, 1e-15));
        let obtuse = aux_coords(&TriangleLengths::euclidean([2.0, 2.0, 3.5]).unwrap()).unwrap();
        assert!(close(obtuse.alpha[2], 0.560_075_306_226_582, 1e-13));
    }

    #[test]
    fn tangent_law_values() {
        let eq = TriangleLengths::euclidean([1.0; 3]).unwrap();
        let v = tangent_law_invariant(&eq, TangentLaw::Inradius).unwrap();
        assert!(close(v, 0.5 * (PI / 6.0).tan(), 1e-15));
        let rt = TriangleLengths::euclidean([3.0, 4.0, 5.0]).unwrap();
        assert!(close(tangent_law_invariant(&rt, TangentLaw::Inradius).unwrap(), 1.0, 1e-14));
        let h = TriangleLengths::hyperbolic([1.0; 3]).unwrap();
        let hv = tangent_law_invariant(&h, TangentLaw::HalfLength).unwrap();
        assert!(close(hv, 1.939_592_942_507_106_8, 1e-12));
        let scalene = TriangleLengths::hyperbolic([1.0, 1.3, 0.9]).unwrap();
        assert!(tangent_law_invariant(&scalene, TangentLaw::Inradius).is_ok());
        assert!(tangent_law_invariant(&scalene, TangentLaw::HalfLength).is_ok());
        let sph = TriangleLengths::spherical([1.0, 1.3, 0.9]).unwrap();
        assert!(tangent_law_invariant(&sph, TangentLaw::Inradius).is_ok());
        assert!(tangent_law_invariant(&sph, TangentLaw::HalfLength).is_ok());
    }

    #[test]
    fn p_matrix_unit_triangle() {
        let p = matrix_p(&TriangleLengths::hyperbolic([1.0; 3]).unwrap()).unwrap();
        assert!(close(p[(0, 0)], 1.202_137_370_377_586, 1e-12));
        assert!(close(p[(0, 1)], -0.543_080_634_815_243_8, 1e-12));
        let mut ev: Vec<f64> = p.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!(close(ev[0], 0.115_976_100_747_098_6, 1e-10));
        assert!(close(ev[1], 1.745_218_005_192_83, 1e-10));
        assert!(close(ev[2], 1.745_218_005_192_83, 1e-10));
        assert!(matrix_p(&TriangleLengths::euclidean([1.0; 3]).unwrap()).is_err());
    }

    #[test]
    fn p_matrix_degenerates_monotonically() {
        // mpmath minimum eigenvalues at l = (1, 1, 2 - ε)
        let frozen = [(1e-2, 5.714_089_023_356_112e-3), (1e-4, 5.780_790_126_539_089e-5), (1e-6, 5.781_459_444_146_804e-7)];
        let mut prev = f64::INFINITY;
        for (eps, want) in frozen {
            let p = matrix_p(&TriangleLengths::hyperbolic([1.0, 1.0, 2.0 - eps]).unwrap()).unwrap();
            let min = p.symmetric_eigenvalues().min();
            assert!(min > 0.0 && min < prev);
            assert!((min - want).abs() < 1e-6 * want.max(1e-3), "{eps}: {min} vs {want}");
            prev = min;
        }
    }

    #[test]
    fn m_matrix_cases() {
        let eq = angles_from_lengths(&TriangleLengths::euclidean([1.0; 3]).unwrap()).unwrap();
        let m = matrix_m(&eq);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!(ev[0].abs() < 1e-15 && close(ev[1], 1.5, 1e-14) && close(ev[2], 1.5, 1e-14));
        let rt = angles_from_lengths(&TriangleLengths::euclidean([3.0, 4.0, 5.0]).unwrap()).unwrap();
        let kernel = matrix_m(&rt) * nalgebra::Vector3::new(3.0, 4.0, 5.0);
        assert!(kernel.amax() < 1e-12);
        let oct = angles_from_lengths(&TriangleLengths::spherical([PI / 2.0; 3]).unwrap()).unwrap();
        assert!((matrix_m(&oct) - Matrix3::identity()).amax() < 1e-15);
    }

    #[test]
    fn packing_triangle() {
        let t = packing_lengths([1.0, 2.0, 3.0], Geometry::Euclidean).unwrap();
        // l_12 = 3, l_23 = 5, l_13 = 4
        assert_eq!(t.lengths, [5.0, 4.0, 3.0]);
        assert!(t.in_moduli_space(0.0));
        assert_eq!(packing_lengths([1.0; 3], Geometry::Hyperbolic).unwrap().lengths, [2.0; 3]);
        assert!(matches!(
            packing_lengths([1.0; 3], Geometry::Spherical),
            Err(Error::UnsupportedGeometry(_))
        ));
        assert!(matches!(
            packing_lengths([1.0, -1.0, 1.0], Geometry::Euclidean),
            Err(Error::NonPositiveRadius(_))
        ));
    }
}

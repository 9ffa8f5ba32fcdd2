//! Randomised invariant audit.
//!
//! Every check draws its own samples from a ChaCha stream seeded by the run
//! seed and the check's position, so reports are bit-identical for equal
//! seeds. A check records the worst residual it saw and passes when that
//! residual is strictly below its tolerance.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rigidity_core::curvature::{k_h, phi_h, psi_h, vertex_edge_identity_check};
use rigidity_core::energy::{triangle_gradient, TriangleEnergy, TriangleFlavor};
use rigidity_core::mesh::{CirclePackingMetric, Edge, PolyhedralMetric, Surface};
use rigidity_core::trig::{angle_jacobian, angles_from_lengths, matrix_m, matrix_p, TriangleLengths};
use rigidity_core::Geometry;
use serde::Serialize;

use crate::generators::{hexagon_fan, CyclicSample};

/// Exponents used by the closed-form and Hessian checks.
pub const CLOSED_FORM_H: [f64; 6] = [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0];
/// Exponents for which the constant extension is finite and its gradient
/// continuity is resolvable in double precision.
pub const CONTINUITY_H: [f64; 4] = [0.0, 0.5, 1.0, 2.0];
pub const CONVEXITY_H: [f64; 5] = [-0.5, 0.0, 0.5, 1.0, 2.0];
/// Exponents for the curvature identities.
pub const IDENTITY_H: [f64; 6] = [-2.0, -0.5, 0.0, 0.5, 1.0, 2.0];

/// Flavors whose triangle energies have a constant extension past `∂Ω`.
pub const EDGE_FLAVORS: [TriangleFlavor; 4] = [
    TriangleFlavor::EuclideanPhi,
    TriangleFlavor::HyperbolicPsi,
    TriangleFlavor::SphericalPhi,
    TriangleFlavor::HyperbolicPhi,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Check {
    EuclideanAngleSum,
    HyperbolicAngleSum,
    SphericalAngleSum,
    AngleJacobian(Geometry),
    MatrixPDefinite,
    MatrixMEuclidean,
    MatrixMSpherical,
    /// Symmetry of the finite-difference Jacobian of a triangle gradient.
    ClosedForm(TriangleFlavor),
    /// Analytic Hessian (explicit `c D M D` / `c D P D` where available)
    /// against finite differences of the gradient.
    HessianFactorization(TriangleFlavor),
    HessianConvexity(TriangleFlavor),
    PhiEqualsPsi,
    AngleDefect,
    VertexEdgeIdentity,
    CyclicQuadrilateral(Geometry),
    ExtensionContinuity(TriangleFlavor),
    ExtensionConvexity(TriangleFlavor),
}

fn flavor_tag(f: TriangleFlavor) -> &'static str {
    match f {
        TriangleFlavor::EuclideanPhi => "euclidean_phi",
        TriangleFlavor::HyperbolicPsi => "hyperbolic_psi",
        TriangleFlavor::SphericalPhi => "spherical_phi",
        TriangleFlavor::HyperbolicPhi => "hyperbolic_sinh_phi",
        TriangleFlavor::PackingEuclidean => "packing_euclidean",
        TriangleFlavor::PackingHyperbolic => "packing_hyperbolic",
    }
}

impl Check {
    pub fn name(&self) -> String {
        match self {
            Check::EuclideanAngleSum => "euclidean_angle_sum_is_pi".into(),
            Check::HyperbolicAngleSum => "hyperbolic_angle_sum_below_pi".into(),
            Check::SphericalAngleSum => "spherical_angle_sum_above_pi".into(),
            Check::AngleJacobian(g) => format!("angle_jacobian_{g}"),
            Check::MatrixPDefinite => "matrix_p_positive_definite".into(),
            Check::MatrixMEuclidean => "matrix_m_euclidean_psd_kernel".into(),
            Check::MatrixMSpherical => "matrix_m_spherical_positive_definite".into(),
            Check::ClosedForm(f) => format!("closed_form_{}", flavor_tag(*f)),
            Check::HessianFactorization(f) => format!("hessian_factorization_{}", flavor_tag(*f)),
            Check::HessianConvexity(f) => format!("hessian_psd_{}", flavor_tag(*f)),
            Check::PhiEqualsPsi => "euclidean_phi_equals_psi".into(),
            Check::AngleDefect => "k0_is_angle_defect".into(),
            Check::VertexEdgeIdentity => "vertex_edge_identity".into(),
            Check::CyclicQuadrilateral(g) => format!("cyclic_quadrilateral_psi0_{g}"),
            Check::ExtensionContinuity(f) => format!("extension_gradient_continuity_{}", flavor_tag(*f)),
            Check::ExtensionConvexity(f) => format!("extension_midpoint_convexity_{}", flavor_tag(*f)),
        }
    }

    pub fn tolerance(&self) -> f64 {
        match self {
            Check::EuclideanAngleSum => 1e-12,
            Check::HyperbolicAngleSum | Check::SphericalAngleSum => 0.0,
            Check::AngleJacobian(_) => 1e-6,
            Check::MatrixPDefinite | Check::MatrixMSpherical => 0.0,
            Check::MatrixMEuclidean => 1e-10,
            Check::ClosedForm(_) => 1e-6,
            Check::HessianFactorization(_) => 1e-5,
            Check::HessianConvexity(_) => 1e-10,
            Check::PhiEqualsPsi | Check::VertexEdgeIdentity => 1e-10,
            Check::AngleDefect => 1e-12,
            Check::CyclicQuadrilateral(_) => 1e-9,
            Check::ExtensionContinuity(_) => 1e-6,
            Check::ExtensionConvexity(_) => 1e-9,
        }
    }

    /// Relative cost, used to scale the audit's sample count.
    fn cost(&self) -> usize {
        match self {
            Check::ClosedForm(_) | Check::HessianFactorization(_) | Check::HessianConvexity(_) => 4,
            Check::PhiEqualsPsi | Check::AngleDefect | Check::VertexEdgeIdentity | Check::CyclicQuadrilateral(_) => 4,
            Check::ExtensionContinuity(_) => 4,
            Check::ExtensionConvexity(_) => 40,
            _ => 1,
        }
    }
}

/// Every check of the audit, in report order.
pub fn all_checks() -> Vec<Check> {
    let mut v = vec![Check::EuclideanAngleSum, Check::HyperbolicAngleSum, Check::SphericalAngleSum];
    v.extend(Geometry::ALL.map(Check::AngleJacobian));
    v.extend([Check::MatrixPDefinite, Check::MatrixMEuclidean, Check::MatrixMSpherical]);
    v.extend(TriangleFlavor::ALL.map(Check::ClosedForm));
    v.extend(TriangleFlavor::ALL.map(Check::HessianFactorization));
    v.extend(TriangleFlavor::ALL.map(Check::HessianConvexity));
    v.extend([Check::PhiEqualsPsi, Check::AngleDefect, Check::VertexEdgeIdentity]);
    v.extend([Geometry::Euclidean, Geometry::Hyperbolic].map(Check::CyclicQuadrilateral));
    v.extend(EDGE_FLAVORS.map(Check::ExtensionContinuity));
    v.extend(EDGE_FLAVORS.map(Check::ExtensionConvexity));
    v
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AuditOptions {
    /// Flip the sign of the `cosh l_k` term in the off-diagonal of `P`.
    pub inject_fault: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantResult {
    pub name: String,
    pub samples: usize,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub seed: u64,
    pub samples: usize,
    pub fault_injected: bool,
    pub passed: bool,
    pub invariants: Vec<InvariantResult>,
}

/// Run every check with `samples / cost` samples (at least one).
pub fn audit(seed: u64, samples: usize, options: AuditOptions) -> AuditReport {
    let invariants: Vec<InvariantResult> = all_checks()
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let n = (samples / c.cost()).max(1);
            run_check(c, n, seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64), options)
        })
        .collect();
    AuditReport {
        seed,
        samples,
        fault_injected: options.inject_fault,
        passed: invariants.iter().all(|r| r.passed),
        invariants,
    }
}

/// Run one check on `samples` random instances.
pub fn run_check(check: Check, samples: usize, seed: u64, options: AuditOptions) -> InvariantResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..samples {
        let r = sample(check, i, &mut rng, options);
        // NaN counts as a failure
        worst = if r.is_nan() { f64::INFINITY } else { worst.max(r) };
    }
    let tolerance = check.tolerance();
    InvariantResult {
        name: check.name(),
        samples,
        worst_residual: worst,
        tolerance,
        passed: worst < tolerance,
    }
}

fn or_fail<T>(r: rigidity_core::Result<T>) -> Result<T, f64> {
    r.map_err(|_| f64::INFINITY)
}

fn sample(check: Check, i: usize, rng: &mut ChaCha8Rng, options: AuditOptions) -> f64 {
    let pick = |set: &[f64]| set[i % set.len()];
    let result = match check {
        Check::EuclideanAngleSum => angle_sum(rng, Geometry::Euclidean).map(|s| (s - PI).abs()),
        Check::HyperbolicAngleSum => angle_sum(rng, Geometry::Hyperbolic).map(|s| s - PI),
        Check::SphericalAngleSum => angle_sum(rng, Geometry::Spherical).map(|s| PI - s),
        Check::AngleJacobian(g) => jacobian_error(rng, g),
        Check::MatrixPDefinite => p_definiteness(rng, options.inject_fault),
        Check::MatrixMEuclidean => m_euclidean(rng),
        Check::MatrixMSpherical => m_spherical(rng),
        Check::ClosedForm(f) => closed_form(rng, f, pick(&CLOSED_FORM_H)),
        Check::HessianFactorization(f) => factorization(rng, f, pick(&CLOSED_FORM_H)),
        Check::HessianConvexity(f) => convexity(rng, f, pick(&CLOSED_FORM_H)),
        Check::PhiEqualsPsi => phi_psi(rng, pick(&IDENTITY_H)),
        Check::AngleDefect => angle_defect(rng),
        Check::VertexEdgeIdentity => vertex_identity(rng, i % 2 == 0),
        Check::CyclicQuadrilateral(g) => cyclic_quadrilateral(rng, g),
        Check::ExtensionContinuity(f) => extension_continuity(rng, f, pick(&CONTINUITY_H)),
        Check::ExtensionConvexity(f) => extension_convexity(rng, f, pick(&CONVEXITY_H)),
    };
    result.unwrap_or_else(|e| e)
}

/// Random lengths strictly inside `Ω`: every side in `[0.3, 2]` (`[0.2, 1.4]`
/// on the sphere) and the third side at least 5% away from either
/// triangle-inequality bound.
pub fn random_triangle<R: Rng>(rng: &mut R, geometry: Geometry) -> TriangleLengths {
    let (lo, hi) = match geometry {
        Geometry::Spherical => (0.2, 1.4),
        _ => (0.3, 2.0),
    };
    let (a, b, c) = loop {
        let a: f64 = rng.random_range(lo..hi);
        let b: f64 = rng.random_range(lo..hi);
        let t: f64 = rng.random_range(0.05..0.95);
        let c = (a - b).abs() + t * (a + b - (a - b).abs());
        if c >= lo {
            break (a, b, c);
        }
    };
    let mut l = [a, b, c];
    let k = rng.random_range(0..3);
    l.rotate_left(k);
    TriangleLengths { lengths: l, geometry }
}

/// Random slot values (lengths, or radii for packings) inside the domain.
pub fn random_values<R: Rng>(rng: &mut R, flavor: TriangleFlavor) -> [f64; 3] {
    if flavor.is_packing() {
        [(); 3].map(|_| rng.random_range(0.2..2.0))
    } else {
        random_triangle(rng, flavor.geometry()).lengths
    }
}

fn angle_sum<R: Rng>(rng: &mut R, g: Geometry) -> Result<f64, f64> {
    Ok(or_fail(angles_from_lengths(&random_triangle(rng, g)))?.sum())
}

fn jacobian_error<R: Rng>(rng: &mut R, g: Geometry) -> Result<f64, f64> {
    let t = random_triangle(rng, g);
    let jac = or_fail(angle_jacobian(&t))?;
    let step = 1e-6;
    let mut fd = Matrix3::zeros();
    for j in 0..3 {
        let mut up = t;
        let mut dn = t;
        up.lengths[j] += step;
        dn.lengths[j] -= step;
        let (a, b) = (or_fail(angles_from_lengths(&up))?, or_fail(angles_from_lengths(&dn))?);
        for i in 0..3 {
            fd[(i, j)] = (a[i] - b[i]) / (2.0 * step);
        }
    }
    Ok((jac - fd).amax() / jac.amax().max(1.0))
}

fn min_eigenvalue(m: Matrix3<f64>) -> f64 {
    m.symmetric_eigenvalues().min()
}

/// `P`, optionally with the sign of the `cosh l_k` term in each
/// off-diagonal entry flipped.
pub fn audited_matrix_p(t: &TriangleLengths, fault: bool) -> rigidity_core::Result<Matrix3<f64>> {
    let mut p = matrix_p(t)?;
    if fault {
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            p[(i, j)] -= 2.0 * t.lengths[k].cosh();
            p[(j, i)] = p[(i, j)];
        }
    }
    Ok(p)
}

fn p_definiteness<R: Rng>(rng: &mut R, fault: bool) -> Result<f64, f64> {
    let p = or_fail(audited_matrix_p(&random_triangle(rng, Geometry::Hyperbolic), fault))?;
    Ok(-min_eigenvalue(p) / p.amax())
}

fn m_euclidean<R: Rng>(rng: &mut R) -> Result<f64, f64> {
    let t = random_triangle(rng, Geometry::Euclidean);
    let m = matrix_m(&or_fail(angles_from_lengths(&t))?);
    let kernel = (m * nalgebra::Vector3::from(t.lengths)).amax();
    Ok(kernel.max(-min_eigenvalue(m)))
}

fn m_spherical<R: Rng>(rng: &mut R) -> Result<f64, f64> {
    let t = random_triangle(rng, Geometry::Spherical);
    Ok(-min_eigenvalue(matrix_m(&or_fail(angles_from_lengths(&t))?)))
}

fn chart_point(e: &TriangleEnergy, values: &[f64]) -> Result<Vec<f64>, f64> {
    values.iter().map(|&v| or_fail(e.chart().forward(v))).collect()
}

/// Gradient in chart coordinates as a function of all three lengths
/// (radii), evaluated directly rather than through the chart inverse.
fn gradient_at(e: &TriangleEnergy, values: &[f64]) -> Result<nalgebra::DVector<f64>, f64> {
    let v = [values[0], values[1], values[2]];
    Ok(nalgebra::DVector::from_row_slice(&or_fail(triangle_gradient(e.flavor, e.h, v))?))
}

/// Central differences `[∂f_i/∂v_j]` of `f(v)` with per-slot steps.
fn fd_matrix(
    values: &[f64],
    step: impl Fn(f64) -> f64,
    f: impl Fn(&[f64]) -> Result<nalgebra::DVector<f64>, f64>,
) -> Result<DMatrix<f64>, f64> {
    let n = values.len();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let d = step(values[j]);
        let mut up = values.to_vec();
        let mut dn = values.to_vec();
        up[j] += d;
        dn[j] -= d;
        m.set_column(j, &((f(&up)? - f(&dn)?) / (2.0 * d)));
    }
    Ok(m)
}

/// Mixed partials of the one-form `Σ g_i χ'(v_i) dv_i` in length (radius)
/// coordinates, step `1e-5`.
fn closed_form<R: Rng>(rng: &mut R, flavor: TriangleFlavor, h: f64) -> Result<f64, f64> {
    let e = or_fail(TriangleEnergy::free(flavor, h))?;
    let values = random_values(rng, flavor);
    let coefficients = |v: &[f64]| -> Result<nalgebra::DVector<f64>, f64> {
        let mut g = gradient_at(&e, v)?;
        for (gi, &vi) in g.iter_mut().zip(v) {
            *gi *= or_fail(e.chart().derivative(vi))?;
        }
        Ok(g)
    };
    let j = fd_matrix(&values, |_| 1e-5, coefficients)?;
    Ok((&j - j.transpose()).amax())
}

/// Explicit factorised Hessian where one is known, else the energy's own.
fn factorised_hessian(e: &TriangleEnergy, flavor: TriangleFlavor, h: f64, l: [f64; 3], u: &[f64], fd: &DMatrix<f64>) -> Result<DMatrix<f64>, f64> {
    match flavor {
        TriangleFlavor::EuclideanPhi => {
            // m₁ D M D with D = diag(l^{h+1}), m₁ = sin^{h−1}θ₁ / (l₁^h l₂ l₃)
            let t = TriangleLengths { lengths: l, geometry: Geometry::Euclidean };
            let theta = or_fail(angles_from_lengths(&t))?;
            let m1 = theta[0].sin().powf(h - 1.0) / (l[0].powf(h) * l[1] * l[2]);
            let d = l.map(|x| x.powf(h + 1.0));
            let m = matrix_m(&theta);
            Ok(DMatrix::from_fn(3, 3, |i, j| m1 * d[i] * m[(i, j)] * d[j]))
        }
        TriangleFlavor::HyperbolicPsi => {
            // c D P D with D = diag(tanh^h(l/2)); c fitted on the diagonal
            let t = TriangleLengths { lengths: l, geometry: Geometry::Hyperbolic };
            let p = or_fail(matrix_p(&t))?;
            let d = l.map(|x| (0.5 * x).tanh().powf(h));
            let base = DMatrix::from_fn(3, 3, |i, j| d[i] * p[(i, j)] * d[j]);
            let c = (0..3).map(|i| fd[(i, i)] * base[(i, i)]).sum::<f64>() / (0..3).map(|i| base[(i, i)].powi(2)).sum::<f64>();
            if !(c > 0.0) {
                return Err(f64::INFINITY);
            }
            Ok(base * c)
        }
        _ => Ok(or_fail(e.eval(u))?.hess),
    }
}

fn factorization<R: Rng>(rng: &mut R, flavor: TriangleFlavor, h: f64) -> Result<f64, f64> {
    let e = or_fail(TriangleEnergy::free(flavor, h))?;
    let values = random_values(rng, flavor);
    let u = chart_point(&e, &values)?;
    // differences in lengths, mapped to chart coordinates by 1/χ'
    let mut fd = fd_matrix(&values, |v| 1e-6 * v, |v| gradient_at(&e, v))?;
    for (j, &v) in values.iter().enumerate() {
        let d = or_fail(e.chart().derivative(v))?;
        fd.column_mut(j).scale_mut(1.0 / d);
    }
    let analytic = factorised_hessian(&e, flavor, h, values, &u, &fd)?;
    Ok((&analytic - &fd).amax() / analytic.amax())
}

/// The sinh-φ energy is convex in two variables at a time; the others in
/// all three.
fn energy_for_convexity(flavor: TriangleFlavor, h: f64, values: &[f64; 3]) -> Result<(TriangleEnergy, Vec<f64>), f64> {
    if flavor == TriangleFlavor::HyperbolicPhi {
        let e = or_fail(TriangleEnergy::new(flavor, h, [Some(values[0]), None, None]))?;
        let u = chart_point(&e, &values[1..])?;
        Ok((e, u))
    } else {
        let e = or_fail(TriangleEnergy::free(flavor, h))?;
        let u = chart_point(&e, values)?;
        Ok((e, u))
    }
}

fn convexity<R: Rng>(rng: &mut R, flavor: TriangleFlavor, h: f64) -> Result<f64, f64> {
    let (e, u) = energy_for_convexity(flavor, h, &random_values(rng, flavor))?;
    let hess = or_fail(e.eval(&u))?.hess;
    Ok(-hess.clone().symmetric_eigenvalues().min() / hess.amax())
}

/// Two triangles `0-1-2`, `0-2-3` sharing the diagonal `0-2`.
fn quad_surface() -> Surface {
    Surface::new(4, vec![[0, 1, 2], [0, 2, 3]]).expect("two triangles form a disk")
}

fn random_quad<R: Rng>(rng: &mut R, geometry: Geometry) -> Result<(Surface, PolyhedralMetric), f64> {
    let s = quad_surface();
    let t1 = random_triangle(rng, geometry).lengths;
    // second triangle shares side t1[0]
    let d = t1[0];
    let a: f64 = rng.random_range(0.6 * d..1.4 * d).max(0.1);
    let lo = (d - a).abs();
    let hi = match geometry {
        Geometry::Spherical => (d + a).min(TAU - d - a).min(PI - 1e-3),
        _ => d + a,
    };
    let b = lo + rng.random_range(0.1..0.9) * (hi - lo);
    let map = [
        (Edge(0, 2), d),
        (Edge(0, 1), t1[1]),
        (Edge(1, 2), t1[2]),
        (Edge(0, 3), a),
        (Edge(2, 3), b),
    ]
    .into_iter()
    .collect();
    let m = or_fail(PolyhedralMetric::from_map(&s, geometry, &map))?;
    Ok((s, m))
}

fn phi_psi<R: Rng>(rng: &mut R, h: f64) -> Result<f64, f64> {
    let (s, m) = random_quad(rng, Geometry::Euclidean)?;
    let phi = or_fail(phi_h(&s, &m, h))?.get(Edge(0, 2)).ok_or(f64::INFINITY)?;
    let psi = or_fail(psi_h(&s, &m, h))?.get(Edge(0, 2)).ok_or(f64::INFINITY)?;
    Ok((phi - psi).abs())
}

fn angle_defect<R: Rng>(rng: &mut R) -> Result<f64, f64> {
    let fan = hexagon_fan().surface;
    let geometry = if rng.random::<bool>() { Geometry::Euclidean } else { Geometry::Hyperbolic };
    let radii: Vec<f64> = (0..7).map(|_| rng.random_range(0.2..2.0)).collect();
    let packing = or_fail(CirclePackingMetric::new(&fan, geometry, radii))?;
    let k0 = or_fail(k_h(&fan, &packing, 0.0))?.get(0).ok_or(f64::INFINITY)?;
    let metric = packing.induced_metric(&fan);
    let mut sum = 0.0;
    for &t in fan.vertex_triangles(0) {
        let slot = fan.local_slot(t, 0).ok_or(f64::INFINITY)?;
        sum += or_fail(angles_from_lengths(&metric.triangle(&fan, t)))?[slot];
    }
    Ok((k0 - (TAU - sum)).abs())
}

/// Hexagon fan with jittered vertices: Euclidean, or hyperbolic via the
/// Poincaré disk.
fn vertex_identity<R: Rng>(rng: &mut R, euclidean: bool) -> Result<f64, f64> {
    let mut mesh = hexagon_fan();
    for p in mesh.positions.iter_mut() {
        p[0] += rng.random_range(-0.2..0.2);
        p[1] += rng.random_range(-0.2..0.2);
    }
    let (g, scale) = if euclidean {
        (Geometry::Euclidean, 1.0)
    } else {
        (Geometry::Hyperbolic, rng.random_range(0.2..0.75))
    };
    let metric = mesh.metric(g, scale);
    Ok(or_fail(vertex_edge_identity_check(&mesh.surface, &metric, 0))?.abs())
}

fn cyclic_quadrilateral<R: Rng>(rng: &mut R, g: Geometry) -> Result<f64, f64> {
    let sample = crate::generators::random_cyclic_polygon(rng, 4, g);
    let s = quad_surface();
    let map = [
        (Edge(0, 1), sample.sides[0]),
        (Edge(1, 2), sample.sides[1]),
        (Edge(2, 3), sample.sides[2]),
        (Edge(0, 3), sample.sides[3]),
        (Edge(0, 2), sample.distance(0, 2)),
    ]
    .into_iter()
    .collect();
    let m = or_fail(PolyhedralMetric::from_map(&s, g, &map))?;
    Ok(or_fail(psi_h(&s, &m, 0.0))?.get(Edge(0, 2)).ok_or(f64::INFINITY)?.abs())
}

/// Check a cyclic polygon sample directly (used by tests of the sampler).
pub fn cyclic_psi0(sample: &CyclicSample) -> Option<f64> {
    let s = quad_surface();
    let map = [
        (Edge(0, 1), sample.sides[0]),
        (Edge(1, 2), sample.sides[1]),
        (Edge(2, 3), sample.sides[2]),
        (Edge(0, 3), sample.sides[3]),
        (Edge(0, 2), sample.distance(0, 2)),
    ]
    .into_iter()
    .collect();
    let m = PolyhedralMetric::from_map(&s, sample.geometry, &map).ok()?;
    psi_h(&s, &m, 0.0).ok()?.get(Edge(0, 2))
}

/// Lengths outside `Ω`: one side longer than the sum of the others, or
/// (on the sphere, half the time) perimeter above `2π`.
fn degenerate_lengths<R: Rng>(rng: &mut R, geometry: Geometry) -> [f64; 3] {
    if geometry == Geometry::Spherical && rng.random::<bool>() {
        return [(); 3].map(|_| rng.random_range(2.15..3.0));
    }
    let (lo, hi) = match geometry {
        Geometry::Spherical => (0.2, 1.2),
        _ => (0.3, 1.5),
    };
    let a: f64 = rng.random_range(lo..hi);
    let b: f64 = rng.random_range(lo..hi);
    let c = (a + b) * rng.random_range(1.05..1.5);
    let c = if geometry == Geometry::Spherical { c.min(PI - 0.01) } else { c };
    let mut l = [c, a, b];
    l.rotate_left(rng.random_range(0..3));
    l
}

/// A chart-coordinate segment from inside `Ω` to outside it.
struct Crossing {
    energy: TriangleEnergy,
    /// Slot values with the fixed slot filled in; variable slots are
    /// overwritten by [`Crossing::lengths`].
    store: [f64; 3],
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Crossing {
    fn at(&self, s: f64) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(x, y)| x + s * (y - x)).collect()
    }

    fn lengths(&self, s: f64) -> Result<TriangleLengths, f64> {
        let mut l = self.store;
        for (slot, x) in self.energy.variables().into_iter().zip(self.at(s)) {
            l[slot] = or_fail(self.energy.chart().inverse(x))?;
        }
        Ok(TriangleLengths {
            lengths: l,
            geometry: self.energy.flavor.geometry(),
        })
    }
}

fn crossing_segment<R: Rng>(rng: &mut R, flavor: TriangleFlavor, h: f64) -> Result<Crossing, f64> {
    let g = flavor.geometry();
    let inside = random_triangle(rng, g).lengths;
    if flavor == TriangleFlavor::HyperbolicPhi {
        // first slot fixed; push the two variable sides out of Ω
        let l0 = inside[0];
        let long = (l0 + inside[1]) * rng.random_range(1.05..1.5);
        let mut out = [inside[1], long];
        if rng.random::<bool>() {
            out.swap(0, 1);
        }
        let energy = or_fail(TriangleEnergy::new(flavor, h, [Some(l0), None, None]))?;
        let a = chart_point(&energy, &inside[1..])?;
        let b = chart_point(&energy, &out)?;
        return Ok(Crossing {
            energy,
            store: [l0, 1.0, 1.0],
            a,
            b,
        });
    }
    let energy = or_fail(TriangleEnergy::free(flavor, h))?;
    let a = chart_point(&energy, &inside)?;
    let b = chart_point(&energy, &degenerate_lengths(rng, g))?;
    Ok(Crossing {
        energy,
        store: [1.0; 3],
        a,
        b,
    })
}

/// Gradient jump between the last inside and first outside point found by
/// bisecting the segment down to adjacent floating-point parameters.
fn extension_continuity<R: Rng>(rng: &mut R, flavor: TriangleFlavor, h: f64) -> Result<f64, f64> {
    let c = crossing_segment(rng, flavor, h)?;
    let inside = |s: f64| -> Result<bool, f64> { Ok(c.lengths(s)?.in_moduli_space(0.0)) };
    let (mut lo, mut hi) = (0.0, 1.0);
    if !inside(lo)? || inside(hi)? {
        return Err(f64::INFINITY);
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let g_in = or_fail(c.energy.gradient(&c.at(lo)))?;
    let g_out = or_fail(c.energy.gradient(&c.at(hi)))?;
    Ok((g_in - g_out).amax())
}

fn extension_convexity<R: Rng>(rng: &mut R, flavor: TriangleFlavor, h: f64) -> Result<f64, f64> {
    let c = crossing_segment(rng, flavor, h)?;
    let to_mid = or_fail(c.energy.difference(&c.a, &c.at(0.5)))?;
    let to_end = or_fail(c.energy.difference(&c.a, &c.b))?;
    // E(m) − (E(a) + E(b))/2 relative to E(a)
    Ok(to_mid - 0.5 * to_end)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_audit_passes_and_is_deterministic() {
        let a = audit(7, 40, AuditOptions::default());
        for r in &a.invariants {
            assert!(r.passed, "{r:?}");
        }
        let b = audit(7, 40, AuditOptions::default());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn injected_fault_breaks_p() {
        let r = run_check(Check::MatrixPDefinite, 50, 1, AuditOptions { inject_fault: true });
        assert!(!r.passed);
        let r = run_check(Check::MatrixPDefinite, 50, 1, AuditOptions::default());
        assert!(r.passed);
    }

    #[test]
    fn cyclic_sampler_is_cyclic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for g in [Geometry::Euclidean, Geometry::Hyperbolic] {
            let s = crate::generators::random_cyclic_polygon(&mut rng, 4, g);
            assert!(cyclic_psi0(&s).unwrap().abs() < 1e-9);
        }
    }
}

//! Prescribed-curvature solver.
//!
//! Interior lengths (or radii) are recovered by minimising the shifted
//! energy `E(u) - b·u`, where `b` is the gradient value that corresponds to
//! the target curvatures. The energy is convex on the whole chart box
//! thanks to the constant extension, so a damped Newton method with a
//! backtracking line search suffices.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curvature::{k_h, phi_h, psi_h};
use crate::energy::{EnergyModel, ProblemFlavor};
use crate::error::Error;
use crate::geometry::Geometry;
use crate::mesh::{CirclePackingMetric, PolyhedralMetric, Surface};
use crate::trig::TriangleLengths;

/// Boundary data, targets and optional starting point for one solve.
///
/// `boundary` is aligned with [`Surface::boundary_edges`] (boundary
/// vertices for packings); `targets` and `initial_guess` with the interior
/// edges (interior vertices).
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub surface: Surface,
    pub geometry: Geometry,
    pub h: f64,
    pub flavor: ProblemFlavor,
    pub boundary: Vec<f64>,
    pub targets: Vec<f64>,
    pub initial_guess: Option<Vec<f64>>,
}

impl ProblemSpec {
    /// Boundary lengths and interior curvatures read off a metric.
    pub fn from_metric(surface: &Surface, metric: &PolyhedralMetric, h: f64, flavor: ProblemFlavor) -> crate::Result<Self> {
        let targets = match flavor {
            ProblemFlavor::WPhi | ProblemFlavor::VPhi => phi_h(surface, metric, h)?.to_vec(),
            ProblemFlavor::WPsi => psi_h(surface, metric, h)?.to_vec(),
            ProblemFlavor::UPacking => {
                return Err(Error::InfeasibleSpec("packing problems are built from radii".into()))
            }
        };
        Ok(ProblemSpec {
            surface: surface.clone(),
            geometry: metric.geometry,
            h,
            flavor,
            boundary: surface.boundary_edges().iter().map(|&e| metric.lengths[e]).collect(),
            targets,
            initial_guess: None,
        })
    }

    /// Boundary radii and interior `k_h` read off a packing.
    pub fn from_packing(surface: &Surface, packing: &CirclePackingMetric, h: f64) -> crate::Result<Self> {
        Ok(ProblemSpec {
            surface: surface.clone(),
            geometry: packing.geometry,
            h,
            flavor: ProblemFlavor::UPacking,
            boundary: surface.boundary_vertices().iter().map(|&v| packing.radii[v]).collect(),
            targets: k_h(surface, packing, h)?.to_vec(),
            initial_guess: None,
        })
    }

    pub fn with_initial_guess(mut self, guess: Vec<f64>) -> Self {
        self.initial_guess = Some(guess);
        self
    }

    fn interior(&self) -> &[usize] {
        if self.flavor.on_vertices() {
            self.surface.interior_vertices()
        } else {
            self.surface.interior_edges()
        }
    }

    fn boundary_slots(&self) -> &[usize] {
        if self.flavor.on_vertices() {
            self.surface.boundary_vertices()
        } else {
            self.surface.boundary_edges()
        }
    }

    fn slot_count(&self) -> usize {
        if self.flavor.on_vertices() {
            self.surface.vertex_count()
        } else {
            self.surface.edges().len()
        }
    }

    fn validate(&self) -> Result<(), SolveError> {
        let mismatch = |what: &str, expected: usize, got: usize| {
            Err(SolveError::Infeasible(format!("{what}: expected {expected} values, got {got}")))
        };
        if self.boundary.len() != self.boundary_slots().len() {
            return mismatch("boundary data", self.boundary_slots().len(), self.boundary.len());
        }
        if self.targets.len() != self.interior().len() {
            return mismatch("targets", self.interior().len(), self.targets.len());
        }
        if let Some(g) = &self.initial_guess {
            if g.len() != self.interior().len() {
                return mismatch("initial guess", self.interior().len(), g.len());
            }
        }
        if !self.h.is_finite() || self.targets.iter().any(|t| !t.is_finite()) {
            return Err(SolveError::Infeasible("h and targets must be finite".into()));
        }
        Ok(())
    }

    /// Full value vector with the boundary data in place and `fill` on the
    /// interior.
    fn full_values(&self, fill: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.slot_count()];
        for (&i, &x) in self.boundary_slots().iter().zip(&self.boundary) {
            v[i] = x;
        }
        for (&i, &x) in self.interior().iter().zip(fill) {
            v[i] = x;
        }
        v
    }

    /// Mean boundary value on every interior slot, then repeatedly moved to
    /// the midpoint of the feasible interval of any triangle it breaks.
    pub fn default_initial_guess(&self) -> Vec<f64> {
        let mean = self.boundary.iter().sum::<f64>() / self.boundary.len().max(1) as f64;
        let n = self.interior().len();
        if self.flavor.on_vertices() {
            return vec![mean; n];
        }
        let mut values = self.full_values(&vec![mean.min(0.5 * self.geometry.length_bound()); n]);
        let mut variable = vec![false; values.len()];
        for &e in self.interior() {
            variable[e] = true;
        }
        for _ in 0..100 {
            let mut changed = false;
            for t in 0..self.surface.triangles().len() {
                let te = self.surface.triangle_edges(t);
                let tl = TriangleLengths {
                    lengths: te.map(|e| values[e]),
                    geometry: self.geometry,
                };
                if tl.in_moduli_space(1e-9) {
                    continue;
                }
                for i in 0..3 {
                    if !variable[te[i]] {
                        continue;
                    }
                    let (a, b) = (values[te[(i + 1) % 3]], values[te[(i + 2) % 3]]);
                    let mut hi = a + b;
                    if self.geometry == Geometry::Spherical {
                        hi = hi.min(2.0 * std::f64::consts::PI - a - b);
                    }
                    values[te[i]] = 0.5 * ((a - b).abs() + hi);
                    changed = true;
                    break;
                }
            }
            if !changed {
                break;
            }
        }
        self.interior().iter().map(|&e| values[e]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Stop when the shifted gradient's ∞-norm is at most this.
    pub tol: f64,
    pub max_iterations: usize,
    pub armijo: f64,
    pub backtrack: f64,
    /// Fraction of the distance to the chart-box edge a step may cover.
    pub boundary_fraction: f64,
    pub max_backtracks: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iterations: 200,
            armijo: 1e-4,
            backtrack: 0.5,
            boundary_fraction: 0.9,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Geometric,
    NoGeometricSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Solution {
    Metric(PolyhedralMetric),
    Packing(CirclePackingMetric),
}

impl Solution {
    /// Edge lengths or radii.
    pub fn values(&self) -> &[f64] {
        match self {
            Solution::Metric(m) => &m.lengths,
            Solution::Packing(p) => &p.radii,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Solution,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub converged: bool,
    /// Every triangle of the final metric is strictly inside `Ω`.
    pub descent_path_stayed_admissible: bool,
    pub outcome: Outcome,
    /// Shifted energy after each accepted step, relative to the start.
    pub energy_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("infeasible problem: {0}")]
    Infeasible(String),
    #[error("no convergence after {} iterations (gradient norm {:e})", .0.iterations, .0.final_gradient_norm)]
    MaxIterations(Box<SolveReport>),
    #[error("line search failed at iteration {iteration} (gradient norm {gradient_norm:e})")]
    LineSearchFailure { iteration: usize, gradient_norm: f64 },
    #[error(transparent)]
    Kernel(Error),
}

impl From<Error> for SolveError {
    fn from(e: Error) -> Self {
        match e {
            Error::InfeasibleSpec(msg) => SolveError::Infeasible(msg),
            other => SolveError::Kernel(other),
        }
    }
}

/// Cholesky solve of `H p = -g`, regularising with a growing multiple of
/// the identity when `H` is not numerically positive definite.
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>, extra: f64) -> DVector<f64> {
    let n = g.len();
    let norm_inf = (0..n).map(|i| h.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let base = (1e-8 * norm_inf).max(1e-10);
    let mut lambda = extra * base;
    for _ in 0..30 {
        let mut m = h.clone();
        for i in 0..n {
            m[(i, i)] += lambda;
        }
        if let Some(ch) = m.cholesky() {
            let p = -ch.solve(g);
            if p.iter().all(|x| x.is_finite()) {
                return p;
            }
        }
        lambda = if lambda == 0.0 { base } else { 10.0 * lambda };
    }
    -g
}

/// Largest step along `p` keeping `boundary_fraction` of the distance to
/// every finite chart-box edge.
fn max_step(u: &DVector<f64>, p: &DVector<f64>, image: (f64, f64), fraction: f64) -> f64 {
    let mut alpha: f64 = 1.0;
    for (x, d) in u.iter().zip(p.iter()) {
        if *d > 0.0 && image.1.is_finite() {
            alpha = alpha.min(fraction * (image.1 - x) / d);
        } else if *d < 0.0 && image.0.is_finite() {
            alpha = alpha.min(fraction * (image.0 - x) / d);
        }
    }
    alpha
}

pub fn solve(problem: &ProblemSpec, options: &SolveOptions) -> Result<SolveReport, SolveError> {
    problem.validate()?;
    let guess = problem
        .initial_guess
        .clone()
        .unwrap_or_else(|| problem.default_initial_guess());
    let values0 = problem.full_values(&guess);
    let model = EnergyModel::new(&problem.surface, problem.geometry, problem.h, problem.flavor, values0.clone())?;
    let image = model.chart().image();
    let shift = model.gradient_for_curvature(&DVector::from_vec(problem.targets.clone()));
    let mut u = model
        .to_u(&values0)
        .map_err(|_| SolveError::Infeasible("initial guess lies outside the chart domain".into()))?;

    let mut energy: f64 = 0.0;
    let mut trace = vec![0.0];
    let mut iterations = 0;
    let mut gnorm;
    let mut newton_failures = 0;
    loop {
        let eval = model.evaluate(&u, true)?;
        let g = &eval.gradient - &shift;
        gnorm = g.amax();
        if gnorm <= options.tol || model.dimension() == 0 {
            break;
        }
        if iterations >= options.max_iterations {
            let report = finish(problem, &model, &u, iterations, gnorm, false, trace)?;
            return Err(SolveError::MaxIterations(Box::new(report)));
        }
        let hess = eval.hessian.as_ref().map(|h| h.to_dense()).unwrap_or_else(|| DMatrix::zeros(0, 0));

        let mut accepted = false;
        // Newton, then Newton with heavier damping, then steepest descent
        for attempt in 0..3 {
            let steepest = newton_failures >= 2 || attempt == 2;
            let mut p = if steepest {
                -&g
            } else {
                newton_direction(&hess, &g, if attempt == 0 { 0.0 } else { 1e4 })
            };
            let mut slope = g.dot(&p);
            if !(slope < 0.0) {
                p = -&g;
                slope = -g.norm_squared();
            }
            let mut alpha = max_step(&u, &p, image, options.boundary_fraction);
            for _ in 0..options.max_backtracks {
                match model.energy_difference(&u, &p, alpha, &shift) {
                    Ok(delta) if delta <= options.armijo * alpha * slope + 1e-13 * (1.0 + energy.abs()) => {
                        u += &p * alpha;
                        energy += delta;
                        trace.push(energy);
                        accepted = true;
                        break;
                    }
                    // rejected, or the trial left the region where the
                    // extended energy is finite
                    _ => alpha *= options.backtrack,
                }
            }
            if accepted {
                break;
            }
            if !steepest {
                newton_failures += 1;
            }
        }
        iterations += 1;
        if !accepted {
            return Err(SolveError::LineSearchFailure {
                iteration: iterations,
                gradient_norm: gnorm,
            });
        }
    }
    finish(problem, &model, &u, iterations, gnorm, true, trace)
}

fn finish(
    problem: &ProblemSpec,
    model: &EnergyModel<'_>,
    u: &DVector<f64>,
    iterations: usize,
    gnorm: f64,
    converged: bool,
    energy_trace: Vec<f64>,
) -> Result<SolveReport, SolveError> {
    let values = model.values(u)?;
    let (solution, admissible) = if problem.flavor.on_vertices() {
        (
            Solution::Packing(CirclePackingMetric {
                geometry: problem.geometry,
                radii: values,
            }),
            true,
        )
    } else {
        let metric = PolyhedralMetric {
            geometry: problem.geometry,
            lengths: values,
        };
        let ok = crate::mesh::validate_metric(&problem.surface, &metric).is_empty();
        (Solution::Metric(metric), ok)
    };
    Ok(SolveReport {
        solution,
        iterations,
        final_gradient_norm: gnorm,
        converged,
        descent_path_stayed_admissible: admissible,
        outcome: if admissible {
            Outcome::Geometric
        } else {
            Outcome::NoGeometricSolution
        },
        energy_trace,
    })
}

/// Result of comparing two metrics with the rigidity statement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidityVerdict {
    pub boundary_agree: bool,
    pub curvature_agree: bool,
    pub interior_agree: bool,
    pub max_boundary_difference: f64,
    pub max_curvature_difference: f64,
    pub max_interior_difference: f64,
    /// Same data but different interiors; never expected.
    pub counterexample_candidate: bool,
}

fn max_diff(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    a.zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn verdict(boundary: f64, curvature: f64, interior: f64, tol: f64) -> RigidityVerdict {
    let (b, c, i) = (boundary <= tol, curvature <= tol, interior <= tol);
    RigidityVerdict {
        boundary_agree: b,
        curvature_agree: c,
        interior_agree: i,
        max_boundary_difference: boundary,
        max_curvature_difference: curvature,
        max_interior_difference: interior,
        counterexample_candidate: b && c && !i,
    }
}

/// Compares boundary lengths, interior curvatures (`φ_h`, or `ψ_h` for
/// the hyperbolic ψ flavor) and interior lengths of two metrics.
pub fn rigidity_probe(
    surface: &Surface,
    a: &PolyhedralMetric,
    b: &PolyhedralMetric,
    flavor: ProblemFlavor,
    h: f64,
    tol: f64,
) -> crate::Result<RigidityVerdict> {
    let curv = |m: &PolyhedralMetric| match flavor {
        ProblemFlavor::WPsi => psi_h(surface, m, h).map(|c| c.to_vec()),
        _ => phi_h(surface, m, h).map(|c| c.to_vec()),
    };
    let pick = |m: &PolyhedralMetric, idx: &[usize]| idx.iter().map(|&e| m.lengths[e]).collect::<Vec<_>>();
    let bd = max_diff(
        pick(a, surface.boundary_edges()).into_iter(),
        pick(b, surface.boundary_edges()).into_iter(),
    );
    let cd = max_diff(curv(a)?.into_iter(), curv(b)?.into_iter());
    let id = max_diff(
        pick(a, surface.interior_edges()).into_iter(),
        pick(b, surface.interior_edges()).into_iter(),
    );
    Ok(verdict(bd, cd, id, tol))
}

/// Packing version of [`rigidity_probe`] comparing radii and `k_h`.
pub fn packing_rigidity_probe(
    surface: &Surface,
    a: &CirclePackingMetric,
    b: &CirclePackingMetric,
    h: f64,
    tol: f64,
) -> crate::Result<RigidityVerdict> {
    let pick = |p: &CirclePackingMetric, idx: &[usize]| idx.iter().map(|&v| p.radii[v]).collect::<Vec<_>>();
    let bd = max_diff(
        pick(a, surface.boundary_vertices()).into_iter(),
        pick(b, surface.boundary_vertices()).into_iter(),
    );
    let cd = max_diff(
        k_h(surface, a, h)?.to_vec().into_iter(),
        k_h(surface, b, h)?.to_vec().into_iter(),
    );
    let id = max_diff(
        pick(a, surface.interior_vertices()).into_iter(),
        pick(b, surface.interior_vertices()).into_iter(),
    );
    Ok(verdict(bd, cd, id, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    fn fan() -> Surface {
        Surface::new(7, (1..=6).map(|i| [0, i, i % 6 + 1]).collect()).unwrap()
    }

    fn interior(report: &SolveReport, s: &Surface) -> Vec<f64> {
        s.interior_edges().iter().map(|&e| report.solution.values()[e]).collect()
    }

    #[test]
    fn regular_fan_from_perturbed_start() {
        let s = fan();
        let spec = ProblemSpec {
            surface: s.clone(),
            geometry: Geometry::Euclidean,
            h: 0.0,
            flavor: ProblemFlavor::WPhi,
            boundary: vec![1.0; 6],
            targets: vec![FRAC_PI_3; 6],
            initial_guess: Some(vec![1.3; 6]),
        };
        let report = solve(&spec, &SolveOptions::default()).unwrap();
        assert!(report.converged && report.outcome == Outcome::Geometric);
        for l in interior(&report, &s) {
            assert!((l - 1.0).abs() < 1e-8, "{l}");
        }
        for w in report.energy_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn critical_point_needs_no_iterations() {
        let s = fan();
        let lengths: Vec<f64> = (0..12).map(|i| 1.0 + 0.04 * ((i * 5 % 7) as f64)).collect();
        let metric = PolyhedralMetric::validated(&s, Geometry::Hyperbolic, lengths.clone()).unwrap();
        let spec = ProblemSpec::from_metric(&s, &metric, 0.5, ProblemFlavor::WPsi)
            .unwrap()
            .with_initial_guess(s.interior_edges().iter().map(|&e| lengths[e]).collect());
        let report = solve(&spec, &SolveOptions::default()).unwrap();
        assert!(report.iterations <= 1);
        assert!(max_diff(report.solution.values().iter().copied(), lengths.into_iter()) < 1e-12);
    }

    #[test]
    fn unit_packing_fan() {
        let s = fan();
        let mut spec = ProblemSpec::from_packing(&s, &CirclePackingMetric::new(&s, Geometry::Euclidean, vec![1.0; 7]).unwrap(), 0.0).unwrap();
        spec.initial_guess = Some(vec![2.5]);
        let report = solve(&spec, &SolveOptions::default()).unwrap();
        assert!((report.solution.values()[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn self_inversion_all_flavors() {
        let s = fan();
        let lengths: Vec<f64> = (0..12).map(|i| 0.9 + 0.05 * ((i * 3 % 5) as f64)).collect();
        for (g, flavor) in [
            (Geometry::Euclidean, ProblemFlavor::WPhi),
            (Geometry::Spherical, ProblemFlavor::WPhi),
            (Geometry::Hyperbolic, ProblemFlavor::WPsi),
            (Geometry::Hyperbolic, ProblemFlavor::VPhi),
        ] {
            let metric = PolyhedralMetric::validated(&s, g, lengths.clone()).unwrap();
            for h in [-2.0, 0.0, 1.0] {
                let spec = ProblemSpec::from_metric(&s, &metric, h, flavor).unwrap();
                let start: Vec<f64> = s.interior_edges().iter().map(|&e| lengths[e] * 1.15).collect();
                let report = solve(&spec.with_initial_guess(start), &SolveOptions::default())
                    .unwrap_or_else(|e| panic!("{g} {flavor} h={h}: {e}"));
                let err = max_diff(report.solution.values().iter().copied(), lengths.iter().copied());
                assert!(err < 1e-8, "{g} {flavor} h={h}: {err}");
            }
        }
    }

    #[test]
    fn infeasible_specs() {
        let s = fan();
        let metric = PolyhedralMetric::validated(&s, Geometry::Euclidean, vec![1.0; 12]).unwrap();
        let mut spec = ProblemSpec::from_metric(&s, &metric, 0.0, ProblemFlavor::WPhi).unwrap();
        spec.flavor = ProblemFlavor::WPsi;
        assert!(matches!(solve(&spec, &SolveOptions::default()), Err(SolveError::Infeasible(_))));
        spec.flavor = ProblemFlavor::WPhi;
        spec.targets.pop();
        assert!(matches!(solve(&spec, &SolveOptions::default()), Err(SolveError::Infeasible(_))));
    }

    #[test]
    fn unreachable_targets_report_no_geometric_solution() {
        // φ_0 of the diagonal tends to -π as it reaches length 2 and stays
        // there on the extension, so this target is met only by degenerate
        // triangles
        let s = Surface::new(4, vec![[0, 1, 2], [1, 3, 2]]).unwrap();
        let spec = ProblemSpec {
            surface: s,
            geometry: Geometry::Euclidean,
            h: 0.0,
            flavor: ProblemFlavor::WPhi,
            boundary: vec![1.0; 4],
            targets: vec![-std::f64::consts::PI],
            initial_guess: Some(vec![3.0]),
        };
        let report = solve(&spec, &SolveOptions::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.outcome, Outcome::NoGeometricSolution);
        assert!(!report.descent_path_stayed_admissible);
    }

    #[test]
    fn probe_verdicts() {
        let s = fan();
        let a = PolyhedralMetric::validated(&s, Geometry::Euclidean, vec![1.0; 12]).unwrap();
        let v = rigidity_probe(&s, &a, &a, ProblemFlavor::WPhi, 0.0, 1e-9).unwrap();
        assert!(v.boundary_agree && v.curvature_agree && v.interior_agree && !v.counterexample_candidate);
        let mut lengths = vec![1.0; 12];
        for &e in s.interior_edges() {
            lengths[e] = 1.1;
        }
        let b = PolyhedralMetric::validated(&s, Geometry::Euclidean, lengths).unwrap();
        let v = rigidity_probe(&s, &a, &b, ProblemFlavor::WPhi, 0.0, 1e-9).unwrap();
        assert!(v.boundary_agree && !v.curvature_agree && !v.interior_agree);
        let double = PolyhedralMetric::validated(&s, Geometry::Euclidean, vec![2.0; 12]).unwrap();
        let v = rigidity_probe(&s, &a, &double, ProblemFlavor::WPhi, 0.0, 1e-9).unwrap();
        assert!(!v.boundary_agree && !v.counterexample_candidate);
    }
}

//! Convex energies in chart coordinates.
//!
//! A triangle energy is determined by its gradient, which is a closed
//! one-form in the chart coordinates `u` of its variable slots:
//!
//! * φ flavors: `∂/∂u_i = ∫_{π/2}^{θ̃_i} sin^h t dt`
//! * hyperbolic ψ: `∂/∂u_i = ∫_0^{α̃_i} cos^h t dt`
//! * packings: `∂/∂u_i = -∫_{π/2}^{θ_i} tan^h(t/2) dt`
//!
//! where `θ̃` are the constantly extended angles, so the edge energies are
//! defined (and convex) on the whole chart box. Energy values, when needed,
//! are obtained by integrating the gradient along straight segments.
//!
//! Summed over a surface, the gradient at an interior edge is `-φ_h(e)`
//! (resp. `-ψ_h(e)`), and at an interior vertex it is
//! `k_h(v) - (2 - m_v/2)π`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::chart::{Chart, ChartKind};
use crate::curvature::{integral_kernel, integral_kernel_improper, KernelKind};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::mesh::Surface;
use crate::quadrature::GaussKronrod;
use crate::trig::{alphas, angle_jacobian, angles_from_lengths, extended_angles, TriangleLengths};

/// Triples closer than this to `∂Ω` get the zero Hessian.
pub const HESSIAN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriangleFlavor {
    EuclideanPhi,
    HyperbolicPsi,
    SphericalPhi,
    /// Hyperbolic lengths in the `γ` chart, sine integrand.
    HyperbolicPhi,
    PackingEuclidean,
    PackingHyperbolic,
}

impl TriangleFlavor {
    pub const ALL: [TriangleFlavor; 6] = [
        TriangleFlavor::EuclideanPhi,
        TriangleFlavor::HyperbolicPsi,
        TriangleFlavor::SphericalPhi,
        TriangleFlavor::HyperbolicPhi,
        TriangleFlavor::PackingEuclidean,
        TriangleFlavor::PackingHyperbolic,
    ];

    pub fn geometry(self) -> Geometry {
        match self {
            TriangleFlavor::EuclideanPhi | TriangleFlavor::PackingEuclidean => Geometry::Euclidean,
            TriangleFlavor::SphericalPhi => Geometry::Spherical,
            _ => Geometry::Hyperbolic,
        }
    }

    pub fn chart_kind(self) -> ChartKind {
        match self {
            TriangleFlavor::HyperbolicPhi => ChartKind::Gamma,
            TriangleFlavor::PackingEuclidean | TriangleFlavor::PackingHyperbolic => ChartKind::G,
            _ => ChartKind::Xi,
        }
    }

    pub fn chart(self, h: f64) -> Result<Chart> {
        Chart::new(self.chart_kind(), h, self.geometry())
    }

    /// Variables are vertex radii rather than edge lengths.
    pub fn is_packing(self) -> bool {
        matches!(self, TriangleFlavor::PackingEuclidean | TriangleFlavor::PackingHyperbolic)
    }

    /// Value whose chart image is the reference point for energy values.
    pub fn reference_value(self) -> f64 {
        if self == TriangleFlavor::SphericalPhi {
            FRAC_PI_2
        } else {
            1.0
        }
    }
}

/// A slot of a triangle: chart coordinate of a variable, or a fixed
/// length (radius for packings).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slot {
    Variable(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Interior,
    Extension,
}

/// Gradient and Hessian with respect to the variable slots, in slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleEnergyEval {
    pub variables: Vec<usize>,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
    pub region: Region,
}

#[derive(Debug, Clone, Copy)]
struct Local {
    grad: [f64; 3],
    hess: Option<Matrix3<f64>>,
    region: Region,
}

fn outer_quadrature() -> GaussKronrod {
    // gradients carry ~1e-13 quadrature noise; ask for a little less
    GaussKronrod {
        abs_tol: 1e-11,
        rel_tol: 1e-11,
        max_segments: 200,
    }
}

/// Full-slot evaluation at given lengths (or radii); `dchart[j]` is the
/// chart derivative at slot `j`.
fn eval_local(flavor: TriangleFlavor, h: f64, values: [f64; 3], dchart: [f64; 3], want_hess: bool) -> Result<Local> {
    if flavor.is_packing() {
        let r = values;
        let tl = TriangleLengths {
            lengths: [r[1] + r[2], r[0] + r[2], r[0] + r[1]],
            geometry: flavor.geometry(),
        };
        let theta = angles_from_lengths(&tl)?;
        let mut grad = [0.0; 3];
        for i in 0..3 {
            grad[i] = -integral_kernel(KernelKind::TanHalfPow, h, FRAC_PI_2, theta[i])?;
        }
        let hess = if want_hess {
            let jac = angle_jacobian(&tl)?;
            Some(Matrix3::from_fn(|i, j| {
                // r_j enters the two lengths other than l_j
                let dtheta: f64 = (0..3).filter(|&m| m != j).map(|m| jac[(i, m)]).sum();
                -(0.5 * theta[i]).tan().powf(h) * dtheta / dchart[j]
            }))
        } else {
            None
        };
        return Ok(Local {
            grad,
            hess,
            region: Region::Interior,
        });
    }

    let tl = TriangleLengths {
        lengths: values,
        geometry: flavor.geometry(),
    };
    let interior = tl.in_moduli_space(HESSIAN_SLACK);
    let theta = extended_angles(&tl);
    let psi = flavor == TriangleFlavor::HyperbolicPsi;
    let alpha = alphas(&theta);
    let mut grad = [0.0; 3];
    for i in 0..3 {
        grad[i] = if psi {
            integral_kernel_improper(KernelKind::CosPow, h, 0.0, alpha[i])?
        } else {
            integral_kernel_improper(KernelKind::SinPow, h, FRAC_PI_2, theta[i])?
        };
    }
    let hess = match (want_hess, interior) {
        (false, _) => None,
        (true, false) => Some(Matrix3::zeros()),
        (true, true) => {
            let jac = angle_jacobian(&tl)?;
            Some(Matrix3::from_fn(|i, j| {
                let (weight, d) = if psi {
                    let others: f64 = (0..3).filter(|&m| m != i).map(|m| jac[(m, j)]).sum();
                    (alpha[i].cos().powf(h), 0.5 * (jac[(i, j)] - others))
                } else {
                    (theta[i].sin().powf(h), jac[(i, j)])
                };
                weight * d / dchart[j]
            }))
        }
    };
    Ok(Local {
        grad,
        hess,
        region: if interior { Region::Interior } else { Region::Extension },
    })
}

/// Gradient components at given lengths (radii for packings), all three
/// slots. They do not depend on the chart; only the Hessian does.
pub fn triangle_gradient(flavor: TriangleFlavor, h: f64, values: [f64; 3]) -> Result<[f64; 3]> {
    Ok(eval_local(flavor, h, values, [1.0; 3], false)?.grad)
}

/// One triangle's energy with some slots held fixed.
#[derive(Debug, Clone, Copy)]
pub struct TriangleEnergy {
    pub flavor: TriangleFlavor,
    pub h: f64,
    chart: Chart,
    fixed: [Option<f64>; 3],
}

impl TriangleEnergy {
    pub fn new(flavor: TriangleFlavor, h: f64, fixed: [Option<f64>; 3]) -> Result<Self> {
        let chart = flavor.chart(h)?;
        Self::with_chart(flavor, chart, fixed)
    }

    fn with_chart(flavor: TriangleFlavor, chart: Chart, fixed: [Option<f64>; 3]) -> Result<Self> {
        for v in fixed.iter().flatten() {
            let ok = if flavor.is_packing() {
                v.is_finite() && *v > 0.0
            } else {
                flavor.geometry().admits_length(*v)
            };
            if !ok {
                return Err(Error::OutOfDomain(*v));
            }
        }
        Ok(TriangleEnergy {
            flavor,
            h: chart.h,
            chart,
            fixed,
        })
    }

    /// All three slots variable.
    pub fn free(flavor: TriangleFlavor, h: f64) -> Result<Self> {
        Self::new(flavor, h, [None; 3])
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn variables(&self) -> Vec<usize> {
        (0..3).filter(|&i| self.fixed[i].is_none()).collect()
    }

    pub fn arity(&self) -> usize {
        self.fixed.iter().filter(|f| f.is_none()).count()
    }

    /// Chart coordinates of the reference configuration.
    pub fn reference(&self) -> Result<Vec<f64>> {
        let u = self.chart.forward(self.flavor.reference_value())?;
        Ok(vec![u; self.arity()])
    }

    fn local(&self, u: &[f64], want_hess: bool) -> Result<Local> {
        let vars = self.variables();
        if u.len() != vars.len() {
            return Err(Error::LengthMismatch {
                expected: vars.len(),
                got: u.len(),
            });
        }
        let mut values = [0.0; 3];
        let mut dchart = [1.0; 3];
        let mut k = 0;
        for i in 0..3 {
            match self.fixed[i] {
                Some(v) => values[i] = v,
                None => {
                    values[i] = self.chart.inverse(u[k]).map_err(|_| Error::OutOfDomain(u[k]))?;
                    dchart[i] = self.chart.derivative(values[i])?;
                    k += 1;
                }
            }
        }
        eval_local(self.flavor, self.h, values, dchart, want_hess)
    }

    pub fn eval(&self, u: &[f64]) -> Result<TriangleEnergyEval> {
        let vars = self.variables();
        let local = self.local(u, true)?;
        let full = local.hess.unwrap_or_else(Matrix3::zeros);
        Ok(TriangleEnergyEval {
            grad: DVector::from_iterator(vars.len(), vars.iter().map(|&i| local.grad[i])),
            hess: DMatrix::from_fn(vars.len(), vars.len(), |a, b| full[(vars[a], vars[b])]),
            variables: vars,
            region: local.region,
        })
    }

    pub fn gradient(&self, u: &[f64]) -> Result<DVector<f64>> {
        let vars = self.variables();
        let local = self.local(u, false)?;
        Ok(DVector::from_iterator(vars.len(), vars.iter().map(|&i| local.grad[i])))
    }

    /// `E(b) - E(a)` by integrating the gradient along the segment.
    pub fn difference(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let dir: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        let mut failure = None;
        let value = outer_quadrature().integrate(
            |s| {
                let p: Vec<f64> = a.iter().zip(&dir).map(|(x, d)| x + s * d).collect();
                match self.gradient(&p) {
                    Ok(g) => g.iter().zip(&dir).map(|(x, d)| x * d).sum(),
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                }
            },
            0.0,
            1.0,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(value?.value)
    }

    /// Energy value normalised to vanish at [`TriangleEnergy::reference`].
    pub fn value(&self, u: &[f64]) -> Result<f64> {
        self.difference(&self.reference()?, u)
    }
}

fn check_flavor(flavor: TriangleFlavor, allowed: &[TriangleFlavor]) -> Result<()> {
    if allowed.contains(&flavor) {
        Ok(())
    } else {
        Err(Error::NotApplicable("flavor does not belong to this energy family"))
    }
}

fn split_slots(slots: [Slot; 3]) -> ([Option<f64>; 3], Vec<f64>) {
    let mut fixed = [None; 3];
    let mut u = Vec::new();
    for (i, s) in slots.iter().enumerate() {
        match *s {
            Slot::Fixed(v) => fixed[i] = Some(v),
            Slot::Variable(x) => u.push(x),
        }
    }
    (fixed, u)
}

/// Edge energies `F` (Euclidean φ, hyperbolic ψ, spherical φ).
pub fn triangle_energy_f(flavor: TriangleFlavor, slots: [Slot; 3], h: f64) -> Result<TriangleEnergyEval> {
    check_flavor(
        flavor,
        &[TriangleFlavor::EuclideanPhi, TriangleFlavor::HyperbolicPsi, TriangleFlavor::SphericalPhi],
    )?;
    let (fixed, u) = split_slots(slots);
    TriangleEnergy::new(flavor, h, fixed)?.eval(&u)
}

/// Hyperbolic `G` energy in the `γ` chart; at most two variable slots.
pub fn triangle_energy_g(slots: [Slot; 3], h: f64) -> Result<TriangleEnergyEval> {
    let (fixed, u) = split_slots(slots);
    if u.len() > 2 {
        return Err(Error::UnsupportedArity(u.len()));
    }
    TriangleEnergy::new(TriangleFlavor::HyperbolicPhi, h, fixed)?.eval(&u)
}

/// Packing energy `C` with vertex radii in the `g` chart.
pub fn triangle_energy_c(geometry: Geometry, slots: [Slot; 3], h: f64) -> Result<TriangleEnergyEval> {
    let flavor = match geometry {
        Geometry::Euclidean => TriangleFlavor::PackingEuclidean,
        Geometry::Hyperbolic => TriangleFlavor::PackingHyperbolic,
        g => return Err(Error::UnsupportedGeometry(g)),
    };
    for s in &slots {
        if let Slot::Fixed(r) = *s {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::NonPositiveRadius(r));
            }
        }
    }
    let (fixed, u) = split_slots(slots);
    TriangleEnergy::new(flavor, h, fixed)?.eval(&u)
}

/// Symmetric matrix as a coordinate list of its upper triangle, sorted by
/// `(row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricCoo {
    pub dim: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SymmetricCoo {
    fn from_map(dim: usize, map: BTreeMap<(usize, usize), f64>) -> Self {
        SymmetricCoo {
            dim,
            entries: map.into_iter().map(|((i, j), v)| (i, j, v)).collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }
}

/// Which total energy to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemFlavor {
    /// `Σ F` over Euclidean or spherical triangles, prescribing `φ_h`.
    #[serde(rename = "W_phi")]
    WPhi,
    /// Hyperbolic `Σ F` prescribing `ψ_h`.
    #[serde(rename = "W_psi")]
    WPsi,
    /// Hyperbolic `Σ G` on stripped surfaces, sine integrand.
    #[serde(rename = "V_phi")]
    VPhi,
    /// Circle packings prescribing `k_h`.
    #[serde(rename = "U_packing")]
    UPacking,
}

impl ProblemFlavor {
    pub fn triangle_flavor(self, geometry: Geometry) -> Result<TriangleFlavor> {
        let infeasible = |msg: &str| Err(Error::InfeasibleSpec(format!("{msg}, got {geometry} geometry")));
        match (self, geometry) {
            (ProblemFlavor::WPhi, Geometry::Euclidean) => Ok(TriangleFlavor::EuclideanPhi),
            (ProblemFlavor::WPhi, Geometry::Spherical) => Ok(TriangleFlavor::SphericalPhi),
            (ProblemFlavor::WPhi, _) => infeasible("W_phi needs euclidean or spherical geometry"),
            (ProblemFlavor::WPsi, Geometry::Hyperbolic) => Ok(TriangleFlavor::HyperbolicPsi),
            (ProblemFlavor::WPsi, _) => infeasible("W_psi needs hyperbolic geometry"),
            (ProblemFlavor::VPhi, Geometry::Hyperbolic) => Ok(TriangleFlavor::HyperbolicPhi),
            (ProblemFlavor::VPhi, _) => infeasible("V_phi needs hyperbolic geometry"),
            (ProblemFlavor::UPacking, Geometry::Euclidean) => Ok(TriangleFlavor::PackingEuclidean),
            (ProblemFlavor::UPacking, Geometry::Hyperbolic) => Ok(TriangleFlavor::PackingHyperbolic),
            (ProblemFlavor::UPacking, _) => infeasible("U_packing needs euclidean or hyperbolic geometry"),
        }
    }

    pub fn on_vertices(self) -> bool {
        self == ProblemFlavor::UPacking
    }

    pub fn name(self) -> &'static str {
        match self {
            ProblemFlavor::WPhi => "W_phi",
            ProblemFlavor::WPsi => "W_psi",
            ProblemFlavor::VPhi => "V_phi",
            ProblemFlavor::UPacking => "U_packing",
        }
    }
}

impl std::fmt::Display for ProblemFlavor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProblemFlavor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "w_phi" | "phi" => Ok(ProblemFlavor::WPhi),
            "w_psi" | "psi" => Ok(ProblemFlavor::WPsi),
            "v_phi" | "sinh_phi" => Ok(ProblemFlavor::VPhi),
            "u_packing" | "k" | "packing" => Ok(ProblemFlavor::UPacking),
            other => Err(format!("unknown energy flavor '{other}'")),
        }
    }
}

/// Gradient and (optionally) Hessian of a total energy.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalEval {
    pub gradient: DVector<f64>,
    pub hessian: Option<SymmetricCoo>,
    /// Triangles evaluated on the constant extension.
    pub extension_triangles: Vec<usize>,
}

/// Total energy of a surface with fixed boundary data.
#[derive(Debug, Clone)]
pub struct EnergyModel<'a> {
    surface: &'a Surface,
    pub flavor: ProblemFlavor,
    pub triangle_flavor: TriangleFlavor,
    pub h: f64,
    chart: Chart,
    /// Fixed values on boundary edges (vertices); interior entries unused.
    base: Vec<f64>,
    variables: Vec<usize>,
    slot_of: Vec<Option<usize>>,
}

impl<'a> EnergyModel<'a> {
    /// `base` is indexed like the surface's edges (vertices for packings);
    /// only its boundary entries are read.
    pub fn new(surface: &'a Surface, geometry: Geometry, h: f64, flavor: ProblemFlavor, base: Vec<f64>) -> Result<Self> {
        let triangle_flavor = flavor.triangle_flavor(geometry)?;
        if flavor == ProblemFlavor::VPhi && !surface.is_stripped() {
            return Err(Error::InfeasibleSpec(
                "V_phi requires every triangle to have a boundary edge".into(),
            ));
        }
        let (count, variables) = if flavor.on_vertices() {
            (surface.vertex_count(), surface.interior_vertices().to_vec())
        } else {
            (surface.edges().len(), surface.interior_edges().to_vec())
        };
        if base.len() != count {
            return Err(Error::LengthMismatch {
                expected: count,
                got: base.len(),
            });
        }
        let mut slot_of = vec![None; count];
        for (k, &i) in variables.iter().enumerate() {
            slot_of[i] = Some(k);
        }
        let chart = triangle_flavor.chart(h)?;
        for (i, v) in base.iter().enumerate() {
            if slot_of[i].is_none() {
                let ok = if flavor.on_vertices() {
                    v.is_finite() && *v > 0.0
                } else {
                    geometry.admits_length(*v)
                };
                if !ok {
                    return Err(if flavor.on_vertices() {
                        Error::NonPositiveRadius(*v)
                    } else {
                        Error::NonPositiveLength(*v)
                    });
                }
            }
        }
        Ok(EnergyModel {
            surface,
            flavor,
            triangle_flavor,
            h,
            chart,
            base,
            variables,
            slot_of,
        })
    }

    pub fn surface(&self) -> &Surface {
        self.surface
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn geometry(&self) -> Geometry {
        self.triangle_flavor.geometry()
    }

    pub fn dimension(&self) -> usize {
        self.variables.len()
    }

    /// Edge (vertex) indices of the variables, in order.
    pub fn variables(&self) -> &[usize] {
        &self.variables
    }

    /// Chart coordinates of the interior entries of a full value vector.
    pub fn to_u(&self, values: &[f64]) -> Result<DVector<f64>> {
        let u = self
            .variables
            .iter()
            .map(|&i| self.chart.forward(values[i]))
            .collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(u))
    }

    /// Full value vector (boundary data plus decoded variables).
    pub fn values(&self, u: &DVector<f64>) -> Result<Vec<f64>> {
        if u.len() != self.dimension() {
            return Err(Error::LengthMismatch {
                expected: self.dimension(),
                got: u.len(),
            });
        }
        let mut values = self.base.clone();
        for (k, &i) in self.variables.iter().enumerate() {
            values[i] = self.chart.inverse(u[k])?;
        }
        Ok(values)
    }

    fn triangle_slots(&self, t: usize) -> [usize; 3] {
        if self.flavor.on_vertices() {
            self.surface.triangles()[t]
        } else {
            self.surface.triangle_edges(t)
        }
    }

    pub fn evaluate(&self, u: &DVector<f64>, want_hess: bool) -> Result<TotalEval> {
        let values = self.values(u)?;
        let dchart_full: Vec<f64> = self
            .variables
            .iter()
            .map(|&i| self.chart.derivative(values[i]))
            .collect::<Result<_>>()?;
        let mut gradient = DVector::zeros(self.dimension());
        let mut hess = BTreeMap::new();
        let mut extension_triangles = Vec::new();
        for t in 0..self.surface.triangles().len() {
            let slots = self.triangle_slots(t);
            let local_values = slots.map(|i| values[i]);
            let dchart = slots.map(|i| self.slot_of[i].map_or(1.0, |k| dchart_full[k]));
            let local = eval_local(self.triangle_flavor, self.h, local_values, dchart, want_hess)?;
            if local.region == Region::Extension {
                extension_triangles.push(t);
            }
            for a in 0..3 {
                let Some(ka) = self.slot_of[slots[a]] else { continue };
                gradient[ka] += local.grad[a];
                if let Some(hl) = &local.hess {
                    for b in 0..3 {
                        if let Some(kb) = self.slot_of[slots[b]] {
                            *hess.entry((ka, kb)).or_insert(0.0) += hl[(a, b)];
                        }
                    }
                }
            }
        }
        // fold into the upper triangle, averaging rounding-level asymmetry
        let upper: BTreeMap<(usize, usize), f64> = hess
            .iter()
            .filter(|((i, j), _)| i <= j)
            .map(|(&(i, j), &v)| {
                let mirror = hess.get(&(j, i)).copied().unwrap_or(v);
                ((i, j), 0.5 * (v + mirror))
            })
            .collect();
        let hessian = want_hess.then(|| SymmetricCoo::from_map(self.dimension(), upper));
        Ok(TotalEval {
            gradient,
            hessian,
            extension_triangles,
        })
    }

    pub fn gradient(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.evaluate(u, false)?.gradient)
    }

    /// Combinatorial offset `(2 - m_v/2)π` per variable vertex (zeros for
    /// edge flavors).
    fn offsets(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dimension(),
            self.variables.iter().map(|&v| {
                if self.flavor.on_vertices() {
                    (2.0 - 0.5 * self.surface.vertex_degree(v) as f64) * PI
                } else {
                    0.0
                }
            }),
        )
    }

    /// Curvature reproduced by the gradient: `φ_h`/`ψ_h` for edges, `k_h`
    /// for vertices.
    pub fn curvature_from_gradient(&self, gradient: &DVector<f64>) -> DVector<f64> {
        if self.flavor.on_vertices() {
            gradient + self.offsets()
        } else {
            -gradient
        }
    }

    /// Gradient value at which the curvature equals `targets`.
    pub fn gradient_for_curvature(&self, targets: &DVector<f64>) -> DVector<f64> {
        if self.flavor.on_vertices() {
            targets - self.offsets()
        } else {
            -targets
        }
    }

    pub fn curvature(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.curvature_from_gradient(&self.gradient(u)?))
    }

    /// `E(u + αp) - E(u) - α b·p`, integrating the shifted gradient along
    /// the step.
    pub fn energy_difference(&self, u: &DVector<f64>, p: &DVector<f64>, alpha: f64, shift: &DVector<f64>) -> Result<f64> {
        let slope_shift = shift.dot(p);
        let mut failure = None;
        let value = outer_quadrature().integrate(
            |t| match self.gradient(&(u + p * t)) {
                Ok(g) => g.dot(p) - slope_shift,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            0.0,
            alpha,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(value?.value)
    }

    /// Chart coordinates of the reference configuration.
    pub fn reference(&self) -> Result<DVector<f64>> {
        let u = self.chart.forward(self.triangle_flavor.reference_value())?;
        Ok(DVector::from_element(self.dimension(), u))
    }

    /// Unshifted energy relative to [`EnergyModel::reference`].
    pub fn energy(&self, u: &DVector<f64>) -> Result<f64> {
        let r = self.reference()?;
        self.energy_difference(&r, &(u - &r), 1.0, &DVector::zeros(self.dimension()))
    }
}

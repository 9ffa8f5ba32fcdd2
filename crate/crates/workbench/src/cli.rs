//! Command-line front end of the `rigidity` binary.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rigidity_core::curvature::{is_delaunay, k_h, phi_h, psi_h};
use rigidity_core::energy::ProblemFlavor;
use rigidity_core::mesh::Surface;
use rigidity_core::solver::{self, Outcome, ProblemSpec, SolveError, SolveOptions, SolveReport};
use rigidity_core::Geometry;
use serde::Serialize;
use serde_json::{json, Value};

use crate::audit::{audit, AuditOptions};
use crate::document::{align_targets, edge_keys, read_targets, vertex_keys, MeshDocument};
use crate::error::{exit, Result, WorkbenchError};
use crate::packing::{checked_layout, complete_packing, to_svg};
use crate::polygon::{cyclic_polygon_solve, PolygonSpec};

#[derive(Debug, Parser)]
#[command(name = "rigidity", version, about = "Prescribed-curvature rigidity workbench for bordered surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-edge or per-vertex curvature of a mesh document.
    Curvature(CurvatureArgs),
    /// Recover interior lengths or radii from boundary data and targets.
    Solve(SolveArgs),
    /// Reconstruct a cyclic polygon from its side lengths.
    Polygon(PolygonArgs),
    /// Complete a circle packing from boundary radii and lay it out.
    Pack(PackArgs),
    /// Randomised invariant audit.
    Audit(AuditArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurvatureFlavor {
    Phi,
    Psi,
    K,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Exponent h (defaults to the document's, else 0).
    #[arg(long = "h", allow_hyphen_values = true)]
    pub h: Option<f64>,
    /// Geometry; must agree with the document when both are given.
    #[arg(long, value_parser = parse_geometry)]
    pub geometry: Option<Geometry>,
    /// Write the JSON result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurvatureArgs {
    pub mesh: PathBuf,
    #[arg(long, value_enum)]
    pub flavor: CurvatureFlavor,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub mesh: PathBuf,
    /// JSON map from interior edge key "i-j" or vertex index to target.
    #[arg(long)]
    pub targets: PathBuf,
    /// phi, psi, k, or an energy name (w_phi, w_psi, v_phi/sinh_phi, u_packing).
    #[arg(long)]
    pub flavor: String,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub common: Common,
    /// Write the solve report here; otherwise it is printed.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PolygonArgs {
    /// Comma-separated side lengths in cyclic order.
    #[arg(long, value_delimiter = ',', required_unless_present = "spec")]
    pub sides: Vec<f64>,
    /// JSON file with `side_lengths` and `geometry`.
    #[arg(long, conflicts_with = "sides")]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PackArgs {
    /// Mesh document with radii on (at least) every boundary vertex.
    pub mesh: PathBuf,
    /// Targets for k_h on interior vertices (default 0).
    #[arg(long)]
    pub targets: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

fn parse_geometry(s: &str) -> std::result::Result<Geometry, String> {
    s.parse()
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::PARSE } else { exit::OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Curvature(a) => curvature(a, stdout, stderr),
        Command::Solve(a) => solve(a, stdout, stderr),
        Command::Polygon(a) => polygon(a, stdout),
        Command::Pack(a) => pack(a, stdout, stderr),
        Command::Audit(a) => run_audit(a, stdout, stderr),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| WorkbenchError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn emit(value: &impl Serialize, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialise");
    text.push('\n');
    match out {
        Some(p) => write_file(p, &text),
        None => stdout.write_all(text.as_bytes()).map_err(|source| WorkbenchError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn load(mesh: &Path, common: &Common) -> Result<(MeshDocument, Surface, f64)> {
    let doc = MeshDocument::read(mesh)?;
    if let Some(g) = common.geometry {
        if g != doc.geometry {
            return Err(WorkbenchError::InvalidMesh(format!(
                "--geometry {g} disagrees with the document's {}",
                doc.geometry
            )));
        }
    }
    let surface = doc.surface()?;
    let h = common.h.or(doc.h).unwrap_or(0.0);
    if !h.is_finite() {
        return Err(WorkbenchError::Parse(format!("h must be finite, got {h}")));
    }
    Ok((doc, surface, h))
}

#[derive(Debug, Serialize)]
struct CurvatureReport {
    flavor: &'static str,
    geometry: Geometry,
    h: f64,
    values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delaunay: Option<bool>,
}

fn curvature(a: CurvatureArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let (doc, surface, h) = load(&a.mesh, &a.common)?;
    if doc.metric.is_some() && doc.radii.is_some() {
        return Err(WorkbenchError::InvalidMesh("give either a metric or radii, not both".into()));
    }
    let (name, values, delaunay) = match a.flavor {
        CurvatureFlavor::Phi | CurvatureFlavor::Psi => {
            let metric = doc.metric(&surface)?;
            let c = if a.flavor == CurvatureFlavor::Phi {
                phi_h(&surface, &metric, h)?
            } else {
                psi_h(&surface, &metric, h)?
            };
            let values = c.values.iter().map(|(e, v)| (e.to_string(), *v)).collect();
            let delaunay = match doc.geometry {
                Geometry::Spherical => None,
                _ => Some(is_delaunay(&surface, &metric)?),
            };
            (if a.flavor == CurvatureFlavor::Phi { "phi" } else { "psi" }, values, delaunay)
        }
        CurvatureFlavor::K => {
            let packing = doc.packing(&surface)?;
            let c = k_h(&surface, &packing, h)?;
            // numeric order, not lexicographic, in the table
            let values = c.values.iter().map(|(v, x)| (v.to_string(), *x)).collect();
            ("k", values, None)
        }
    };
    let report = CurvatureReport {
        flavor: name,
        geometry: doc.geometry,
        h,
        values,
        delaunay,
    };
    print_table(&report, stderr);
    emit(&report, a.common.out.as_deref(), stdout)?;
    Ok(exit::OK)
}

fn print_table(report: &CurvatureReport, w: &mut dyn Write) {
    let _ = writeln!(w, "{} curvature, {} geometry, h = {}", report.flavor, report.geometry, report.h);
    let mut rows: Vec<(&String, &f64)> = report.values.iter().collect();
    rows.sort_by_key(|(k, _)| k.split('-').map(|x| x.parse::<usize>().unwrap_or(usize::MAX)).collect::<Vec<_>>());
    for (k, v) in rows {
        let _ = writeln!(w, "  {k:>9}  {v:>22.15}");
    }
    if let Some(d) = report.delaunay {
        let _ = writeln!(w, "delaunay: {d}");
    }
}

/// The energy a curvature name selects in a given geometry.
pub fn problem_flavor(name: &str, geometry: Geometry) -> Result<ProblemFlavor> {
    let f = match name.to_ascii_lowercase().as_str() {
        // the hyperbolic φ_h is prescribed through the V energy; in the
        // plane ψ_h coincides with φ_h
        "phi" if geometry == Geometry::Hyperbolic => ProblemFlavor::VPhi,
        "psi" if geometry == Geometry::Euclidean => ProblemFlavor::WPhi,
        other => other.parse::<ProblemFlavor>().map_err(WorkbenchError::Parse)?,
    };
    f.triangle_flavor(geometry)?;
    Ok(f)
}

#[derive(Debug, Serialize)]
pub struct SolveReportJson {
    pub flavor: ProblemFlavor,
    pub geometry: Geometry,
    pub h: f64,
    pub outcome: Outcome,
    pub converged: bool,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub descent_path_stayed_admissible: bool,
    pub energy_trace: Vec<f64>,
}

impl SolveReportJson {
    fn new(flavor: ProblemFlavor, geometry: Geometry, h: f64, r: &SolveReport) -> Self {
        SolveReportJson {
            flavor,
            geometry,
            h,
            outcome: r.outcome,
            converged: r.converged,
            iterations: r.iterations,
            final_gradient_norm: r.final_gradient_norm,
            descent_path_stayed_admissible: r.descent_path_stayed_admissible,
            energy_trace: r.energy_trace.clone(),
        }
    }
}

fn solve(a: SolveArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let (doc, surface, h) = load(&a.mesh, &a.common)?;
    let flavor = problem_flavor(&a.flavor, doc.geometry)?;
    let targets = read_targets(&a.targets)?;
    let (boundary, keys) = if flavor.on_vertices() {
        let radii = doc.radius_map(&surface)?;
        let b = surface
            .boundary_vertices()
            .iter()
            .map(|v| radii.get(v).copied().ok_or_else(|| WorkbenchError::InvalidMesh(format!("no radius for boundary vertex {v}"))))
            .collect::<Result<Vec<_>>>()?;
        (b, vertex_keys(surface.interior_vertices()))
    } else {
        let lengths = doc.partial_metric(&surface)?;
        let b = surface
            .boundary_edges()
            .iter()
            .map(|&e| {
                let edge = surface.edges()[e];
                lengths.get(&edge).copied().ok_or_else(|| WorkbenchError::InvalidMesh(format!("no length for boundary edge {edge}")))
            })
            .collect::<Result<Vec<_>>>()?;
        (b, edge_keys(&surface, surface.interior_edges()))
    };
    let problem = ProblemSpec {
        surface: surface.clone(),
        geometry: doc.geometry,
        h,
        flavor,
        boundary,
        targets: align_targets(&targets, &keys)?,
        initial_guess: None,
    };
    let options = SolveOptions {
        tol: a.tol,
        ..SolveOptions::default()
    };
    let (report, code) = match solver::solve(&problem, &options) {
        Ok(r) if r.outcome == Outcome::NoGeometricSolution => (r, exit::NO_GEOMETRIC_SOLUTION),
        Ok(r) => (r, exit::OK),
        Err(SolveError::MaxIterations(r)) => (*r, exit::NO_CONVERGENCE),
        Err(e) => return Err(e.into()),
    };
    let mut solved = MeshDocument::new(doc.geometry, &surface);
    solved.h = Some(h);
    match &report.solution {
        solver::Solution::Metric(m) => solved = solved.with_metric(&surface, m),
        solver::Solution::Packing(p) => solved = solved.with_radii(&p.radii),
    }
    let summary = SolveReportJson::new(flavor, doc.geometry, h, &report);
    match (&a.common.out, &a.report) {
        (Some(out), Some(rep)) => {
            write_file(out, &(solved.to_json() + "\n"))?;
            emit(&summary, Some(rep), stdout)?;
        }
        (Some(out), None) => {
            write_file(out, &(solved.to_json() + "\n"))?;
            emit(&summary, None, stdout)?;
        }
        (None, rep) => {
            if let Some(rep) = rep {
                emit(&summary, Some(rep), stdout)?;
                emit(&solved, None, stdout)?;
            } else {
                emit(&json!({ "document": solved, "report": summary }), None, stdout)?;
            }
        }
    }
    if code != exit::OK {
        let _ = writeln!(stderr, "solve finished with outcome {:?} (converged: {})", report.outcome, report.converged);
    }
    Ok(code)
}

fn polygon(a: PolygonArgs, stdout: &mut dyn Write) -> Result<i32> {
    let spec = match &a.spec {
        Some(path) => {
            let spec: PolygonSpec = serde_json::from_str(&crate::document::read_text(path)?).map_err(|e| WorkbenchError::Parse(e.to_string()))?;
            if a.common.geometry.is_some_and(|g| g != spec.geometry) {
                return Err(WorkbenchError::InvalidMesh("--geometry disagrees with the polygon file".into()));
            }
            spec
        }
        None => PolygonSpec {
            side_lengths: a.sides.clone(),
            geometry: a.common.geometry.unwrap_or(Geometry::Euclidean),
        },
    };
    let options = SolveOptions {
        tol: a.tol,
        ..SolveOptions::default()
    };
    let result = cyclic_polygon_solve(&spec, &options)?;
    emit(&result, a.common.out.as_deref(), stdout)?;
    Ok(exit::OK)
}

fn pack(a: PackArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let (doc, surface, h) = load(&a.mesh, &a.common)?;
    let radii = doc.radius_map(&surface)?;
    let boundary: BTreeMap<usize, f64> = radii.into_iter().filter(|(v, _)| surface.is_boundary_vertex(*v)).collect();
    let targets = match &a.targets {
        Some(p) => Some(align_targets(&read_targets(p)?, &vertex_keys(surface.interior_vertices()))?),
        None => None,
    };
    let options = SolveOptions {
        tol: a.tol,
        ..SolveOptions::default()
    };
    let (packing, report) = complete_packing(&surface, doc.geometry, &boundary, targets, h, &options)?;
    let mut result = serde_json::Map::new();
    result.insert("geometry".into(), json!(doc.geometry));
    result.insert("h".into(), json!(h));
    result.insert("radii".into(), json!(packing.radii));
    result.insert("report".into(), serde_json::to_value(SolveReportJson::new(ProblemFlavor::UPacking, doc.geometry, h, &report)).expect("report serialises"));
    if doc.geometry == Geometry::Euclidean {
        let layout = checked_layout(&surface, &packing)?;
        result.insert("centers".into(), json!(layout.centers));
        result.insert("tangency_residual".into(), json!(layout.tangency_residual));
        result.insert("closure_residual".into(), json!(layout.closure_residual));
        if let Some(path) = &a.svg {
            write_file(path, &to_svg(&surface, &layout))?;
        }
    } else if a.svg.is_some() {
        let _ = writeln!(stderr, "note: layouts are only drawn for euclidean packings; no SVG written");
    }
    emit(&Value::Object(result), a.common.out.as_deref(), stdout)?;
    Ok(exit::OK)
}

fn run_audit(a: AuditArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let report = audit(a.seed, a.samples, AuditOptions { inject_fault: a.inject_fault });
    for r in &report.invariants {
        let _ = writeln!(
            stderr,
            "{} {:<48} worst {:>12.3e}  tol {:.0e}  ({} samples)",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.worst_residual,
            r.tolerance,
            r.samples
        );
    }
    emit(&report, a.out.as_deref(), stdout)?;
    Ok(if report.passed { exit::OK } else { exit::AUDIT_FAILED })
}

use thiserror::Error;

use crate::geometry::Geometry;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("lengths {0:?} do not form a non-degenerate triangle")]
    DegenerateTriangle([f64; 3]),

    #[error("length {0} is not positive (or not below π for spherical geometry)")]
    NonPositiveLength(f64),

    #[error("radius {0} is not positive")]
    NonPositiveRadius(f64),

    #[error("operation is not defined in {0:?} geometry")]
    UnsupportedGeometry(Geometry),

    #[error("tangent-law evaluations disagree: {0:?}")]
    IndexMismatch([f64; 3]),

    #[error("integrand is singular on [{a}, {b}] for exponent {h}")]
    SingularIntegrand { a: f64, b: f64, h: f64 },

    #[error("quadrature did not reach tolerance (error estimate {0:e})")]
    QuadratureFailure(f64),

    #[error("edge {0}-{1} is incident to three or more triangles")]
    NonManifoldEdge(usize, usize),

    #[error("surface is not connected")]
    Disconnected,

    #[error("surface has no boundary edge")]
    ClosedSurface,

    #[error("bad triangle {0:?}: {1}")]
    BadIndex([usize; 3], &'static str),

    #[error("vertex {0} belongs to no triangle")]
    IsolatedVertex(usize),

    #[error("no length given for edge {0}-{1}")]
    MissingEdgeLength(usize, usize),

    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("metric is not admissible on triangles {0:?}")]
    InvalidMetric(Vec<usize>),

    #[error("not applicable: {0}")]
    NotApplicable(&'static str),

    #[error("value {0} lies outside the chart domain")]
    OutOfDomain(f64),

    #[error("coordinate {0} lies outside the chart image")]
    OutOfImage(f64),

    #[error("energy G is only defined for one or two variable edges, got {0}")]
    UnsupportedArity(usize),

    #[error("infeasible problem: {0}")]
    InfeasibleSpec(String),
}

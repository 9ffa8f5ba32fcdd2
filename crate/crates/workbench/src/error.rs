use rigidity_core::solver::SolveError;
use thiserror::Error;

/// Process exit codes of the `rigidity` binary.
pub mod exit {
    pub const OK: i32 = 0;
    pub const AUDIT_FAILED: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const INVALID_MESH: i32 = 3;
    pub const INVALID_METRIC: i32 = 4;
    pub const NO_GEOMETRIC_SOLUTION: i32 = 5;
    pub const NO_CONVERGENCE: i32 = 6;
}

#[derive(Debug, Error)]
pub enum WorkbenchError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid mesh or problem: {0}")]
    InvalidMesh(String),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("no geometric solution: {0}")]
    NoGeometricSolution(String),
    #[error("no cyclic polygon with these sides: {0}")]
    NoCyclicPolygon(String),
    #[error("circle layout does not close up (residual {0:e})")]
    LayoutInconsistent(f64),
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

impl WorkbenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            WorkbenchError::Io { .. } | WorkbenchError::Parse(_) => exit::PARSE,
            WorkbenchError::InvalidMesh(_) => exit::INVALID_MESH,
            WorkbenchError::InvalidMetric(_) | WorkbenchError::LayoutInconsistent(_) => exit::INVALID_METRIC,
            WorkbenchError::NoGeometricSolution(_) | WorkbenchError::NoCyclicPolygon(_) => exit::NO_GEOMETRIC_SOLUTION,
            WorkbenchError::NoConvergence(_) => exit::NO_CONVERGENCE,
        }
    }
}

impl From<rigidity_core::Error> for WorkbenchError {
    fn from(e: rigidity_core::Error) -> Self {
        use rigidity_core::Error as E;
        match e {
            E::NonManifoldEdge(..)
            | E::Disconnected
            | E::ClosedSurface
            | E::BadIndex(..)
            | E::IsolatedVertex(_)
            | E::InfeasibleSpec(_)
            | E::LengthMismatch { .. }
            | E::MissingEdgeLength(..)
            | E::UnsupportedGeometry(_)
            | E::NotApplicable(_) => WorkbenchError::InvalidMesh(e.to_string()),
            _ => WorkbenchError::InvalidMetric(e.to_string()),
        }
    }
}

impl From<SolveError> for WorkbenchError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Infeasible(msg) => WorkbenchError::InvalidMesh(msg),
            SolveError::Kernel(k) => k.into(),
            other => WorkbenchError::NoConvergence(other.to_string()),
        }
    }
}

pub type Result<T, E = WorkbenchError> = std::result::Result<T, E>;

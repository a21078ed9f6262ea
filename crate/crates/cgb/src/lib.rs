//! Numerical verification toolkit for the Chern-Gauss-Bonnet machinery on
//! model manifolds: alternating forms and Pfaffians, chart-based Riemannian
//! curvature, convex hypersurfaces with their shape operators, and the
//! transgression boundary term, wired into verdict suites for the
//! total-curvature and isoperimetric inequalities.

pub mod config;
pub mod forms;
pub mod gaussbonnet;
pub mod hypersurface;
pub mod linalg;
pub mod manifold;
pub mod quadrature;
pub mod report;
pub mod scalar;
pub mod suites;
pub mod tol;

use thiserror::Error;

/// Error type shared by all modules.
#[derive(Debug, Error)]
pub enum CgbError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("arity mismatch: form of grade {grade} evaluated on {given} vectors")]
    ArityMismatch { grade: usize, given: usize },
    #[error("matrix size must be even, got {0}")]
    OddSize(usize),
    #[error("skew-symmetry violated: defect {0:.3e}")]
    NotSkew(f64),
    #[error("metric not positive-definite at queried point")]
    SingularMetric,
    #[error("point outside chart domain")]
    DomainError,
    #[error("geodesic left the chart domain at t={0}")]
    DomainEscape(f64),
    #[error("degenerate parametrization at {0:?}")]
    DegenerateParam(Vec<f64>),
    #[error("convexity violated at {point:?}: min principal curvature {min_kappa:.3e}")]
    ConvexityViolation { point: Vec<f64>, min_kappa: f64 },
    #[error("metric does not support dual-number evaluation")]
    UnsupportedGeneric,
    #[error("non-finite value at node {0:?}")]
    NonFinite(Vec<f64>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CgbError>;

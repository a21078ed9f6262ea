//! Central tolerance constants. All comparisons in the crate are absolute
//! unless a magnitude scale is stated at the call site.

/// Skew-symmetry defect allowed when constructing a matrix of 2-forms.
pub const SKEW_DEFECT: f64 = 1e-12;

/// Coefficients below this magnitude are dropped from sparse forms.
/// Underflow hygiene only; small values are otherwise kept exactly.
pub const COEFF_PRUNE: f64 = 1e-300;

/// Metric symmetry defect allowed at a chart point.
pub const METRIC_SYMMETRY: f64 = 1e-12;

/// Orthonormality defect allowed for frames.
pub const FRAME_ORTHO: f64 = 1e-10;

/// Relative threshold (w.r.t. the largest singular value) below which a
/// singular value counts toward the curvature nullity.
pub const NULLITY_REL: f64 = 1e-8;

/// Default convexity slack: surfaces claimed convex must have
/// min principal curvature >= -TOL_CONVEX.
pub const TOL_CONVEX: f64 = 1e-6;

/// Absolute slack for pointwise inequality verdicts (GK - Pf, GK - TPf).
pub const POINTWISE_SLACK: f64 = 1e-8;

/// Step scale for first metric derivatives in central-difference mode:
/// h = cbrt(eps) * max(1, |coord|), with one Richardson level.
pub fn fd_step_first(coord: f64) -> f64 {
    f64::EPSILON.cbrt() * coord.abs().max(1.0)
}

/// Step scale for second metric derivatives in central-difference mode.
/// Larger than the first-derivative step because roundoff grows like eps/h^2.
pub fn fd_step_second(coord: f64) -> f64 {
    f64::EPSILON.powf(0.25) * coord.abs().max(1.0)
}

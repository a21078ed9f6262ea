//! Convex hypersurfaces in model manifolds: geodesic spheres and their
//! radial perturbations, outward normals, shape operators, principal
//! curvatures, Gauss-Kronecker curvature, induced metric, area element.
//!
//! Surfaces are parametrized over hyperspherical angles of S^(n-1); the
//! parametrization is written generically over the AD scalar, so tangents
//! and normal derivatives come out of nested dual numbers rather than
//! difference quotients.

use crate::forms::AlternatingForm;
use crate::linalg::{det_f64, gram_schmidt, metric_inner};
use crate::manifold::{
    christoffel, mobius_add, DerivMode, GenericMetric, ManifoldChart, MetricKind,
};
use crate::quadrature::{direction, sphere_grid};
use crate::scalar::{Dual, Dual2, Scalar};
use crate::tol;
use crate::{CgbError, Result};
use nalgebra::DMatrix;
use std::sync::Arc;

/// Low-order spherical harmonic used as a radial perturbation shape.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HarmonicMode {
    /// Degree-1 harmonic u_axis.
    Linear { axis: usize },
    /// Degree-2 harmonic u_0 * u_{n-1}.
    Quadratic,
}

impl HarmonicMode {
    fn eval<S: Scalar>(&self, u: &[S]) -> S {
        match *self {
            HarmonicMode::Linear { axis } => u[axis],
            HarmonicMode::Quadratic => u[0] * u[u.len() - 1],
        }
    }
}

/// Radial profile rho(u) of a star-shaped surface about the center.
#[derive(Debug, Clone)]
pub enum RadialProfile {
    Constant { r: f64 },
    Perturbed { r: f64, eps: f64, mode: HarmonicMode },
    /// Euclidean ellipsoid |diag(1/axes) x| = 1 as a radial graph.
    Ellipsoid { axes: Vec<f64> },
}

impl RadialProfile {
    fn radius<S: Scalar>(&self, u: &[S]) -> S {
        match self {
            RadialProfile::Constant { r } => S::from_f64(*r),
            RadialProfile::Perturbed { r, eps, mode } => {
                S::from_f64(*r) + mode.eval(u).scale(*eps)
            }
            RadialProfile::Ellipsoid { axes } => {
                let mut q = S::zero();
                for (x, a) in u.iter().zip(axes) {
                    let s = *x / S::from_f64(*a);
                    q = q + s * s;
                }
                q.sqrt().recip()
            }
        }
    }
}

/// A hypersurface embedded in an ambient chart, parametrized over the
/// hyperspherical angles of S^(n-1). Immutable; all evaluations are pure.
#[derive(Debug, Clone)]
pub struct HypersurfaceEmbedding {
    pub ambient: ManifoldChart,
    /// Center in ambient chart coordinates (empty for polar charts, whose
    /// basepoint is the chart origin).
    pub center: Vec<f64>,
    pub profile: RadialProfile,
}

/// tanh(a sqrt(t)) / sqrt(t), smooth in t across t = 0.
fn tanh_ratio<S: Scalar>(a: S, t: S) -> S {
    if t.val() > 1e-12 {
        let s = t.sqrt();
        (a * s).tanh() / s
    } else {
        let a2 = a * a;
        a * (S::one() - a2 * t.scale(1.0 / 3.0) + a2 * a2 * t * t.scale(2.0 / 15.0))
    }
}

/// Factor-wise exponential from `center` at geodesic distance rho in the
/// frame direction `u` (unit w.r.t. the orthonormal frame at the center).
fn exp_frame<S: Scalar>(
    chart: &ManifoldChart,
    center: &[f64],
    u: &[S],
    rho: S,
) -> Result<Vec<S>> {
    match &chart.kind {
        MetricKind::Euclidean => Ok(center
            .iter()
            .zip(u)
            .map(|(&c, &ui)| S::from_f64(c) + rho * ui)
            .collect()),
        MetricKind::HyperbolicBall => {
            // conformal model: frame directions equal chart directions
            let t = crate::linalg::dot(u, u);
            let f = tanh_ratio(rho.scale(0.5), t);
            let q: Vec<S> = u.iter().map(|&ui| f * ui).collect();
            let c: Vec<S> = center.iter().map(|&x| S::from_f64(x)).collect();
            Ok(mobius_add(&c, &q))
        }
        MetricKind::Product(factors) => {
            let mut out = Vec::with_capacity(chart.dim);
            let mut off = 0;
            for fac in factors {
                let sub = exp_frame(
                    fac,
                    &center[off..off + fac.dim],
                    &u[off..off + fac.dim],
                    rho,
                )?;
                out.extend(sub);
                off += fac.dim;
            }
            Ok(out)
        }
        _ => Err(CgbError::InvalidArgument(
            "ambient model does not support closed-form radial embedding".into(),
        )),
    }
}

impl HypersurfaceEmbedding {
    /// Geodesic sphere of radius `r` about `center`.
    pub fn geodesic_sphere(ambient: ManifoldChart, center: Vec<f64>, r: f64) -> Result<Self> {
        if r <= 0.0 {
            return Err(CgbError::InvalidArgument("radius must be positive".into()));
        }
        let emb = HypersurfaceEmbedding {
            ambient,
            center,
            profile: RadialProfile::Constant { r },
        };
        emb.validate_center()?;
        Ok(emb)
    }

    /// Radially perturbed sphere exp_center((r + eps h(u)) u). Convexity is
    /// verified on a check grid; violations are rejected with the offending
    /// parameter point and the minimal principal curvature there.
    pub fn perturbed_sphere(
        base: &HypersurfaceEmbedding,
        eps: f64,
        mode: HarmonicMode,
        check_order: usize,
    ) -> Result<Self> {
        let r = match base.profile {
            RadialProfile::Constant { r } => r,
            _ => {
                return Err(CgbError::InvalidArgument(
                    "perturbation base must be a geodesic sphere".into(),
                ))
            }
        };
        let emb = HypersurfaceEmbedding {
            ambient: base.ambient.clone(),
            center: base.center.clone(),
            profile: RadialProfile::Perturbed { r, eps, mode },
        };
        emb.check_convexity(check_order)?;
        Ok(emb)
    }

    /// Euclidean ellipsoid with the given semi-axes, as a radial graph.
    pub fn ellipsoid(ambient: ManifoldChart, center: Vec<f64>, axes: Vec<f64>) -> Result<Self> {
        if !matches!(ambient.kind, MetricKind::Euclidean) {
            return Err(CgbError::InvalidArgument(
                "ellipsoid surfaces require a Euclidean ambient".into(),
            ));
        }
        if axes.len() != ambient.dim || axes.iter().any(|&a| a <= 0.0) {
            return Err(CgbError::InvalidArgument("bad ellipsoid axes".into()));
        }
        let emb = HypersurfaceEmbedding {
            ambient,
            center,
            profile: RadialProfile::Ellipsoid { axes },
        };
        emb.validate_center()?;
        Ok(emb)
    }

    fn validate_center(&self) -> Result<()> {
        match &self.ambient.kind {
            MetricKind::HyperbolicPolar => Ok(()),
            _ => {
                if self.center.len() != self.ambient.dim {
                    return Err(CgbError::DimensionMismatch(
                        self.center.len(),
                        self.ambient.dim,
                    ));
                }
                if !self.ambient.in_domain(&self.center) {
                    return Err(CgbError::DomainError);
                }
                Ok(())
            }
        }
    }

    /// Number of parameter angles (n - 1).
    pub fn param_dim(&self) -> usize {
        self.ambient.dim - 1
    }

    /// Parametrization with the radial profile scaled by `scale`; scale = 1
    /// is the surface itself, smaller values sweep the interior.
    pub fn param_scaled<S: Scalar>(&self, angles: &[S], scale: S) -> Result<Vec<S>> {
        let n = self.ambient.dim;
        if angles.len() != n - 1 {
            return Err(CgbError::DimensionMismatch(angles.len(), n - 1));
        }
        let u = direction(angles);
        let rho = self.profile.radius(&u) * scale;
        match &self.ambient.kind {
            MetricKind::HyperbolicPolar => {
                // polar normal coordinates: coordinate spheres are geodesic
                let mut out = Vec::with_capacity(n);
                out.push(rho);
                out.extend_from_slice(angles);
                Ok(out)
            }
            _ => exp_frame(&self.ambient, &self.center, &u, rho),
        }
    }

    pub fn param<S: Scalar>(&self, angles: &[S]) -> Result<Vec<S>> {
        self.param_scaled(angles, S::one())
    }

    /// Parameter tangents dparam/du_a, exact via dual numbers.
    pub fn tangents<S: Scalar>(&self, angles: &[S]) -> Result<Vec<Vec<S>>> {
        let m = self.param_dim();
        let mut out = Vec::with_capacity(m);
        for a in 0..m {
            let seeded: Vec<Dual<S>> = angles
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    if i == a {
                        Dual::variable(x)
                    } else {
                        Dual::constant(x)
                    }
                })
                .collect();
            let pd = self.param(&seeded)?;
            out.push(pd.into_iter().map(|x| x.im).collect());
        }
        Ok(out)
    }

    /// Pullback of the ambient metric, row-major (n-1)^2.
    pub fn pullback_metric<S: Scalar>(&self, angles: &[S]) -> Result<Vec<S>> {
        let p = self.param(angles)?;
        let g = self.ambient.eval_generic(&p)?;
        let t = self.tangents(angles)?;
        let m = t.len();
        let mut out = vec![S::zero(); m * m];
        for a in 0..m {
            for b in a..m {
                let v = metric_inner(&g, &t[a], &t[b]);
                out[m * a + b] = v;
                out[m * b + a] = v;
            }
        }
        Ok(out)
    }

    /// Area density w.r.t. the bare angle measure (includes the
    /// hyperspherical Jacobian through the parametrization).
    pub fn area_element(&self, angles: &[f64]) -> Result<f64> {
        let g = self.pullback_metric(angles)?;
        let m = self.param_dim();
        let d = det_f64(&g, m);
        if d <= 0.0 {
            return Err(CgbError::DegenerateParam(angles.to_vec()));
        }
        Ok(d.sqrt())
    }

    /// Verify min principal curvature >= -TOL_CONVEX on a check grid.
    pub fn check_convexity(&self, order: usize) -> Result<()> {
        let grid = sphere_grid(self.param_dim(), order)?;
        for node in &grid.nodes {
            let sd = shape_at(self, node)?;
            let min_k = sd
                .principal_curvatures
                .last()
                .copied()
                .unwrap_or(f64::NAN);
            if !(min_k >= -tol::TOL_CONVEX) {
                return Err(CgbError::ConvexityViolation {
                    point: node.clone(),
                    min_kappa: min_k,
                });
            }
        }
        Ok(())
    }

    /// Chart for the surface as a Riemannian manifold in its own right; the
    /// metric is the pullback, differentiated with dual numbers through the
    /// parametrization.
    pub fn induced_chart(&self) -> ManifoldChart {
        ManifoldChart {
            dim: self.param_dim(),
            kind: MetricKind::Dyn(Arc::new(PullbackMetric {
                emb: self.clone(),
            })),
            mode: DerivMode::DualNumber,
        }
    }
}

/// Pullback metric exposed at the dual-number depths the curvature
/// pipeline needs.
pub struct PullbackMetric {
    emb: HypersurfaceEmbedding,
}

impl GenericMetric for PullbackMetric {
    fn dim(&self) -> usize {
        self.emb.param_dim()
    }
    fn eval0(&self, p: &[f64]) -> Vec<f64> {
        self.emb.pullback_metric(p).expect("pullback eval")
    }
    fn eval1(&self, p: &[Dual<f64>]) -> Vec<Dual<f64>> {
        self.emb.pullback_metric(p).expect("pullback eval")
    }
    fn eval2(&self, p: &[Dual2]) -> Vec<Dual2> {
        self.emb.pullback_metric(p).expect("pullback eval")
    }
    fn in_domain(&self, p: &[f64]) -> bool {
        let m = self.emb.param_dim();
        p.len() == m
            && p.iter().all(|x| x.is_finite())
            && p[..m.saturating_sub(1)]
                .iter()
                .all(|&a| a > 0.0 && a < std::f64::consts::PI)
    }
}

/// Pointwise second-fundamental-form data of an embedded hypersurface.
#[derive(Debug, Clone)]
pub struct ShapeData {
    pub param_point: Vec<f64>,
    pub ambient_point: Vec<f64>,
    /// Outward unit normal, ambient chart coordinates.
    pub normal: Vec<f64>,
    /// Shape operator in an orthonormal tangent frame, after symmetrization.
    pub shape_operator: DMatrix<f64>,
    /// Max asymmetry of the operator before symmetrization.
    pub symmetry_defect: f64,
    /// Principal curvatures, descending.
    pub principal_curvatures: Vec<f64>,
    /// Principal directions in ambient chart coordinates; ordered to match
    /// the curvatures and oriented so (frame, normal) is positive.
    pub principal_frame: Vec<Vec<f64>>,
    pub gauss_kronecker: f64,
    /// Shape-operator 1-forms alpha_i = kappa_i theta_i in the principal
    /// coframe, over dimension n-1.
    pub alpha: Vec<AlternatingForm>,
    /// Parameter tangents (ambient coords).
    pub tangent_basis: Vec<Vec<f64>>,
    /// Pullback metric at the point, row-major (n-1)^2.
    pub pullback: Vec<f64>,
}

/// Unit normal pipeline, generic over the scalar: parametrize, take
/// tangents, Gram-Schmidt the tangents plus a fixed completion coordinate
/// vector under the ambient metric; the last vector is the (unoriented)
/// normal. The completion index and orientation sign are fixed at the
/// primal point by the caller so dual evaluations stay on one branch.
fn normal_generic<S: Scalar>(
    emb: &HypersurfaceEmbedding,
    angles: &[S],
    completion: usize,
    sign: f64,
) -> Result<(Vec<S>, Vec<Vec<S>>, Vec<S>)> {
    let n = emb.ambient.dim;
    let p = emb.param(angles)?;
    let g = emb.ambient.eval_generic(&p)?;
    let t = emb.tangents(angles)?;
    let mut basis = t.clone();
    let mut e = vec![S::zero(); n];
    e[completion] = S::one();
    basis.push(e);
    let ortho = gram_schmidt(&g, &basis)?;
    let nu = ortho.last().unwrap().iter().map(|&x| x.scale(sign)).collect();
    Ok((p, t, nu))
}

/// Shape operator, principal curvatures, and Gauss-Kronecker curvature at a
/// parameter point.
pub fn shape_at(emb: &HypersurfaceEmbedding, angles: &[f64]) -> Result<ShapeData> {
    let n = emb.ambient.dim;
    let m = n - 1;
    // primal pass
    let p = emb.param(angles)?;
    if !emb.ambient.in_domain(&p) {
        return Err(CgbError::DomainError);
    }
    let g = emb.ambient.metric0(&p)?;
    let t = emb.tangents(angles)?;
    let mut pull = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            pull[m * a + b] = metric_inner(&g, &t[a], &t[b]);
        }
    }
    if DMatrix::from_row_slice(m, m, &pull).cholesky().is_none() {
        return Err(CgbError::DegenerateParam(angles.to_vec()));
    }

    // completion coordinate: the one least captured by the tangent span
    let tangent_ortho = gram_schmidt(&g, &t)?;
    let mut completion = 0;
    let mut best = -1.0;
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let mut res = e.clone();
        for v in &tangent_ortho {
            let c = metric_inner(&g, v, &res);
            crate::linalg::axpy(&mut res, -c, v);
        }
        let r = metric_inner(&g, &res, &res);
        if r > best {
            best = r;
            completion = j;
        }
    }

    // orientation: outward means positive radial component
    let (_, _, nu_raw) = normal_generic(emb, angles, completion, 1.0)?;
    let radial = {
        let seeded: Vec<Dual<f64>> = angles.iter().map(|&x| Dual::constant(x)).collect();
        let pd = emb.param_scaled(&seeded, Dual::variable(1.0))?;
        pd.into_iter().map(|x| x.im).collect::<Vec<f64>>()
    };
    let orient = metric_inner(&g, &nu_raw, &radial);
    if orient.abs() < 1e-12 {
        return Err(CgbError::DegenerateParam(angles.to_vec()));
    }
    let sign = orient.signum();
    let nu: Vec<f64> = nu_raw.iter().map(|x| x * sign).collect();

    // normal derivatives along each parameter direction
    let gamma = christoffel(&emb.ambient, &p)?;
    let mut a_of_t: Vec<Vec<f64>> = Vec::with_capacity(m);
    for b in 0..m {
        let seeded: Vec<Dual<f64>> = angles
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if i == b {
                    Dual::variable(x)
                } else {
                    Dual::constant(x)
                }
            })
            .collect();
        let (_, _, nu_d) = normal_generic(emb, &seeded, completion, sign)?;
        let dnu: Vec<f64> = nu_d.iter().map(|x| x.im).collect();
        let mut col = vec![0.0; n];
        for k in 0..n {
            let mut acc = dnu[k];
            for i in 0..n {
                for j in 0..n {
                    acc += gamma[(k * n + i) * n + j] * t[b][i] * nu[j];
                }
            }
            col[k] = acc;
        }
        a_of_t.push(col);
    }

    // orthonormal tangent frame and the operator matrix in it
    let frame = tangent_ortho;
    let mut coeff = DMatrix::zeros(m, m); // T_b = sum_a coeff[(a,b)] E_a
    for b in 0..m {
        for a in 0..m {
            coeff[(a, b)] = metric_inner(&g, &t[b], &frame[a]);
        }
    }
    let mut mixed = DMatrix::zeros(m, m); // <A(T_b), E_a>
    for b in 0..m {
        for a in 0..m {
            mixed[(a, b)] = metric_inner(&g, &a_of_t[b], &frame[a]);
        }
    }
    let coeff_inv = coeff
        .clone()
        .try_inverse()
        .ok_or_else(|| CgbError::DegenerateParam(angles.to_vec()))?;
    let a_op = &mixed * &coeff_inv;
    let mut defect = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            defect = defect.max((a_op[(i, j)] - a_op[(j, i)]).abs());
        }
    }
    let sym = (&a_op + a_op.transpose()) * 0.5;

    let eig = sym.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let kappas: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut principal: Vec<Vec<f64>> = Vec::with_capacity(m);
    for &i in &order {
        let mut v: Vec<f64> = (0..m).map(|r| eig.eigenvectors[(r, i)]).collect();
        // deterministic sign: largest-magnitude component positive
        let mut arg = 0;
        for (k, x) in v.iter().enumerate() {
            if x.abs() > v[arg].abs() {
                arg = k;
            }
        }
        if v[arg] < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
        let mut amb = vec![0.0; n];
        for (a, &c) in v.iter().enumerate() {
            crate::linalg::axpy(&mut amb, c, &frame[a]);
        }
        principal.push(amb);
    }
    // (principal frame, outward normal) positively oriented
    let mut mat = DMatrix::zeros(n, n);
    for (c, v) in principal.iter().enumerate() {
        for r in 0..n {
            mat[(r, c)] = v[r];
        }
    }
    for r in 0..n {
        mat[(r, n - 1)] = nu[r];
    }
    if mat.determinant() < 0.0 {
        for x in principal[m - 1].iter_mut() {
            *x = -*x;
        }
    }

    let gk = kappas.iter().product();
    let alpha: Vec<AlternatingForm> = kappas
        .iter()
        .enumerate()
        .map(|(i, &k)| AlternatingForm::basis_one_form(m, i).scale(k))
        .collect();

    Ok(ShapeData {
        param_point: angles.to_vec(),
        ambient_point: p,
        normal: nu,
        shape_operator: sym,
        symmetry_defect: defect,
        principal_curvatures: kappas,
        principal_frame: principal,
        gauss_kronecker: gk,
        alpha,
        tangent_basis: t,
        pullback: pull,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;
    use std::f64::consts::PI;

    fn eu_sphere(n: usize, r: f64) -> HypersurfaceEmbedding {
        HypersurfaceEmbedding::geodesic_sphere(ManifoldChart::euclidean(n), vec![0.0; n], r)
            .unwrap()
    }

    #[test]
    fn euclidean_sphere_curvatures_and_normal() {
        for n in [2usize, 3, 4] {
            let r = 1.5;
            let emb = eu_sphere(n, r);
            let angles: Vec<f64> = (0..n - 1).map(|i| 0.9 + 0.2 * i as f64).collect();
            let sd = shape_at(&emb, &angles).unwrap();
            for &k in &sd.principal_curvatures {
                assert!((k - 1.0 / r).abs() < 1e-10, "n={n}: kappa {k}");
            }
            assert!((sd.gauss_kronecker - r.powi(-(n as i32 - 1))).abs() < 1e-10);
            assert!(sd.symmetry_defect < 1e-10);
            // outward unit normal is the radial direction
            let g = emb.ambient.metric0(&sd.ambient_point).unwrap();
            let nn = metric_inner(&g, &sd.normal, &sd.normal);
            assert!((nn - 1.0).abs() < 1e-12);
            let radial: f64 = sd
                .normal
                .iter()
                .zip(&sd.ambient_point)
                .map(|(a, b)| a * b)
                .sum();
            assert!((radial - r).abs() < 1e-10);
        }
    }

    #[test]
    fn hyperbolic_sphere_curvature_is_coth() {
        for (chart, center) in [
            (ManifoldChart::hyperbolic_ball(3), vec![0.0; 3]),
            (ManifoldChart::hyperbolic_polar(3), vec![]),
        ] {
            let r = 0.7f64;
            let emb = HypersurfaceEmbedding::geodesic_sphere(chart, center, r).unwrap();
            let sd = shape_at(&emb, &[1.1, 0.4]).unwrap();
            let coth = r.cosh() / r.sinh();
            for &k in &sd.principal_curvatures {
                assert!((k - coth).abs() < 1e-9, "kappa {k} vs {coth}");
            }
        }
    }

    #[test]
    fn sphere_area_matches_closed_form() {
        let r = 1.3f64;
        let emb = eu_sphere(3, r);
        let grid = quadrature::sphere_grid(2, 24).unwrap();
        let area = grid
            .integrate_param(|angles| emb.area_element(angles))
            .unwrap();
        assert!((area - 4.0 * PI * r * r).abs() < 1e-9);
    }

    #[test]
    fn pullback_is_scaled_round_metric() {
        let r = 2.0f64;
        let emb = eu_sphere(3, r);
        let angles = [1.0, 0.5];
        let g = emb.pullback_metric(&angles).unwrap();
        assert!((g[0] - r * r).abs() < 1e-12);
        assert!((g[3] - r * r * angles[0].sin().powi(2)).abs() < 1e-12);
        assert!(g[1].abs() < 1e-12);
    }

    #[test]
    fn ellipsoid_axis_point_curvatures() {
        // at the end of the b-axis the curvatures are b/a^2 and b/c^2
        let (a, b, c) = (1.5f64, 1.0, 0.75);
        let emb = HypersurfaceEmbedding::ellipsoid(
            ManifoldChart::euclidean(3),
            vec![0.0; 3],
            vec![a, b, c],
        )
        .unwrap();
        let sd = shape_at(&emb, &[PI / 2.0, 0.0]).unwrap();
        assert!((sd.ambient_point[1] - b).abs() < 1e-12);
        let mut expect = [b / (a * a), b / (c * c)];
        expect.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (k, e) in sd.principal_curvatures.iter().zip(&expect) {
            assert!((k - e).abs() < 1e-9, "{k} vs {e}");
        }
    }

    #[test]
    fn perturbed_sphere_convexity_gate() {
        let base = eu_sphere(3, 1.0);
        let ok =
            HypersurfaceEmbedding::perturbed_sphere(&base, 0.05, HarmonicMode::Quadratic, 8);
        assert!(ok.is_ok());
        let bad =
            HypersurfaceEmbedding::perturbed_sphere(&base, 0.6, HarmonicMode::Quadratic, 8);
        match bad {
            Err(CgbError::ConvexityViolation { point, min_kappa }) => {
                assert!(min_kappa < 0.0);
                assert_eq!(point.len(), 2);
            }
            other => panic!("expected convexity violation, got {other:?}"),
        }
    }

    #[test]
    fn product_sphere_is_smooth_across_the_flat_axis() {
        // parameter direction pointing purely into the flat factor is the
        // delicate spot for the ball-factor exponential
        let chart = ManifoldChart::product(vec![
            ManifoldChart::hyperbolic_ball(3),
            ManifoldChart::euclidean(1),
        ]);
        let emb =
            HypersurfaceEmbedding::geodesic_sphere(chart, vec![0.0; 4], 1.0).unwrap();
        let at = |d: f64| shape_at(&emb, &[PI / 2.0, PI / 2.0, PI / 2.0 + d]).unwrap();
        let on_axis = at(0.0);
        let near = at(1e-6);
        for (x, y) in on_axis
            .principal_curvatures
            .iter()
            .zip(&near.principal_curvatures)
        {
            assert!((x - y).abs() < 1e-4, "{x} vs {y}");
        }
        assert!(on_axis.gauss_kronecker.is_finite());
        // axis point sits at hyperbolic center, Euclidean coordinate 1
        assert!(on_axis.ambient_point[..3].iter().all(|x| x.abs() < 1e-12));
        assert!((on_axis.ambient_point[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn induced_chart_reports_its_dimension_and_domain() {
        let emb = eu_sphere(4, 1.0);
        let ic = emb.induced_chart();
        assert_eq!(ic.dim, 3);
        assert!(ic.in_domain(&[1.0, 1.0, 0.3]));
        assert!(!ic.in_domain(&[0.0, 1.0, 0.3]));
        let g = ic.metric0(&[1.0, 1.0, 0.3]).unwrap();
        assert_eq!(g.len(), 9);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(HypersurfaceEmbedding::geodesic_sphere(
            ManifoldChart::euclidean(3),
            vec![0.0; 3],
            -1.0
        )
        .is_err());
        assert!(HypersurfaceEmbedding::ellipsoid(
            ManifoldChart::hyperbolic_ball(3),
            vec![0.0; 3],
            vec![1.0, 1.0, 1.0]
        )
        .is_err());
        let emb = eu_sphere(3, 1.0);
        assert!(emb.param(&[1.0f64]).is_err());
    }
}

//! Named verification suites run by the CLI. Each suite produces a list of
//! verdicts with backing quantities; fixed example families (flat spaces,
//! spheres, hyperbolic factors) are built in, while `theorem`,
//! `isoperimetric`, and `nullity` operate on the configured ambient chart
//! and surfaces.

use crate::config::RunConfig;
use crate::gaussbonnet::{
    self, lemma31_residual, pf_scalar, sphere_volume, verdict_eq, verdict_ge, verdict_pointwise,
    Verdict,
};
use crate::hypersurface::HypersurfaceEmbedding;
use crate::manifold::{
    nullity_space, orthonormal_frame, ManifoldChart, MetricKind,
};
use crate::quadrature::sphere_grid;
use crate::{CgbError, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub verdict: Verdict,
    pub quantities: BTreeMap<String, f64>,
}

impl CheckOutcome {
    fn plain(verdict: Verdict) -> Self {
        CheckOutcome {
            verdict,
            quantities: BTreeMap::new(),
        }
    }
    fn with(verdict: Verdict, quantities: BTreeMap<String, f64>) -> Self {
        CheckOutcome {
            verdict,
            quantities,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub suite: String,
    pub checks: Vec<CheckOutcome>,
}

/// Random chart point comfortably inside the model's domain.
pub fn random_point(chart: &ManifoldChart, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let n = chart.dim;
    match &chart.kind {
        MetricKind::Euclidean => Ok((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()),
        MetricKind::SpherePolar => {
            let mut p: Vec<f64> = (0..n - 1)
                .map(|_| rng.gen_range(0.4..std::f64::consts::PI - 0.4))
                .collect();
            p.push(rng.gen_range(0.0..std::f64::consts::TAU));
            Ok(p)
        }
        MetricKind::HyperbolicPolar => {
            let mut p = vec![rng.gen_range(0.3..1.2)];
            for _ in 0..n.saturating_sub(2) {
                p.push(rng.gen_range(0.4..std::f64::consts::PI - 0.4));
            }
            if n >= 2 {
                p.push(rng.gen_range(0.0..std::f64::consts::TAU));
            }
            Ok(p)
        }
        MetricKind::HyperbolicBall => {
            let bound = 0.5 / (n as f64).sqrt();
            Ok((0..n).map(|_| rng.gen_range(-bound..bound)).collect())
        }
        MetricKind::HalfPlane => {
            let mut p: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            p.push(rng.gen_range(0.5..2.0));
            Ok(p)
        }
        MetricKind::Product(factors) => {
            let mut p = Vec::with_capacity(n);
            for f in factors {
                p.extend(random_point(f, rng)?);
            }
            Ok(p)
        }
        _ => Err(CgbError::UnsupportedGeneric),
    }
}

/// Nullity dimension a model chart must exhibit, when derivable from its
/// structure (flat directions contribute, curved factors do not).
pub fn expected_nullity(chart: &ManifoldChart) -> Option<usize> {
    match &chart.kind {
        MetricKind::Euclidean => Some(chart.dim),
        MetricKind::SpherePolar
        | MetricKind::HyperbolicPolar
        | MetricKind::HyperbolicBall
        | MetricKind::HalfPlane => Some(if chart.dim == 1 { 1 } else { 0 }),
        MetricKind::Product(factors) => {
            let mut total = 0;
            for f in factors {
                total += expected_nullity(f)?;
            }
            Some(total)
        }
        _ => None,
    }
}

fn h3_cross_euclidean(extra: usize) -> ManifoldChart {
    let mut factors = vec![ManifoldChart::hyperbolic_ball(3)];
    if extra > 0 {
        factors.push(ManifoldChart::euclidean(extra));
    }
    ManifoldChart::product(factors)
}

fn origin_sphere(ambient: ManifoldChart, r: f64) -> Result<HypersurfaceEmbedding> {
    let center = vec![0.0; ambient.dim];
    HypersurfaceEmbedding::geodesic_sphere(ambient, center, r)
}

pub fn run_suite(name: &str, cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<SuiteResult> {
    let checks = match name {
        "normalization" => normalization(rng)?,
        "cgb_closed" => cgb_closed(cfg)?,
        "cgb_boundary" => cgb_boundary(cfg)?,
        "lemma31" => lemma31(rng)?,
        "gauss_equation" => gauss_equation()?,
        "theorem" => theorem(cfg)?,
        "isoperimetric" => isoperimetric(cfg)?,
        "nullity" => nullity(cfg, rng)?,
        other => {
            return Err(CgbError::Config(format!("unknown suite {other:?}")));
        }
    };
    Ok(SuiteResult {
        suite: name.to_string(),
        checks,
    })
}

/// Pf must be identically 1 on unit spheres of even dimension.
fn normalization(rng: &mut ChaCha8Rng) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for k in [2usize, 4, 6] {
        let chart = ManifoldChart::sphere_polar(k);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let p = random_point(&chart, rng)?;
            let frame = orthonormal_frame(&chart, &p)?;
            worst = worst.max((pf_scalar(&frame)? - 1.0).abs());
        }
        out.push(CheckOutcome::plain(verdict_pointwise(
            &format!("pf_unit_sphere_k{k}"),
            worst,
            0.0,
            1e-7,
        )));
    }
    Ok(out)
}

/// Closed-manifold balance: (2/|S^k|) integral of Pf over S^k equals 2.
fn cgb_closed(cfg: &RunConfig) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for k in [2usize, 4] {
        let chart = ManifoldChart::sphere_polar(k);
        let order = cfg.orders.base_for(k);
        let coarse = sphere_grid(k, order)?;
        let fine = sphere_grid(k, 2 * order)?;
        let density = |p: &[f64]| pf_scalar(&orthonormal_frame(&chart, p)?);
        let (v, e) = crate::quadrature::integrate(density, &coarse, &fine)?;
        let chi = 2.0 * v / sphere_volume(k);
        let chi_err = 2.0 * e / sphere_volume(k);
        out.push(CheckOutcome::with(
            verdict_eq(&format!("euler_closed_s{k}"), chi, 2.0, 1e-3, chi_err),
            [("integral_pf".to_string(), v)].into_iter().collect(),
        ));
    }
    Ok(out)
}

/// Boundary balance over flat balls, plus the ellipsoid total-curvature
/// invariance.
fn cgb_boundary(cfg: &RunConfig) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for k in [2usize, 4, 6] {
        let emb = origin_sphere(ManifoldChart::euclidean(k), 1.0)?;
        let rep = gaussbonnet::verify_theorem(&emb, cfg.orders.base_for(k - 1), 1e-4)?;
        let chi_err = rep.integral_main_err / rep.target;
        out.push(CheckOutcome::with(
            verdict_eq(
                &format!("euler_flat_ball_k{k}"),
                rep.euler_estimate,
                1.0,
                1e-4,
                chi_err,
            ),
            [
                ("integral_main".to_string(), rep.integral_main),
                ("total_curvature".to_string(), rep.total_curvature),
            ]
            .into_iter()
            .collect(),
        ));
        if k > 2 {
            // flat ambient: the transgression must equal GK pointwise
            let gap = rep.pointwise_min_gap.abs().max(rep.pointwise_max_gap.abs());
            out.push(CheckOutcome::plain(verdict_pointwise(
                &format!("tpf_equals_gk_flat_k{k}"),
                gap,
                0.0,
                1e-9,
            )));
        }
    }
    // total curvature is invariant under deformation to an ellipsoid
    let axes = vec![1.5, 1.0, 0.75];
    let emb = HypersurfaceEmbedding::ellipsoid(ManifoldChart::euclidean(3), vec![0.0; 3], axes)?;
    let coarse = sphere_grid(2, 12)?;
    let fine = sphere_grid(2, 24)?;
    let density = |angles: &[f64]| {
        let sd = crate::hypersurface::shape_at(&emb, angles)?;
        let area = crate::linalg::det_f64(&sd.pullback, 2).max(0.0).sqrt();
        Ok(area * sd.gauss_kronecker)
    };
    let (v, e) = crate::quadrature::integrate_param(density, &coarse, &fine)?;
    out.push(CheckOutcome::plain(verdict_eq(
        "ellipsoid_total_curvature",
        v,
        sphere_volume(2),
        1e-3,
        e,
    )));
    Ok(out)
}

/// Wedge products of curvature 2-forms vanish at conullity <= 3, and do not
/// vanish on the constant-curvature control.
fn lemma31(rng: &mut ChaCha8Rng) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for n in [4usize, 5, 6] {
        let chart = h3_cross_euclidean(n - 3);
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let p = random_point(&chart, rng)?;
            worst = worst.max(lemma31_residual(&orthonormal_frame(&chart, &p)?));
        }
        out.push(CheckOutcome::plain(verdict_pointwise(
            &format!("wedge_residual_h3xr{}", n - 3),
            worst,
            0.0,
            1e-9,
        )));
    }
    let h4 = ManifoldChart::hyperbolic_ball(4);
    let p = random_point(&h4, rng)?;
    let control = lemma31_residual(&orthonormal_frame(&h4, &p)?);
    out.push(CheckOutcome::plain(verdict_ge(
        "wedge_control_h4",
        control,
        0.9,
        1e-12,
        0.0,
    )));
    let flat = orthonormal_frame(&ManifoldChart::euclidean(4), &[0.1, 0.2, 0.3, 0.4])?;
    out.push(CheckOutcome::plain(verdict_pointwise(
        "wedge_residual_flat",
        lemma31_residual(&flat),
        0.0,
        1e-15,
    )));
    Ok(out)
}

/// Intrinsic-vs-ambient curvature relation on geodesic spheres across the
/// model families.
fn gauss_equation() -> Result<Vec<CheckOutcome>> {
    let families: Vec<(&str, ManifoldChart, f64)> = vec![
        ("euclidean3", ManifoldChart::euclidean(3), 1.0),
        ("euclidean4", ManifoldChart::euclidean(4), 1.0),
        ("hyperbolic3", ManifoldChart::hyperbolic_ball(3), 0.8),
        ("hyperbolic4", ManifoldChart::hyperbolic_ball(4), 0.8),
        ("h3xr_r05", h3_cross_euclidean(1), 0.5),
        ("h3xr_r1", h3_cross_euclidean(1), 1.0),
    ];
    let mut out = Vec::new();
    for (label, chart, r) in families {
        let m = chart.dim - 1;
        let emb = origin_sphere(chart, r)?;
        let mut worst = 0.0f64;
        for point in sample_angles(m) {
            worst = worst.max(gaussbonnet::gauss_form_residual(&emb, &point)?);
        }
        out.push(CheckOutcome::plain(verdict_pointwise(
            &format!("gauss_relation_{label}"),
            worst,
            0.0,
            1e-4,
        )));
    }
    Ok(out)
}

/// A few well-separated parameter points away from coordinate poles.
fn sample_angles(m: usize) -> Vec<Vec<f64>> {
    let colats = [0.7, 1.4, 2.2];
    let azims = [0.5, 2.9];
    let mut out = Vec::new();
    for (i, &az) in azims.iter().enumerate() {
        let mut p = Vec::with_capacity(m);
        for j in 0..m - 1 {
            p.push(colats[(i + j) % colats.len()]);
        }
        p.push(az);
        out.push(p);
    }
    out
}

/// Total-curvature verification on the configured ambient and surfaces.
fn theorem(cfg: &RunConfig) -> Result<Vec<CheckOutcome>> {
    let ambient = cfg.ambient.build()?;
    if cfg.surfaces.is_empty() {
        return Err(CgbError::Config(
            "theorem suite needs at least one surface".into(),
        ));
    }
    let mut out = Vec::new();
    for (i, spec) in cfg.surfaces.iter().enumerate() {
        let emb = spec.build(&ambient, cfg.orders.convexity_check)?;
        let order = cfg.orders.base_for(ambient.dim - 1);
        let rep = gaussbonnet::verify_theorem(&emb, order, cfg.tolerances.integral_rel)?;
        let mut q: BTreeMap<String, f64> = [
            ("integral_main".to_string(), rep.integral_main),
            ("integral_main_err".to_string(), rep.integral_main_err),
            ("total_curvature".to_string(), rep.total_curvature),
            ("target".to_string(), rep.target),
            ("pointwise_min_gap".to_string(), rep.pointwise_min_gap),
            ("pointwise_max_gap".to_string(), rep.pointwise_max_gap),
            ("euler_estimate".to_string(), rep.euler_estimate),
        ]
        .into_iter()
        .collect();
        if let Some(s) = rep.max_abs_pf_interior {
            q.insert("max_abs_pf_interior".into(), s);
        }
        if let Some(s) = rep.interior_integral {
            q.insert("interior_integral".into(), s);
        }
        for v in &rep.verdicts {
            let mut v = v.clone();
            v.name = format!("surface{i}_{}", v.name);
            out.push(CheckOutcome::with(v, q.clone()));
        }
    }
    Ok(out)
}

/// Isoperimetric ratio on the configured geodesic balls.
fn isoperimetric(cfg: &RunConfig) -> Result<Vec<CheckOutcome>> {
    let ambient = cfg.ambient.build()?;
    if cfg.surfaces.is_empty() {
        return Err(CgbError::Config(
            "isoperimetric suite needs at least one surface".into(),
        ));
    }
    let flat = matches!(ambient.kind, MetricKind::Euclidean);
    let mut out = Vec::new();
    for (i, spec) in cfg.surfaces.iter().enumerate() {
        let emb = spec.build(&ambient, cfg.orders.convexity_check)?;
        let order = cfg.orders.base_for(ambient.dim - 1);
        let rep = gaussbonnet::verify_isoperimetric(&emb, order, cfg.orders.radial)?;
        let q: BTreeMap<String, f64> = [
            ("boundary_area".to_string(), rep.boundary_area),
            ("volume".to_string(), rep.volume),
            ("ratio".to_string(), rep.ratio),
            ("euclidean_constant".to_string(), rep.euclidean_constant),
            ("deficit".to_string(), rep.deficit),
        ]
        .into_iter()
        .collect();
        // propagate the boundary-area estimate through the ratio power
        let err = rep.ratio * rep.n as f64 * rep.boundary_area_err
            / rep.boundary_area.max(f64::MIN_POSITIVE);
        let verdict = if flat {
            verdict_eq(
                &format!("surface{i}_isoperimetric_equality"),
                rep.ratio,
                rep.euclidean_constant,
                1e-8 * rep.euclidean_constant,
                err,
            )
        } else {
            verdict_ge(
                &format!("surface{i}_isoperimetric_ratio"),
                rep.ratio,
                rep.euclidean_constant,
                1e-8 * rep.euclidean_constant,
                err,
            )
        };
        out.push(CheckOutcome::with(verdict, q));
    }
    Ok(out)
}

/// Curvature nullity of the configured ambient at random points.
fn nullity(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Vec<CheckOutcome>> {
    let ambient = cfg.ambient.build()?;
    let expected = expected_nullity(&ambient).ok_or_else(|| {
        CgbError::Config("nullity suite needs a structurally known ambient".into())
    })?;
    let n = ambient.dim;
    let mut mismatches = 0usize;
    let mut min_gap = f64::INFINITY;
    for _ in 0..10 {
        let p = random_point(&ambient, rng)?;
        let res = nullity_space(&ambient, &p, cfg.tolerances.nullity_rel)?;
        if res.nullity_dim != expected {
            mismatches += 1;
        }
        let rank = n - res.nullity_dim;
        if rank > 0 && res.nullity_dim > 0 {
            let above = res.singular_values[rank - 1];
            let below = res.singular_values[rank].max(f64::MIN_POSITIVE);
            min_gap = min_gap.min(above / below);
        }
    }
    let mut out = vec![CheckOutcome::with(
        verdict_pointwise("nullity_dim_matches", mismatches as f64, 0.0, 0.5),
        [("expected".to_string(), expected as f64)].into_iter().collect(),
    )];
    if min_gap.is_finite() {
        out.push(CheckOutcome::plain(verdict_ge(
            "nullity_singular_value_gap",
            min_gap,
            1e3,
            1e-9,
            0.0,
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn cfg(toml: &str) -> RunConfig {
        RunConfig::parse(toml).unwrap()
    }

    #[test]
    fn expected_nullity_matches_structure() {
        assert_eq!(expected_nullity(&ManifoldChart::euclidean(5)), Some(5));
        assert_eq!(expected_nullity(&ManifoldChart::hyperbolic_ball(4)), Some(0));
        assert_eq!(expected_nullity(&h3_cross_euclidean(2)), Some(2));
    }

    #[test]
    fn random_points_stay_in_domain() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for chart in [
            ManifoldChart::euclidean(3),
            ManifoldChart::sphere_polar(3),
            ManifoldChart::hyperbolic_polar(3),
            ManifoldChart::hyperbolic_ball(4),
            ManifoldChart::half_plane(2),
            h3_cross_euclidean(2),
        ] {
            for _ in 0..20 {
                let p = random_point(&chart, &mut rng).unwrap();
                assert!(chart.in_domain(&p), "{chart:?} {p:?}");
            }
        }
    }

    #[test]
    fn nullity_suite_on_product() {
        let c = cfg(r#"
            [ambient]
            model = "product"
            factors = [
              { model = "hyperbolic", dimension = 3 },
              { model = "euclidean", dimension = 1 },
            ]
        "#);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let res = run_suite("nullity", &c, &mut rng).unwrap();
        for check in &res.checks {
            assert_eq!(
                check.verdict.status,
                gaussbonnet::VerdictStatus::Pass,
                "{:?}",
                check.verdict
            );
        }
    }

    #[test]
    fn theorem_suite_euclidean_sphere_passes() {
        let c = cfg(r#"
            [ambient]
            model = "euclidean"
            dimension = 3
            [[surfaces]]
            kind = "geodesic_sphere"
            radius = 2.0
        "#);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let res = run_suite("theorem", &c, &mut rng).unwrap();
        assert!(!res.checks.is_empty());
        for check in &res.checks {
            assert_ne!(
                check.verdict.status,
                gaussbonnet::VerdictStatus::Fail,
                "{:?}",
                check.verdict
            );
        }
    }
}

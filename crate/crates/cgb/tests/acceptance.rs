//! Acceptance gate: one test per criterion, each printing a single
//! pass/fail line via the harness. Tolerances are pinned; do not widen.

use cgb::forms::{pfaffian_form, AlternatingForm, PfaffianMethod, TwoFormMatrix};
use cgb::gaussbonnet::{
    correction_term, fit_structure_constants, gauss_form_residual, lemma31_residual, pf_scalar,
    sphere_volume, tpf_of, tpf_scalar, verify_isoperimetric, verify_theorem,
};
use cgb::hypersurface::{shape_at, HarmonicMode, HypersurfaceEmbedding};
use cgb::manifold::{
    frame_data_for_vectors, nullity_space, orthonormal_frame, ManifoldChart,
};
use cgb::quadrature::sphere_grid;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn h3xr(extra: usize) -> ManifoldChart {
    let mut factors = vec![ManifoldChart::hyperbolic_ball(3)];
    if extra > 0 {
        factors.push(ManifoldChart::euclidean(extra));
    }
    ManifoldChart::product(factors)
}

fn sphere(ambient: ManifoldChart, r: f64) -> HypersurfaceEmbedding {
    let center = vec![0.0; ambient.dim];
    HypersurfaceEmbedding::geodesic_sphere(ambient, center, r).unwrap()
}

/// Random point in the polar chart of S^k, away from the axis.
fn random_polar(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut p: Vec<f64> = (0..k - 1).map(|_| rng.gen_range(0.3..PI - 0.3)).collect();
    p.push(rng.gen_range(0.1..6.2));
    p
}

/// Random angles in the interior of the surface parameter domain.
fn random_angles(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut a: Vec<f64> = (0..m - 1).map(|_| rng.gen_range(0.3..PI - 0.3)).collect();
    a.push(rng.gen_range(0.1..6.2));
    a
}

fn random_so(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut q = raw.qr().q();
    if q.determinant() < 0.0 {
        for i in 0..n {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

fn random_two_form_matrix(k: usize, rng: &mut ChaCha8Rng) -> TwoFormMatrix {
    let mut upper = Vec::new();
    for _i in 0..k {
        for _j in (_i + 1)..k {
            let mut terms: Vec<(Vec<usize>, f64)> = Vec::new();
            for a in 0..k {
                for b in (a + 1)..k {
                    terms.push((vec![a, b], rng.gen_range(-1.0..1.0)));
                }
            }
            let slices: Vec<(&[usize], f64)> =
                terms.iter().map(|(idx, c)| (idx.as_slice(), *c)).collect();
            upper.push(AlternatingForm::from_terms(k, 2, &slices));
        }
    }
    TwoFormMatrix::from_upper(k, k, &upper).unwrap()
}

#[test]
fn c01_pfaffian_normalization_unit_spheres() {
    let mut r = rng(101);
    for k in [2usize, 4, 6] {
        let chart = ManifoldChart::sphere_polar(k);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let p = random_polar(k, &mut r);
            let frame = orthonormal_frame(&chart, &p).unwrap();
            let pf = pf_scalar(&frame).unwrap();
            worst = worst.max((pf - 1.0).abs());
        }
        assert!(worst < 1e-7, "S^{k}: max |Pf - 1| = {worst:.3e}");
    }
}

#[test]
fn c02_pfaffian_method_equivalence() {
    let mut r = rng(102);
    for k in [2usize, 4, 6] {
        for _ in 0..200 {
            let omega = random_two_form_matrix(k, &mut r);
            let naive = pfaffian_form(&omega, PfaffianMethod::Naive).unwrap();
            let matching = pfaffian_form(&omega, PfaffianMethod::Matching).unwrap();
            let subset = pfaffian_form(&omega, PfaffianMethod::SubsetDp).unwrap();
            let d1 = naive.max_diff(&matching);
            let d2 = naive.max_diff(&subset);
            assert!(d1 <= 1e-12 && d2 <= 1e-12, "k={k}: diffs {d1:.3e} {d2:.3e}");
        }
    }
    // k = 8: the permutation sum is out of reach; subset dp must stay fast
    let omega = random_two_form_matrix(8, &mut r);
    let t0 = std::time::Instant::now();
    let subset = pfaffian_form(&omega, PfaffianMethod::SubsetDp).unwrap();
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "subset dp at k=8 took {elapsed:?}");
    let matching = pfaffian_form(&omega, PfaffianMethod::Matching).unwrap();
    let scale = matching.norm_inf().max(1.0);
    assert!(subset.max_diff(&matching) <= 1e-10 * scale);
}

#[test]
fn c03_closed_gauss_bonnet_spheres() {
    for (k, order) in [(2usize, 12usize), (4, 6)] {
        let chart = ManifoldChart::sphere_polar(k);
        let coarse = sphere_grid(k, order).unwrap();
        let fine = sphere_grid(k, 2 * order).unwrap();
        let (val, _err) = cgb::quadrature::integrate(
            |p| pf_scalar(&orthonormal_frame(&chart, p)?),
            &coarse,
            &fine,
        )
        .unwrap();
        let chi = 2.0 / sphere_volume(k) * val;
        assert!((chi - 2.0).abs() <= 1e-3, "S^{k}: chi = {chi:.6}");
    }
}

#[test]
fn c04_boundary_gauss_bonnet_flat_balls() {
    for (k, o_coarse, o_fine) in [(2usize, 24usize, 48usize), (4, 6, 12), (6, 6, 8)] {
        let emb = sphere(ManifoldChart::euclidean(k), 1.0);
        let m = k - 1;
        let mut pointwise = 0.0f64;
        let mut integral = |order: usize| -> f64 {
            let grid = sphere_grid(m, order).unwrap();
            grid.integrate_param(|angles| {
                let sd = shape_at(&emb, angles)?;
                let restricted =
                    frame_data_for_vectors(&emb.ambient, &sd.ambient_point, &sd.principal_frame)?;
                let tpf = tpf_of(&sd, &restricted)?;
                pointwise = pointwise.max((tpf - sd.gauss_kronecker).abs());
                Ok(tpf * emb.area_element(angles)?)
            })
            .unwrap()
        };
        let coarse = integral(o_coarse);
        let fine = integral(o_fine);
        let target = sphere_volume(m);
        let norm = fine / target;
        assert!((norm - 1.0).abs() <= 1e-4, "k={k}: (1/|S|)∫TPf = {norm:.8}");
        assert!((coarse / target - 1.0).abs() <= 1e-2, "k={k} coarse sanity");
        assert!(pointwise <= 1e-9, "k={k}: max |TPf - GK| = {pointwise:.3e}");
    }
    // ellipsoid: total Gauss-Kronecker curvature is still the sphere volume
    let emb = HypersurfaceEmbedding::ellipsoid(
        ManifoldChart::euclidean(3),
        vec![0.0; 3],
        vec![1.5, 1.0, 0.75],
    )
    .unwrap();
    let grid = sphere_grid(2, 24).unwrap();
    let total = grid
        .integrate_param(|angles| {
            let sd = shape_at(&emb, angles)?;
            Ok(sd.gauss_kronecker * emb.area_element(angles)?)
        })
        .unwrap();
    assert!(
        (total - sphere_volume(2)).abs() <= 1e-3,
        "ellipsoid: ∫GK = {total:.8}"
    );
}

#[test]
fn c05_vanishing_wedge_products_low_conullity() {
    let mut r = rng(105);
    for extra in [1usize, 2, 3] {
        let chart = h3xr(extra);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let p = cgb::suites::random_point(&chart, &mut r).unwrap();
            let frame = orthonormal_frame(&chart, &p).unwrap();
            worst = worst.max(lemma31_residual(&frame));
        }
        assert!(worst <= 1e-9, "H3 x R^{extra}: residual {worst:.3e}");
    }
    // positive control: conullity 4 does not vanish
    let chart = ManifoldChart::hyperbolic_ball(4);
    let mut min_control = f64::INFINITY;
    for _ in 0..10 {
        let p = cgb::suites::random_point(&chart, &mut r).unwrap();
        let frame = orthonormal_frame(&chart, &p).unwrap();
        min_control = min_control.min(lemma31_residual(&frame));
    }
    assert!(min_control >= 0.9, "H^4 control residual {min_control:.3}");
}

#[test]
fn c06_nullity_index() {
    let mut r = rng(106);
    let cases: Vec<(ManifoldChart, usize)> = vec![
        (ManifoldChart::euclidean(3), 3),
        (ManifoldChart::euclidean(4), 4),
        (ManifoldChart::euclidean(5), 5),
        (h3xr(1), 1),
        (h3xr(2), 2),
        (h3xr(3), 3),
        (ManifoldChart::hyperbolic_ball(4), 0),
    ];
    for (chart, expect) in cases {
        let n = chart.dim;
        for _ in 0..20 {
            let p = cgb::suites::random_point(&chart, &mut r).unwrap();
            let res = nullity_space(&chart, &p, 1e-6).unwrap();
            assert_eq!(res.nullity_dim, expect, "dim {n} at {p:?}");
            let sv = &res.singular_values;
            if expect == n {
                assert!(sv[0] <= 1e-9, "flat chart with sv {sv:?}");
            } else if expect == 0 {
                let largest = sv[0];
                assert!(sv[n - 1] >= 1e-3 * largest, "no-nullity gap {sv:?}");
            } else {
                let kept = sv[n - expect - 1];
                let dropped = sv[n - expect];
                assert!(
                    kept / dropped.max(f64::MIN_POSITIVE) >= 1e3,
                    "gap {kept:.3e}/{dropped:.3e}"
                );
            }
        }
    }
}

#[test]
fn c07_gauss_equation_residual() {
    let charts: Vec<ManifoldChart> = vec![
        ManifoldChart::euclidean(3),
        ManifoldChart::euclidean(4),
        ManifoldChart::hyperbolic_ball(3),
        ManifoldChart::hyperbolic_ball(4),
        h3xr(1),
    ];
    let mut r = rng(107);
    for chart in charts {
        let m = chart.dim - 1;
        for radius in [0.5f64, 1.0] {
            let emb = sphere(chart.clone(), radius);
            for _ in 0..3 {
                let angles = random_angles(m, &mut r);
                let res = gauss_form_residual(&emb, &angles).unwrap();
                assert!(res <= 1e-4, "dim {}, r={radius}: residual {res:.3e}", m + 1);
            }
        }
    }
}

#[test]
fn c08_odd_dimensional_total_curvature() {
    // n = 5: intrinsic Pfaffian integral over spheres in H^3 x R^2
    let target = sphere_volume(4);
    for radius in [0.25f64, 0.5, 1.0] {
        let emb = sphere(h3xr(2), radius);
        let rep = verify_theorem(&emb, 5, 0.01).unwrap();
        let tol = (0.01 * target).max(3.0 * rep.integral_main_err);
        assert!(
            (rep.integral_main - target).abs() <= tol,
            "r={radius}: ∫Pf = {:.6} vs {target:.6} (err {:.2e})",
            rep.integral_main,
            rep.integral_main_err
        );
        assert!(
            rep.pointwise_min_gap >= -1e-8,
            "r={radius}: min(GK - Pf) = {:.3e}",
            rep.pointwise_min_gap
        );
        assert!(
            rep.total_curvature >= target - 3.0 * rep.total_curvature_err,
            "r={radius}: total curvature {:.6} < {target:.6}",
            rep.total_curvature
        );
    }
    // n = 3: closed-form total curvature of hyperbolic spheres
    for radius in [0.5f64, 1.0] {
        let emb = sphere(ManifoldChart::hyperbolic_ball(3), radius);
        let rep = verify_theorem(&emb, 12, 0.01).unwrap();
        let expect = radius.cosh().powi(2) * sphere_volume(2);
        assert!(
            (rep.total_curvature - expect).abs() <= 5e-3 * expect,
            "r={radius}: total curvature {:.6} vs cosh^2 {expect:.6}",
            rep.total_curvature
        );
        let t2 = sphere_volume(2);
        let tol = (0.01 * t2).max(3.0 * rep.integral_main_err);
        assert!((rep.integral_main - t2).abs() <= tol, "r={radius}: ∫Pf_Γ");
        assert!(rep.pointwise_min_gap >= -1e-8);
    }
}

#[test]
fn c09_even_dimensional_transgression() {
    let target = sphere_volume(3);
    let base = sphere(h3xr(1), 1.0);
    let perturbed =
        HypersurfaceEmbedding::perturbed_sphere(&base, 0.05, HarmonicMode::Quadratic, 8).unwrap();
    let mut surfaces: Vec<(String, HypersurfaceEmbedding)> = vec![
        ("r=0.25".into(), sphere(h3xr(1), 0.25)),
        ("r=0.5".into(), sphere(h3xr(1), 0.5)),
        ("r=1".into(), sphere(h3xr(1), 1.0)),
    ];
    surfaces.push(("perturbed".into(), perturbed));
    for (label, emb) in surfaces {
        let rep = verify_theorem(&emb, 6, 0.01).unwrap();
        let interior = rep.max_abs_pf_interior.unwrap();
        assert!(interior <= 1e-9, "{label}: max |Pf_C| = {interior:.3e}");
        let tol = (0.01 * target).max(3.0 * rep.integral_main_err);
        assert!(
            (rep.integral_main - target).abs() <= tol,
            "{label}: ∫TPf = {:.6} vs {target:.6} (err {:.2e})",
            rep.integral_main,
            rep.integral_main_err
        );
        assert!(
            rep.pointwise_min_gap >= -1e-8,
            "{label}: min(GK - TPf) = {:.3e}",
            rep.pointwise_min_gap
        );
        assert!(
            rep.total_curvature >= target - 3.0 * rep.total_curvature_err,
            "{label}: total curvature {:.6}",
            rep.total_curvature
        );
    }
}

#[test]
fn c10_two_dimensional_balance() {
    for radius in [0.5f64, 1.0] {
        let emb = sphere(ManifoldChart::hyperbolic_ball(2), radius);
        let rep = verify_theorem(&emb, 48, 0.01).unwrap();
        let interior = rep.interior_integral.unwrap();
        let balance = interior + rep.integral_main;
        assert!(
            (balance - 2.0 * PI).abs() <= 1e-6,
            "r={radius}: ∫K + ∫κ = {balance:.9}"
        );
        // closed forms: boundary term 2π cosh r, interior -2π(cosh r - 1)
        let boundary = 2.0 * PI * radius.cosh();
        assert!((rep.integral_main - boundary).abs() <= 1e-6);
        assert!((interior + 2.0 * PI * (radius.cosh() - 1.0)).abs() <= 1e-6);
    }
}

#[test]
fn c11_decomposition_constants() {
    let mut r = rng(111);
    // n = 3: hyperbolic ambient, intrinsic Pfaffian of a surface, c = 1 exactly
    let mut fit_family = |ambient: ManifoldChart, radii: &[f64], rng: &mut ChaCha8Rng| {
        let n = ambient.dim;
        let m = n - 1;
        let mut samples = Vec::new();
        for &radius in radii {
            let emb = sphere(ambient.clone(), radius);
            let induced = emb.induced_chart();
            for _ in 0..4 {
                let angles = random_angles(m, rng);
                let sd = shape_at(&emb, &angles).unwrap();
                let restricted =
                    frame_data_for_vectors(&emb.ambient, &sd.ambient_point, &sd.principal_frame)
                        .unwrap();
                let lhs = if n % 2 == 1 {
                    pf_scalar(&orthonormal_frame(&induced, &angles).unwrap()).unwrap()
                } else {
                    tpf_of(&sd, &restricted).unwrap()
                };
                let corr = correction_term(&sd, &restricted);
                samples.push((lhs, sd.gauss_kronecker, corr));
            }
        }
        fit_structure_constants(&samples).unwrap()
    };
    let radii = [0.6, 0.8, 1.0];
    let f3 = fit_family(ManifoldChart::hyperbolic_ball(3), &radii, &mut r);
    let c3 = f3.c.expect("n=3 fit defined");
    assert!((c3 - 1.0).abs() <= 1e-6, "c_3 = {c3:.9}");
    assert!(f3.spread <= 1e-3, "n=3 spread {:.3e}", f3.spread);

    let f4 = fit_family(h3xr(1), &radii, &mut r);
    let c4 = f4.c.expect("n=4 fit defined");
    assert!(c4 > 0.0 && f4.spread <= 1e-3, "c_4 = {c4:.6}, spread {:.3e}", f4.spread);

    let f5 = fit_family(h3xr(2), &radii, &mut r);
    let c5 = f5.c.expect("n=5 fit defined");
    assert!(c5 > 0.0 && f5.spread <= 1e-3, "c_5 = {c5:.6}, spread {:.3e}", f5.spread);
}

#[test]
fn c12_isoperimetric_ratios() {
    let eu = verify_isoperimetric(&sphere(ManifoldChart::euclidean(3), 1.3), 24, 24).unwrap();
    let rel = (eu.ratio - eu.euclidean_constant).abs() / eu.euclidean_constant;
    assert!(rel <= 1e-8, "euclidean equality defect {rel:.3e}");

    for ambient in [ManifoldChart::hyperbolic_ball(4), h3xr(1)] {
        let mut deficits = Vec::new();
        for radius in [1.0f64, 0.5, 0.25, 0.125] {
            let rep = verify_isoperimetric(&sphere(ambient.clone(), radius), 8, 20).unwrap();
            assert!(
                rep.ratio >= rep.euclidean_constant,
                "r={radius}: ratio {:.6} below flat constant {:.6}",
                rep.ratio,
                rep.euclidean_constant
            );
            deficits.push(rep.deficit);
        }
        for w in deficits.windows(2) {
            assert!(w[0] > w[1], "deficit not decreasing: {deficits:?}");
        }
        assert!(*deficits.last().unwrap() > 0.0);
    }
}

#[test]
fn c13_frame_independence() {
    let mut r = rng(113);
    // Pfaffian under SO(4) re-framings
    let chart = h3xr(1);
    let p = cgb::suites::random_point(&chart, &mut r).unwrap();
    let frame = orthonormal_frame(&chart, &p).unwrap();
    let base_pf = pf_scalar(&frame).unwrap();
    for _ in 0..20 {
        let q = random_so(4, &mut r);
        let pf = pf_scalar(&frame.rotated(&q).unwrap()).unwrap();
        assert!((pf - base_pf).abs() <= 1e-8, "Pf drift {:.3e}", pf - base_pf);
    }
    // transgression under SO(3) re-framings of the boundary frame
    let emb = sphere(h3xr(1), 0.8);
    let sd = shape_at(&emb, &[1.1, 0.7, 2.3]).unwrap();
    let restricted =
        frame_data_for_vectors(&emb.ambient, &sd.ambient_point, &sd.principal_frame).unwrap();
    let base_tpf = tpf_of(&sd, &restricted).unwrap();
    let m = sd.principal_curvatures.len();
    for _ in 0..20 {
        let q = random_so(m, &mut r);
        let rotated = restricted.rotated(&q).unwrap();
        // shape operator in the rotated frame: S' = q^T diag(kappa) q
        let mut alpha = Vec::with_capacity(m);
        for i in 0..m {
            let mut terms: Vec<(Vec<usize>, f64)> = Vec::new();
            for b in 0..m {
                let mut s = 0.0;
                for (a, &kappa) in sd.principal_curvatures.iter().enumerate() {
                    s += q[(a, b)] * kappa * q[(a, i)];
                }
                terms.push((vec![b], s));
            }
            let slices: Vec<(&[usize], f64)> =
                terms.iter().map(|(idx, c)| (idx.as_slice(), *c)).collect();
            alpha.push(AlternatingForm::from_terms(m, 1, &slices));
        }
        let tpf = tpf_scalar(&alpha, &rotated.omega).unwrap();
        assert!(
            (tpf - base_tpf).abs() <= 1e-8,
            "TPf drift {:.3e}",
            tpf - base_tpf
        );
    }
}

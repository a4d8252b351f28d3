use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;
use slantcheck::ambient::apply_j;
use slantcheck::chart::{evaluate_chart, ImmersionSpec};
use slantcheck::fixtures::{direct_product, polar_warp, slant_plane};
use slantcheck::linalg::{gram_schmidt, AmbientVector};
use slantcheck::slant::{auto_invariant_block, distribution_slant_angle, normal_decomposition, verify_quasi_bi_slant, wirtinger_angle, Block, DistributionAssignment};
use slantcheck::tolerances::Tolerances;
use slantcheck::warp::{analyze_warp, grad_ln_f, WarpSplit};
use slantcheck::Execution;

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn polar_point() -> impl Strategy<Value = Vec<f64>> {
    (-3.0f64..3.0, 0.5f64..2.0, 0.5f64..2.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(u, v, w, s, t)| vec![u, v, w, s, t])
}

fn spec_of(m: &slantcheck::Manifest) -> ImmersionSpec {
    m.resolve().unwrap().spec
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complex_structure_is_an_isometric_skew_involution(v in vector(8), w in vector(8)) {
        let (v, w) = (AmbientVector(v), AmbientVector(w));
        let jv = apply_j(&v);
        // exact on components; the dot products differ only by summation order
        for k in 0..4 {
            prop_assert_eq!(jv.0[2 * k], -v.0[2 * k + 1]);
            prop_assert_eq!(jv.0[2 * k + 1], v.0[2 * k]);
        }
        prop_assert_eq!(apply_j(&jv), v.scaled(-1.0));
        let scale = v.norm() * w.norm() + 1e-300;
        prop_assert!((jv.dot(&jv) - v.dot(&v)).abs() <= 1e-15 * scale.max(v.dot(&v)));
        prop_assert!((jv.dot(&w) + v.dot(&apply_j(&w))).abs() <= 1e-15 * scale);
    }

    #[test]
    fn gram_matrix_is_the_tangent_dot_products(p in polar_point()) {
        let spec = spec_of(&polar_warp(1.1));
        let chart = evaluate_chart(&spec, &p, 1e-9).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                prop_assert_eq!(chart.gram()[(i, j)], chart.tangent(i).dot(chart.tangent(j)));
            }
        }
    }

    #[test]
    fn gram_schmidt_gives_an_orthonormal_basis(vs in prop::collection::vec(vector(6), 1..6)) {
        let vs: Vec<AmbientVector> = vs.into_iter().map(AmbientVector).collect();
        let s = gram_schmidt(6, &vs, 1e-9).unwrap();
        prop_assert!(s.orthonormality_defect() < 1e-12);
        for v in &vs {
            let p = s.project(v).unwrap();
            let r = s.reject(v).unwrap();
            let pp = s.project(&p).unwrap();
            for k in 0..6 {
                prop_assert!((p.0[k] + r.0[k] - v.0[k]).abs() < 1e-12);
                prop_assert!((pp.0[k] - p.0[k]).abs() < 1e-12);
            }
            let (v2, p2, r2) = (v.dot(v), p.dot(&p), r.dot(&r));
            prop_assert!((v2 - p2 - r2).abs() <= 1e-10 * v2.max(1e-300));
            // v lies in the span it generated
            prop_assert!(r.norm() < 1e-9 * v.norm().max(1.0));
        }
    }

    #[test]
    fn slant_angle_ignores_probe_scale(theta in 0.05f64..FRAC_PI_2, p in vector(2), x in vector(2), scale in 0.01f64..100.0) {
        prop_assume!(x[0].abs() + x[1].abs() > 1e-3);
        let m = slant_plane(theta);
        let r = m.resolve().unwrap();
        let chart = evaluate_chart(&r.spec, &p, 1e-9).unwrap();
        let v = chart.frame_combination(&x);
        let a = distribution_slant_angle(&chart, &r.assignment, Block::D1, &v, 1e-9).unwrap();
        let b = distribution_slant_angle(&chart, &r.assignment, Block::D1, &v.scaled(scale), 1e-9).unwrap();
        prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
        prop_assert!((a - theta).abs() < 1e-9);
        let w = wirtinger_angle(&chart, &v).unwrap();
        prop_assert!((w - wirtinger_angle(&chart, &v.scaled(-scale)).unwrap()).abs() < 1e-12);
    }

    /// T ∩ J(T) is J-stable, so its real dimension is even.
    #[test]
    fn invariant_part_has_even_dimension(coeffs in prop::collection::vec(prop::collection::vec(-2i32..3, 3), 6), p in vector(3)) {
        let params = ["a", "b", "c"];
        let comps: Vec<String> = coeffs.iter().map(|row| format!("{}*a + {}*b + {}*c", row[0], row[1], row[2])).collect();
        let comp_refs: Vec<&str> = comps.iter().map(String::as_str).collect();
        let spec = ImmersionSpec::parse(&params, &comp_refs, 3).unwrap();
        prop_assume!(evaluate_chart(&spec, &p, 1e-9).is_ok());
        let chart = evaluate_chart(&spec, &p, 1e-9).unwrap();
        let inv = auto_invariant_block(&chart, 1e-8).unwrap();
        prop_assert_eq!(inv.dim() % 2, 0);
        for b in inv.basis() {
            prop_assert!(inv.reject(&apply_j(b)).unwrap().norm() < 1e-7);
        }
    }

    #[test]
    fn sigma_is_symmetric_bilinear_and_normal(p in polar_point(), x in vector(5), y in vector(5), z in vector(5), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let spec = spec_of(&polar_warp(1.0));
        let chart = evaluate_chart(&spec, &p, 1e-9).unwrap();
        let sxy = chart.sigma(&x, &y);
        let syx = chart.sigma(&y, &x);
        let comb: Vec<f64> = x.iter().zip(&y).map(|(s, t)| a * s + b * t).collect();
        let lhs = chart.sigma(&comb, &z);
        let (sxz, syz) = (chart.sigma(&x, &z), chart.sigma(&y, &z));
        for k in 0..sxy.dim() {
            prop_assert!((sxy.0[k] - syx.0[k]).abs() < 1e-12);
            prop_assert!((lhs.0[k] - a * sxz.0[k] - b * syz.0[k]).abs() < 1e-10);
        }
        prop_assert!(chart.tangent_space().project(&sxy).unwrap().norm() < 1e-10);
    }

    #[test]
    fn normal_bundle_splits_into_omega_images_and_mu(t1 in 0.1f64..1.5, t2 in 0.1f64..FRAC_PI_2, p in vector(6)) {
        let m = direct_product(t1, t2);
        let r = m.resolve().unwrap();
        let chart = evaluate_chart(&r.spec, &p, 1e-9).unwrap();
        let nd = normal_decomposition(&chart, &r.assignment, 1e-9).unwrap();
        prop_assert_eq!(nd.omega_d1.dim() + nd.omega_d2.dim() + nd.mu.dim(), chart.normal_space().dim());
        prop_assert!(nd.mu_invariance_residual < 1e-9);
        prop_assert!(nd.omega_overlap < 1e-9);
    }

    #[test]
    fn warped_normal_bundle_splits(theta in 0.1f64..1.5, p in polar_point()) {
        let r = polar_warp(theta).resolve().unwrap();
        let chart = evaluate_chart(&r.spec, &p, 1e-9).unwrap();
        let nd = normal_decomposition(&chart, &r.assignment, 1e-9).unwrap();
        prop_assert_eq!(nd.omega_d1.dim() + nd.omega_d2.dim() + nd.mu.dim(), chart.normal_space().dim());
        prop_assert!(nd.mu_invariance_residual < 1e-9);
    }

    /// Scaling the components that move with the fiber rescales f by a
    /// constant, which the gauge f(b0) = 1 absorbs.
    #[test]
    fn warping_gradient_ignores_fiber_scaling(p in polar_point(), c in 0.2f64..5.0) {
        let r = polar_warp(0.8).resolve().unwrap();
        let split = r.split.clone().unwrap();
        let fiber_names: Vec<String> = split.fiber.iter().map(|&i| r.spec.params()[i].clone()).collect();
        let scaled: Vec<String> = r
            .spec
            .components()
            .iter()
            .map(|a| if a.free_variables().iter().any(|v| fiber_names.contains(v)) { format!("{c:?}*({a})") } else { a.to_string() })
            .collect();
        let refs: Vec<&str> = scaled.iter().map(String::as_str).collect();
        let params: Vec<&str> = r.spec.params().iter().map(String::as_str).collect();
        let spec2 = ImmersionSpec::parse(&params, &refs, 5).unwrap();
        let tol = Tolerances::default();
        for &i in &split.base {
            let a = grad_ln_f(&r.spec, &split, &p, i, &tol).unwrap();
            let b = grad_ln_f(&spec2, &split, &p, i, &tol).unwrap();
            prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
        }
    }

    /// Reordering the parameters permutes d ln f accordingly.
    #[test]
    fn warping_gradient_follows_relabelling(p in polar_point()) {
        let r = polar_warp(0.8).resolve().unwrap();
        let split = r.split.clone().unwrap();
        let m = p.len();
        let rev = |i: usize| m - 1 - i;
        let params: Vec<String> = r.spec.params().iter().rev().cloned().collect();
        let spec2 = ImmersionSpec::new(params, r.spec.components().to_vec(), 5).unwrap();
        let split2 = WarpSplit::new(split.base.iter().map(|&i| rev(i)).collect(), split.fiber.iter().map(|&i| rev(i)).collect());
        let p2: Vec<f64> = p.iter().rev().copied().collect();
        let tol = Tolerances::default();
        for &i in &split.base {
            let a = grad_ln_f(&r.spec, &split, &p, i, &tol).unwrap();
            let b = grad_ln_f(&spec2, &split2, &p2, rev(i), &tol).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn warp_analysis_follows_relabelling() {
    let m = polar_warp(0.8);
    let r = m.resolve().unwrap();
    let w = m.warp.as_ref().unwrap();
    let tol = Tolerances::default();
    let a = analyze_warp(&r.spec, &r.assignment, r.split.as_ref().unwrap(), &w.base_points, &w.fiber_points, &tol, Execution::Sequential).unwrap();

    // reverse the parameter order; block contents stay the same
    let n = r.spec.param_count();
    let rev = |v: &[usize]| -> Vec<usize> { v.iter().map(|&i| n - 1 - i).collect() };
    let params: Vec<String> = r.spec.params().iter().rev().cloned().collect();
    let spec2 = ImmersionSpec::new(params, r.spec.components().to_vec(), 5).unwrap();
    let split = r.split.as_ref().unwrap();
    let split2 = WarpSplit::new(rev(&split.base), rev(&split.fiber));
    let asg = &r.assignment;
    let asg2 = DistributionAssignment::new(rev(&asg.invariant), rev(&asg.slant1), rev(&asg.slant2));
    let b = analyze_warp(&spec2, &asg2, &split2, &w.base_points, &w.fiber_points, &tol, Execution::Sequential).unwrap();

    assert_eq!(a.verdict, b.verdict);
    assert_eq!(a.is_warped, b.is_warped);
    assert_eq!(a.samples.len(), b.samples.len());
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert!((x.f - y.f).abs() < 1e-12, "{} vs {}", x.f, y.f);
    }
}

#[test]
fn quasi_bi_slant_verification_is_seeded() {
    let r = polar_warp(0.8).resolve().unwrap();
    let tol = Tolerances::default();
    let run = |seed| serde_json::to_string(&verify_quasi_bi_slant(&r.spec, &r.assignment, &r.points, &tol, seed, Execution::Parallel).unwrap()).unwrap();
    assert_eq!(run(5), run(5));
    assert_ne!(run(5), run(6));
}

#[test]
fn polar_warping_function_is_the_radius() {
    // d_v ln sqrt(v^2 + w^2) = v / (v^2 + w^2)
    let r = polar_warp(0.8).resolve().unwrap();
    let split = r.split.unwrap();
    let p = [0.4, 3.0, 4.0, 0.1, -0.2];
    let g = grad_ln_f(&r.spec, &split, &p, 1, &Tolerances::default()).unwrap();
    assert!((g - 3.0 / 25.0).abs() < 1e-9, "{g}");
}

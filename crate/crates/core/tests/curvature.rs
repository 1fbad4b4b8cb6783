use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use translab::curvature::{elementary_symmetric, registry_examples, CurvatureFunction, DegeneracyKind, Family};
use translab::{Curvature, Error};

fn key(k: &str) -> Curvature {
    Curvature::from_key(k).unwrap()
}

#[test]
fn raw_values_of_simple_families() {
    assert_relative_eq!(key("mean:n=3").evaluate_raw(1.0, 1.0), 3.0, epsilon = 1e-14);
    assert_relative_eq!(key("gauss:n=4").evaluate(1.0, 1.0), 1.0, epsilon = 1e-14);
    assert_relative_eq!(key("hq:k=2,l=0,n=3").evaluate(0.0, 1.0), 1.0, epsilon = 1e-14);
}

#[test]
fn normalized_instances_are_one_at_the_cylinder_point() {
    for k in registry_examples() {
        let f = key(k);
        if f.classify_degeneracy().unwrap().kind == DegeneracyKind::OneNondegenerate {
            assert!((f.evaluate(0.0, 1.0) - 1.0).abs() <= 1e-12, "{k}");
        }
    }
}

#[test]
fn degeneracy_classes() {
    assert_eq!(key("mean:n=5").classify_degeneracy().unwrap().kind, DegeneracyKind::OneNondegenerate);
    assert_eq!(key("gauss:n=4").classify_degeneracy().unwrap().kind, DegeneracyKind::OneDegenerate);
    let kn = key("knorm:k=2,n=3").classify_degeneracy().unwrap();
    assert_eq!(kn.kind, DegeneracyKind::OneNondegenerate);
    // (0^2 + 1^2 + 1^2)^(1/2)
    assert_relative_eq!(kn.value_at_01, 2f64.sqrt(), epsilon = 1e-14);
}

#[test]
fn parameter_validation() {
    assert!(matches!(Curvature::from_key("hq:k=2,l=2,n=4"), Err(Error::Parameter(_))));
    assert!(matches!(Curvature::from_key("hq:k=5,l=0,n=4"), Err(Error::Parameter(_))));
    assert!(matches!(Curvature::from_key("mean:n=1"), Err(Error::Parameter(_))));
    assert!(matches!(Curvature::from_key("foo:n=3"), Err(Error::Parameter(_))));
    assert!(matches!(Curvature::from_key("sk:k=3"), Err(Error::Parameter(_))));
}

#[test]
fn keys_round_trip() {
    for k in registry_examples() {
        assert_eq!(key(k).key(), k);
    }
    assert_eq!(key("hq:k=3,l=2,n=7").key(), "qk:k=3,n=7");
}

#[test]
fn homogeneity_reports() {
    let r = key("mean:n=4").check_homogeneity(100, 7);
    assert!(r.max_defect <= 1e-12 && r.checked > 0);
    let r = key("hq:k=2,l=0,n=4").check_homogeneity(100, 7);
    assert!(r.max_defect <= 1e-10 && r.checked > 0);
    let g = key("gauss:n=4");
    assert_relative_eq!(g.evaluate(2.0, 2.0), 2.0 * g.evaluate(1.0, 1.0), epsilon = 1e-14);
    for k in ["sk:k=3,n=5", "qk:k=3,n=7"] {
        let r = key(k).check_homogeneity(200, 11);
        assert!(r.max_defect <= 1e-10, "{k}: {}", r.max_defect);
    }
}

#[test]
fn homogeneity_is_deterministic() {
    let f = key("kconv:k=2,n=4");
    assert_eq!(f.check_homogeneity(50, 3), f.check_homogeneity(50, 3));
}

#[test]
fn zero_rays() {
    let (x, y) = key("qk:k=3,n=7").zero_ray().unwrap();
    assert_relative_eq!(x / y, -4.0 / 3.0, epsilon = 1e-14);
    assert_relative_eq!(x.hypot(y), 1.0, epsilon = 1e-14);
    let (x, y) = key("sk:k=3,n=5").zero_ray().unwrap();
    assert_relative_eq!(x / y, -2.0 / 3.0, epsilon = 1e-14);
    assert!(matches!(key("mean:n=3").zero_ray(), Err(Error::Unsupported(_))));
    for k in ["qk:k=3,n=7", "sk:k=3,n=5", "qk:k=4,n=6"] {
        let f = key(k);
        let (x, y) = f.zero_ray().unwrap();
        assert!(f.evaluate(x, y).abs() < 1e-14);
        assert!(f.grad(x, y).0 > 0.0);
    }
}

#[test]
fn signed_segment_bisection_recovers_zero_ray() {
    for k in ["qk:k=3,n=7", "sk:k=3,n=5", "qk:k=5,n=6"] {
        let f = key(k);
        let (x0, y0) = f.zero_ray().unwrap();
        let t0 = x0 / y0;
        let p = |s: f64| ((1.0 - s) + s * 1.5 * t0, 1.0);
        let (mut lo, mut hi) = (0.0, 1.0);
        assert!(f.evaluate(p(lo).0, 1.0) > 0.0 && f.evaluate(p(hi).0, 1.0) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f.evaluate(p(mid).0, p(mid).1) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((p(lo).0 - t0).abs() <= 1e-10, "{k}");
    }
}

#[test]
fn slice_matches_elementary_symmetric_polynomials() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (k, n) in [(1u32, 3u32), (2, 4), (3, 5), (4, 6), (5, 5)] {
        let f = Curvature::build(Family::Sk { k }, n).unwrap();
        for _ in 0..50 {
            let x: f64 = rng.gen_range(-2.0..3.0);
            let y: f64 = rng.gen_range(0.1..2.0);
            let mut lambda = vec![y; n as usize];
            lambda[0] = x;
            let direct = elementary_symmetric(k as usize, &lambda);
            assert!((f.evaluate_raw(x, y) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }
    for (k, l, n) in [(2u32, 0u32, 3u32), (2, 1, 4), (3, 1, 5), (3, 2, 7)] {
        let f = Curvature::build(Family::HessianQuotient { k, l }, n).unwrap();
        for _ in 0..50 {
            let x: f64 = rng.gen_range(0.0..3.0);
            let y: f64 = rng.gen_range(0.1..2.0);
            let mut lambda = vec![y; n as usize];
            lambda[0] = x;
            let q = elementary_symmetric(k as usize, &lambda) / elementary_symmetric(l as usize, &lambda);
            let direct = q.powf(1.0 / (k - l) as f64);
            assert!((f.evaluate_raw(x, y) - direct).abs() <= 1e-12 * direct.max(1.0));
        }
    }
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in registry_examples() {
        let f = key(k);
        let mut count = 0;
        while count < 100 {
            let x: f64 = rng.gen_range(-2.0..3.0);
            let y: f64 = rng.gen_range(0.1..2.0);
            if !f.cone_contains(x, y) || !f.t_components()[0].0.lt(&(x / y - 1e-3)) {
                continue;
            }
            let (ax, ay) = f.grad(x, y);
            let (fx, fy) = f.grad_fd(x, y);
            let scale = ax.abs().max(ay.abs()).max(1e-3);
            assert!((ax - fx).abs() <= 1e-6 * scale, "{k} at ({x},{y})");
            assert!((ay - fy).abs() <= 1e-6 * scale, "{k} at ({x},{y})");
            count += 1;
        }
    }
}

#[test]
fn second_partials_match_finite_differences() {
    let h = 1e-5;
    for k in registry_examples() {
        let f = key(k);
        let (x, y) = (0.7, 1.3);
        let [_, _, _, fxx, fxy, fyy] = f.jet(x, y);
        let gx = |x: f64, y: f64| f.grad(x, y);
        let nxx = (gx(x + h, y).0 - gx(x - h, y).0) / (2.0 * h);
        let nxy = (gx(x, y + h).0 - gx(x, y - h).0) / (2.0 * h);
        let nyy = (gx(x, y + h).1 - gx(x, y - h).1) / (2.0 * h);
        for (a, b) in [(fxx, nxx), (fxy, nxy), (fyy, nyy)] {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{k}: {a} vs {b}");
        }
    }
}

#[test]
fn monotone_in_both_variables_on_the_cone() {
    for k in registry_examples() {
        let r = key(k).check_monotonicity(300, 1);
        assert!(r.checked > 0 && r.min_dx > 0.0 && r.min_dy > 0.0, "{k}: {r:?}");
    }
}

#[test]
fn single_precision_instance() {
    let f = CurvatureFunction::<f32>::from_key("mean:n=3").unwrap();
    assert!((f.evaluate(1.0, 1.0) - 1.5).abs() < 1e-6);
}

proptest! {
    #[test]
    fn hessian_quotients_are_homogeneous(n in 3u32..9, k in 1u32..9, l in 0u32..8,
                                         x in 0.01f64..5.0, y in 0.01f64..5.0, c in 0.1f64..10.0) {
        prop_assume!(l < k && k <= n);
        let f = Curvature::build(Family::HessianQuotient { k, l }, n).unwrap();
        let base = f.evaluate(x, y);
        let scaled = f.evaluate(c * x, c * y);
        prop_assert!((scaled - c * base).abs() <= 1e-10 * base.abs().max(1.0) * c.max(1.0));
    }

    #[test]
    fn signed_power_sign_rule(x in -1.0f64..3.0, y in 0.1f64..3.0, c in -5.0f64..-0.1) {
        let f = Curvature::from_key("sk:k=3,n=5").unwrap();
        let base = f.evaluate(x, y);
        let scaled = f.evaluate(c * x, c * y);
        prop_assert!((scaled - c.powi(3) * base).abs() <= 1e-10 * (c.powi(3) * base).abs().max(1.0));
    }
}

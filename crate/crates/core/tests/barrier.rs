use proptest::prelude::*;
use translab::barrier::{
    admissible_arguments, compare_orderings, decreasing_limit, evaluate_barrier, invert_slope_map, log_grid,
    power_exponent, random_ordered_pairs, verify_inequality, BarrierSpec, Role, Verdict,
};
use translab::graph::{solve_graph, GraphOptions, SlopeEquation};
use translab::{Branch, Curvature, Error, Integrator};

fn key(k: &str) -> Curvature {
    Curvature::from_key(k).unwrap()
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Closed-form `g_minus(y, -1)` for the quotient `S_k / S_(k-1)`.
fn quotient_g_minus(n: u32, k: u32, y: f64) -> f64 {
    let (a, b, c) = (binom(n - 1, k), binom(n - 1, k - 1), binom(n - 1, k - 2));
    a * y * (-1.0 - y) / (b * y + a * c / b)
}

#[test]
fn cone_with_zero_beta_is_a_line() {
    let spec = BarrierSpec::implicit_cone(-0.7, (0.1, 50.0)).unwrap();
    for r in [0.1, 1.0, 3.3, 50.0] {
        assert_eq!(evaluate_barrier(&spec, r, 0.0).unwrap(), (-0.7 * r, -0.7));
    }
}

#[test]
fn cone_round_trip() {
    let spec = BarrierSpec::implicit_cone(-0.5, (0.5, 4.0)).unwrap();
    let (w, dw): (f64, f64) = evaluate_barrier(&spec, 2.0, 0.25).unwrap();
    assert!(w < 0.0);
    assert!((w / (2.0 * (1.0 + w * w).powf(0.25)) + 0.5).abs() <= 1e-12);
    let h = 1e-5;
    let fd = (evaluate_barrier(&spec, 2.0 + h, 0.25).unwrap().0 - evaluate_barrier(&spec, 2.0 - h, 0.25).unwrap().0)
        / (2.0 * h);
    assert!((dw - fd).abs() <= 1e-8);
}

#[test]
fn power_barrier_values() {
    let spec = BarrierSpec::power(1.0, -2.0, (1.0, 100.0)).unwrap();
    let (w, dw): (f64, f64) = evaluate_barrier(&spec, 10.0, 0.3).unwrap();
    assert!((w + 0.01).abs() <= 1e-17 && (dw - 0.002).abs() <= 1e-17);
}

#[test]
fn barrier_parameter_and_range_errors() {
    let spec = BarrierSpec::power(1.0, -2.0, (1.0, 100.0)).unwrap();
    assert!(matches!(evaluate_barrier(&spec, 0.5, 0.0), Err(Error::Range(_))));
    assert!(matches!(BarrierSpec::power(-1.0, -2.0, (1.0, 2.0)), Err(Error::Parameter(_))));
    assert!(matches!(BarrierSpec::power(1.0, 0.5, (1.0, 2.0)), Err(Error::Parameter(_))));
    assert!(matches!(BarrierSpec::implicit_cone(0.1, (1.0, 2.0)), Err(Error::Parameter(_))));
    assert!(matches!(BarrierSpec::implicit_cone(-0.1, (2.0, 1.0)), Err(Error::Parameter(_))));
    assert!(matches!(invert_slope_map(0.3, 0.5), Err(Error::Parameter(_))));
    let cone = BarrierSpec::implicit_cone(-0.5, (1.0, 10.0)).unwrap();
    assert!(matches!(verify_inequality(&cone, &key("mean:n=3"), &[1.0]), Err(Error::Unsupported(_))));
}

#[test]
fn power_exponent_of_quotients() {
    for (n, k) in [(7u32, 3u32), (6, 3), (6, 4), (6, 5)] {
        let b = power_exponent(&key(&format!("qk:k={k},n={n}"))).unwrap();
        let expect = -((n - k + 1) as f64) / (k - 1) as f64;
        assert!((b - expect).abs() <= 1e-8, "({n},{k}): {b}");
    }
    assert!(matches!(power_exponent(&key("sk:k=3,n=5")), Err(Error::Unsupported(_))));
}

#[test]
fn power_barrier_margins_match_closed_form() {
    let f = key("qk:k=3,n=7");
    let b = power_exponent(&f).unwrap();
    let grid = log_grid(1.0, 1e3, 400);
    let spec = BarrierSpec::power(1.0, b, (1.0, 1e3)).unwrap();
    let rep = verify_inequality(&spec, &f, &grid).unwrap();
    assert_eq!(rep.samples.len(), 400);
    assert_eq!(rep.skipped, 0);
    for (r, m) in rep.margins() {
        let w = -r.powf(-2.5);
        let (dw, rhs) = (2.5 * r.powf(-3.5), (1.0 + w * w) * quotient_g_minus(7, 3, w / r));
        // The margin is a cancelling difference; compare on the scale of its terms.
        assert!((m - (dw - rhs)).abs() <= 1e-12 * (dw.abs() + rhs.abs()), "r = {r}: {m} vs {}", dw - rhs);
    }
    // Expanding the margin for small slopes gives a b r^(b-1) w^2 - c t^2 with
    // c > 0, so the tail is negative and the power law acts as a subsolution.
    assert_eq!(rep.observed, Some(Role::Sub));
    assert!(matches!(rep.verdict, Verdict::Violated { r_at } if r_at == 1e3));
    assert!(rep.observed_r_star > 1.0 && rep.observed_r_star < 2.0);
}

#[test]
fn cone_at_mbar0_is_a_subsolution() {
    let f = key("qk:k=3,n=7");
    let branch = Branch::minus(&f).unwrap();
    let m0 = branch.mbar0().unwrap();
    assert!((branch.g_minus(m0).unwrap() + m0).abs() <= 1e-12);
    let grid = log_grid(1e-3, 1e3, 400);
    let spec = BarrierSpec::implicit_cone(m0, (1e-3, 1e3)).unwrap();
    let rep = verify_inequality(&spec, &f, &grid).unwrap();
    assert_eq!(rep.skipped, 0);
    assert!(rep.max_margin < 0.0);
    assert!(matches!(rep.verdict, Verdict::VerifiedSub { r_star } if r_star == 1e-3));
    for (r, m) in rep.margins() {
        let oracle = m0 - (1.0 + m0 * m0 * r * r) * -m0;
        assert!((m - oracle).abs() <= 1e-10 * oracle.abs());
    }
    let adm = rep.admissibility.unwrap();
    assert_eq!(adm.above_mbar0, Some(true));
}

#[test]
fn cone_below_mbar0_is_not_verified() {
    let f = key("qk:k=3,n=7");
    let m0 = Branch::minus(&f).unwrap().mbar0().unwrap();
    let spec = BarrierSpec::implicit_cone(1.2 * m0, (1e-2, 1e2)).unwrap();
    let rep = verify_inequality(&spec, &f, &log_grid(1e-2, 1e2, 50)).unwrap();
    assert_eq!(rep.skipped, 50);
    assert_eq!(rep.verdict, Verdict::Unverified);
    assert_eq!(rep.admissibility.unwrap().above_mbar0, Some(false));
}

#[test]
fn quotient_without_mbar0() {
    let f = key("qk:k=4,n=6");
    assert_eq!(Branch::minus(&f).unwrap().mbar0(), None);
    let spec = BarrierSpec::implicit_cone(-0.5, (1.0, 2.0)).unwrap();
    assert_eq!(spec.cone_admissibility(&f).unwrap().above_mbar0, None);
    let b = power_exponent(&f).unwrap();
    let spec = BarrierSpec::power(1.0, b, (1.0, 1e3)).unwrap();
    let rep = verify_inequality(&spec, &f, &log_grid(1.0, 1e3, 400)).unwrap();
    assert_eq!(rep.observed, Some(Role::Sub));
    let rep2 = verify_inequality(&spec, &f, &log_grid(1.0, 1e3, 400)).unwrap();
    assert_eq!(rep, rep2);
}

#[test]
fn pole_limits_the_decreasing_interval() {
    let b = Branch::minus(&key("qk:k=3,n=7")).unwrap();
    let lim = decreasing_limit(&b).unwrap();
    assert!((lim + 8.0 / 15.0).abs() <= 1e-3, "{lim}");
    let eq = SlopeEquation::minus(&key("qk:k=3,n=7")).unwrap();
    assert_eq!(admissible_arguments(&eq).unwrap(), (lim, 0.0));
    let eq = SlopeEquation::plus(&key("mean:n=3"));
    let (lo, hi) = admissible_arguments(&eq).unwrap();
    assert!((lo - 2.0 / 3.0).abs() <= 1e-12 && (hi - 1.0).abs() <= 1e-12);
}

#[test]
fn random_pairs_are_ordered_and_reproducible() {
    let eq = SlopeEquation::plus(&key("hq:k=2,l=0,n=4"));
    let a = random_ordered_pairs(&eq, 1.0, 20, 11).unwrap();
    assert_eq!(a, random_ordered_pairs(&eq, 1.0, 20, 11).unwrap());
    assert_ne!(a, random_ordered_pairs(&eq, 1.0, 20, 12).unwrap());
    let (lo, hi) = admissible_arguments(&eq).unwrap();
    for (v1, v2) in a {
        assert!(v1 <= v2);
        for v in [v1, v2] {
            let y = v / (1.0 + v * v).powf(eq.beta());
            assert!(y >= lo - 1e-12 && y <= hi + 1e-12);
        }
    }
}

#[test]
fn bowl_slopes_stay_ordered() {
    let eq = SlopeEquation::plus(&key("mean:n=3"));
    let cfg = Integrator::default();
    let rep =
        compare_orderings(&eq, &[(0.1, 0.2), (0.1, 0.1)], 1.0, 100.0, &cfg, &GraphOptions::default(), 400).unwrap();
    assert!(rep.passed(), "{rep:?}");
    assert_eq!(rep.pairs[1].min_gap, 0.0);
    assert!(rep.pairs[0].reached == 100.0);
    let pairs = random_ordered_pairs(&eq, 1.0, 8, 3).unwrap();
    let rep = compare_orderings(&eq, &pairs, 1.0, 100.0, &cfg, &GraphOptions::default(), 400).unwrap();
    assert!(rep.passed() && rep.min_gap >= -1e-9, "{}", rep.min_gap);
    assert!(matches!(
        compare_orderings(&eq, &[(0.2, 0.1)], 1.0, 100.0, &cfg, &GraphOptions::default(), 400),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn minus_branch_slopes_stay_ordered() {
    let eq = SlopeEquation::minus(&key("qk:k=3,n=7")).unwrap();
    let pairs = random_ordered_pairs(&eq, 1.0, 8, 5).unwrap();
    let rep =
        compare_orderings(&eq, &pairs, 1.0, 100.0, &Integrator::default(), &GraphOptions::default(), 200).unwrap();
    assert!(rep.passed(), "{rep:?}");
}

#[test]
fn solution_lies_above_its_power_barrier() {
    let f = key("qk:k=3,n=7");
    let eq = SlopeEquation::minus(&f).unwrap();
    let b = power_exponent(&f).unwrap();
    let mut limits = Vec::new();
    for (r0, v0) in [(1.0, -0.4), (10.0, -4e-3)] {
        let a = -v0 * f64::powf(r0, -b);
        let sol = solve_graph(&eq, r0, v0, 0.0, 100.0 * r0, &Integrator::default(), &GraphOptions::default(), vec![])
            .unwrap();
        let grid = log_grid(r0, 100.0 * r0, 200);
        let mut ratio = Vec::new();
        for r in grid {
            let v = sol.eval(r).unwrap().0;
            let w = -a * r.powf(b);
            assert!(v >= w * (1.0 + 1e-9), "r = {r}: {v} < {w}");
            ratio.push(v / w - 1.0);
        }
        // The ratio settles to a constant over the last decade.
        let tail = ratio[100..].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        assert!(tail.1 - tail.0 <= 1e-3, "{tail:?}");
        limits.push(ratio.last().unwrap().abs());
    }
    // The limiting offset shrinks as the start moves out, with t(r0) = a r0^(b-1).
    assert!(limits[1] < 1e-2 * limits[0], "{limits:?}");
}

proptest! {
    #[test]
    fn slope_map_round_trip(target in -50.0f64..50.0, beta in -0.9f64..0.49) {
        let x = invert_slope_map(target, beta).unwrap();
        prop_assert!(x * target >= 0.0);
        let back = x / (1.0 + x * x).powf(beta);
        prop_assert!((back - target).abs() <= 1e-12 * target.abs().max(1.0));
    }

    #[test]
    fn cone_round_trip_everywhere(mbar in -3.0f64..-0.01, beta in -0.9f64..0.49, r in 0.01f64..100.0) {
        let spec = BarrierSpec::implicit_cone(mbar, (0.01, 100.0)).unwrap();
        let (w, _) = evaluate_barrier(&spec, r, beta).unwrap();
        prop_assert!(w <= 0.0);
        prop_assert!((w / (r * (1.0 + w * w).powf(beta)) - mbar).abs() <= 1e-12 * mbar.abs().max(1.0));
    }
}

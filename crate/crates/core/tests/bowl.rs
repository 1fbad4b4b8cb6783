use translab::bowl::{
    coeffs_degenerate, coeffs_nondegenerate, fit_tail, growth_exponent, solve_bowl, BowlEnd, Coefficients, Regime,
};
use translab::{Curvature, Error, Integrator};

fn key(k: &str) -> Curvature {
    Curvature::from_key(k).unwrap()
}

#[test]
fn mean_curvature_coefficients() {
    for n in 3..=8u32 {
        let (a, b) = coeffs_nondegenerate(&key(&format!("mean:n={n}"))).unwrap();
        let nm1 = (n - 1) as f64;
        assert!((a - 1.0 / nm1).abs() <= 1e-12, "n={n}: a={a}");
        assert!((b - (n as f64 - 4.0) / (nm1 * nm1)).abs() <= 1e-10, "n={n}: b={b}");
    }
    let (a, b) = coeffs_nondegenerate(&key("mean:n=4")).unwrap();
    assert!((a - 1.0 / 3.0).abs() <= 1e-12 && b.abs() <= 1e-10);
    assert!(matches!(coeffs_nondegenerate(&key("gauss:n=4")), Err(Error::Parameter(_))));
}

#[test]
fn gauss_root_coefficients() {
    let c = coeffs_degenerate(&key("gauss:n=4")).unwrap();
    assert!((c.k - 3.0).abs() <= 1e-6 && (c.c - 1.0).abs() <= 1e-6);
    assert!((c.d - 2.0).abs() <= 1e-5);
    assert!((c.amplitude - 0.5f64.sqrt()).abs() <= 1e-5);
    assert!(!c.boundary_case);
    let c = coeffs_degenerate(&key("gauss:n=5")).unwrap();
    assert!((c.d - 5.0 / 3.0).abs() <= 1e-5);
    assert!((c.amplitude - (5.0f64 / 3.0).powf(-1.0 / 3.0)).abs() <= 1e-5);
    assert!(matches!(coeffs_degenerate(&key("mean:n=3")), Err(Error::Parameter(_))));
}

#[test]
fn axis_start_and_monotone_profile() {
    let f = key("mean:n=3");
    let p = solve_bowl(&f, 50.0, &Integrator::default()).unwrap();
    assert!((p.lambda0 - 2.0 / 3.0).abs() <= 1e-14);
    let s1 = p.samples[1];
    assert!((s1.v / s1.r - p.lambda0).abs() <= 1e-6);
    assert_eq!(p.samples[0].v, 0.0);
    assert_eq!(p.samples[0].u, 0.0);
    assert!(p.samples.windows(2).all(|w| w[1].v > w[0].v && w[1].r > w[0].r));
    assert!(p.max_residual <= 1e-8, "{}", p.max_residual);
    assert_eq!(p.end, BowlEnd::Entire);
    assert!(p.argument_range.0 >= 1.0 / 1.5 * (1.0 - 1e-6) && p.argument_range.1 < 1.0);
    for r in [1.0, 10.0, 40.0] {
        let (_, dv, _) = p.eval(r).unwrap();
        assert!(dv > 0.0);
    }
}

#[test]
fn mean_curvature_tail_fits() {
    for n in [3u32, 4, 6] {
        let f = key(&format!("mean:n={n}"));
        let p = solve_bowl(&f, 500.0, &Integrator::default()).unwrap();
        let rep = fit_tail(&f, &p, Regime::Nondegenerate, None).unwrap();
        assert!(rep.rel_errors["a"] <= 1e-2, "n={n}: {:?}", rep.rel_errors);
        let b_tol = if n == 4 { 1e-2 } else { 5e-2 };
        assert!(rep.rel_errors["b"] <= b_tol, "n={n}: {:?}", rep.rel_errors);
        let slope = growth_exponent(&p, None).unwrap();
        assert!((slope - 2.0).abs() <= 0.05, "n={n}: {slope}");
        assert!(p.max_residual <= 1e-8);
    }
}

#[test]
fn explicit_window_and_window_stability() {
    let f = key("mean:n=3");
    let p = solve_bowl(&f, 500.0, &Integrator::default()).unwrap();
    let rep = fit_tail(&f, &p, Regime::Nondegenerate, Some((100.0, 500.0)));
    assert!(matches!(rep, Err(Error::Range(_))) || rep.unwrap().rel_errors["a"] <= 1e-2);
    let long = solve_bowl(&f, 1000.0, &Integrator::default()).unwrap();
    let a = |p| match fit_tail(&f, p, Regime::Nondegenerate, Some((40.0, 200.0))).unwrap().fitted {
        Coefficients::Nondegenerate { a, .. } => a,
        _ => unreachable!(),
    };
    assert!((a(&p) - a(&long)).abs() / a(&p) <= 1e-3);
    assert!(matches!(fit_tail(&f, &p, Regime::Nondegenerate, Some((100.0, 900.0))), Err(Error::Range(_))));
}

#[test]
fn quotient_growth() {
    let f = key("hq:k=2,l=0,n=4");
    let p = solve_bowl(&f, 500.0, &Integrator::default()).unwrap();
    let slope = growth_exponent(&p, None).unwrap();
    assert!((slope - 2.0).abs() <= 0.02, "{slope}");
}

#[test]
fn gauss_root_tails() {
    for n in [4u32, 5] {
        let f = key(&format!("gauss:n={n}"));
        let p = solve_bowl(&f, 1e4, &Integrator::default()).unwrap();
        assert!(p.max_residual <= 1e-8, "{}", p.max_residual);
        let rep = fit_tail(&f, &p, Regime::Degenerate, Some((1e3, 1e4))).unwrap();
        assert!(rep.rel_errors["d"] <= 2e-2, "n={n}: {:?}", rep);
        assert!(rep.rel_errors["amplitude"] <= 2e-2, "n={n}: {:?}", rep);
    }
    let f = key("gauss:n=4");
    let p = solve_bowl(&f, 1e4, &Integrator::default()).unwrap();
    let slope = growth_exponent(&p, Some((1e3, 1e4))).unwrap();
    assert!((slope - 3.0).abs() <= 0.05, "{slope}");
}

#[test]
fn invalid_requests() {
    let f = key("mean:n=3");
    assert!(matches!(solve_bowl(&f, -1.0, &Integrator::default()), Err(Error::Parameter(_))));
}

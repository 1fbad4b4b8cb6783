use crate::config::{RegimeChoice, RunConfig, Suite};
use crate::error::CliError;
use crate::output::{plot_script, Check, OutputDir, BARRIER_HEADER, BOWL_HEADER, BRANCH_HEADER, NECK_HEADER};
use serde::Serialize;
use std::collections::BTreeMap;
use translab::barrier::{
    compare_orderings, log_grid, power_exponent, random_ordered_pairs, verify_inequality, BarrierReport, BarrierSpec,
    OrderingReport, Verdict,
};
use translab::bowl::{
    fit_tail, growth_exponent, solve_bowl_with, AsymptoticReport, BowlEnd, BowlOptions, Coefficients, Regime,
};
use translab::catenoid::{solve_catenoid, CaseTag, CatenoidOptions, EmbeddednessReport, EndBehavior, Handoff};
use translab::curvature::Family;
use translab::graph::{GraphOptions, SlopeEquation};
use translab::implicit::hessian_quotient_inverse;
use translab::{Branch, Curvature};

/// Tolerances of the built-in checks.
const RESIDUAL_TOL: f64 = 1e-8;
const NECK_TOL: f64 = 1e-8;
const COEFF_A_TOL: f64 = 1e-2;
const COEFF_B_TOL: f64 = 5e-2;
const GROWTH_TOL: f64 = 0.05;
const DEGENERATE_TOL: f64 = 2e-2;
const UPPER_GROWTH_TOL: f64 = 2e-2;
const END_EXPONENT_TOL: f64 = 5e-2;
const HOMOGENEITY_TOL: f64 = 1e-10;
const CLOSED_FORM_TOL: f64 = 1e-10;
const ROUND_TRIP_TOL: f64 = 1e-12;
const SCALING_TOL: f64 = 1e-10;

pub struct Outcome {
    pub checks: Vec<Check>,
    pub summary: String,
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Nondegenerate => "nondegenerate",
        Regime::Degenerate => "degenerate",
    }
}

#[derive(Serialize)]
struct BowlJson<'a> {
    curvature_key: String,
    alpha: f64,
    beta: f64,
    regime: &'static str,
    lambda0: f64,
    r_max: f64,
    end: BowlEnd<f64>,
    max_residual: f64,
    argument_range: (f64, f64),
    /// Named coefficients; entries that do not apply are omitted.
    scalars: BTreeMap<&'static str, f64>,
    growth_exponent: Option<f64>,
    fit: Option<&'a AsymptoticReport<f64>>,
    fit_error: Option<String>,
    checks: &'a [Check],
}

pub fn bowl(cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let f = cfg.curvature()?;
    let s = &cfg.bowl;
    let integrator = cfg.integrator.build();
    let detected = Regime::of(&f)?;
    let regime = match s.regime {
        RegimeChoice::Auto => detected,
        RegimeChoice::Nondegenerate => Regime::Nondegenerate,
        RegimeChoice::Degenerate => Regime::Degenerate,
    };
    if regime != detected {
        return Err(CliError::Config(format!("{} is {}, not {}", f.key(), regime_name(detected), regime_name(regime))));
    }
    let opts = BowlOptions { eps0: s.eps0, samples: s.samples, ..BowlOptions::default() };
    log::info!("bowl {} to r = {}", f.key(), s.rmax);
    let p = solve_bowl_with(&f, s.rmax, &integrator, &opts)?;
    let mut checks = vec![Check::new(
        "residual",
        p.max_residual <= RESIDUAL_TOL,
        format!("max residual {:e} (limit {RESIDUAL_TOL:e})", p.max_residual),
    )];
    let increasing = p.samples.windows(2).all(|w| w[1].v > w[0].v);
    checks.push(Check::new("slope_increasing", increasing, "v increases along the samples"));
    let alpha = p.alpha;
    let mut scalars = BTreeMap::from([("alpha", alpha), ("beta", p.beta)]);
    let window = s.fit_window.map(|[a, b]| (a, b));
    let (mut fit, mut fit_error, mut growth) = (None, None, None);
    if let BowlEnd::CylinderBounded { r } = p.end {
        checks.push(Check::new("entire", false, format!("slope argument reached 1 at r = {r}; no tail fit")));
    } else {
        match fit_tail(&f, &p, regime, window) {
            Ok(rep) => fit = Some(rep),
            Err(e) => fit_error = Some(e.to_string()),
        }
        match growth_exponent(&p, window) {
            Ok(g) => growth = Some(g),
            Err(e) => fit_error = fit_error.or(Some(e.to_string())),
        }
    }
    if let Some(e) = &fit_error {
        checks.push(Check::new("tail_fit", false, e.clone()));
    }
    if let Some(rep) = &fit {
        let err = |k: &str| rep.rel_errors.get(k).copied().unwrap_or(f64::NAN);
        match (rep.formula, rep.fitted) {
            (Coefficients::Nondegenerate { a, b }, Coefficients::Nondegenerate { a: fa, b: fb }) => {
                scalars.extend([("a", a), ("b", b), ("a_fit", fa), ("b_fit", fb)]);
                checks.push(Check::new("coefficient_a", err("a") <= COEFF_A_TOL, format!("error {:e}", err("a"))));
                let b_tol = if b.abs() < 1e-12 { 1e-2 } else { COEFF_B_TOL };
                checks.push(Check::new("coefficient_b", err("b") <= b_tol, format!("error {:e}", err("b"))));
            }
            (Coefficients::Degenerate { d, amplitude }, Coefficients::Degenerate { d: fd, amplitude: fa }) => {
                scalars.extend([("d_gamma", d), ("A_gamma", amplitude), ("d_gamma_fit", fd), ("A_gamma_fit", fa)]);
                if let Some(t) = rep.tail {
                    scalars.extend([("k_gamma", t.k), ("c_gamma", t.c)]);
                }
                checks.push(Check::new("exponent_d", err("d") <= DEGENERATE_TOL, format!("error {:e}", err("d"))));
                checks.push(Check::new(
                    "amplitude_A",
                    err("amplitude") <= DEGENERATE_TOL,
                    format!("error {:e}", err("amplitude")),
                ));
            }
            _ => unreachable!("formula and fit share a regime"),
        }
    }
    if let (Some(g), Regime::Nondegenerate) = (growth, regime) {
        let ok = (g - (alpha + 1.0)).abs() <= GROWTH_TOL;
        checks.push(Check::new("growth", ok, format!("log-log slope of u {g:.6} vs alpha + 1 = {}", alpha + 1.0)));
    }
    let rows: Vec<[f64; 4]> = p.samples.iter().map(|s| [s.r, s.u, s.v, s.residual]).collect();
    out.csv("bowl_profile.csv", BOWL_HEADER, &rows)?;
    let json = BowlJson {
        curvature_key: f.key(),
        alpha,
        beta: p.beta,
        regime: regime_name(regime),
        lambda0: p.lambda0,
        r_max: p.r_max(),
        end: p.end,
        max_residual: p.max_residual,
        argument_range: p.argument_range,
        scalars,
        growth_exponent: growth,
        fit: fit.as_ref(),
        fit_error,
        checks: &checks,
    };
    out.json("bowl_report.json", &json)?;
    if cfg.plots {
        let script = plot_script(&format!("bowl {}", f.key()), "r", "u", &[("bowl_profile.csv", "1:2", "u(r)")]);
        out.write("bowl_plot.gp", script.as_bytes())?;
    }
    let summary = format!(
        "bowl {}: r_max {:.6e}, growth {}",
        f.key(),
        p.r_max(),
        growth.map_or("n/a".into(), |g| format!("{g:.6}"))
    );
    Ok(Outcome { checks, summary })
}

#[derive(Serialize)]
struct CatenoidJson<'a> {
    curvature_key: String,
    alpha: f64,
    beta: f64,
    r_neck: f64,
    handoff: f64,
    case: CaseTag,
    kappa_at_neck: f64,
    kappa_expected: f64,
    neck_asymmetry: f64,
    upper_handoff: Handoff<f64>,
    lower_handoff: Handoff<f64>,
    s0: Option<f64>,
    s1: Option<f64>,
    s0_events: usize,
    s1_events: usize,
    c_plus: f64,
    c_minus: Option<f64>,
    b: Option<f64>,
    a_r: Option<f64>,
    end_behavior: EndBehavior<f64>,
    upper_growth: f64,
    fit_window: (f64, f64),
    embeddedness: EmbeddednessReport<f64>,
    max_residual: BTreeMap<&'static str, f64>,
    max_arclength_defect: BTreeMap<&'static str, f64>,
    checks: &'a [Check],
}

pub fn catenoid(cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let f = cfg.curvature()?;
    if f.signed_meta().is_none() {
        return Err(CliError::Unsupported(format!("curvature function is not signed: {}", f.key())));
    }
    let s = &cfg.catenoid;
    let opts = CatenoidOptions {
        handoff: s.handoff,
        r_max: s.rmax,
        neck_cap: s.neck_cap,
        samples: s.samples,
        fit_window: s.fit_window.map(|[a, b]| (a, b)),
        ..CatenoidOptions::default()
    };
    log::info!("catenoid {} with R = {} to r = {}", f.key(), s.radius, s.rmax);
    let res = solve_catenoid(&f, s.radius, &cfg.integrator.build(), &opts)?;
    let (x0, y0) = f.zero_ray()?;
    let kappa_expected = -x0 / (y0 * s.radius);
    let alpha = f.alpha_value();
    let mut checks = Vec::new();
    let dk = (res.neck.kappa_at_neck - kappa_expected).abs();
    checks.push(Check::new("neck_curvature", dk <= NECK_TOL, format!("|kappa - kappa_expected| = {dk:e}")));
    let residuals = BTreeMap::from([
        ("neck", res.neck.max_residual),
        ("upper", res.upper.profile.max_residual),
        ("lower", res.lower.profile.max_residual),
    ]);
    let defects = BTreeMap::from([
        ("upper", res.upper.profile.max_arclength_defect),
        ("lower", res.lower.profile.max_arclength_defect),
    ]);
    let worst = residuals.values().fold(0.0f64, |a, &b| a.max(b));
    checks.push(Check::new("residual", worst <= RESIDUAL_TOL, format!("max residual {worst:e}")));
    let worst = defects.values().fold(0.0f64, |a, &b| a.max(b));
    checks.push(Check::new("arclength", worst <= RESIDUAL_TOL, format!("max arc-length defect {worst:e}")));
    let e = res.embeddedness;
    checks.push(Check::new(
        "embedded",
        !e.inconclusive && e.min_gap > 0.0,
        format!("min gap {:e} at r = {:.6e} over {} points", e.min_gap, e.r_at_min, e.points),
    ));
    let g_err = (res.upper_growth - (alpha + 1.0)).abs() / (alpha + 1.0);
    checks.push(Check::new(
        "upper_growth",
        g_err <= UPPER_GROWTH_TOL,
        format!("exponent {:.6} vs alpha + 1 = {}", res.upper_growth, alpha + 1.0),
    ));
    let (n0, n1) = (res.lower.s0_events.len(), res.lower.s1_events.len());
    let (mut b, mut a_r) = (None, None);
    match (res.case, res.end_behavior) {
        (CaseTag::ContinuousOrigin, _) => {
            checks.push(Check::new("lower_vertical_tangent", n0 == 1, format!("{n0} event(s)")));
            checks.push(Check::new("lower_angle_minimum", n1 == 1, format!("{n1} event(s)")));
        }
        (CaseTag::DerivativeOrigin, EndBehavior::PowerLaw { b: bb, exponent, fitted_b, logarithmic, a_r: ar, .. }) => {
            b = Some(bb);
            a_r = Some(ar);
            let (ok, detail) = if logarithmic {
                (
                    (fitted_b - bb).abs() <= END_EXPONENT_TOL * bb.abs(),
                    format!("logarithmic end, fitted slope exponent {fitted_b:.6}"),
                )
            } else {
                let fitted = fitted_b + 1.0;
                (
                    (fitted - exponent).abs() <= END_EXPONENT_TOL * exponent.abs(),
                    format!("power end, fitted exponent {fitted:.6} vs {exponent:.6}"),
                )
            };
            checks.push(Check::new("lower_end", ok, detail));
        }
        (CaseTag::DerivativeOrigin, other) => {
            checks.push(Check::new("lower_end", false, format!("unexpected end behaviour {other:?}")));
        }
    }
    let rows = |p: &translab::catenoid::Profile<f64>| -> Vec<[f64; 6]> {
        p.samples.iter().map(|s| [s.s, s.r, s.u, s.theta, s.kappa, s.residual]).collect()
    };
    out.csv("catenoid_upper.csv", BRANCH_HEADER, &rows(&res.upper.profile))?;
    out.csv("catenoid_lower.csv", BRANCH_HEADER, &rows(&res.lower.profile))?;
    let neck: Vec<[f64; 5]> = res.neck.samples.iter().map(|s| [s.u, s.r, s.dr, s.d2r, s.residual]).collect();
    out.csv("catenoid_neck.csv", NECK_HEADER, &neck)?;
    let json = CatenoidJson {
        curvature_key: f.key(),
        alpha,
        beta: f.beta(),
        r_neck: res.r_neck,
        handoff: s.handoff,
        case: res.case,
        kappa_at_neck: res.neck.kappa_at_neck,
        kappa_expected,
        neck_asymmetry: res.neck.asymmetry,
        upper_handoff: res.neck.upper_handoff,
        lower_handoff: res.neck.lower_handoff,
        s0: res.s0,
        s1: res.s1,
        s0_events: n0,
        s1_events: n1,
        c_plus: res.c_plus,
        c_minus: res.c_minus,
        b,
        a_r,
        end_behavior: res.end_behavior,
        upper_growth: res.upper_growth,
        fit_window: res.fit_window,
        embeddedness: e,
        max_residual: residuals,
        max_arclength_defect: defects,
        checks: &checks,
    };
    out.json("catenoid_result.json", &json)?;
    if cfg.plots {
        let script = plot_script(
            &format!("catenoid {} R = {}", f.key(), s.radius),
            "r",
            "u",
            &[
                ("catenoid_upper.csv", "2:3", "upper"),
                ("catenoid_lower.csv", "2:3", "lower"),
                ("catenoid_neck.csv", "2:1", "neck"),
                ("catenoid_upper.csv", "(-$2):3", ""),
                ("catenoid_lower.csv", "(-$2):3", ""),
                ("catenoid_neck.csv", "(-$2):1", ""),
            ],
        );
        out.write("catenoid_plot.gp", script.as_bytes())?;
    }
    let summary = format!(
        "catenoid {} R = {}: case {:?}, C+ = {:.6e}, min gap {:.6e}",
        f.key(),
        s.radius,
        res.case,
        res.c_plus,
        e.min_gap
    );
    Ok(Outcome { checks, summary })
}

#[derive(Serialize, Default)]
struct ImplicitSuite {
    closed_form_family: bool,
    plus_points: usize,
    plus_closed_form_error: Option<f64>,
    minus_points: usize,
    minus_closed_form_error: Option<f64>,
    max_round_trip: f64,
    max_scaling_defect: f64,
}

#[derive(Serialize)]
struct BarrierSummary<'a> {
    power_exponent: Option<f64>,
    mbar0: Option<f64>,
    power: Option<&'a BarrierReport<f64>>,
    cone: Option<&'a BarrierReport<f64>>,
}

#[derive(Serialize, Default)]
struct VerifyJson<'a> {
    curvature_key: String,
    suites: Vec<&'static str>,
    homogeneity: Option<translab::curvature::HomogeneityReport>,
    monotonicity: Option<translab::curvature::MonotonicityReport>,
    implicit: Option<ImplicitSuite>,
    ordering_plus: Option<OrderingReport<f64>>,
    ordering_minus: Option<OrderingReport<f64>>,
    barrier: Option<BarrierSummary<'a>>,
    checks: &'a [Check],
}

fn interior(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |i| lo + (hi - lo) * (i as f64 + 0.5) / count as f64)
}

fn implicit_suite(f: &Curvature, checks: &mut Vec<Check>) -> ImplicitSuite {
    let plus = Branch::plus(f);
    let alpha = f.alpha_value();
    let c11 = f.evaluate(1.0, 1.0);
    let quotient = match f.family() {
        Family::HessianQuotient { k, l } => Some((k, l, f.dimension())),
        _ => None,
    };
    let mut rep = ImplicitSuite { closed_form_family: quotient.is_some(), ..Default::default() };
    let (mut plus_err, mut minus_err, mut failures) = (0.0f64, 0.0f64, 0usize);
    for z in interior(0.2, 3.0, 50) {
        let lo = (z / c11).powf(1.0 / alpha);
        let hi = if f.is_degenerate() { 4.0 * lo } else { z.powf(1.0 / alpha) };
        for y in interior(lo, hi, 50) {
            let Ok(g) = plus.g_plus(y, z) else {
                failures += 1;
                continue;
            };
            rep.plus_points += 1;
            rep.max_round_trip = rep.max_round_trip.max((f.evaluate(g, y) - z).abs() / z.max(1.0));
            if let Some((k, l, n)) = quotient {
                if let Ok(x) = hessian_quotient_inverse(k, l, n, y, z) {
                    plus_err = plus_err.max((g - x).abs());
                }
            }
        }
    }
    for c in [0.5, 2.0, 5.0] {
        let lo = (1.0 / c11).powf(1.0 / alpha);
        let hi = if f.is_degenerate() { 4.0 * lo } else { 1.0 };
        for y in interior(lo, hi, 50) {
            if let (Ok(a), Ok(b)) = (plus.g_plus(y, 1.0), plus.g_plus(c * y, c.powf(alpha))) {
                rep.max_scaling_defect = rep.max_scaling_defect.max((c * a - b).abs());
            }
        }
    }
    if let (Some((k, l, n)), Ok(minus)) = (quotient, Branch::minus(f)) {
        let lower = minus.minus_lower_bound();
        let pad = 1e-3 * lower.abs();
        for y in interior(lower + pad, -pad, 50) {
            if let (Ok(g), Ok(x)) = (minus.g_minus(y), hessian_quotient_inverse(k, l, n, y, -1.0)) {
                rep.minus_points += 1;
                minus_err = minus_err.max((g - x).abs() / x.abs().max(1.0));
                rep.max_round_trip = rep.max_round_trip.max((f.evaluate(g, y) + 1.0).abs());
            }
        }
        rep.minus_closed_form_error = Some(minus_err);
    }
    if quotient.is_some() {
        rep.plus_closed_form_error = Some(plus_err);
        checks.push(Check::new("closed_form_plus", plus_err <= CLOSED_FORM_TOL, format!("max error {plus_err:e}")));
        if let Some(e) = rep.minus_closed_form_error {
            checks.push(Check::new(
                "closed_form_minus",
                e <= CLOSED_FORM_TOL && rep.minus_points > 0,
                format!("max error {e:e} over {} points", rep.minus_points),
            ));
        }
    }
    checks.push(Check::new(
        "round_trip",
        rep.max_round_trip <= ROUND_TRIP_TOL && failures == 0,
        format!("max residual {:e}, {failures} failed solve(s)", rep.max_round_trip),
    ));
    checks.push(Check::new(
        "scaling_law",
        rep.max_scaling_defect <= SCALING_TOL,
        format!("max defect {:e}", rep.max_scaling_defect),
    ));
    rep
}

fn ordering(
    eq: &SlopeEquation<f64>,
    cfg: &RunConfig,
    name: &str,
    checks: &mut Vec<Check>,
) -> Result<OrderingReport<f64>, CliError> {
    let v = &cfg.verify;
    let pairs = random_ordered_pairs(eq, v.r0, v.pairs, cfg.seed)?;
    let rep = compare_orderings(eq, &pairs, v.r0, v.r_end, &cfg.integrator.build(), &GraphOptions::default(), v.grid)?;
    checks.push(Check::new(
        name,
        rep.passed(),
        format!(
            "{} pairs, min gap {:e}, {} violation(s), {} incomplete",
            rep.pairs.len(),
            rep.min_gap,
            rep.violations,
            rep.incomplete
        ),
    ));
    Ok(rep)
}

fn barrier_rows(rep: &BarrierReport<f64>) -> Vec<[f64; 3]> {
    rep.samples.iter().map(|s| [s.r, s.w, s.margin.unwrap_or(f64::NAN)]).collect()
}

pub fn verify(cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let f = cfg.curvature()?;
    let v = &cfg.verify;
    let all = v.suite == Suite::All;
    let wants = |s: Suite| all || v.suite == s;
    let mut checks = Vec::new();
    let mut json = VerifyJson { curvature_key: f.key(), ..Default::default() };
    if wants(Suite::Homogeneity) {
        json.suites.push("homogeneity");
        let h = f.check_homogeneity(v.samples, cfg.seed);
        checks.push(Check::new(
            "homogeneity",
            h.max_defect <= HOMOGENEITY_TOL && h.checked > 0,
            format!("max defect {:e} over {} samples", h.max_defect, h.checked),
        ));
        json.homogeneity = Some(h);
    }
    if wants(Suite::Monotonicity) {
        json.suites.push("monotonicity");
        let m = f.check_monotonicity(v.samples, cfg.seed);
        checks.push(Check::new(
            "monotonicity",
            m.min_dx > 0.0 && m.min_dy > 0.0 && m.checked > 0,
            format!("min d/dx {:e}, min d/dy {:e}", m.min_dx, m.min_dy),
        ));
        json.monotonicity = Some(m);
    }
    if wants(Suite::Implicit) {
        json.suites.push("implicit");
        json.implicit = Some(implicit_suite(&f, &mut checks));
    }
    if wants(Suite::Ordering) {
        json.suites.push("ordering");
        log::info!("ordering suite: {} pairs to r = {}", v.pairs, v.r_end);
        json.ordering_plus = Some(ordering(&SlopeEquation::plus(&f), cfg, "ordering_plus", &mut checks)?);
        if f.signed_meta().is_some() {
            let eq = SlopeEquation::minus(&f)?;
            json.ordering_minus = Some(ordering(&eq, cfg, "ordering_minus", &mut checks)?);
        }
    }
    let (mut power_rep, mut cone_rep, mut power_b, mut mbar0) = (None, None, None, None);
    let barrier_applies = f.signed_meta().is_some();
    if v.suite == Suite::Barrier && !barrier_applies {
        return Err(CliError::Unsupported(format!("barrier suite needs a signed curvature function: {}", f.key())));
    }
    if wants(Suite::Barrier) && barrier_applies {
        json.suites.push("barrier");
        let [lo, hi] = v.barrier_range;
        match power_exponent(&f) {
            Ok(b) => {
                power_b = Some(b);
                let spec = BarrierSpec::power(v.power_amplitude, b, (lo, hi))?;
                let rep = verify_inequality(&spec, &f, &log_grid(lo, hi, v.grid))?;
                let ok = matches!(rep.verdict, Verdict::VerifiedSuper { .. });
                checks.push(Check::new(
                    "power_supersolution",
                    ok,
                    format!("verdict {:?}, tail sign from r = {:e}", rep.verdict, rep.observed_r_star),
                ));
                out.csv("barrier_power.csv", BARRIER_HEADER, &barrier_rows(&rep))?;
                power_rep = Some(rep);
            }
            Err(e) => log::info!("power barrier skipped: {e}"),
        }
        mbar0 = Branch::minus(&f)?.mbar0();
        if let Some(m) = mbar0 {
            let [lo, hi] = v.cone_range;
            let spec = BarrierSpec::implicit_cone(m, (lo, hi))?;
            let rep = verify_inequality(&spec, &f, &log_grid(lo, hi, v.grid))?;
            let ok = matches!(rep.verdict, Verdict::VerifiedSub { .. }) && rep.max_margin <= 0.0;
            checks.push(Check::new(
                "cone_subsolution",
                ok,
                format!("verdict {:?}, max margin {:e}", rep.verdict, rep.max_margin),
            ));
            out.csv("barrier_cone.csv", BARRIER_HEADER, &barrier_rows(&rep))?;
            cone_rep = Some(rep);
        }
    }
    if power_rep.is_some() || cone_rep.is_some() || (wants(Suite::Barrier) && barrier_applies) {
        json.barrier =
            Some(BarrierSummary { power_exponent: power_b, mbar0, power: power_rep.as_ref(), cone: cone_rep.as_ref() });
    }
    json.checks = &checks;
    out.json("verify_report.json", &json)?;
    if cfg.plots && (power_rep.is_some() || cone_rep.is_some()) {
        let mut series = Vec::new();
        if power_rep.is_some() {
            series.push(("barrier_power.csv", "1:3", "power margin"));
        }
        if cone_rep.is_some() {
            series.push(("barrier_cone.csv", "1:3", "cone margin"));
        }
        let mut script = String::from("set logscale x\n");
        script.push_str(&plot_script(&format!("barrier margins {}", f.key()), "r", "margin", &series));
        out.write("barrier_plot.gp", script.as_bytes())?;
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    let summary = format!("verify {}: {passed}/{} checks passed", f.key(), checks.len());
    Ok(Outcome { checks, summary })
}

pub fn list() -> String {
    let mut s = String::from("key\talpha\tregime\tsigned\n");
    for key in translab::curvature::registry_examples() {
        let f = Curvature::from_key(key).expect("registry keys parse");
        let regime = Regime::of(&f).map(regime_name).unwrap_or("unknown");
        s.push_str(&format!("{key}\t{}\t{regime}\t{}\n", f.alpha(), f.signed_meta().is_some()));
    }
    s
}

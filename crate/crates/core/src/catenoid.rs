//! Catenoidal translators: the neck as a horizontal graph `r(u)`, then the
//! two branches of the generating curve, each continued as a graph over `r`.
//!
//! The rotational system is `theta' = kappa`, `r' = cos theta`,
//! `u' = sin theta` with `f(kappa, sin theta / r) = cos theta`. The upper
//! branch is integrated in arc length until `theta` reaches its minimum and
//! then as the slope ODE. The lower branch is traversed away from the neck,
//! where its tangent angle `phi` (measured from the outward radial
//! direction) is strictly increasing, so `phi` itself serves as the
//! parameter before the graph phase. Reported lower-branch angles use
//! `theta_bar = pi/2 - phi`, which starts at `pi` on the neck.

use crate::bowl::{solve_bowl_with, BowlOptions, BowlProfile};
use crate::curvature::{CurvatureFunction, Family, OriginValue};
use crate::error::{Error, Result};
use crate::fit::{line_fit, log_grid};
use crate::graph::{solve_graph, GraphOptions, GraphSolution, SlopeEquation};
use crate::implicit::{solve_level_seeded, Component, ImplicitBranch};
use crate::ode::{integrate, Direction, EventSpec, IntegratorConfig, Termination, Trajectory};
use crate::scalar::{f64_of, lit, Real};
use serde::Serialize;

const LEVEL_TOL: f64 = 1e-13;
/// Drop in the branch separation, relative to the heights, still counted as widening.
const GAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CatenoidOptions<T> {
    /// Angle `|theta - pi/2|` at which the neck chart hands over.
    pub handoff: T,
    pub r_max: T,
    /// Largest `|u|` the neck chart may reach, in units of the neck radius.
    pub neck_cap: T,
    /// Samples per phase in the reported profiles.
    pub samples: usize,
    /// Tail window for offsets and fits; defaults to `[r_max/10, r_max/2]`.
    pub fit_window: Option<(T, T)>,
    pub graph: GraphOptions<T>,
}

impl<T: Real> Default for CatenoidOptions<T> {
    fn default() -> Self {
        Self {
            handoff: T::PI() / lit(8.0),
            r_max: lit(200.0),
            neck_cap: lit(10.0),
            samples: 400,
            fit_window: None,
            graph: GraphOptions::default(),
        }
    }
}

impl<T: Real> CatenoidOptions<T> {
    pub fn window(&self) -> (T, T) {
        self.fit_window.unwrap_or((self.r_max / lit(10.0), self.r_max / lit(2.0)))
    }

    fn validate(&self) -> Result<()> {
        let z = T::zero();
        if !(self.handoff > z && self.handoff < T::FRAC_PI_4()) {
            return Err(Error::Parameter(format!("handoff angle {} must lie in (0, pi/4)", self.handoff)));
        }
        if !(self.neck_cap > z) || self.samples < 8 {
            return Err(Error::Parameter("neck cap must be positive and samples at least 8".into()));
        }
        let (a, b) = self.window();
        if !(z < a && a < b && b <= self.r_max) {
            return Err(Error::Parameter(format!("fit window [{a}, {b}] must lie in (0, r_max]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeckSample<T> {
    pub u: T,
    pub r: T,
    pub dr: T,
    pub d2r: T,
    pub residual: T,
}

/// State where a branch leaves the neck chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Handoff<T> {
    pub s: T,
    pub r: T,
    pub u: T,
    /// Direction angle of travel away from the neck.
    pub angle: T,
    /// The chart ended where the angle turns rather than at the handoff slope.
    pub turned: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NeckSolution<T> {
    pub curvature_key: String,
    pub r_neck: T,
    pub handoff_angle: T,
    /// Half-widths in `u` of the chart above and below the neck.
    pub epsilon_upper: T,
    pub epsilon_lower: T,
    /// `r''(0)`, the curvature of the profile at the neck.
    pub kappa_at_neck: T,
    /// Samples ordered by `u`.
    pub samples: Vec<NeckSample<T>>,
    pub max_residual: T,
    pub min_convexity: T,
    /// Largest `|r(u) - r(-u)|` on the common part of the chart.
    pub asymmetry: T,
    pub upper_handoff: Handoff<T>,
    pub lower_handoff: Handoff<T>,
    /// Arc lengths from the neck at each sample.
    #[serde(skip)]
    arc: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample<T> {
    pub s: T,
    pub r: T,
    pub u: T,
    pub theta: T,
    pub kappa: T,
    pub residual: T,
}

/// Arc-length sampled generating curve.
#[derive(Debug, Clone, Serialize)]
pub struct Profile<T> {
    pub samples: Vec<ProfileSample<T>>,
    pub max_residual: T,
    /// Largest `|r'^2 + u'^2 - 1|` from the continuous output.
    pub max_arclength_defect: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    /// The slice function vanishes continuously at the origin.
    ContinuousOrigin,
    /// `g_minus(0, -1) = 0` with negative slope.
    DerivativeOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EndBehavior<T> {
    BowlType {
        c_minus: T,
    },
    PowerLaw {
        /// Slope exponent `b = d/dy g_minus(0, -1)`.
        b: T,
        /// Height exponent `b + 1`.
        exponent: T,
        /// Exponent of the alternative closed form `(2(k+1) - n)/(k - 1)`.
        alternative_exponent: Option<T>,
        /// Amplitude of `u' ~ -a r^b` from the tail.
        a_r: T,
        fitted_b: T,
        /// `|b + 1| < 1e-9`: the height grows like `-a ln r`.
        logarithmic: bool,
        /// Amplitude of `u ~ a ln(R/r) + c` in the logarithmic case.
        log_amplitude: Option<T>,
        /// Ratio of `|theta_bar'|` at the window ends, small when it decays.
        curvature_decay: T,
    },
}

#[derive(Debug, Clone)]
pub struct UpperBranch<T> {
    pub profile: Profile<T>,
    /// Where `theta` turns: `(s, r, theta)`.
    pub theta_min: (T, T, T),
    /// Graph samples with `theta' <= 0` after the turn.
    pub decreasing_samples: usize,
    pub graph: GraphSolution<T>,
    curve: Vec<(T, T)>,
}

#[derive(Debug, Clone)]
pub struct LowerBranch<T> {
    pub profile: Profile<T>,
    pub case: CaseTag,
    /// Arc lengths of the `theta_bar = pi/2` crossings.
    pub s0_events: Vec<T>,
    /// Arc lengths of local minima of `theta_bar`.
    pub s1_events: Vec<T>,
    pub graph: GraphSolution<T>,
    curve: Vec<(T, T)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddednessReport<T> {
    pub r_star: T,
    pub points: usize,
    pub min_gap: T,
    pub r_at_min: T,
    pub gap_increasing: bool,
    pub inconclusive: bool,
}

#[derive(Debug, Clone)]
pub struct CatenoidResult<T> {
    pub curvature_key: String,
    pub r_neck: T,
    pub case: CaseTag,
    pub neck: NeckSolution<T>,
    pub upper: UpperBranch<T>,
    pub lower: LowerBranch<T>,
    pub s0: Option<T>,
    pub s1: Option<T>,
    pub c_plus: T,
    pub c_minus: Option<T>,
    pub end_behavior: EndBehavior<T>,
    /// Log-log slope of `u_plus` over the fit window.
    pub upper_growth: T,
    pub fit_window: (T, T),
    pub embeddedness: EmbeddednessReport<T>,
    pub bowl: BowlProfile<T>,
}

fn require_signed<T: Real>(f: &CurvatureFunction<T>) -> Result<(T, T)> {
    let (x0, y0) =
        f.zero_ray().map_err(|_| Error::Unsupported(format!("curvature function is not signed: {}", f.key())))?;
    if !f.has_odd_extension() {
        return Err(Error::Unsupported(format!("{} has no odd extension to y < 0", f.key())));
    }
    Ok((x0, y0))
}

/// Classifies the lower end from the origin behaviour of the `-1` branch.
pub fn classify_case<T: Real>(f: &CurvatureFunction<T>) -> Result<(CaseTag, Option<T>)> {
    let meta =
        f.signed_meta().ok_or_else(|| Error::Unsupported(format!("curvature function is not signed: {}", f.key())))?;
    if meta.origin_value == OriginValue::ContinuousZero {
        return Ok((CaseTag::ContinuousOrigin, None));
    }
    let origin = ImplicitBranch::minus(f)?.origin_data()?;
    match origin.slope {
        Some(b) if origin.limit == T::zero() && b < T::zero() => Ok((CaseTag::DerivativeOrigin, Some(b))),
        _ => Err(Error::Classification(format!(
            "g_minus(0, -1) = {} with slope {:?} fits neither end type",
            origin.limit, origin.slope
        ))),
    }
}

/// Translator defect `|f(kappa, y) - z|` normalized by the larger of the
/// curvature sensitivity `|df/dx| max(1, |kappa|)` and the curvature scale
/// `max(1, |kappa|)^alpha` when these exceed 1. It never exceeds the plain
/// defect and stays meaningful near the pole of the slice function and
/// where the profile curvature blows up.
fn scaled_defect<T: Real>(f: &CurvatureFunction<T>, kappa: T, y: T, z: T) -> T {
    let (v, fx) = f.value_dx(kappa, y);
    let k = T::one().max(kappa.abs());
    (v - z).abs() / T::one().max(fx.abs() * k).max(k.powf(f.alpha_value()))
}

/// Point `i` of `count` uniform points on `[a, b]`, with exact endpoints.
fn grid_point<T: Real>(a: T, b: T, i: usize, count: usize) -> T {
    if i + 1 == count {
        b
    } else {
        a + (b - a) * lit::<T>(i as f64) / lit::<T>((count - 1) as f64)
    }
}

/// Step cap keeping the continuous-output derivative, which enters the
/// reported residuals, accurate on a span of the given length.
fn capped<T: Real>(cfg: &IntegratorConfig<T>, span: T) -> IntegratorConfig<T> {
    IntegratorConfig { max_step: cfg.max_step.min(span / lit(2000.0)), ..*cfg }
}

/// Tolerances for the graph phases, whose continuous-output derivative
/// gives the reported curvature.
fn tight<T: Real>(cfg: &IntegratorConfig<T>) -> IntegratorConfig<T> {
    let c = lit::<T>(1e-2);
    IntegratorConfig { rel_tol: cfg.rel_tol * c, abs_tol: cfg.abs_tol * c, ..*cfg }
}

/// Curvature `x` with `f(x, y) = z` on the principal component, seeded on the zero ray.
fn level<T: Real>(f: &CurvatureFunction<T>, ratio: T, y: T, z: T) -> Result<T> {
    solve_level_seeded(f, y, z, Component::Principal, Some(ratio * y), lit(LEVEL_TOL))
}

struct NeckHalf<T> {
    traj: Trajectory<T, 3>,
    turned: bool,
}

/// One half of the neck chart in `w = +-u >= 0`; `sign` is the sign of `u`.
fn neck_half<T: Real>(
    f: &CurvatureFunction<T>,
    ratio: T,
    r_neck: T,
    handoff: T,
    cap: T,
    sign: T,
    cfg: &IntegratorConfig<T>,
) -> Result<NeckHalf<T>> {
    let beta = f.beta();
    let one = T::one();
    let rhs = |_: T, s: &[T; 3]| {
        let (r, p) = (s[0], s[1]);
        let q = one + p * p;
        match level(f, ratio, one / (r * q.powf(beta)), sign * p) {
            Ok(g) => [p, -q.powf(beta + one) * g, q.sqrt()],
            Err(_) => [T::nan(); 3],
        }
    };
    let slope = handoff.tan();
    let events = [
        EventSpec::new(move |_, s: &[T; 3]| s[1] - slope, Direction::Rising, true),
        // The profile stops being convex where the tangent angle turns.
        EventSpec::new(move |w, s: &[T; 3]| rhs(w, s)[1], Direction::Falling, true),
    ];
    let fine = capped(cfg, r_neck);
    let traj = integrate(rhs, T::zero(), [r_neck, T::zero(), T::zero()], cap, &fine, &events)?;
    if traj.termination != Termination::TerminalEvent {
        let msg = match traj.termination {
            Termination::ReachedEnd => "neither the handoff slope nor a turn reached before the cap".to_string(),
            other => format!("neck chart stopped: {other:?}"),
        };
        return Err(Error::Chart { msg, last_u: f64_of(sign * traj.t_final()) });
    }
    let turned = traj.events.last().map(|e| e.id) == Some(1);
    Ok(NeckHalf { traj, turned })
}

/// Translator defect of the neck chart at `w` on one half, in arc-length form.
fn neck_residual<T: Real>(f: &CurvatureFunction<T>, r: T, p: T, d2r: T, sign: T) -> T {
    let q = T::one() + p * p;
    let kappa = -d2r / q.powf(lit(1.5));
    scaled_defect(f, kappa, T::one() / (r * q.sqrt()), sign * p / q.sqrt())
}

/// Solves the neck as a horizontal graph `r(u)` in both directions from
/// `r(0) = R`, `r'(0) = 0`, up to `|r'| = tan(handoff)`.
pub fn solve_neck<T: Real>(
    f: &CurvatureFunction<T>,
    r_neck: T,
    cfg: &IntegratorConfig<T>,
    opts: &CatenoidOptions<T>,
) -> Result<NeckSolution<T>> {
    let (x0, y0) = require_signed(f)?;
    if !(r_neck > T::zero() && r_neck.is_finite()) {
        return Err(Error::Parameter(format!("neck radius {r_neck} must be positive")));
    }
    opts.validate()?;
    cfg.validate()?;
    let ratio = x0 / y0;
    let cap = opts.neck_cap * r_neck;
    let one = T::one();
    let kappa_at_neck = -level(f, ratio, one / r_neck, T::zero())?;
    let up = neck_half(f, ratio, r_neck, opts.handoff, cap, one, cfg)?;
    let down = neck_half(f, ratio, r_neck, opts.handoff, cap, -one, cfg)?;
    let count = opts.samples;
    let mut samples = Vec::with_capacity(2 * count);
    let mut arc = Vec::with_capacity(2 * count);
    let (mut max_res, mut min_conv) = (T::zero(), T::infinity());
    for (half, sign) in [(&down, -one), (&up, one)] {
        let end = half.traj.t_final();
        let mut part = Vec::with_capacity(count);
        for i in 0..count {
            let w = grid_point(T::zero(), end, i, count);
            let s = half.traj.state_at(w)?;
            let d = half.traj.derivative_at(w)?;
            let residual = neck_residual(f, s[0], s[1], d[1], sign);
            max_res = max_res.max(residual);
            // A turned chart ends exactly where convexity is lost.
            if !(half.turned && i + 1 == count) {
                min_conv = min_conv.min(d[1]);
            }
            part.push((NeckSample { u: sign * w, r: s[0], dr: sign * s[1], d2r: d[1], residual }, s[2]));
        }
        if sign < T::zero() {
            part.reverse();
            part.pop();
        }
        for (sample, s) in part {
            samples.push(sample);
            arc.push(s);
        }
    }
    let common = up.traj.t_final().min(down.traj.t_final());
    let mut asymmetry = T::zero();
    for i in 0..count {
        let w = grid_point(T::zero(), common, i, count);
        asymmetry = asymmetry.max((up.traj.state_at(w)?[0] - down.traj.state_at(w)?[0]).abs());
    }
    let handoff = |half: &NeckHalf<T>, sign: T| {
        let s = half.traj.final_state();
        let lean = s[1].atan();
        Handoff {
            s: s[2],
            r: s[0],
            u: sign * half.traj.t_final(),
            angle: if sign > T::zero() { T::FRAC_PI_2() - lean } else { lean - T::FRAC_PI_2() },
            turned: half.turned,
        }
    };
    Ok(NeckSolution {
        curvature_key: f.key(),
        r_neck,
        handoff_angle: opts.handoff,
        epsilon_upper: up.traj.t_final(),
        epsilon_lower: down.traj.t_final(),
        kappa_at_neck,
        max_residual: max_res,
        min_convexity: min_conv,
        asymmetry,
        upper_handoff: handoff(&up, one),
        lower_handoff: handoff(&down, -one),
        samples,
        arc,
    })
}

impl<T: Real> NeckSolution<T> {
    /// Neck samples of one half as profile samples, ordered away from the neck.
    /// The upper half reports `theta`; the lower half reports `theta_bar`.
    fn profile_part(&self, upper: bool) -> Vec<ProfileSample<T>> {
        let one = T::one();
        let mid = self.samples.iter().position(|s| s.u == T::zero()).unwrap_or(0);
        let idx: Vec<usize> = if upper { (mid..self.samples.len()).collect() } else { (0..=mid).rev().collect() };
        idx.into_iter()
            .map(|i| {
                let n = &self.samples[i];
                let q = one + n.dr * n.dr;
                let k = n.d2r / q.powf(lit(1.5));
                let lean = n.dr.abs().atan();
                // Upper: theta = pi/2 - lean, kappa = -r''/q^1.5. Lower: phi =
                // lean - pi/2, so theta_bar = pi - lean and theta_bar' = -r''/q^1.5.
                ProfileSample {
                    s: self.arc[i],
                    r: n.r,
                    u: n.u,
                    theta: if upper { T::FRAC_PI_2() - lean } else { T::PI() - lean },
                    kappa: -k,
                    residual: n.residual,
                }
            })
            .collect()
    }
}

/// Arc length along graph samples by Hermite quadrature of `sqrt(1 + v^2)`.
fn graph_samples<T: Real>(
    f: &CurvatureFunction<T>,
    graph: &GraphSolution<T>,
    s_start: T,
    count: usize,
    lower: bool,
) -> Result<Vec<ProfileSample<T>>> {
    let one = T::one();
    let (r0, r1) = (graph.r_start(), graph.r_final());
    let mut out: Vec<ProfileSample<T>> = Vec::with_capacity(count);
    let mut prev: Option<(T, T, T)> = None;
    let mut s = s_start;
    for r in log_grid(f64_of(r0), f64_of(r1), count) {
        let r = lit::<T>(r).max(r0).min(r1);
        let (v, dv, u) = graph.eval(r)?;
        let q = one + v * v;
        let ds = q.sqrt();
        let d2s = v * dv / ds;
        if let Some((ra, a, da)) = prev {
            let h = r - ra;
            s = s + h / lit(2.0) * (a + ds) + h * h / lit(12.0) * (da - d2s);
        }
        prev = Some((r, ds, d2s));
        let phi = v.atan();
        let k = dv / q.powf(lit(1.5));
        let residual = scaled_defect(f, k, phi.sin() / r, phi.cos());
        let (theta, kappa) = if lower { (T::FRAC_PI_2() - phi, -k) } else { (phi, k) };
        out.push(ProfileSample { s, r, u, theta, kappa, residual });
    }
    Ok(out)
}

fn profile_of<T: Real>(samples: Vec<ProfileSample<T>>, defect: T) -> Profile<T> {
    let max_residual = samples.iter().fold(T::zero(), |m, s| m.max(s.residual));
    Profile { samples, max_residual, max_arclength_defect: defect }
}

fn curve_of<T: Real>(samples: &[ProfileSample<T>]) -> Vec<(T, T)> {
    samples.iter().map(|s| (s.r, s.u)).collect()
}

/// Height of a branch at radius `r`: the graph where defined, otherwise
/// linear interpolation of the pre-graph samples.
fn height<T: Real>(curve: &[(T, T)], graph: &GraphSolution<T>, r: T) -> Result<T> {
    if r >= graph.r_start() {
        return Ok(graph.eval(r)?.2);
    }
    let i = curve.partition_point(|p| p.0 <= r);
    if i == 0 || i >= curve.len() {
        return Err(Error::Range(format!("r = {} outside the branch", f64_of(r))));
    }
    let (a, b) = (curve[i - 1], curve[i]);
    Ok(a.1 + (b.1 - a.1) * (r - a.0) / (b.0 - a.0))
}

/// Upper branch from the neck handoff: arc length until `theta` turns, then
/// the slope ODE to `r_max`.
pub fn solve_upper_branch<T: Real>(
    f: &CurvatureFunction<T>,
    neck: &NeckSolution<T>,
    cfg: &IntegratorConfig<T>,
    opts: &CatenoidOptions<T>,
) -> Result<UpperBranch<T>> {
    let (x0, y0) = require_signed(f)?;
    let ratio = x0 / y0;
    let h = neck.upper_handoff;
    let r_max = opts.r_max;
    let kappa = move |th: T, r: T| level(f, ratio, th.sin() / r, th.cos());
    let rhs = |_: T, s: &[T; 3]| match kappa(s[0], s[1]) {
        Ok(k) if s[0] > T::zero() && s[0] < T::FRAC_PI_2() => [k, s[0].cos(), s[0].sin()],
        _ => [T::nan(); 3],
    };
    let events = [
        EventSpec::new(|_, s: &[T; 3]| kappa(s[0], s[1]).unwrap_or(T::nan()), Direction::Rising, true),
        EventSpec::new(move |_, s: &[T; 3]| s[1] - r_max, Direction::Rising, true),
    ];
    let mut samples = neck.profile_part(true);
    let mut defect = T::zero();
    let (s_turn, th, r, u) = if h.turned {
        (h.s, h.angle, h.r, h.u)
    } else {
        let s_end = h.s + lit::<T>(100.0) * r_max;
        let traj = integrate(rhs, h.s, [h.angle, h.r, h.u], s_end, &capped(cfg, h.r), &events)?;
        let turned = traj.termination == Termination::TerminalEvent && traj.events.last().map(|e| e.id) == Some(0);
        if !turned {
            return Err(Error::Structure(format!(
                "upper branch angle did not turn inside (0, pi/2) before s = {} ({:?})",
                f64_of(traj.t_final()),
                traj.termination
            )));
        }
        let (arc, d) = arc_samples(f, &traj, opts.samples)?;
        defect = d;
        samples.extend(arc.into_iter().skip(1));
        let [th, r, u] = traj.final_state();
        (traj.t_final(), th, r, u)
    };
    let eq = SlopeEquation::plus(f);
    let fall = vec![EventSpec::new(|r: T, s: &[T; 1]| eq.rhs(r, s[0]).unwrap_or(T::nan()), Direction::Falling, false)];
    let graph_opts = GraphOptions { stop_at_unit_argument: false, ..opts.graph };
    let graph = solve_graph(&eq, r, th.tan(), u, r_max, &tight(cfg), &graph_opts, fall)?;
    check_graph_end(&graph, "upper")?;
    let graph_part = graph_samples(f, &graph, s_turn, opts.samples, false)?;
    let decreasing = graph_part.iter().filter(|s| !(s.kappa > T::zero())).count();
    samples.extend(graph_part.into_iter().skip(1));
    let curve = curve_of(&samples);
    Ok(UpperBranch {
        profile: profile_of(samples, defect),
        theta_min: (s_turn, r, th),
        decreasing_samples: decreasing,
        graph,
        curve,
    })
}

fn check_graph_end<T: Real>(graph: &GraphSolution<T>, which: &str) -> Result<()> {
    match graph.end {
        crate::graph::GraphEnd::Stopped { reason, r } => {
            Err(Error::Integration(format!("{which} graph phase stopped at r = {}: {reason:?}", f64_of(r))))
        }
        _ => Ok(()),
    }
}

/// Uniform arc-length samples of the upper arc phase, with the largest
/// `|r'^2 + u'^2 - 1|` of the continuous output.
fn arc_samples<T: Real>(
    f: &CurvatureFunction<T>,
    traj: &Trajectory<T, 3>,
    count: usize,
) -> Result<(Vec<ProfileSample<T>>, T)> {
    let (a, b) = (traj.t_start(), traj.t_final());
    let mut out = Vec::with_capacity(count);
    let mut defect = T::zero();
    for i in 0..count {
        let s = grid_point(a, b, i, count);
        let [th, r, u] = traj.state_at(s)?;
        let d = traj.derivative_at(s)?;
        defect = defect.max((d[1] * d[1] + d[2] * d[2] - T::one()).abs());
        let residual = scaled_defect(f, d[0], th.sin() / r, th.cos());
        out.push(ProfileSample { s, r, u, theta: th, kappa: d[0], residual });
    }
    Ok((out, defect))
}

/// Lower branch from the neck handoff, parametrized by its tangent angle
/// until the graph phase, which starts at slope `+1` when the origin value
/// is continuous and at slope `-1` otherwise.
pub fn solve_lower_branch<T: Real>(
    f: &CurvatureFunction<T>,
    neck: &NeckSolution<T>,
    cfg: &IntegratorConfig<T>,
    opts: &CatenoidOptions<T>,
) -> Result<LowerBranch<T>> {
    let (x0, y0) = require_signed(f)?;
    let (case, _) = classify_case(f)?;
    let ratio = x0 / y0;
    let h = neck.lower_handoff;
    let r_max = opts.r_max;
    let one = T::one();
    let phi_end = match case {
        CaseTag::ContinuousOrigin => T::FRAC_PI_4(),
        CaseTag::DerivativeOrigin => -T::FRAC_PI_4(),
    };
    let kappa = move |phi: T, r: T| level(f, ratio, phi.sin() / r, phi.cos());
    let rhs = |phi: T, s: &[T; 3]| match kappa(phi, s[1]) {
        Ok(k) if k > T::zero() => [one / k, phi.cos() / k, phi.sin() / k],
        _ => [T::nan(); 3],
    };
    let events = [
        EventSpec::new(|phi: T, _: &[T; 3]| phi, Direction::Rising, false),
        EventSpec::new(move |_, s: &[T; 3]| s[1] - r_max, Direction::Rising, true),
    ];
    let traj = integrate(rhs, h.angle, [h.s, h.r, h.u], phi_end, &capped(cfg, T::PI()), &events)?;
    if traj.termination != Termination::ReachedEnd {
        return Err(Error::Structure(format!(
            "lower branch stopped at tangent angle {} before slope {} ({:?})",
            f64_of(traj.t_final()),
            f64_of(phi_end.tan()),
            traj.termination
        )));
    }
    let mut s0_events: Vec<T> = traj.events.iter().filter(|e| e.id == 0).map(|e| e.state[0]).collect();
    let [s, r, u] = traj.final_state();
    let eq = SlopeEquation::plus(f);
    // theta_bar has a local minimum where phi has a maximum, i.e. v' falls through 0.
    let turn = vec![
        EventSpec::new(|r: T, s: &[T; 1]| eq.rhs(r, s[0]).unwrap_or(T::nan()), Direction::Falling, false),
        EventSpec::new(|_, s: &[T; 1]| s[0], Direction::Any, false),
    ];
    let graph_opts = GraphOptions { stop_at_unit_argument: false, ..opts.graph };
    let graph = solve_graph(&eq, r, phi_end.tan(), u, r_max, &tight(cfg), &graph_opts, turn)?;
    check_graph_end(&graph, "lower")?;
    let mut samples = neck.profile_part(false);
    let count = opts.samples;
    let (a, b) = (traj.t_start(), traj.t_final());
    let mut defect = T::zero();
    for i in 1..count {
        let phi = grid_point(a, b, i, count);
        let st = traj.state_at(phi)?;
        let d = traj.derivative_at(phi)?;
        let ds = d[0];
        // Measured in the angle chart, where ds/dphi vanishes at a horizontal tangent.
        defect = defect.max((d[1] * d[1] + d[2] * d[2] - ds * ds).abs() / one.max(ds * ds));
        let k = one / ds;
        let residual = scaled_defect(f, k, phi.sin() / st[1], phi.cos());
        samples.push(ProfileSample { s: st[0], r: st[1], u: st[2], theta: T::FRAC_PI_2() - phi, kappa: -k, residual });
    }
    let graph_part = graph_samples(f, &graph, s, count, true)?;
    let mut s1_events = Vec::new();
    for &(rt, id) in &graph.events {
        let at = graph_part.partition_point(|p| p.r < rt).min(graph_part.len() - 1);
        match id {
            0 => s1_events.push(graph_part[at].s),
            _ => s0_events.push(graph_part[at].s),
        }
    }
    samples.extend(graph_part.into_iter().skip(1));
    let curve = curve_of(&samples);
    Ok(LowerBranch { profile: profile_of(samples, defect), case, s0_events, s1_events, graph, curve })
}

/// Mean of `u_branch - u_bowl` over `count` log points of the window.
fn tail_offset<T: Real>(
    curve: &[(T, T)],
    graph: &GraphSolution<T>,
    bowl: &BowlProfile<T>,
    window: (T, T),
) -> Result<T> {
    let pts = log_grid(f64_of(window.0), f64_of(window.1), 64);
    let mut sum = T::zero();
    for &r in &pts {
        let r = lit::<T>(r);
        sum = sum + height(curve, graph, r)? - bowl.eval(r)?.2;
    }
    Ok(sum / lit(pts.len() as f64))
}

impl<T: Real> UpperBranch<T> {
    pub fn height(&self, r: T) -> Result<T> {
        height(&self.curve, &self.graph, r)
    }

    /// Tail offset against a bowl profile over a window.
    pub fn offset(&self, bowl: &BowlProfile<T>, window: (T, T)) -> Result<T> {
        tail_offset(&self.curve, &self.graph, bowl, window)
    }
}

impl<T: Real> LowerBranch<T> {
    pub fn height(&self, r: T) -> Result<T> {
        height(&self.curve, &self.graph, r)
    }

    pub fn offset(&self, bowl: &BowlProfile<T>, window: (T, T)) -> Result<T> {
        tail_offset(&self.curve, &self.graph, bowl, window)
    }
}

fn alternative_exponent<T: Real>(f: &CurvatureFunction<T>) -> Option<T> {
    match f.family() {
        Family::HessianQuotient { k, .. } => {
            let (k, n) = (k as f64, f.dimension() as f64);
            Some(lit((2.0 * (k + 1.0) - n) / (k - 1.0)))
        }
        _ => None,
    }
}

/// Power-law fit of the lower tail slope `u' ~ -a r^b`.
fn fit_power_end<T: Real>(
    f: &CurvatureFunction<T>,
    lower: &LowerBranch<T>,
    r_neck: T,
    b: T,
    window: (T, T),
) -> Result<EndBehavior<T>> {
    let pts = log_grid(f64_of(window.0), f64_of(window.1), 200);
    let (mut lr, mut lv, mut us, mut ks) = (vec![], vec![], vec![], vec![]);
    for &r in &pts {
        let (v, dv, u) = lower.graph.eval(lit(r))?;
        let v = f64_of(v);
        if !(v < 0.0) {
            return Err(Error::Fit(format!("lower slope {v} is not negative at r = {r}")));
        }
        lr.push(r.ln());
        lv.push((-v).ln());
        us.push(f64_of(u));
        ks.push((f64_of(dv) / (1.0 + v * v).powf(1.5)).abs());
    }
    let (slope, _, _) = line_fit(&lr, &lv)?;
    let bf = f64_of(b);
    let (num, den) = pts.iter().zip(&lv).fold((0.0, 0.0), |(n, d), (r, l)| {
        let p = r.powf(bf);
        (n + l.exp() * p, d + p * p)
    });
    let logarithmic = (bf + 1.0).abs() < 1e-9;
    let log_amplitude = if logarithmic {
        let x: Vec<f64> = pts.iter().map(|r| (f64_of(r_neck) / r).ln()).collect();
        Some(lit(line_fit(&x, &us)?.0))
    } else {
        None
    };
    Ok(EndBehavior::PowerLaw {
        b,
        exponent: b + T::one(),
        alternative_exponent: alternative_exponent(f),
        a_r: lit(num / den),
        fitted_b: lit(slope),
        logarithmic,
        log_amplitude,
        curvature_decay: lit(ks.last().unwrap() / ks[0]),
    })
}

/// Separation `u_plus - u_minus` on 400 log points beyond the neck.
pub fn check_embeddedness<T: Real>(result: &CatenoidResult<T>) -> Result<EmbeddednessReport<T>> {
    let r_star = result.r_neck;
    let r_end = result.upper.graph.r_final().min(result.lower.graph.r_final());
    let points = 400;
    let mut report = EmbeddednessReport {
        r_star,
        points,
        min_gap: T::infinity(),
        r_at_min: r_star,
        gap_increasing: true,
        inconclusive: !(r_end > r_star),
    };
    if report.inconclusive {
        return Ok(report);
    }
    let mut prev = -T::infinity();
    let ratio = f64_of(r_end / r_star);
    for i in 1..=points {
        let r = r_star * lit::<T>(ratio.powf(i as f64 / points as f64));
        let r = r.min(r_end);
        let (hu, hl) = (result.upper.height(r)?, result.lower.height(r)?);
        let gap = hu - hl;
        if gap < report.min_gap {
            report.min_gap = gap;
            report.r_at_min = r;
        }
        // Both ends settle on the same attracting slope exponentially fast, so
        // the widening is only visible up to the rounding of the heights.
        let scale = T::one().max(hu.abs()).max(hl.abs());
        if gap < prev - lit::<T>(GAP_TOL) * scale {
            report.gap_increasing = false;
        }
        prev = gap;
    }
    Ok(report)
}

/// Builds the catenoidal translator with neck radius `r_neck`.
pub fn solve_catenoid<T: Real>(
    f: &CurvatureFunction<T>,
    r_neck: T,
    cfg: &IntegratorConfig<T>,
    opts: &CatenoidOptions<T>,
) -> Result<CatenoidResult<T>> {
    let (case, b) = classify_case(f)?;
    let neck = solve_neck(f, r_neck, cfg, opts)?;
    if !(opts.r_max > neck.upper_handoff.r.max(neck.lower_handoff.r) * lit(4.0)) {
        return Err(Error::Parameter(format!("r_max = {} is too close to the neck", opts.r_max)));
    }
    let upper = solve_upper_branch(f, &neck, cfg, opts)?;
    let lower = solve_lower_branch(f, &neck, cfg, opts)?;
    let bowl_opts = BowlOptions { graph: opts.graph, ..BowlOptions::default() };
    let bowl = solve_bowl_with(f, opts.r_max, cfg, &bowl_opts)?;
    let window = opts.window();
    let c_plus = upper.offset(&bowl, window)?;
    let (c_minus, end_behavior) = match case {
        CaseTag::ContinuousOrigin => {
            let c = lower.offset(&bowl, window)?;
            (Some(c), EndBehavior::BowlType { c_minus: c })
        }
        CaseTag::DerivativeOrigin => (None, fit_power_end(f, &lower, r_neck, b.unwrap(), window)?),
    };
    let pts = log_grid(f64_of(window.0), f64_of(window.1), 100);
    let mut lr = Vec::new();
    let mut lu = Vec::new();
    for &r in &pts {
        let u = f64_of(upper.height(lit(r))?);
        if !(u > 0.0) {
            return Err(Error::Fit(format!("upper height {u} is not positive at r = {r}")));
        }
        lr.push(r.ln());
        lu.push(u.ln());
    }
    let upper_growth = lit(line_fit(&lr, &lu)?.0);
    let mut result = CatenoidResult {
        curvature_key: f.key(),
        r_neck,
        case,
        s0: lower.s0_events.first().copied(),
        s1: lower.s1_events.first().copied(),
        neck,
        upper,
        lower,
        c_plus,
        c_minus,
        end_behavior,
        upper_growth,
        fit_window: window,
        embeddedness: EmbeddednessReport {
            r_star: r_neck,
            points: 0,
            min_gap: T::nan(),
            r_at_min: r_neck,
            gap_increasing: false,
            inconclusive: true,
        },
        bowl,
    };
    result.embeddedness = check_embeddedness(&result)?;
    Ok(result)
}

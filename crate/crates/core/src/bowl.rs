//! Bowl-type translators: the slope IVP from the axis, the asymptotic
//! coefficient formulas and tail fits.

use crate::curvature::{CurvatureFunction, DegeneracyKind};
use crate::error::{Error, Result};
use crate::fit::{least_squares, line_fit, log_grid};
use crate::graph::{solve_graph, GraphEnd, GraphOptions, GraphSolution, SlopeEquation};
use crate::implicit::ImplicitBranch;
use crate::ode::{IntegratorConfig, Termination};
use crate::scalar::{f64_of, lit, Real};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BowlOptions<T> {
    /// Start radius off the axis.
    pub eps0: T,
    /// Number of log-spaced output samples after the axis point.
    pub samples: usize,
    pub graph: GraphOptions<T>,
}

impl<T: Real> Default for BowlOptions<T> {
    fn default() -> Self {
        Self {
            eps0: lit(1e-6),
            samples: 1500,
            graph: GraphOptions { stop_at_unit_argument: true, ..GraphOptions::default() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BowlSample<T> {
    pub r: T,
    pub u: T,
    pub v: T,
    pub residual: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BowlEnd<T> {
    Entire,
    /// The slope argument reached 1: the graph only exists on a ball.
    CylinderBounded {
        r: T,
    },
}

/// Sampled bowl profile with continuous evaluation.
#[derive(Debug, Clone)]
pub struct BowlProfile<T> {
    pub curvature_key: String,
    pub alpha: T,
    pub beta: T,
    /// Umbilic slope ratio on the axis.
    pub lambda0: T,
    pub eps0: T,
    pub samples: Vec<BowlSample<T>>,
    pub end: BowlEnd<T>,
    pub max_residual: T,
    /// Range of the slope argument over the samples.
    pub argument_range: (T, T),
    pub solution: GraphSolution<T>,
}

impl<T: Real> BowlProfile<T> {
    pub fn r_max(&self) -> T {
        self.solution.r_final()
    }

    /// `(v, v', u)` at `r`, with `u(0) = 0`.
    pub fn eval(&self, r: T) -> Result<(T, T, T)> {
        if r >= T::zero() && r < self.eps0 {
            let l = self.lambda0;
            return Ok((l * r, l, l * r * r / lit(2.0)));
        }
        self.solution.eval(r)
    }
}

/// Solves the bowl IVP with default options.
pub fn solve_bowl<T: Real>(f: &CurvatureFunction<T>, r_max: T, cfg: &IntegratorConfig<T>) -> Result<BowlProfile<T>> {
    solve_bowl_with(f, r_max, cfg, &BowlOptions::default())
}

pub fn solve_bowl_with<T: Real>(
    f: &CurvatureFunction<T>,
    r_max: T,
    cfg: &IntegratorConfig<T>,
    opts: &BowlOptions<T>,
) -> Result<BowlProfile<T>> {
    let alpha = f.alpha_value();
    if !(alpha > T::one() / lit(3.0)) {
        return Err(Error::Parameter(format!("alpha = {alpha} must exceed 1/3")));
    }
    if !(r_max > opts.eps0) {
        return Err(Error::Parameter(format!("r_max = {r_max} must exceed eps0 = {}", opts.eps0)));
    }
    let one = T::one();
    let lambda0 = one / f.evaluate(one, one).powf(one / alpha);
    let eps0 = opts.eps0;
    let v0 = lambda0 * eps0;
    let eq = SlopeEquation::plus(f);
    let sol = solve_graph(&eq, eps0, v0, v0 * eps0 / lit(2.0), r_max, cfg, &opts.graph, Vec::new())?;
    let end = match sol.end {
        GraphEnd::ReachedEnd => BowlEnd::Entire,
        GraphEnd::UnitArgument { r } => BowlEnd::CylinderBounded { r },
        GraphEnd::Stopped { reason, r } => {
            let what = match reason {
                Termination::StepUnderflow => "step underflow",
                Termination::DomainExit => "right-hand side left its domain",
                _ => "integration stopped",
            };
            return Err(Error::Integration(format!("{what} at r = {}", f64_of(r))));
        }
    };
    let r_end = sol.r_final();
    let mut samples = vec![BowlSample { r: T::zero(), u: T::zero(), v: T::zero(), residual: T::zero() }];
    let (mut max_res, mut ymin, mut ymax) = (T::zero(), T::infinity(), -T::infinity());
    for r in log_grid(f64_of(eps0), f64_of(r_end), opts.samples.max(2)) {
        let r = lit::<T>(r).max(eps0).min(r_end);
        let (v, dv, u) = sol.eval(r)?;
        let residual = eq.backward_error(r, v, dv);
        max_res = max_res.max(residual);
        let y = eq.argument(r, v);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
        samples.push(BowlSample { r, u, v, residual });
    }
    Ok(BowlProfile {
        curvature_key: f.key(),
        alpha,
        beta: f.beta(),
        lambda0,
        eps0,
        samples,
        end,
        max_residual: max_res,
        argument_range: (ymin, ymax),
        solution: sol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Nondegenerate,
    Degenerate,
}

impl Regime {
    pub fn of<T: Real>(f: &CurvatureFunction<T>) -> Result<Self> {
        Ok(match f.classify_degeneracy()?.kind {
            DegeneracyKind::OneNondegenerate => Regime::Nondegenerate,
            DegeneracyKind::OneDegenerate => Regime::Degenerate,
        })
    }
}

/// Coefficients of `v = r^alpha - a r^-alpha + b r^-3alpha + ...`.
pub fn coeffs_nondegenerate<T: Real>(f: &CurvatureFunction<T>) -> Result<(T, T)> {
    if Regime::of(f)? != Regime::Nondegenerate {
        return Err(Error::Parameter(format!("{} is 1-degenerate", f.key())));
    }
    let alpha = f.alpha_value();
    if !(alpha > T::one() / lit(3.0)) {
        return Err(Error::Parameter(format!("alpha = {alpha} must exceed 1/3")));
    }
    let beta = f.beta();
    let one = T::one();
    let two = lit::<T>(2.0);
    let branch = ImplicitBranch::plus(f);
    let g1 = branch.dg_dy(one, one, 1)?;
    if g1 == T::zero() {
        return Err(Error::Degeneracy("d/dy g_plus(1,1) = 0".into()));
    }
    let g2 = branch.dg_dy(one, one, 2)?;
    let a = -alpha * (alpha / g1 + beta);
    let m = one - two * a;
    let w = a / alpha + beta;
    let den = two * alpha * g1 * (one - two * beta);
    let first = two * a * alpha * alpha - g1 * (m * beta * (one + beta * m) - two * a * a * beta);
    let second = g1 * w * (lit::<T>(3.0) * alpha - one) * m - alpha * g2 * w * w;
    Ok((a, (first + second) / den))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegenerateCoefficients<T> {
    /// Order of the power-law tail of `g_plus(y, 1)`.
    pub k: T,
    /// Amplitude of that tail.
    pub c: T,
    /// Growth exponent of `v`.
    pub d: T,
    /// Growth amplitude of `v`.
    pub amplitude: T,
    /// Set when the tail order sits on the boundary `k = 3 alpha - 1`.
    pub boundary_case: bool,
}

/// Tail data `(k, c)` and growth `(d, A)` of `v ~ A r^d` for 1-degenerate functions.
pub fn coeffs_degenerate<T: Real>(f: &CurvatureFunction<T>) -> Result<DegenerateCoefficients<T>> {
    if Regime::of(f)? != Regime::Degenerate {
        return Err(Error::Parameter(format!("{} is not 1-degenerate", f.key())));
    }
    let alpha = f.alpha_value();
    let one = T::one();
    let two = lit::<T>(2.0);
    let (k, c) = ImplicitBranch::plus(f).laurent_tail()?;
    let bound = lit::<T>(3.0) * alpha - one;
    if k < bound - lit(1e-6) {
        return Err(Error::Parameter(format!("tail order {k} below 3 alpha - 1 = {bound}")));
    }
    let boundary_case = (k - bound).abs() <= lit(1e-6);
    let d = alpha * (k + one) / (k - two * alpha + one);
    let amplitude = (d / c).powf(alpha / (two * alpha - one - k));
    Ok(DegenerateCoefficients { k, c, d, amplitude, boundary_case })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Coefficients<T> {
    Nondegenerate { a: T, b: T },
    Degenerate { d: T, amplitude: T },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport<T> {
    pub regime: Regime,
    pub formula: Coefficients<T>,
    pub fitted: Coefficients<T>,
    /// Relative errors; a coefficient whose formula value vanishes is
    /// compared in absolute terms.
    pub rel_errors: BTreeMap<String, f64>,
    pub fit_window: (T, T),
    /// Tail data of the slice branch in the degenerate regime.
    pub tail: Option<DegenerateCoefficients<T>>,
}

fn rel_err(fitted: f64, exact: f64) -> f64 {
    if exact.abs() < 1e-12 {
        (fitted - exact).abs()
    } else {
        (fitted - exact).abs() / exact.abs()
    }
}

fn window_samples<T: Real>(profile: &BowlProfile<T>, window: Option<(T, T)>) -> Result<((T, T), Vec<(f64, f64, f64)>)> {
    let r_end = profile.r_max();
    let (lo, hi) = window.unwrap_or((r_end / lit(10.0), r_end / lit(2.0)));
    if !(lo > profile.eps0 && hi > lo && hi <= r_end) {
        return Err(Error::Range(format!(
            "fit window [{}, {}] outside the profile [{}, {}]",
            f64_of(lo),
            f64_of(hi),
            f64_of(profile.eps0),
            f64_of(r_end)
        )));
    }
    if r_end < lit::<T>(10.0) * lo * lit(1.0 - 1e-12) {
        return Err(Error::Range(format!("profile ends at {} but the window starts at {}", f64_of(r_end), f64_of(lo))));
    }
    let mut pts = Vec::new();
    for r in log_grid(f64_of(lo), f64_of(hi), 400) {
        let (v, _, u) = profile.eval(lit(r))?;
        pts.push((r, f64_of(v), f64_of(u)));
    }
    if pts.windows(2).any(|w| !(w[1].1 > w[0].1)) {
        return Err(Error::Fit("slope is not increasing on the fit window".into()));
    }
    Ok(((lo, hi), pts))
}

/// Fits the tail of a profile and pairs the result with the formula values.
pub fn fit_tail<T: Real>(
    f: &CurvatureFunction<T>,
    profile: &BowlProfile<T>,
    regime: Regime,
    window: Option<(T, T)>,
) -> Result<AsymptoticReport<T>> {
    let (win, pts) = window_samples(profile, window)?;
    let alpha = f64_of(profile.alpha);
    let mut rel_errors = BTreeMap::new();
    match regime {
        Regime::Nondegenerate => {
            let (a, b) = coeffs_nondegenerate(f)?;
            let psi: Vec<f64> = pts.iter().map(|(r, v, _)| r.powf(alpha) * (r.powf(alpha) - v)).collect();
            let a_hat = psi.iter().sum::<f64>() / psi.len() as f64;
            let ones = vec![1.0; pts.len()];
            let c1: Vec<f64> = pts.iter().map(|(r, _, _)| r.powf(-2.0 * alpha)).collect();
            let c2: Vec<f64> = pts.iter().map(|(r, _, _)| r.powf(-4.0 * alpha)).collect();
            let coef = least_squares(&[ones, c1, c2], &psi)?;
            let b_hat = -coef[1];
            rel_errors.insert("a".into(), rel_err(a_hat, f64_of(a)));
            rel_errors.insert("b".into(), rel_err(b_hat, f64_of(b)));
            Ok(AsymptoticReport {
                regime,
                formula: Coefficients::Nondegenerate { a, b },
                fitted: Coefficients::Nondegenerate { a: lit(a_hat), b: lit(b_hat) },
                rel_errors,
                fit_window: win,
                tail: None,
            })
        }
        Regime::Degenerate => {
            let tail = coeffs_degenerate(f)?;
            let lr: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
            let lv: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
            let (d_hat, intercept, _) = line_fit(&lr, &lv)?;
            let amp_hat = intercept.exp();
            rel_errors.insert("d".into(), rel_err(d_hat, f64_of(tail.d)));
            rel_errors.insert("amplitude".into(), rel_err(amp_hat, f64_of(tail.amplitude)));
            Ok(AsymptoticReport {
                regime,
                formula: Coefficients::Degenerate { d: tail.d, amplitude: tail.amplitude },
                fitted: Coefficients::Degenerate { d: lit(d_hat), amplitude: lit(amp_hat) },
                rel_errors,
                fit_window: win,
                tail: Some(tail),
            })
        }
    }
}

/// Log-log slope of `u` over the fit window.
pub fn growth_exponent<T: Real>(profile: &BowlProfile<T>, window: Option<(T, T)>) -> Result<T> {
    let (_, pts) = window_samples(profile, window)?;
    let lr: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let lu: Vec<f64> = pts.iter().map(|p| p.2.ln()).collect();
    Ok(lit(line_fit(&lr, &lu)?.0))
}

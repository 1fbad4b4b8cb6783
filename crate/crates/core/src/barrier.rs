//! Barriers for the graph ODE `v' = (1 + v^2)^(beta + 1) g(y)`: the implicit
//! cone `w / (r (1 + w^2)^beta) = m`, the power law `w = -a r^b`, their
//! differential inequalities on the `-1` branch, and ordering checks between
//! integrated solutions.

use crate::curvature::CurvatureFunction;
use crate::error::{Error, Result};
use crate::graph::{solve_graph, GraphOptions, SlopeEquation};
use crate::implicit::{BranchSign, ImplicitBranch};
use crate::ode::IntegratorConfig;
use crate::roots::solve_increasing;
use crate::scalar::{f64_of, lit, Real};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Margins within this fraction of the compared terms count as zero.
const MARGIN_TOL: f64 = 1e-12;
/// Default ordering tolerance on the slope gap.
pub const ORDERING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BarrierKind<T> {
    /// `w / (r (1 + w^2)^beta) = mbar`, non-positive branch.
    ImplicitCone { mbar: T },
    /// `w = -a r^b`.
    Power { a: T, b: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BarrierSpec<T> {
    pub kind: BarrierKind<T>,
    pub valid_range: (T, T),
}

/// Role a barrier is meant to play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Super,
    Sub,
}

impl<T: Real> BarrierSpec<T> {
    pub fn implicit_cone(mbar: T, valid_range: (T, T)) -> Result<Self> {
        if !(mbar < T::zero()) {
            return Err(Error::Parameter(format!("cone slope must be negative, got {mbar}")));
        }
        Self { kind: BarrierKind::ImplicitCone { mbar }, valid_range }.checked()
    }

    pub fn power(a: T, b: T, valid_range: (T, T)) -> Result<Self> {
        if !(a > T::zero() && b < T::zero()) {
            return Err(Error::Parameter(format!("power barrier needs a > 0 and b < 0, got a = {a}, b = {b}")));
        }
        Self { kind: BarrierKind::Power { a, b }, valid_range }.checked()
    }

    fn checked(self) -> Result<Self> {
        let (lo, hi) = self.valid_range;
        if !(lo > T::zero() && hi > lo && hi.is_finite()) {
            return Err(Error::Parameter(format!("invalid range [{lo}, {hi}]")));
        }
        Ok(self)
    }

    /// The cone is a subsolution candidate, the power law a supersolution one.
    pub fn intended_role(&self) -> Role {
        match self.kind {
            BarrierKind::ImplicitCone { .. } => Role::Sub,
            BarrierKind::Power { .. } => Role::Super,
        }
    }

    /// Whether the cone slope lies in `[mbar0, 0)` and in `[-1, 0)`.
    pub fn cone_admissibility(&self, f: &CurvatureFunction<T>) -> Option<ConeAdmissibility> {
        let BarrierKind::ImplicitCone { mbar } = self.kind else {
            return None;
        };
        let mbar0 = f.has_negative_level().then(|| ImplicitBranch::minus(f).ok()?.mbar0()).flatten();
        Some(ConeAdmissibility { above_mbar0: mbar0.map(|m| mbar >= m), above_minus_one: mbar >= -T::one() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConeAdmissibility {
    /// `None` when `mbar0` does not exist.
    pub above_mbar0: Option<bool>,
    pub above_minus_one: bool,
}

/// Solves `x / (1 + x^2)^beta = target` for `x` with the sign of `target`.
pub fn invert_slope_map<T: Real>(target: T, beta: T) -> Result<T> {
    let half = lit::<T>(0.5);
    if !(beta < half) {
        return Err(Error::Parameter(format!("slope map is not monotone for beta = {beta} >= 1/2")));
    }
    if target == T::zero() {
        return Ok(T::zero());
    }
    if beta == T::zero() {
        return Ok(target);
    }
    let one = T::one();
    let two = lit::<T>(2.0);
    let map = |x: T| {
        let q = one + x * x;
        (x / q.powf(beta), (one + (one - two * beta) * x * x) / q.powf(beta + one))
    };
    // Start from the small and large slope asymptotes.
    let large = (target.abs()).powf(one / (one - two * beta));
    let guess = target.abs().max(large);
    let spread = lit::<T>(1e-3) * guess;
    let (lo, hi) = if target > T::zero() { (T::zero(), T::infinity()) } else { (-T::infinity(), T::zero()) };
    let s = target.signum();
    let (a0, b0) = (s * (guess - spread).max(guess * half), s * (guess + spread));
    solve_increasing(map, target, lo, hi, a0, b0, lit(1e-15))
}

/// `(w, w')` of the barrier at radius `r`.
pub fn evaluate_barrier<T: Real>(spec: &BarrierSpec<T>, r: T, beta: T) -> Result<(T, T)> {
    let (lo, hi) = spec.valid_range;
    if !(r >= lo && r <= hi) {
        return Err(Error::Range(format!("r = {} outside [{}, {}]", f64_of(r), f64_of(lo), f64_of(hi))));
    }
    match spec.kind {
        BarrierKind::Power { a, b } => Ok((-a * r.powf(b), -a * b * r.powf(b - T::one()))),
        BarrierKind::ImplicitCone { mbar } => {
            let one = T::one();
            let w = invert_slope_map(mbar * r, beta)?;
            let q = one + w * w;
            let dw = mbar * q.powf(beta + one) / (one + (one - lit::<T>(2.0) * beta) * w * w);
            Ok((w, dw))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict<T> {
    VerifiedSuper {
        r_star: T,
    },
    VerifiedSub {
        r_star: T,
    },
    /// The tail of the grid has the opposite sign; `r_at` is the largest
    /// radius with a wrong-signed margin.
    Violated {
        r_at: T,
    },
    /// No grid point was inside the branch domain.
    Unverified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginSample<T> {
    pub r: T,
    pub w: T,
    /// `w' - RHS(w)`; `None` when the argument left the branch domain.
    pub margin: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierReport<T> {
    pub spec: BarrierSpec<T>,
    pub role: Role,
    pub samples: Vec<MarginSample<T>>,
    pub skipped: usize,
    pub min_margin: T,
    pub max_margin: T,
    /// Sign held by the margins from `observed_r_star` to the end of the grid.
    pub observed: Option<Role>,
    pub observed_r_star: T,
    pub verdict: Verdict<T>,
    pub admissibility: Option<ConeAdmissibility>,
}

impl<T: Real> BarrierReport<T> {
    pub fn margins(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.samples.iter().filter_map(|s| s.margin.map(|m| (s.r, m)))
    }
}

fn sign_class<T: Real>(m: T, scale: T) -> i8 {
    if m.abs() <= lit::<T>(MARGIN_TOL) * scale {
        0
    } else if m > T::zero() {
        1
    } else {
        -1
    }
}

/// Margins of the barrier against the `-1` branch equation on `grid`.
pub fn verify_inequality<T: Real>(
    spec: &BarrierSpec<T>,
    f: &CurvatureFunction<T>,
    grid: &[T],
) -> Result<BarrierReport<T>> {
    let branch = ImplicitBranch::minus(f)?;
    let beta = f.beta();
    let one = T::one();
    if grid.is_empty() {
        return Err(Error::Parameter("empty grid".into()));
    }
    let evaluated: Vec<Result<(MarginSample<T>, i8)>> = grid
        .par_iter()
        .map(|&r| {
            let (w, dw) = evaluate_barrier(spec, r, beta)?;
            let q = one + w * w;
            let y = w / (r * q.powf(beta));
            Ok(match branch.g_minus(y) {
                Ok(g) => {
                    let rhs = q.powf(beta + one) * g;
                    let m = dw - rhs;
                    (MarginSample { r, w, margin: Some(m) }, sign_class(m, dw.abs() + rhs.abs()))
                }
                Err(Error::Domain(_)) => (MarginSample { r, w, margin: None }, 0),
                Err(e) => return Err(e),
            })
        })
        .collect();
    let mut samples = Vec::with_capacity(grid.len());
    let mut signs = Vec::with_capacity(grid.len());
    for e in evaluated {
        let (s, c) = e?;
        samples.push(s);
        signs.push(c);
    }
    let skipped = samples.iter().filter(|s| s.margin.is_none()).count();
    let role = spec.intended_role();
    let values: Vec<T> = samples.iter().filter_map(|s| s.margin).collect();
    let min_margin = values.iter().copied().fold(T::infinity(), T::min);
    let max_margin = values.iter().copied().fold(T::neg_infinity(), T::max);
    let mut report = BarrierReport {
        spec: *spec,
        role,
        samples,
        skipped,
        min_margin,
        max_margin,
        observed: None,
        observed_r_star: T::nan(),
        verdict: Verdict::Unverified,
        admissibility: spec.cone_admissibility(f),
    };
    if values.is_empty() {
        return Ok(report);
    }
    // Tail sign: the sign of the last nonzero margin, zero margins fitting both.
    let valid: Vec<usize> = (0..grid.len()).filter(|&i| report.samples[i].margin.is_some()).collect();
    let tail = valid.iter().rev().map(|&i| signs[i]).find(|&c| c != 0).unwrap_or(0);
    let mut start = valid[0];
    for &i in valid.iter().rev() {
        if signs[i] != 0 && signs[i] != tail {
            break;
        }
        start = i;
    }
    let r_star = report.samples[start].r;
    report.observed_r_star = r_star;
    report.observed = match tail {
        1 => Some(Role::Super),
        -1 => Some(Role::Sub),
        _ => Some(role),
    };
    let wrong = match role {
        Role::Super => -1,
        Role::Sub => 1,
    };
    report.verdict = if tail == wrong {
        let last_bad = valid.iter().rev().find(|&&i| signs[i] == wrong).copied().unwrap();
        Verdict::Violated { r_at: report.samples[last_bad].r }
    } else {
        match role {
            Role::Super => Verdict::VerifiedSuper { r_star },
            Role::Sub => Verdict::VerifiedSub { r_star },
        }
    };
    Ok(report)
}

/// Slope `b = d/dy g_minus(0, -1)` for the power barrier, when finite.
pub fn power_exponent<T: Real>(f: &CurvatureFunction<T>) -> Result<T> {
    ImplicitBranch::minus(f)?
        .origin_data()?
        .slope
        .ok_or_else(|| Error::Unsupported(format!("{} has no finite slope of g_minus at the origin", f.key())))
}

/// Range of slope arguments `v0 / (r0 (1 + v0^2)^beta)` for which ordering is
/// guaranteed.
pub fn admissible_arguments<T: Real>(eq: &SlopeEquation<T>) -> Result<(T, T)> {
    let f = eq.curvature();
    let a = f.alpha_value();
    let root = |c: T| T::one() / c.powf(T::one() / a);
    match eq.sign() {
        BranchSign::Plus => {
            let left = root(f.evaluate(T::one(), T::one()));
            if f.is_degenerate() {
                Ok((left, left * lit(4.0)))
            } else {
                Ok((left, root(f.evaluate(T::zero(), T::one()))))
            }
        }
        BranchSign::Minus => Ok((decreasing_limit(&ImplicitBranch::minus(f)?)?, T::zero())),
    }
}

/// Left end of the interval `(y, 0)` on which `g_minus` is finite and
/// decreasing, found by scanning from the origin toward the domain bound.
/// Poles of the slice function can cut the domain short.
pub fn decreasing_limit<T: Real>(branch: &ImplicitBranch<T>) -> Result<T> {
    const SCAN: usize = 4000;
    let lower = branch.minus_lower_bound();
    let at = |j: usize| lower * lit::<T>(j as f64 / SCAN as f64);
    let mut prev = branch.g_minus(at(1))?;
    let mut limit = at(1);
    for j in 2..SCAN {
        match branch.g_minus(at(j)) {
            Ok(g) if g.is_finite() && g >= prev => {
                prev = g;
                limit = at(j);
            }
            _ => break,
        }
    }
    Ok(if limit == at(SCAN - 1) { lower } else { limit })
}

/// `count` ordered pairs of initial slopes at `r0` drawn from the admissible
/// argument range; the minus branch excludes the open end at zero.
pub fn random_ordered_pairs<T: Real>(eq: &SlopeEquation<T>, r0: T, count: usize, seed: u64) -> Result<Vec<(T, T)>> {
    let (lo, hi) = admissible_arguments(eq)?;
    let (lo, hi) = (f64_of(lo), f64_of(hi));
    let hi = if eq.sign() == BranchSign::Minus { hi - 1e-3 * (hi - lo) } else { hi };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let y1: f64 = rng.gen_range(lo..=hi);
            let y2: f64 = rng.gen_range(lo..=hi);
            let v1 = invert_slope_map(r0 * lit(y1.min(y2)), eq.beta())?;
            let v2 = invert_slope_map(r0 * lit(y1.max(y2)), eq.beta())?;
            Ok((v1, v2))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairOutcome<T> {
    pub lower: T,
    pub upper: T,
    /// Minimum of `(v_upper - v_lower) / max(1, |v_upper|)` over the grid.
    pub min_gap: T,
    pub r_at_min: T,
    /// Largest grid radius both solutions reached.
    pub reached: T,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport<T> {
    pub r0: T,
    pub r_end: T,
    pub grid_points: usize,
    pub tolerance: T,
    pub pairs: Vec<PairOutcome<T>>,
    pub min_gap: T,
    /// Pairs whose gap fell below `-tolerance`.
    pub violations: usize,
    /// Pairs that did not reach `r_end`.
    pub incomplete: usize,
}

impl<T> OrderingReport<T> {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.incomplete == 0
    }
}

/// Integrates each pair `(v_lower, v_upper)` from `r0` to `r_end` and checks
/// that the solutions stay ordered on a shared log grid.
pub fn compare_orderings<T: Real>(
    eq: &SlopeEquation<T>,
    pairs: &[(T, T)],
    r0: T,
    r_end: T,
    cfg: &IntegratorConfig<T>,
    opts: &GraphOptions<T>,
    grid_points: usize,
) -> Result<OrderingReport<T>> {
    cfg.validate()?;
    if !(r0 > T::zero() && r_end > r0) || grid_points < 2 {
        return Err(Error::Parameter(format!("need 0 < r0 < r_end and 2+ grid points, got [{r0}, {r_end}]")));
    }
    if let Some((a, b)) = pairs.iter().find(|(a, b)| !(a <= b)) {
        return Err(Error::Parameter(format!("pair ({a}, {b}) is not ordered")));
    }
    let step = (r_end / r0).ln() / lit::<T>((grid_points - 1) as f64);
    let grid: Vec<T> = (0..grid_points)
        .map(|i| if i + 1 == grid_points { r_end } else { r0 * (step * lit::<T>(i as f64)).exp() })
        .collect();
    let tolerance = lit::<T>(ORDERING_TOL);
    let slopes = |v0: T| -> (Vec<T>, Option<String>) {
        let sol = match solve_graph(eq, r0, v0, T::zero(), r_end, cfg, opts, Vec::new()) {
            Ok(s) => s,
            Err(e) => return (Vec::new(), Some(e.to_string())),
        };
        let mut out = Vec::with_capacity(grid.len());
        for &r in &grid {
            match sol.eval(r) {
                Ok((v, _, _)) => out.push(v),
                Err(_) => break,
            }
        }
        let err = (out.len() < grid.len()).then(|| format!("stopped at r = {}", f64_of(sol.r_final())));
        (out, err)
    };
    let pairs: Vec<PairOutcome<T>> = pairs
        .par_iter()
        .map(|&(lower, upper)| {
            let (vl, el) = slopes(lower);
            let (vu, eu) = slopes(upper);
            let n = vl.len().min(vu.len());
            let mut min_gap = T::infinity();
            let mut r_at_min = r0;
            for i in 0..n {
                let gap = (vu[i] - vl[i]) / T::one().max(vu[i].abs());
                if gap < min_gap {
                    min_gap = gap;
                    r_at_min = grid[i];
                }
            }
            PairOutcome {
                lower,
                upper,
                min_gap,
                r_at_min,
                reached: if n == 0 { r0 } else { grid[n - 1] },
                error: el.or(eu),
            }
        })
        .collect();
    let min_gap = pairs.iter().map(|p| p.min_gap).fold(T::infinity(), T::min);
    let violations = pairs.iter().filter(|p| p.min_gap < -tolerance).count();
    let incomplete = pairs.iter().filter(|p| p.error.is_some()).count();
    Ok(OrderingReport { r0, r_end, grid_points, tolerance, pairs, min_gap, violations, incomplete })
}

/// Log-spaced grid of `count` points on `[lo, hi]` with exact endpoints.
pub fn log_grid<T: Real>(lo: T, hi: T, count: usize) -> Vec<T> {
    let step = (hi / lo).ln() / lit::<T>((count.max(2) - 1) as f64);
    (0..count)
        .map(|i| match i {
            0 => lo,
            _ if i + 1 == count => hi,
            _ => lo * (step * lit::<T>(i as f64)).exp(),
        })
        .collect()
}

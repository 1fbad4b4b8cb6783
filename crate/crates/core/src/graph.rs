//! The graph ODE `v' = (1 + v^2)^(beta + 1) g(y)` with
//! `y = v / (r (1 + v^2)^beta)`, where `g` is a level branch of the slice
//! function, and a solution type with continuous evaluation of `v`, `v'` and
//! `u = integral of v`.
//!
//! Growing solutions become stiff like `r^(2 alpha - 1)`. Once the stiffness
//! ratio `|dF/dv| r` passes a limit the solution has collapsed onto the slow
//! manifold of the equation, which is then computed directly: `M_0` solves
//! `F(r, M) = 0` and `M_{j+1}` solves `F(r, M) = M_j'` on a log-spaced grid,
//! with `M_j'` from fourth-order differences in `ln r`.

use crate::curvature::CurvatureFunction;
use crate::error::{Error, Result};
use crate::implicit::{solve_level, BranchSign, Component, ImplicitBranch};
use crate::ode::{integrate, Direction, EventSpec, IntegratorConfig, Termination, Trajectory};
use crate::roots::solve_increasing;
use crate::scalar::{f64_of, lit, Real};
use serde::Serialize;

/// Right-hand side of the graph ODE for one level branch.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeEquation<T> {
    f: CurvatureFunction<T>,
    beta: T,
    minus: Option<ImplicitBranch<T>>,
    tol: T,
}

impl<T: Real> SlopeEquation<T> {
    /// Equation driven by the `+1` level on the principal component.
    pub fn plus(f: &CurvatureFunction<T>) -> Self {
        Self { f: f.clone(), beta: f.beta(), minus: None, tol: lit(1e-12) }
    }

    /// Equation driven by the `-1` branch.
    pub fn minus(f: &CurvatureFunction<T>) -> Result<Self> {
        Ok(Self { f: f.clone(), beta: f.beta(), minus: Some(ImplicitBranch::minus(f)?), tol: lit(1e-12) })
    }

    pub fn sign(&self) -> BranchSign {
        if self.minus.is_some() {
            BranchSign::Minus
        } else {
            BranchSign::Plus
        }
    }

    pub fn curvature(&self) -> &CurvatureFunction<T> {
        &self.f
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// Slope argument `v / (r (1 + v^2)^beta)`.
    pub fn argument(&self, r: T, v: T) -> T {
        v / (r * (T::one() + v * v).powf(self.beta))
    }

    fn level(&self, y: T) -> Result<T> {
        match &self.minus {
            None => solve_level(&self.f, y, T::one(), Component::Principal, self.tol),
            Some(b) => b.g_minus(y),
        }
    }

    pub fn rhs(&self, r: T, v: T) -> Result<T> {
        let q = T::one() + v * v;
        Ok(q.powf(self.beta + T::one()) * self.level(self.argument(r, v))?)
    }

    /// Right-hand side and its `v` derivative.
    pub fn rhs_dv(&self, r: T, v: T) -> Result<(T, T)> {
        let one = T::one();
        let two = lit::<T>(2.0);
        let b = self.beta;
        let q = one + v * v;
        let y = self.argument(r, v);
        let g = self.level(y)?;
        let (fx, fy) = self.f.grad(g, y);
        if !(fx > T::zero()) {
            return Err(Error::Degeneracy(format!("d/dx f = {fx} at ({g}, {y})")));
        }
        let gy = -fy / fx;
        let dy_dv = (one + (one - two * b) * v * v) / (q.powf(b + one) * r);
        let f = q.powf(b + one) * g;
        let fv = (b + one) * q.powf(b) * two * v * g + q.powf(b + one) * gy * dy_dv;
        Ok((f, fv))
    }

    /// Defect `|v' - F(r, v)|` as a relative backward error in `v`.
    pub fn backward_error(&self, r: T, v: T, dv: T) -> T {
        match self.rhs_dv(r, v) {
            Ok((f, fv)) => (dv - f).abs() / (fv.abs() + T::one() / r) / T::one().max(v.abs()),
            Err(_) => T::infinity(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphOptions<T> {
    /// Stiffness ratio `|dF/dv| r` at which the slow manifold takes over.
    pub stiffness_limit: T,
    /// Grid spacing in `ln r` on the slow manifold.
    pub manifold_step: T,
    /// Stop when the slope argument reaches 1.
    pub stop_at_unit_argument: bool,
}

impl<T: Real> Default for GraphOptions<T> {
    fn default() -> Self {
        Self { stiffness_limit: lit(1e5), manifold_step: lit(2e-3), stop_at_unit_argument: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphEnd<T> {
    ReachedEnd,
    UnitArgument { r: T },
    Stopped { reason: Termination, r: T },
}

/// Solution of the graph ODE on `[r0, r_end]`.
#[derive(Debug, Clone)]
pub struct GraphSolution<T> {
    pub equation: SlopeEquation<T>,
    pub end: GraphEnd<T>,
    /// Radius where the slow manifold took over.
    pub switch_radius: Option<T>,
    /// Relative jump between the explicit solution and the manifold there.
    pub switch_gap: T,
    /// Radii of the extra events, by event index.
    pub events: Vec<(T, usize)>,
    traj: Trajectory<T, 1>,
    knots: Vec<T>,
    v: Vec<T>,
    dv: Vec<T>,
    u: Vec<T>,
}

fn hermite_integral<T: Real>(h: T, va: T, vb: T, da: T, db: T) -> T {
    h / lit(2.0) * (va + vb) + h * h / lit(12.0) * (da - db)
}

fn hermite<T: Real>(x0: T, x1: T, v0: T, v1: T, d0: T, d1: T, x: T) -> (T, T) {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let (two, three) = (lit::<T>(2.0), lit::<T>(3.0));
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = two * s3 - three * s2 + T::one();
    let h10 = s3 - two * s2 + s;
    let h01 = -two * s3 + three * s2;
    let h11 = s3 - s2;
    let v = h00 * v0 + h10 * h * d0 + h01 * v1 + h11 * h * d1;
    let six = lit::<T>(6.0);
    let dv = ((six * s2 - six * s) * v0
        + (three * s2 - lit::<T>(4.0) * s + T::one()) * h * d0
        + (-six * s2 + six * s) * v1
        + (three * s2 - two * s) * h * d1)
        / h;
    (v, dv)
}

/// Fourth-order derivative of samples on a uniform grid of spacing `step`.
fn differentiate<T: Real>(m: &[T], step: T) -> Vec<T> {
    let n = m.len();
    let c = |x: f64| lit::<T>(x);
    let twelve_h = c(12.0) * step;
    (0..n)
        .map(|k| {
            let s = if k >= 2 && k + 2 < n {
                -m[k + 2] + c(8.0) * m[k + 1] - c(8.0) * m[k - 1] + m[k - 2]
            } else if k == 0 {
                c(-25.0) * m[0] + c(48.0) * m[1] - c(36.0) * m[2] + c(16.0) * m[3] - c(3.0) * m[4]
            } else if k == 1 {
                c(-3.0) * m[0] - c(10.0) * m[1] + c(18.0) * m[2] - c(6.0) * m[3] + m[4]
            } else if k == n - 1 {
                c(25.0) * m[n - 1] - c(48.0) * m[n - 2] + c(36.0) * m[n - 3] - c(16.0) * m[n - 4] + c(3.0) * m[n - 5]
            } else {
                c(3.0) * m[n - 1] + c(10.0) * m[n - 2] - c(18.0) * m[n - 3] + c(6.0) * m[n - 4] - m[n - 5]
            };
            s / twelve_h
        })
        .collect()
}

impl<T: Real> GraphSolution<T> {
    pub fn r_start(&self) -> T {
        self.knots[0]
    }

    pub fn r_final(&self) -> T {
        *self.knots.last().unwrap()
    }

    /// Knot radii (integrator nodes, then manifold grid).
    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn trajectory(&self) -> &Trajectory<T, 1> {
        &self.traj
    }

    /// `(v, v', u)` at radius `r`.
    pub fn eval(&self, r: T) -> Result<(T, T, T)> {
        let (r0, r1) = (self.r_start(), self.r_final());
        if !(r >= r0 && r <= r1) {
            return Err(Error::Range(format!("r = {} outside [{}, {}]", f64_of(r), f64_of(r0), f64_of(r1))));
        }
        let i = self.knots.partition_point(|&k| k <= r).saturating_sub(1).min(self.knots.len() - 1);
        if self.knots[i] == r {
            return Ok((self.v[i], self.dv[i], self.u[i]));
        }
        let explicit = self.switch_radius.map_or(true, |rs| r <= rs);
        let (v, dv) = if explicit {
            (self.traj.state_at(r)?[0], self.traj.derivative_at(r)?[0])
        } else {
            hermite(self.knots[i], self.knots[i + 1], self.v[i], self.v[i + 1], self.dv[i], self.dv[i + 1], r)
        };
        let u = self.u[i] + hermite_integral(r - self.knots[i], self.v[i], v, self.dv[i], dv);
        Ok((v, dv, u))
    }

    /// Per-sample relative backward error of the ODE.
    pub fn residual(&self, r: T) -> Result<T> {
        let (v, dv, _) = self.eval(r)?;
        Ok(self.equation.backward_error(r, v, dv))
    }
}

/// Extra event on `(r, v)`.
pub type GraphEvent<'a, T> = EventSpec<'a, T, 1>;

/// Solves the graph ODE from `(r0, v0)` to `r_end`, with `u(r0) = u0`.
pub fn solve_graph<T: Real>(
    eq: &SlopeEquation<T>,
    r0: T,
    v0: T,
    u0: T,
    r_end: T,
    cfg: &IntegratorConfig<T>,
    opts: &GraphOptions<T>,
    extra: Vec<GraphEvent<'_, T>>,
) -> Result<GraphSolution<T>> {
    let rhs = |r: T, s: &[T; 1]| [eq.rhs(r, s[0]).unwrap_or(T::nan())];
    let limit = opts.stiffness_limit;
    let mut events: Vec<GraphEvent<'_, T>> = Vec::new();
    events.push(EventSpec::new(
        move |r: T, s: &[T; 1]| match eq.rhs_dv(r, s[0]) {
            Ok((_, fv)) => (fv.abs() * r).ln() - limit.ln(),
            Err(_) => T::nan(),
        },
        Direction::Rising,
        limit.is_finite(),
    ));
    events.push(EventSpec::new(
        move |r: T, s: &[T; 1]| eq.argument(r, s[0]) - T::one(),
        Direction::Rising,
        opts.stop_at_unit_argument,
    ));
    let n_extra = extra.len();
    events.extend(extra);
    let traj = integrate(rhs, r0, [v0], r_end, cfg, &events)?;
    let mut end = match traj.termination {
        Termination::ReachedEnd => GraphEnd::ReachedEnd,
        reason => GraphEnd::Stopped { reason, r: traj.t_final() },
    };
    let mut switch = None;
    let mut extra_hits = Vec::new();
    for hit in &traj.events {
        if hit.id >= 2 && hit.id - 2 < n_extra {
            extra_hits.push((hit.t, hit.id - 2));
        }
    }
    if traj.termination == Termination::TerminalEvent {
        let last = traj.events.last().unwrap();
        match last.id {
            0 => switch = Some(last.t),
            1 => end = GraphEnd::UnitArgument { r: last.t },
            _ => {}
        }
    }
    let mut knots: Vec<T> = traj.nodes.iter().map(|n| n.0).collect();
    let mut v: Vec<T> = traj.nodes.iter().map(|n| n.1[0]).collect();
    let mut dv: Vec<T> = traj.derivatives.iter().map(|d| d[0]).collect();
    let mut switch_gap = T::zero();
    if let Some(rs) = switch {
        let (mr, mv, mdv) = slow_manifold(eq, rs, *v.last().unwrap(), r_end, opts)?;
        switch_gap = (mv[0] - *v.last().unwrap()).abs() / T::one().max(mv[0].abs());
        knots.extend_from_slice(&mr[1..]);
        v.extend_from_slice(&mv[1..]);
        dv.extend_from_slice(&mdv[1..]);
        end = GraphEnd::ReachedEnd;
    }
    let mut u = Vec::with_capacity(knots.len());
    u.push(u0);
    for i in 1..knots.len() {
        let h = knots[i] - knots[i - 1];
        let prev = u[i - 1];
        u.push(prev + hermite_integral(h, v[i - 1], v[i], dv[i - 1], dv[i]));
    }
    Ok(GraphSolution {
        equation: eq.clone(),
        end,
        switch_radius: switch,
        switch_gap,
        events: extra_hits,
        traj,
        knots,
        v,
        dv,
        u,
    })
}

/// Slow manifold of the graph ODE on a log grid from `r_s` to `r_end`.
fn slow_manifold<T: Real>(
    eq: &SlopeEquation<T>,
    r_s: T,
    v_s: T,
    r_end: T,
    opts: &GraphOptions<T>,
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let span = (r_end / r_s).ln();
    let count = ((span / opts.manifold_step).ceil().to_usize().unwrap_or(0) + 1).max(9);
    let step = span / lit::<T>((count - 1) as f64);
    let radii: Vec<T> =
        (0..count).map(|k| if k + 1 == count { r_end } else { r_s * (step * lit::<T>(k as f64)).exp() }).collect();
    let alpha = eq.curvature().alpha_value();
    // The manifold keeps the sign of the solution at the switch.
    let (lo, hi) = if v_s < T::zero() { (-T::infinity(), T::zero()) } else { (T::zero(), T::infinity()) };
    let solve = |targets: &[T], prev: Option<&[T]>| -> Result<Vec<T>> {
        let mut out: Vec<T> = Vec::with_capacity(count);
        for k in 0..count {
            let r = radii[k];
            let defined = |x: T| eq.rhs_dv(r, x).is_ok();
            let mut guess = match prev {
                Some(p) => p[k],
                None if k == 0 => v_s,
                None => out[k - 1] * (r / radii[k - 1]).powf(alpha),
            };
            // Extrapolation can step past an endpoint of the level function;
            // the previous manifold value stays inside the domain.
            if !defined(guess) && k > 0 {
                guess = out[k - 1];
            }
            let spread = lit::<T>(1e-6) * guess.abs().max(T::one());
            let target = targets[k];
            let half = lit::<T>(0.5);
            let (a0, b0) = if guess < T::zero() {
                (guess - spread, (guess + spread).min(guess * half))
            } else {
                ((guess - spread).max(guess * half), guess + spread)
            };
            let a0 = if defined(a0) { a0 } else { guess };
            let b0 = if defined(b0) { b0 } else { guess };
            let m = solve_increasing(
                |x| match eq.rhs_dv(r, x) {
                    Ok((f, fv)) => (target - f, -fv),
                    Err(_) => (T::nan(), T::nan()),
                },
                T::zero(),
                lo,
                hi,
                a0,
                b0,
                T::infinity(),
            )
            .map_err(|e| Error::Integration(format!("slow manifold at r = {}: {e}", f64_of(r))))?;
            out.push(m);
        }
        Ok(out)
    };
    // First pass: the slope of the power law through the switch point. A zero
    // target can sit on an endpoint where the level function is not defined.
    let seed: Vec<T> = radii.iter().map(|&r| alpha * v_s * (r / r_s).powf(alpha) / r).collect();
    let mut m = solve(&seed, None)?;
    let mut slopes = vec![T::zero(); count];
    for _ in 0..10 {
        let ds = differentiate(&m, step);
        for k in 0..count {
            slopes[k] = ds[k] / radii[k];
        }
        let next = solve(&slopes, Some(&m))?;
        let change = next
            .iter()
            .zip(&m)
            .map(|(a, b)| (*a - *b).abs() / a.abs().max(T::one()))
            .fold(T::zero(), |acc, d| acc.max(d));
        m = next;
        if change <= lit(1e-15) {
            break;
        }
    }
    let ds = differentiate(&m, step);
    let dv = (0..count).map(|k| ds[k] / radii[k]).collect();
    Ok((radii, m, dv))
}

//! Explicit adaptive Dormand-Prince 5(4) integrator with PI step control,
//! continuous output and event location.

use crate::error::{Error, Result};
use crate::scalar::{f64_of, lit, Real};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_step: T,
    pub min_step: T,
    pub max_steps: usize,
    pub event_tolerance: T,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: lit(1e-10),
            abs_tol: lit(1e-12),
            max_step: T::infinity(),
            min_step: lit(1e-14),
            max_steps: 2_000_000,
            event_tolerance: lit(1e-12),
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        if !(self.rel_tol > z && self.abs_tol > z && self.event_tolerance > z) {
            return Err(Error::Parameter("integrator tolerances must be positive".into()));
        }
        if !(z < self.min_step && self.min_step < self.max_step) {
            return Err(Error::Parameter("need 0 < min_step < max_step".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Parameter("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Rising,
    Falling,
    Any,
}

/// Event whose root marks a point of interest.
pub struct EventSpec<'a, T, const N: usize> {
    pub function: Box<dyn Fn(T, &[T; N]) -> T + 'a>,
    pub direction: Direction,
    pub terminal: bool,
}

impl<'a, T, const N: usize> EventSpec<'a, T, N> {
    pub fn new(f: impl Fn(T, &[T; N]) -> T + 'a, direction: Direction, terminal: bool) -> Self {
        Self { function: Box::new(f), direction, terminal }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<T, const N: usize> {
    pub t: T,
    pub state: [T; N],
    pub id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedEnd,
    TerminalEvent,
    StepUnderflow,
    DomainExit,
    StepLimit,
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment<T, const N: usize> {
    t0: T,
    h: T,
    t1: T,
    coef: [[T; N]; 5],
}

impl<T: Real, const N: usize> Segment<T, N> {
    fn eval(&self, t: T) -> [T; N] {
        let th = (t - self.t0) / self.h;
        let th1 = T::one() - th;
        let c = &self.coef;
        std::array::from_fn(|i| c[0][i] + th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * c[4][i]))))
    }

    fn deriv(&self, t: T) -> [T; N] {
        let th = (t - self.t0) / self.h;
        let th1 = T::one() - th;
        let two = lit::<T>(2.0);
        let c = &self.coef;
        let (w2, w3, w4) =
            (T::one() - two * th, th * (two - lit::<T>(3.0) * th), two * th * th1 * (T::one() - two * th));
        std::array::from_fn(|i| (c[1][i] + w2 * c[2][i] + w3 * c[3][i] + w4 * c[4][i]) / self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrated solution: nodes, continuous output, events and the reason the
/// integration stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T, const N: usize> {
    pub nodes: Vec<(T, [T; N])>,
    pub derivatives: Vec<[T; N]>,
    /// Scaled local error estimate of the step ending at each node.
    pub errors: Vec<T>,
    pub events: Vec<EventHit<T, N>>,
    pub termination: Termination,
    pub stats: Stats,
    segments: Vec<Segment<T, N>>,
}

impl<T: Real, const N: usize> Trajectory<T, N> {
    pub fn t_start(&self) -> T {
        self.nodes[0].0
    }

    pub fn t_final(&self) -> T {
        self.nodes.last().unwrap().0
    }

    pub fn final_state(&self) -> [T; N] {
        self.nodes.last().unwrap().1
    }

    fn segment(&self, t: T) -> Result<&Segment<T, N>> {
        if self.segments.is_empty() || !(t >= self.t_start() && t <= self.t_final()) {
            return Err(Error::Range(format!(
                "t = {} outside [{}, {}]",
                f64_of(t),
                f64_of(self.t_start()),
                f64_of(self.t_final())
            )));
        }
        let i = self.segments.partition_point(|s| s.t1 < t);
        Ok(&self.segments[i.min(self.segments.len() - 1)])
    }

    /// State at `t` from the continuous output.
    pub fn state_at(&self, t: T) -> Result<[T; N]> {
        if t == self.t_start() {
            return Ok(self.nodes[0].1);
        }
        let seg = self.segment(t)?;
        if t == seg.t1 {
            let i = self.nodes.partition_point(|n| n.0 < t);
            if i < self.nodes.len() && self.nodes[i].0 == t {
                return Ok(self.nodes[i].1);
            }
        }
        Ok(seg.eval(t))
    }

    /// Time derivative of the continuous output at `t`.
    pub fn derivative_at(&self, t: T) -> Result<[T; N]> {
        Ok(self.segment(t)?.deriv(t))
    }
}

/// States at every grid point from the continuous output.
pub fn resample<T: Real, const N: usize>(traj: &Trajectory<T, N>, grid: &[T]) -> Result<Vec<[T; N]>> {
    grid.iter().map(|&t| traj.state_at(t)).collect()
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

fn finite<T: Real, const N: usize>(v: &[T; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn err_norm<T: Real, const N: usize>(err: &[T; N], y0: &[T; N], y1: &[T; N], cfg: &IntegratorConfig<T>) -> T {
    let mut acc = T::zero();
    for i in 0..N {
        let sk = cfg.abs_tol + cfg.rel_tol * y0[i].abs().max(y1[i].abs());
        let q = err[i] / sk;
        acc = acc + q * q;
    }
    (acc / lit::<T>(N as f64)).sqrt()
}

fn initial_step<T: Real, const N: usize>(
    rhs: &impl Fn(T, &[T; N]) -> [T; N],
    t0: T,
    y0: &[T; N],
    f0: &[T; N],
    span: T,
    cfg: &IntegratorConfig<T>,
) -> T {
    let scale = |i: usize| cfg.abs_tol + cfg.rel_tol * y0[i].abs();
    let norm = |v: &[T; N]| {
        let s: T = (0..N).fold(T::zero(), |a, i| a + (v[i] / scale(i)).powi(2));
        (s / lit::<T>(N as f64)).sqrt()
    };
    let d0 = norm(y0);
    let d1 = norm(f0);
    let mut h0 = if d0 < lit(1e-5) || d1 < lit(1e-5) { lit(1e-6) } else { lit::<T>(0.01) * d0 / d1 };
    h0 = h0.min(span).min(cfg.max_step);
    let y1: [T; N] = std::array::from_fn(|i| y0[i] + h0 * f0[i]);
    let f1 = rhs(t0 + h0, &y1);
    let diff: [T; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = norm(&diff) / h0;
    let h1 = if !d2.is_finite() {
        h0
    } else if d1.max(d2) <= lit(1e-15) {
        (h0 * lit(1e-3)).max(lit(1e-6))
    } else {
        (lit::<T>(0.01) / d1.max(d2)).powf(lit(0.2))
    };
    (lit::<T>(100.0) * h0).min(h1).min(span).min(cfg.max_step).max(cfg.min_step)
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end`.
pub fn integrate<T: Real, const N: usize>(
    rhs: impl Fn(T, &[T; N]) -> [T; N],
    t0: T,
    y0: [T; N],
    t_end: T,
    cfg: &IntegratorConfig<T>,
    events: &[EventSpec<'_, T, N>],
) -> Result<Trajectory<T, N>> {
    cfg.validate()?;
    if !(t_end > t0) {
        return Err(Error::Parameter(format!("t_end = {t_end} must exceed t0 = {t0}")));
    }
    let f0 = rhs(t0, &y0);
    if !finite(&y0) || !finite(&f0) {
        return Err(Error::Domain(format!("right-hand side not finite at t0 = {t0}")));
    }
    let a: [[T; 6]; 7] = std::array::from_fn(|i| std::array::from_fn(|j| lit(A[i][j])));
    let c: [T; 7] = std::array::from_fn(|i| lit(C[i]));
    let e: [T; 7] = std::array::from_fn(|i| lit(E[i]));
    let d: [T; 7] = std::array::from_fn(|i| lit(D[i]));
    let (safe, beta) = (lit::<T>(0.9), lit::<T>(0.04));
    let expo = lit::<T>(0.2) - beta * lit(0.75);
    let (fac_min, fac_max) = (lit::<T>(0.2), lit::<T>(10.0));

    let mut stats = Stats { evaluations: 1, ..Stats::default() };
    let mut traj = Trajectory {
        nodes: vec![(t0, y0)],
        derivatives: vec![f0],
        errors: vec![T::zero()],
        events: Vec::new(),
        termination: Termination::ReachedEnd,
        stats,
        segments: Vec::new(),
    };
    let mut g_prev: Vec<T> = events.iter().map(|ev| (ev.function)(t0, &y0)).collect();
    let (mut t, mut y, mut k1) = (t0, y0, f0);
    let mut h = initial_step(&rhs, t0, &y0, &f0, t_end - t0, cfg);
    stats.evaluations += 1;
    let mut fac_old = lit::<T>(1e-4);
    let mut last_rejected = false;

    loop {
        if traj.nodes.len() > cfg.max_steps {
            traj.termination = Termination::StepLimit;
            break;
        }
        let mut last = false;
        if t + h >= t_end || t_end - (t + h) < cfg.min_step {
            h = t_end - t;
            last = true;
        }
        if h < cfg.min_step && !last {
            traj.termination = Termination::StepUnderflow;
            break;
        }
        let mut k = [[T::zero(); N]; 7];
        k[0] = k1;
        let mut ok = true;
        for s in 1..7 {
            let ys: [T; N] =
                std::array::from_fn(|i| y[i] + h * (0..s).fold(T::zero(), |acc, j| acc + a[s][j] * k[j][i]));
            k[s] = rhs(t + c[s] * h, &ys);
            stats.evaluations += 1;
            if !finite(&k[s]) {
                ok = false;
                break;
            }
        }
        if !ok {
            h = h * lit(0.25);
            stats.rejected += 1;
            if h < cfg.min_step {
                traj.termination = Termination::DomainExit;
                break;
            }
            continue;
        }
        let y_new: [T; N] =
            std::array::from_fn(|i| y[i] + h * (0..6).fold(T::zero(), |acc, j| acc + a[6][j] * k[j][i]));
        let err_vec: [T; N] = std::array::from_fn(|i| h * (0..7).fold(T::zero(), |acc, j| acc + e[j] * k[j][i]));
        let err = err_norm(&err_vec, &y, &y_new, cfg);
        let fac11 = err.powf(expo);
        let mut fac = fac11 / fac_old.powf(beta);
        fac = (fac / safe).max(T::one() / fac_max).min(T::one() / fac_min);
        let h_new = h / fac;
        if !(err <= T::one()) {
            stats.rejected += 1;
            let shrink = (fac11 / safe).min(T::one() / fac_min);
            h = h / if shrink.is_finite() { shrink } else { T::one() / fac_min };
            last_rejected = true;
            if h < cfg.min_step {
                traj.termination = Termination::StepUnderflow;
                break;
            }
            continue;
        }
        fac_old = err.max(lit(1e-4));
        stats.accepted += 1;
        let ydiff: [T; N] = std::array::from_fn(|i| y_new[i] - y[i]);
        let bspl: [T; N] = std::array::from_fn(|i| h * k[0][i] - ydiff[i]);
        let coef = [
            y,
            ydiff,
            bspl,
            std::array::from_fn(|i| ydiff[i] - h * k[6][i] - bspl[i]),
            std::array::from_fn(|i| h * (0..7).fold(T::zero(), |acc, j| acc + d[j] * k[j][i])),
        ];
        let t_new = if last { t_end } else { t + h };
        let mut seg = Segment { t0: t, h, t1: t_new, coef };

        // Events on the continuous output of this step.
        let g_new: Vec<T> = events.iter().map(|ev| (ev.function)(t_new, &y_new)).collect();
        let mut hits: Vec<EventHit<T, N>> = Vec::new();
        for (id, ev) in events.iter().enumerate() {
            // Values within the event tolerance of zero count as touching,
            // not crossing; a crossing needs a strict sign change.
            let (g0, g1) = (g_prev[id], g_new[id]);
            let tol = cfg.event_tolerance;
            let rising = g0 < -tol && g1 > tol;
            let falling = g0 > tol && g1 < -tol;
            let fire = match ev.direction {
                Direction::Rising => rising,
                Direction::Falling => falling,
                Direction::Any => rising || falling,
            };
            if !fire {
                continue;
            }
            let (mut lo, mut hi) = (t, t_new);
            let mut glo = g0;
            while hi - lo > cfg.event_tolerance {
                let mid = lo + (hi - lo) / lit(2.0);
                if !(mid > lo && mid < hi) {
                    break;
                }
                let gm = (ev.function)(mid, &seg.eval(mid));
                if gm == T::zero() {
                    hi = mid;
                    break;
                }
                if (gm < T::zero()) == (glo < T::zero()) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            let te = hi;
            let state = if te == t_new { y_new } else { seg.eval(te) };
            hits.push(EventHit { t: te, state, id });
        }
        hits.sort_by(|p, q| p.t.partial_cmp(&q.t).unwrap());
        let stop = hits.iter().position(|hit| events[hit.id].terminal);
        if let Some(pos) = stop {
            let hit = hits[pos];
            traj.events.extend_from_slice(&hits[..=pos]);
            seg.t1 = hit.t;
            traj.segments.push(seg);
            let deriv = if hit.t == t_new { k[6] } else { rhs(hit.t, &hit.state) };
            traj.nodes.push((hit.t, hit.state));
            traj.derivatives.push(deriv);
            traj.errors.push(err);
            traj.termination = Termination::TerminalEvent;
            break;
        }
        traj.events.extend(hits);
        traj.segments.push(seg);
        traj.nodes.push((t_new, y_new));
        traj.derivatives.push(k[6]);
        traj.errors.push(err);
        for (p, n) in g_prev.iter_mut().zip(&g_new) {
            if !(n.abs() <= cfg.event_tolerance) {
                *p = *n;
            }
        }
        t = t_new;
        y = y_new;
        k1 = k[6];
        if last {
            traj.termination = Termination::ReachedEnd;
            break;
        }
        h = h_new.min(cfg.max_step);
        if last_rejected {
            h = h.min(seg.h);
        }
        last_rejected = false;
    }
    traj.stats = stats;
    Ok(traj)
}

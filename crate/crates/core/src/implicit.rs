//! Level sets of the slice function solved for `x`: the branches
//! `x = g_plus(y, z)` and `x = g_minus(y, -1)`.

use crate::curvature::CurvatureFunction;
use crate::error::{Error, Result};
use crate::fit::{extrapolate_to_zero, line_fit, log_grid};
use crate::roots::solve_increasing;
use crate::scalar::{f64_of, lit, Real};
use serde::Serialize;

/// Relative distance to a domain boundary below which the endpoint
/// identities replace root finding.
const ENDPOINT_BAND: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchSign {
    Plus,
    Minus,
}

/// Which increasing piece of the slice to search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// The piece containing `x = 0`.
    Principal,
    /// Whichever piece attains the level.
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndpointData<T> {
    pub left_value: T,
    pub right_value: T,
    pub mbar0: Option<T>,
    /// Distance between the identity values and limits of interior solves.
    pub left_check: T,
    pub right_check: T,
    pub mbar0_check: Option<T>,
}

/// Behaviour of `g_minus(y, -1)` as `y -> 0-`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OriginData<T> {
    /// Limit of `g_minus`; infinite when the branch diverges.
    pub limit: T,
    /// One-sided derivative when the limit is zero.
    pub slope: Option<T>,
}

/// Solves `f(x, y) = z` for `x` on the chosen component.
pub fn solve_level<T: Real>(f: &CurvatureFunction<T>, y: T, z: T, component: Component, tol: T) -> Result<T> {
    solve_level_seeded(f, y, z, component, None, tol)
}

fn interior_seed<T: Real>(lo: T, hi: T) -> T {
    let one = T::one();
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => lo + (hi - lo) / lit(2.0),
        (true, false) => {
            if lo < T::zero() {
                T::zero()
            } else {
                lo + one.max(lo.abs())
            }
        }
        (false, true) => {
            if hi > T::zero() {
                T::zero()
            } else {
                hi - one.max(hi.abs())
            }
        }
        (false, false) => T::zero(),
    }
}

/// Level solve with an optional starting guess.
pub fn solve_level_seeded<T: Real>(
    f: &CurvatureFunction<T>,
    y: T,
    z: T,
    component: Component,
    seed: Option<T>,
    tol: T,
) -> Result<T> {
    if !y.is_finite() || !z.is_finite() {
        return Err(Error::Domain(format!("non-finite level data y={y}, z={z}")));
    }
    let comps_t = f.t_components().to_vec();
    let comps_x = f.x_components(y);
    if comps_x.is_empty() {
        return Err(Error::Domain(format!("{} is not defined at y = {y}", f.key())));
    }
    let index = match component {
        Component::Principal => 0,
        Component::Any => {
            let mut found = None;
            for (i, &(tl, th)) in comps_t.iter().enumerate() {
                let probe = |t: T, inward: T| {
                    let t = if t.is_finite() {
                        t + inward * lit::<T>(1e-12) * T::one().max(t.abs())
                    } else {
                        t.signum() * lit::<T>(1e150)
                    };
                    f.value_at_ratio(t, y)
                };
                let v1 = probe(tl, T::one());
                let v2 = probe(th, -T::one());
                let (vmin, vmax) = (v1.min(v2), v1.max(v2));
                if vmin < z && z < vmax {
                    found = Some(i);
                    break;
                }
            }
            found.ok_or_else(|| Error::Domain(format!("level {z} is not attained at y = {y} by {}", f.key())))?
        }
    };
    let (lo, hi) = comps_x[index];
    let s = match seed {
        Some(s) if s > lo && s < hi => s,
        _ => {
            let (tl, th) = comps_t[index];
            interior_seed(tl, th) * y
        }
    };
    let s = if s > lo && s < hi { s } else { interior_seed(lo, hi) };
    solve_increasing(|x| f.value_dx(x, y), z, lo, hi, s, s, tol)
}

/// A solved branch of the level set.
#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitBranch<T> {
    source: CurvatureFunction<T>,
    sign: BranchSign,
    solve_tolerance: T,
}

impl<T: Real> ImplicitBranch<T> {
    pub fn plus(f: &CurvatureFunction<T>) -> Self {
        Self { source: f.clone(), sign: BranchSign::Plus, solve_tolerance: lit(1e-12) }
    }

    /// The `-1` level branch; offered for signed functions and Hessian quotients.
    pub fn minus(f: &CurvatureFunction<T>) -> Result<Self> {
        if !f.has_negative_level() {
            return Err(Error::Unsupported(format!("{} has no -1 level on the slice", f.key())));
        }
        Ok(Self { source: f.clone(), sign: BranchSign::Minus, solve_tolerance: lit(1e-12) })
    }

    pub fn with_tolerance(mut self, tol: T) -> Self {
        self.solve_tolerance = tol;
        self
    }

    pub fn source(&self) -> &CurvatureFunction<T> {
        &self.source
    }

    pub fn sign(&self) -> BranchSign {
        self.sign
    }

    pub fn solve_tolerance(&self) -> T {
        self.solve_tolerance
    }

    fn root(&self, x: T) -> T {
        x.powf(T::one() / self.source.alpha_value())
    }

    /// Lower end of the `-1` branch domain: `mbar0` when it exists, else `-1`.
    pub fn minus_lower_bound(&self) -> T {
        self.mbar0().unwrap_or(-T::one())
    }

    /// `-f(-1, 1)^(-1/alpha)` when `f(-1, 1) > 0`.
    pub fn mbar0(&self) -> Option<T> {
        let c = self.source.evaluate(-T::one(), T::one());
        (c.is_finite() && c > T::zero()).then(|| -T::one() / self.root(c))
    }

    /// Human-readable domain.
    pub fn domain_description(&self) -> String {
        match self.sign {
            BranchSign::Plus if self.source.is_degenerate() => {
                "U+ = {(y,z): z/f(1,1) < y^alpha}, extended to 0 < y^alpha".into()
            }
            BranchSign::Plus => "U+ = {(y,z): z/f(1,1) < y^alpha < z/f(0,1)}, extended to 0 < y^alpha".into(),
            BranchSign::Minus => format!("U- = ({}, 0)", f64_of(self.minus_lower_bound())),
        }
    }

    fn slope_at(&self, x: T, y: T) -> Result<T> {
        let (fx, fy) = self.source.grad(x, y);
        if !(fx > T::zero()) {
            return Err(Error::Degeneracy(format!("d/dx f = {fx} at ({x}, {y})")));
        }
        Ok(-fy / fx)
    }

    /// `x = g_plus(y, z)`, the unique positive solution of `f(x, y) = z`.
    pub fn g_plus(&self, y: T, z: T) -> Result<T> {
        let f = &self.source;
        if !(y > T::zero() && z > T::zero()) {
            return Err(Error::Domain(format!("g_plus needs y > 0 and z > 0, got ({y}, {z})")));
        }
        let band = lit::<T>(ENDPOINT_BAND);
        let c11 = f.evaluate(T::one(), T::one());
        let y_left = self.root(z / c11);
        if (y - y_left).abs() <= band * y_left {
            return Ok(y_left + self.slope_at(y_left, y_left)? * (y - y_left));
        }
        let degenerate = f.is_degenerate();
        let y_right = self.root(z);
        if !degenerate && (y - y_right).abs() <= band * y_right {
            if y == y_right {
                return Ok(T::zero());
            }
            if f.grad(T::zero(), y_right).0 > T::zero() {
                return Ok(self.slope_at(T::zero(), y_right)? * (y - y_right));
            }
        }
        let ya = y.powf(f.alpha_value());
        if !degenerate && !(ya < z) {
            return Err(Error::Domain(format!("y^alpha < z/f(0,1) violated: {ya} >= {z}")));
        }
        // Below the umbilic endpoint the solution still exists with x > y.
        let (a0, b0) = if !(z / c11 < ya) {
            (y, y * lit(2.0))
        } else {
            let top = if degenerate { y * self.root(z) / self.root(c11) + y } else { y };
            (top * lit(1e-6), top * (T::one() - lit(1e-6)))
        };
        let (lo, hi) = f.x_components(y)[0];
        solve_increasing(|x| f.value_dx(x, y), z, lo, hi, a0, b0, self.solve_tolerance)
    }

    /// `x = g_minus(y, -1)`, the solution of `f(x, y) = -1` for `y < 0`.
    pub fn g_minus(&self, y: T) -> Result<T> {
        if self.sign != BranchSign::Minus {
            return Err(Error::Unsupported("g_minus called on a plus branch".into()));
        }
        if !(y < T::zero()) {
            return Err(Error::Domain(format!("g_minus needs y < 0, got {y}")));
        }
        let lower = self.minus_lower_bound();
        if let Some(m) = self.mbar0() {
            if (y - m).abs() <= lit::<T>(ENDPOINT_BAND) * m.abs() {
                let x0 = -m;
                return Ok(x0 + self.slope_at(x0, m)? * (y - m));
            }
        }
        if !(y > lower) {
            return Err(Error::Domain(format!("y > {} violated: y = {y}", lower)));
        }
        solve_level(&self.source, y, -T::one(), Component::Any, self.solve_tolerance)
    }

    /// Branch value at `(y, z)`; the minus branch ignores `z`.
    pub fn value(&self, y: T, z: T) -> Result<T> {
        match self.sign {
            BranchSign::Plus => self.g_plus(y, z),
            BranchSign::Minus => self.g_minus(y),
        }
    }

    /// First or second `y` derivative by implicit differentiation.
    pub fn dg_dy(&self, y: T, z: T, order: u8) -> Result<T> {
        if !(order == 1 || order == 2) {
            return Err(Error::Parameter(format!("derivative order {order} not in {{1, 2}}")));
        }
        if self.sign == BranchSign::Minus && y == T::zero() {
            if order == 2 {
                return Err(Error::Domain("second derivative at the origin".into()));
            }
            return self
                .origin_data()?
                .slope
                .ok_or_else(|| Error::Domain("g_minus has no finite slope at the origin".into()));
        }
        let x = self.value(y, z)?;
        let [_, fx, fy, fxx, fxy, fyy] = self.source.jet(x, y);
        if !(fx > T::zero()) {
            return Err(Error::Degeneracy(format!("d/dx f = {fx} at ({x}, {y})")));
        }
        let g1 = -fy / fx;
        if order == 1 {
            return Ok(g1);
        }
        Ok(-(fyy + lit::<T>(2.0) * fxy * g1 + fxx * g1 * g1) / fx)
    }

    fn interior_limit(&self, at: T, direction: T, solve: impl Fn(T) -> Result<T>) -> Result<T> {
        let steps = [1e-5, 2e-5, 4e-5, 8e-5];
        let mut vals = Vec::new();
        for h in steps {
            vals.push(f64_of(solve(at + direction * lit::<T>(h) * at.abs())?));
        }
        Ok(lit(extrapolate_to_zero(&steps, &vals)))
    }

    /// Endpoint values from homogeneity identities, each checked against a
    /// limit of interior solves.
    pub fn endpoint_data(&self) -> Result<EndpointData<T>> {
        let f = &self.source;
        let one = T::one();
        let plus = ImplicitBranch::plus(f);
        let c11 = f.evaluate(one, one);
        let y_left = one / self.root(c11);
        let left_lim = self.interior_limit(y_left, one, |y| plus.g_plus(y, one))?;
        let (right_value, right_check) = if f.is_degenerate() {
            let far = plus.g_plus(lit(1e8), one)?;
            (T::zero(), far.abs())
        } else if f.grad(T::zero(), one).0 > lit(1e-8) {
            let lim = self.interior_limit(one, -one, |y| plus.g_plus(y, one))?;
            (T::zero(), lim.abs())
        } else {
            // A flat slice at (0, 1) makes g_plus a series in sqrt(1 - y).
            let s: [f64; 5] = [1e-4, 2e-4, 4e-4, 8e-4, 1.6e-3];
            let mut vals = Vec::new();
            for si in s {
                vals.push(f64_of(plus.g_plus(one - lit::<T>(si * si), one)?));
            }
            (T::zero(), lit::<T>(extrapolate_to_zero(&s, &vals).abs()))
        };
        let mbar0 = self.mbar0();
        let mbar0_check = match mbar0 {
            None => None,
            Some(m) if f.has_negative_level() => {
                let minus = ImplicitBranch::minus(f)?;
                let lim = self.interior_limit(m, one, |y| minus.g_minus(y))?;
                Some((lim + m).abs())
            }
            Some(m) => Some((f.evaluate(-m, m) + one).abs()),
        };
        Ok(EndpointData {
            left_value: y_left,
            right_value,
            mbar0,
            left_check: (left_lim - y_left).abs(),
            right_check,
            mbar0_check,
        })
    }

    /// Power-law fit `g_plus(y, 1) ~ c y^(-k)` over `y` in `[1e3, 1e6]`.
    pub fn laurent_tail(&self) -> Result<(T, T)> {
        if !self.source.is_degenerate() {
            return Err(Error::Parameter(format!(
                "{} is not 1-degenerate; the tail is not a power law",
                self.source.key()
            )));
        }
        let plus = ImplicitBranch::plus(&self.source);
        let ys = log_grid(1e3, 1e6, 41);
        let mut lx = Vec::with_capacity(ys.len());
        let mut lg = Vec::with_capacity(ys.len());
        for &y in &ys {
            let g = f64_of(plus.g_plus(lit(y), T::one())?);
            if !(g > 0.0) {
                return Err(Error::Classification(format!("g_plus({y}, 1) = {g} is not positive")));
            }
            lx.push(y.ln());
            lg.push(g.ln());
        }
        let (slope, intercept, res) = line_fit(&lx, &lg)?;
        if res > 1e-3 {
            return Err(Error::Classification(format!("tail is not a power law: log residual {res:e}")));
        }
        Ok((lit(-slope), lit(intercept.exp())))
    }

    /// Limit and slope of `g_minus(y, -1)` as `y -> 0-`.
    pub fn origin_data(&self) -> Result<OriginData<T>> {
        if self.sign != BranchSign::Minus {
            return Err(Error::Unsupported("origin data belongs to the minus branch".into()));
        }
        let hs: Vec<f64> = (0..6).map(|j| 1e-3 * 0.5f64.powi(j)).collect();
        let mut vals = Vec::new();
        for &h in &hs {
            vals.push(f64_of(self.g_minus(lit(-h))?));
        }
        let last = *vals.last().unwrap();
        if last.abs() > 1e6 {
            return Ok(OriginData { limit: lit(last.signum() * f64::INFINITY), slope: None });
        }
        let limit = extrapolate_to_zero(&hs, &vals);
        if limit.abs() > 1e-8 {
            return Ok(OriginData { limit: lit(limit), slope: None });
        }
        let quotients: Vec<f64> = hs.iter().zip(&vals).map(|(h, v)| v / -h).collect();
        Ok(OriginData { limit: T::zero(), slope: Some(lit(extrapolate_to_zero(&hs, &quotients))) })
    }
}

/// Closed-form `x` with `f(x, y) = z` for the normalized Hessian quotient
/// `(S_k / S_l)^(1/(k - l))` on the slice, used to cross-check the solver.
pub fn hessian_quotient_inverse<T: Real>(k: u32, l: u32, n: u32, y: T, z: T) -> Result<T> {
    if !(l < k && k <= n && n >= 2) {
        return Err(Error::Parameter(format!("need 0 <= l < k <= n, got k={k}, l={l}, n={n}")));
    }
    let b = |j: i64| lit::<T>(crate::curvature::binom(n - 1, j));
    let (k, l) = (k as i64, l as i64);
    let m = (k - l) as i32;
    let (zm, ym) = (z.powi(m), y.powi(m));
    let x = b(k) * y * (zm - ym) / (b(k - 1) * ym - b(k) * b(l - 1) / b(l) * zm);
    if !x.is_finite() {
        return Err(Error::Domain(format!("closed form singular at ({y}, {z})")));
    }
    Ok(x)
}

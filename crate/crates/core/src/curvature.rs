//! Curvature functions restricted to the rotational slice `(x, y, ..., y)`.
//!
//! Every built-in family is written as `P(y) * phi(x / y) / c_N` where `P` is
//! the signed power `sgn(y) |y|^alpha` and `phi` is a one-variable profile.
//! Derivatives follow from the profile by the chain rule.

use crate::error::{Error, Result};
use crate::scalar::{f64_of, lit, Real};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Built-in families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Mean,
    GaussRoot,
    HessianQuotient { k: u32, l: u32 },
    KNorm { k: u32 },
    KConvexity { k: u32 },
    Sk { k: u32 },
}

/// Behaviour of a signed function at the origin of the slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginValue {
    ContinuousZero,
    Undefined,
}

/// Zero ray and origin data of a signed function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignedMeta<T> {
    pub zero_ray: (T, T),
    pub origin_value: OriginValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneracyKind {
    OneNondegenerate,
    OneDegenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegeneracyClass<T> {
    pub kind: DegeneracyKind,
    /// Value at `(0, 1)` before normalization.
    pub value_at_01: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomogeneityReport {
    pub max_defect: f64,
    pub checked: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub min_dx: f64,
    pub min_dy: f64,
    pub checked: usize,
    pub skipped: usize,
}

/// One-variable profile `phi(t)` with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape<T> {
    /// `c0 + c1 t`
    Affine { c0: T, c1: T },
    /// `t^p`
    Root { p: T },
    /// `((a0 + a1 t) / (b0 + b1 t))^(1/m)`
    Quotient { a0: T, a1: T, b0: T, b1: T, m: u32 },
    /// `(t^k + c)^(1/k)`
    PowerMean { k: i32, c: T },
    /// `w / (p + q w)` with `w = t + shift`
    Harmonic { p: T, q: T, shift: T },
}

impl<T: Real> Shape<T> {
    fn eval(&self, t: T) -> (T, T, T) {
        let one = T::one();
        let two = lit::<T>(2.0);
        match *self {
            Shape::Affine { c0, c1 } => (c0 + c1 * t, c1, T::zero()),
            Shape::Root { p } => {
                if t < T::zero() {
                    let nan = T::nan();
                    return (nan, nan, nan);
                }
                (t.powf(p), p * t.powf(p - one), p * (p - one) * t.powf(p - two))
            }
            Shape::Quotient { a0, a1, b0, b1, m } => {
                let num = a0 + a1 * t;
                let den = b0 + b1 * t;
                let rho = num / den;
                let w = a1 * b0 - a0 * b1;
                let d1 = w / (den * den);
                let d2 = -two * b1 * w / (den * den * den);
                if m == 1 {
                    return (rho, d1, d2);
                }
                let e = one / T::from_u32(m).unwrap();
                let v = rho.powf(e);
                let p1 = e * rho.powf(e - one);
                let p2 = e * (e - one) * rho.powf(e - two);
                (v, p1 * d1, p2 * d1 * d1 + p1 * d2)
            }
            Shape::PowerMean { k, c } => {
                let kf = T::from_i32(k).unwrap();
                let s = t.powi(k) + c;
                let e = one / kf;
                let v = s.powf(e);
                let d1 = t.powi(k - 1) * s.powf(e - one);
                let d2 = (kf - one) * c * t.powi(k - 2) * s.powf(e - two);
                (v, d1, d2)
            }
            Shape::Harmonic { p, q, shift } => {
                let w = t + shift;
                let den = p + q * w;
                (w / den, p / (den * den), -two * p * q / (den * den * den))
            }
        }
    }
}

/// An alpha-homogeneous symmetric curvature function on the rotational slice.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureFunction<T> {
    family: Family,
    n: u32,
    alpha: Ratio<i64>,
    alpha_t: T,
    odd: bool,
    normalization: T,
    shape: Shape<T>,
    components: Vec<(T, T)>,
    signed: Option<SignedMeta<T>>,
}

pub(crate) fn binom(n: u32, k: i64) -> f64 {
    if k < 0 || k as u32 > n {
        return 0.0;
    }
    let k = k as u32;
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Elementary symmetric polynomial of degree `k` evaluated directly.
pub fn elementary_symmetric<T: Real>(k: usize, lambda: &[T]) -> T {
    let mut e = vec![T::zero(); k + 1];
    e[0] = T::one();
    for &x in lambda {
        for j in (1..=k.min(lambda.len())).rev() {
            e[j] = e[j] + e[j - 1] * x;
        }
    }
    e[k]
}

impl<T: Real> CurvatureFunction<T> {
    /// Builds a normalized member of a built-in family.
    pub fn build(family: Family, n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("dimension n = {n} must be at least 2")));
        }
        let nm1 = n - 1;
        let b = |k: i64| lit::<T>(binom(nm1, k));
        let inf = T::infinity();
        let one = T::one();
        let (alpha, shape, components) = match family {
            Family::Mean => (Ratio::from_integer(1), Shape::Affine { c0: lit(nm1 as f64), c1: one }, vec![(-inf, inf)]),
            Family::GaussRoot => {
                (Ratio::from_integer(1), Shape::Root { p: one / lit::<T>(n as f64) }, vec![(T::zero(), inf)])
            }
            Family::HessianQuotient { k, l } => {
                if !(l < k && k <= n) {
                    return Err(Error::Parameter(format!(
                        "hessian quotient needs 0 <= l < k <= n, got k={k}, l={l}, n={n}"
                    )));
                }
                let (k, l) = (k as i64, l as i64);
                let m = (k - l) as u32;
                let (a0, a1, b0, b1) = (b(k), b(k - 1), b(l), b(l - 1));
                let pole = -b0 / b1;
                let mut comps = Vec::new();
                if m == 1 {
                    if b1 > T::zero() {
                        comps.push((pole, inf));
                        comps.push((-inf, pole));
                    } else {
                        comps.push((-inf, inf));
                    }
                } else {
                    comps.push((-a0 / a1, inf));
                    if b1 > T::zero() {
                        comps.push((-inf, pole));
                    }
                }
                (Ratio::from_integer(1), Shape::Quotient { a0, a1, b0, b1, m }, comps)
            }
            Family::KNorm { k } => {
                if k < 1 {
                    return Err(Error::Parameter("k-norm needs k >= 1".into()));
                }
                (Ratio::from_integer(1), Shape::PowerMean { k: k as i32, c: lit(nm1 as f64) }, vec![(T::zero(), inf)])
            }
            Family::KConvexity { k } => {
                if !(1 <= k && k <= n) {
                    return Err(Error::Parameter(format!("k-convexity needs 1 <= k <= n, got k={k}, n={n}")));
                }
                let k64 = k as i64;
                let shift = lit::<T>((k - 1) as f64);
                let shape = Shape::Harmonic { p: b(k64 - 1), q: b(k64) / lit::<T>(k as f64), shift };
                (Ratio::from_integer(1), shape, vec![(-shift, inf)])
            }
            Family::Sk { k } => {
                if !(1 <= k && k <= n) {
                    return Err(Error::Parameter(format!("s_k needs 1 <= k <= n, got k={k}, n={n}")));
                }
                let k64 = k as i64;
                (Ratio::from_integer(k64), Shape::Affine { c0: b(k64), c1: b(k64 - 1) }, vec![(-inf, inf)])
            }
        };
        if components.is_empty() || !(components[0].0 < components[0].1) {
            return Err(Error::Construction(format!("{family:?} has an empty slice cone")));
        }
        let odd = alpha.numer() % 2 != 0 && alpha.denom() % 2 != 0;
        let alpha_t = lit::<T>(*alpha.numer() as f64) / lit::<T>(*alpha.denom() as f64);
        let (phi0, _, _) = shape.eval(T::zero());
        let normalization = if phi0.is_finite() && phi0 > lit(1e-12) { phi0 } else { one };
        let signed = match family {
            Family::Sk { k } if k % 2 == 1 && k < n => Some(OriginValue::ContinuousZero),
            Family::HessianQuotient { k, l } if l + 1 == k && k >= 2 && k < n => Some(OriginValue::Undefined),
            _ => None,
        }
        .map(|origin_value| {
            let k = match family {
                Family::Sk { k } | Family::HessianQuotient { k, .. } => k as i64,
                _ => unreachable!(),
            };
            let t0 = -b(k) / b(k - 1);
            let norm = (t0 * t0 + one).sqrt();
            SignedMeta { zero_ray: (t0 / norm, one / norm), origin_value }
        });
        Ok(Self { family, n, alpha, alpha_t, odd, normalization, shape, components, signed })
    }

    /// Parses a registry key such as `"hq:k=2,l=0,n=4"`.
    pub fn from_key(key: &str) -> Result<Self> {
        let (name, rest) = key.split_once(':').ok_or_else(|| Error::Parameter(format!("key '{key}' lacks ':'")))?;
        let mut params = std::collections::BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) =
                part.split_once('=').ok_or_else(|| Error::Parameter(format!("malformed parameter '{part}'")))?;
            let v: u32 =
                v.trim().parse().map_err(|_| Error::Parameter(format!("parameter '{part}' is not an integer")))?;
            params.insert(k.trim().to_string(), v);
        }
        let mut take =
            |p: &str| params.remove(p).ok_or_else(|| Error::Parameter(format!("key '{key}' is missing '{p}'")));
        let n = take("n")?;
        let family = match name.trim() {
            "mean" => Family::Mean,
            "gauss" => Family::GaussRoot,
            "hq" => Family::HessianQuotient { k: take("k")?, l: take("l")? },
            "qk" => {
                let k = take("k")?;
                if k < 2 {
                    return Err(Error::Parameter("qk needs k >= 2".into()));
                }
                Family::HessianQuotient { k, l: k - 1 }
            }
            "sk" => Family::Sk { k: take("k")? },
            "knorm" => Family::KNorm { k: take("k")? },
            "kconv" => Family::KConvexity { k: take("k")? },
            other => return Err(Error::Parameter(format!("unknown family '{other}'"))),
        };
        if let Some(extra) = params.keys().next() {
            return Err(Error::Parameter(format!("unexpected parameter '{extra}' in '{key}'")));
        }
        Self::build(family, n)
    }

    /// Canonical registry key.
    pub fn key(&self) -> String {
        let n = self.n;
        match self.family {
            Family::Mean => format!("mean:n={n}"),
            Family::GaussRoot => format!("gauss:n={n}"),
            Family::HessianQuotient { k, l } if k >= 2 && l + 1 == k => format!("qk:k={k},n={n}"),
            Family::HessianQuotient { k, l } => format!("hq:k={k},l={l},n={n}"),
            Family::KNorm { k } => format!("knorm:k={k},n={n}"),
            Family::KConvexity { k } => format!("kconv:k={k},n={n}"),
            Family::Sk { k } => format!("sk:k={k},n={n}"),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dimension(&self) -> u32 {
        self.n
    }

    pub fn alpha(&self) -> Ratio<i64> {
        self.alpha
    }

    pub fn alpha_value(&self) -> T {
        self.alpha_t
    }

    /// Exponent `(alpha - 1) / (2 alpha)` of the graph ODE.
    pub fn beta(&self) -> T {
        (self.alpha_t - T::one()) / (lit::<T>(2.0) * self.alpha_t)
    }

    pub fn normalization(&self) -> T {
        self.normalization
    }

    pub fn signed_meta(&self) -> Option<SignedMeta<T>> {
        self.signed
    }

    /// Whether the odd extension to `y < 0` is available.
    pub fn has_odd_extension(&self) -> bool {
        self.odd
    }

    /// Whether a `-1` level branch is offered.
    pub fn has_negative_level(&self) -> bool {
        self.signed.is_some() || matches!(self.family, Family::HessianQuotient { .. })
    }

    /// Signed power `sgn(y) |y|^alpha` and its first two derivatives.
    fn power(&self, y: T) -> (T, T, T) {
        let a = self.alpha_t;
        let one = T::one();
        let ay = y.abs();
        let s = if y < T::zero() {
            if !self.odd {
                let nan = T::nan();
                return (nan, nan, nan);
            }
            -one
        } else {
            one
        };
        (s * ay.powf(a), a * ay.powf(a - one), s * a * (a - one) * ay.powf(a - lit(2.0)))
    }

    /// Value on the axis `y = 0`, taken as the limit along the slice.
    fn axis_value(&self, x: T) -> T {
        match self.family {
            Family::Mean => x,
            Family::Sk { k: 1 } => x,
            Family::HessianQuotient { k: 1, l: 0 } => x,
            Family::KNorm { .. } => x.abs(),
            Family::KConvexity { k } if k == self.n => x,
            _ => T::zero(),
        }
    }

    /// Normalized slice function.
    pub fn evaluate(&self, x: T, y: T) -> T {
        if y == T::zero() {
            return self.axis_value(x) / self.normalization;
        }
        let (p, _, _) = self.power(y);
        let (phi, _, _) = self.shape.eval(x / y);
        p * phi / self.normalization
    }

    /// Slice function before normalization.
    pub fn evaluate_raw(&self, x: T, y: T) -> T {
        self.evaluate(x, y) * self.normalization
    }

    /// Analytic gradient `(d/dx, d/dy)`.
    pub fn grad(&self, x: T, y: T) -> (T, T) {
        let (p, p1, _) = self.power(y);
        let t = x / y;
        let (phi, d1, _) = self.shape.eval(t);
        let c = self.normalization;
        ((p * d1 / y) / c, (p1 * phi - p * d1 * t / y) / c)
    }

    /// Value and `x` derivative, the pair used by the level solves.
    pub fn value_dx(&self, x: T, y: T) -> (T, T) {
        let (p, _, _) = self.power(y);
        let (phi, d1, _) = self.shape.eval(x / y);
        let c = self.normalization;
        (p * phi / c, p * d1 / y / c)
    }

    /// Profile value at `t` scaled by the signed power of `y`, used for range
    /// probes at the ends of a component.
    pub(crate) fn value_at_ratio(&self, t: T, y: T) -> T {
        let (p, _, _) = self.power(y);
        p * self.shape.eval(t).0 / self.normalization
    }

    /// Value, gradient and Hessian `(f, fx, fy, fxx, fxy, fyy)`.
    pub fn jet(&self, x: T, y: T) -> [T; 6] {
        let (p, p1, p2) = self.power(y);
        let t = x / y;
        let (phi, d1, d2) = self.shape.eval(t);
        let c = self.normalization;
        let two = lit::<T>(2.0);
        let y2 = y * y;
        [
            p * phi / c,
            p * d1 / y / c,
            (p1 * phi - p * d1 * t / y) / c,
            p * d2 / y2 / c,
            (p1 * d1 / y - p * d1 / y2 - p * d2 * t / y2) / c,
            (p2 * phi - two * p1 * d1 * t / y + p * d2 * t * t / y2 + two * p * d1 * t / y2) / c,
        ]
    }

    /// Central finite-difference gradient with step `1e-6 * max(1, |x|, |y|)`.
    pub fn grad_fd(&self, x: T, y: T) -> (T, T) {
        let h = lit::<T>(1e-6) * T::one().max(x.abs()).max(y.abs());
        let two = lit::<T>(2.0);
        (
            (self.evaluate(x + h, y) - self.evaluate(x - h, y)) / (two * h),
            (self.evaluate(x, y + h) - self.evaluate(x, y - h)) / (two * h),
        )
    }

    /// Membership in the positive cone on the slice.
    pub fn cone_contains(&self, x: T, y: T) -> bool {
        let zero = T::zero();
        let sym = |i: u32| {
            let nm1 = self.n - 1;
            let b = |k: i64| lit::<T>(binom(nm1, k));
            y.powi(i as i32 - 1) * (b(i as i64) * y + b(i as i64 - 1) * x)
        };
        match self.family {
            Family::Mean => sym(1) > zero,
            Family::GaussRoot | Family::KNorm { .. } => x > zero && y > zero,
            Family::HessianQuotient { k, .. } | Family::Sk { k } => (1..=k).all(|i| sym(i) > zero),
            Family::KConvexity { k } => x + lit::<T>((k - 1) as f64) * y > zero && (k == self.n || y > zero),
        }
    }

    /// Open `t = x / y` intervals on which the function increases in `x`; the
    /// first one contains `t = 0` or has it on its boundary.
    pub fn t_components(&self) -> &[(T, T)] {
        &self.components
    }

    /// The `t` components mapped to `x` intervals at height `y`.
    pub fn x_components(&self, y: T) -> Vec<(T, T)> {
        if y == T::zero() || (y < T::zero() && !self.odd) {
            return Vec::new();
        }
        self.components
            .iter()
            .map(|&(lo, hi)| if y > T::zero() { (lo * y, hi * y) } else { (hi * y, lo * y) })
            .collect()
    }

    pub fn classify_degeneracy(&self) -> Result<DegeneracyClass<T>> {
        let (lo, hi) = self.components[0];
        if !(lo <= T::zero() && T::zero() <= hi) {
            return Err(Error::Domain(format!("(0,1) is outside the closure of the cone of {}", self.key())));
        }
        let (phi0, _, _) = self.shape.eval(T::zero());
        let kind =
            if phi0.abs() <= lit(1e-12) { DegeneracyKind::OneDegenerate } else { DegeneracyKind::OneNondegenerate };
        Ok(DegeneracyClass { kind, value_at_01: phi0 })
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.classify_degeneracy().map(|d| d.kind), Ok(DegeneracyKind::OneDegenerate))
    }

    /// Unit-normalized zero of the function with positive `x` derivative.
    pub fn zero_ray(&self) -> Result<(T, T)> {
        self.signed
            .map(|s| s.zero_ray)
            .ok_or_else(|| Error::Unsupported(format!("{} is not a signed function", self.key())))
    }

    /// `c^alpha` with the odd sign rule for negative `c`.
    pub fn scale_factor(&self, c: T) -> T {
        self.power(c).0
    }

    /// Maximum relative homogeneity defect over random cone samples.
    pub fn check_homogeneity(&self, samples: usize, seed: u64) -> HomogeneityReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scales = vec![0.5, 2.0, 3.0];
        if self.signed.is_some() {
            scales.extend([-0.5, -2.0, -3.0]);
        }
        let (mut max_defect, mut checked, mut skipped) = (0.0f64, 0, 0);
        for _ in 0..samples {
            let x = lit::<T>(rng.gen_range(-3.0..3.0));
            let y = lit::<T>(rng.gen_range(0.05..3.0));
            if !self.cone_contains(x, y) {
                skipped += 1;
                continue;
            }
            let base = self.evaluate(x, y);
            for &c in &scales {
                let c = lit::<T>(c);
                let lhs = self.evaluate(c * x, c * y);
                let rhs = self.scale_factor(c) * base;
                let d = f64_of((lhs - rhs).abs() / T::one().max(base.abs()));
                max_defect = if d.is_nan() { f64::INFINITY } else { max_defect.max(d) };
            }
            checked += 1;
        }
        HomogeneityReport { max_defect, checked, skipped }
    }

    /// Smallest partial derivatives over random cone samples.
    pub fn check_monotonicity(&self, samples: usize, seed: u64) -> MonotonicityReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut min_dx, mut min_dy, mut checked, mut skipped) = (f64::INFINITY, f64::INFINITY, 0, 0);
        for _ in 0..samples {
            let x = lit::<T>(rng.gen_range(-3.0..3.0));
            let y = lit::<T>(rng.gen_range(0.05..3.0));
            if !self.cone_contains(x, y) {
                skipped += 1;
                continue;
            }
            let (dx, dy) = self.grad(x, y);
            min_dx = min_dx.min(f64_of(dx));
            min_dy = min_dy.min(f64_of(dy));
            checked += 1;
        }
        MonotonicityReport { min_dx, min_dy, checked, skipped }
    }
}

/// Example keys for every family.
pub fn registry_examples() -> Vec<&'static str> {
    vec![
        "mean:n=3",
        "gauss:n=4",
        "hq:k=2,l=0,n=3",
        "qk:k=2,n=4",
        "hq:k=3,l=1,n=5",
        "qk:k=3,n=7",
        "qk:k=4,n=6",
        "sk:k=3,n=5",
        "knorm:k=2,n=3",
        "kconv:k=2,n=4",
    ]
}

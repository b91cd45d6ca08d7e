//! Admissible functions: nondecreasing maps `R+ -> R+` vanishing only at 0.
//!
//! An [`AdmissibleFunction`] carries flags (convex, strictly convex,
//! differentiable) instead of enforcing the strongest assumptions globally.
//! Operations that need convexity or differentiability check the flags and
//! fail with a typed error when the assumption is missing.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Closures backing a user-supplied admissible function.
#[derive(Clone)]
pub struct CustomShape {
    pub eval: RealFn,
    pub derivative: Option<RealFn>,
    pub inverse_derivative: Option<RealFn>,
}

#[derive(Clone)]
enum Shape {
    /// `coef * t^exp`
    Power { coef: f64, exp: f64 },
    /// `min(t, cap)`
    CappedLinear { cap: f64 },
    /// Monotone piecewise-linear interpolation, extrapolated with the last slope.
    Table { t: Vec<f64>, v: Vec<f64> },
    Custom(CustomShape),
}

/// `(example id, description)` for every family accepted by
/// [`AdmissibleFunction::from_id`].
pub const ADMISSIBLE_FAMILIES: &[(&str, &str)] = &[
    ("power:2", "t^p (power:p)"),
    ("scaled-power:0.5:1", "c*t^p (scaled-power:c:p)"),
    ("capped-linear:1", "min(t, c) (capped-linear:c)"),
    ("table:0:0:1:1:2:4", "monotone piecewise-linear through (t, v) nodes (table:t0:v0:t1:v1:...)"),
];

#[derive(Clone)]
pub struct AdmissibleFunction {
    name: String,
    shape: Shape,
    convex: bool,
    strictly_convex: bool,
    differentiable: bool,
}

impl fmt::Debug for AdmissibleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdmissibleFunction")
            .field("name", &self.name)
            .field("convex", &self.convex)
            .field("strictly_convex", &self.strictly_convex)
            .field("differentiable", &self.differentiable)
            .finish()
    }
}

/// Result of [`AdmissibleFunction::check_admissibility`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub zero_at_zero: bool,
    pub monotone: bool,
    pub separation: bool,
    pub failures: Vec<String>,
}

impl AdmissibilityReport {
    pub fn pass(&self) -> bool {
        self.zero_at_zero && self.monotone && self.separation
    }
}

/// Right-derivative step schedule: start at `max(1e-6, 1e-8 (1 + t))` and
/// halve up to this many times.
const HALVINGS: usize = 20;
const BISECTION_TOL: f64 = 1e-12;
const MAX_DOUBLINGS: usize = 64;

impl AdmissibleFunction {
    /// `t -> coef * t^exp`.
    pub fn scaled_power(coef: f64, exp: f64) -> Result<Self> {
        if !(exp > 0.0 && exp.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "power exponent must be positive, got {exp}"
            )));
        }
        if !(coef > 0.0 && coef.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "power coefficient must be positive, got {coef}"
            )));
        }
        let name = if coef == 1.0 {
            format!("power:{}", fmt_num(exp))
        } else {
            format!("scaled-power:{}:{}", fmt_num(coef), fmt_num(exp))
        };
        Ok(Self {
            name,
            shape: Shape::Power { coef, exp },
            convex: exp >= 1.0,
            strictly_convex: exp > 1.0,
            differentiable: exp >= 1.0,
        })
    }

    pub fn power(exp: f64) -> Result<Self> {
        Self::scaled_power(1.0, exp)
    }

    /// `t -> min(t, cap)`.
    pub fn capped_linear(cap: f64) -> Result<Self> {
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cap must be positive, got {cap}"
            )));
        }
        Ok(Self {
            name: format!("capped-linear:{}", fmt_num(cap)),
            shape: Shape::CappedLinear { cap },
            convex: false,
            strictly_convex: false,
            differentiable: false,
        })
    }

    /// Monotone piecewise-linear interpolation of `(t, v)` nodes.
    pub fn table(t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if t.len() != v.len() || t.len() < 2 {
            return Err(Error::InvalidParameter(
                "table needs at least two (t, v) pairs of equal length".into(),
            ));
        }
        if t.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("table entries must be finite".into()));
        }
        for i in 1..t.len() {
            if t[i] <= t[i - 1] {
                return Err(Error::NonMonotoneTable(format!(
                    "t must be strictly increasing (t[{}]={} <= t[{}]={})",
                    i,
                    t[i],
                    i - 1,
                    t[i - 1]
                )));
            }
            if v[i] < v[i - 1] {
                return Err(Error::NonMonotoneTable(format!(
                    "values decrease between t={} and t={}",
                    t[i - 1],
                    t[i]
                )));
            }
        }
        let slopes: Vec<f64> = (1..t.len())
            .map(|i| (v[i] - v[i - 1]) / (t[i] - t[i - 1]))
            .collect();
        let convex = t[0] == 0.0 && slopes.windows(2).all(|w| w[0] <= w[1]);
        let name = format!(
            "table:{}",
            t.iter()
                .zip(&v)
                .map(|(a, b)| format!("{},{}", fmt_num(*a), fmt_num(*b)))
                .collect::<Vec<_>>()
                .join(",")
        );
        Ok(Self {
            name,
            shape: Shape::Table { t, v },
            convex,
            strictly_convex: false,
            differentiable: false,
        })
    }

    /// Wrap arbitrary closures. Flags are taken on trust; run
    /// [`check_admissibility`](Self::check_admissibility) to validate.
    pub fn custom(
        name: impl Into<String>,
        shape: CustomShape,
        convex: bool,
        strictly_convex: bool,
        differentiable: bool,
    ) -> Self {
        Self {
            name: name.into(),
            shape: Shape::Custom(shape),
            convex,
            strictly_convex,
            differentiable,
        }
    }

    /// Build a catalog family from its id and parameters.
    ///
    /// Families: `power` `[p]`, `scaled-power` `[c, p]`, `capped-linear`
    /// `[c]`, `table` `[t0, v0, t1, v1, ...]`.
    pub fn construct_catalog(family: &str, params: &[f64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "family `{family}` takes {n} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        match family {
            "power" => {
                want(1)?;
                Self::power(params[0])
            }
            "scaled-power" => {
                want(2)?;
                Self::scaled_power(params[0], params[1])
            }
            "capped-linear" => {
                want(1)?;
                Self::capped_linear(params[0])
            }
            "table" => {
                if !params.len().is_multiple_of(2) {
                    return Err(Error::InvalidParameter(
                        "table parameters must be (t, v) pairs".into(),
                    ));
                }
                let (t, v) = params.chunks(2).map(|c| (c[0], c[1])).unzip();
                Self::table(t, v)
            }
            other => Err(Error::UnknownId(other.to_string())),
        }
    }

    /// Parse a catalog id such as `power:2`, `scaled-power:0.5:1` or
    /// `capped-linear:1`. Parameters are separated by `:` or `,`.
    pub fn from_id(id: &str) -> Result<Self> {
        let mut parts = id.trim().splitn(2, ':');
        let family = parts.next().unwrap_or_default();
        let params = match parts.next() {
            Some(rest) => parse_params(rest)?,
            None => Vec::new(),
        };
        Self::construct_catalog(family, &params)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn is_strictly_convex(&self) -> bool {
        self.strictly_convex
    }

    pub fn is_differentiable(&self) -> bool {
        self.differentiable
    }

    pub fn has_closed_form_derivative(&self) -> bool {
        match &self.shape {
            Shape::Custom(c) => c.derivative.is_some(),
            _ => true,
        }
    }

    /// `(coef, exp)` when this is a member of the power family.
    pub fn power_params(&self) -> Option<(f64, f64)> {
        match self.shape {
            Shape::Power { coef, exp } => Some((coef, exp)),
            _ => None,
        }
    }

    /// Evaluate at `t >= 0` (negative inputs are clamped to 0). `+inf` maps
    /// to the limit value.
    pub fn eval(&self, t: f64) -> f64 {
        let t = if t > 0.0 { t } else { 0.0 };
        match &self.shape {
            Shape::Power { coef, exp } => {
                if t == 0.0 {
                    0.0
                } else if *exp == 1.0 {
                    coef * t
                } else if *exp == 2.0 {
                    coef * t * t
                } else {
                    coef * t.powf(*exp)
                }
            }
            Shape::CappedLinear { cap } => t.min(*cap),
            Shape::Table { t: ts, v } => table_eval(ts, v, t),
            Shape::Custom(c) => (c.eval)(t),
        }
    }

    fn closed_form_derivative(&self, t: f64) -> Option<f64> {
        match &self.shape {
            Shape::Power { coef, exp } => Some(if t == 0.0 {
                if *exp > 1.0 {
                    0.0
                } else if *exp == 1.0 {
                    *coef
                } else {
                    f64::INFINITY
                }
            } else if t.is_infinite() {
                if *exp > 1.0 {
                    f64::INFINITY
                } else if *exp == 1.0 {
                    *coef
                } else {
                    0.0
                }
            } else {
                coef * exp * t.powf(exp - 1.0)
            }),
            Shape::CappedLinear { cap } => Some(if t < *cap { 1.0 } else { 0.0 }),
            Shape::Table { t: ts, v } => Some(table_right_slope(ts, v, t)),
            Shape::Custom(c) => c.derivative.as_ref().map(|d| d(t)),
        }
    }

    /// Right derivative at `t >= 0`.
    ///
    /// Uses the closed form when available. Otherwise (convex only) returns
    /// the last right difference quotient of a halving step sequence; the
    /// quotients decrease towards the right derivative for convex functions.
    /// Halving stops early once the step would drop below
    /// `sqrt(eps) * t`, where rounding starts to dominate.
    pub fn right_derivative(&self, t: f64) -> Result<f64> {
        let t = t.max(0.0);
        if let Some(d) = self.closed_form_derivative(t) {
            return Ok(d);
        }
        if !self.convex {
            return Err(Error::NotConvex(self.name.clone()));
        }
        Ok(self.numeric_right_derivative(t))
    }

    /// Difference-quotient right derivative, ignoring any closed form.
    pub fn numeric_right_derivative(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        let floor = f64::EPSILON.sqrt() * t;
        let mut h = (1e-8 * (1.0 + t)).max(1e-6);
        let ft = self.eval(t);
        let mut q = (self.eval(t + h) - ft) / h;
        for _ in 0..HALVINGS {
            let next = 0.5 * h;
            if next < floor {
                break;
            }
            h = next;
            q = (self.eval(t + h) - ft) / h;
        }
        q.max(0.0)
    }

    /// `(phi')^{-1}(s)`: the `t` with `phi'(t) = s`.
    ///
    /// Needs a differentiable, strictly convex function with `phi'(0) = 0`.
    pub fn inverse_right_derivative(&self, s: f64) -> Result<f64> {
        if !(self.differentiable && self.strictly_convex) {
            return Err(Error::InverseUnavailable(format!(
                "{} is not differentiable and strictly convex",
                self.name
            )));
        }
        let d0 = self.right_derivative(0.0)?;
        if d0 != 0.0 {
            return Err(Error::InverseUnavailable(format!(
                "{} has nonzero derivative {d0} at 0",
                self.name
            )));
        }
        if !(s >= 0.0) || s.is_nan() {
            return Err(Error::InverseUnavailable(format!("slope {s} below phi'(0) = 0")));
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        match &self.shape {
            Shape::Power { coef, exp } => {
                return Ok((s / (coef * exp)).powf(1.0 / (exp - 1.0)));
            }
            Shape::Custom(CustomShape {
                inverse_derivative: Some(inv),
                ..
            }) => return Ok(inv(s)),
            _ => {}
        }
        let mut hi = 1.0;
        let mut doublings = 0;
        while self.right_derivative(hi)? < s {
            hi *= 2.0;
            doublings += 1;
            if doublings > MAX_DOUBLINGS {
                return Err(Error::InverseUnavailable(format!(
                    "slope {s} not attained after {MAX_DOUBLINGS} doublings"
                )));
            }
        }
        let mut lo = if doublings == 0 { 0.0 } else { hi / 2.0 };
        // Bisect to 1e-12 absolute, and tighter for small roots.
        for _ in 0..256 {
            let tol = BISECTION_TOL * hi.min(1.0);
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.right_derivative(mid)? < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `(1/alpha) * phi'_+(t / (1 - alpha))`.
    pub fn phi_alpha(&self, alpha: f64, t: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(self.right_derivative(t / (1.0 - alpha))? / alpha)
    }

    /// Validate `phi(0) = 0`, monotonicity, and `inf_{t >= eps} phi(t) > 0`
    /// for `eps = 10^-k` on the supplied sorted grid.
    pub fn check_admissibility(&self, grid: &[f64]) -> AdmissibilityReport {
        let mut failures = Vec::new();
        let zero_at_zero = self.eval(0.0).abs() <= 1e-15;
        if !zero_at_zero {
            failures.push(format!("phi(0) = {} != 0", self.eval(0.0)));
        }
        let values: Vec<f64> = grid.iter().map(|&t| self.eval(t)).collect();
        let mut monotone = true;
        for i in 1..grid.len() {
            if values[i] < values[i - 1] || values[i].is_nan() {
                monotone = false;
                failures.push(format!(
                    "decrease between t={} ({}) and t={} ({})",
                    grid[i - 1],
                    values[i - 1],
                    grid[i],
                    values[i]
                ));
                break;
            }
        }
        let mut separation = true;
        let tmax = grid.iter().copied().fold(0.0, f64::max);
        for k in 0..=12 {
            let eps = 10f64.powi(-k);
            if eps > tmax {
                continue;
            }
            let inf = grid
                .iter()
                .zip(&values)
                .filter(|(t, _)| **t >= eps)
                .map(|(_, v)| *v)
                .fold(f64::INFINITY, f64::min);
            if !(inf > 0.0) {
                separation = false;
                failures.push(format!("inf over t >= {eps:e} is {inf}"));
                break;
            }
        }
        AdmissibilityReport {
            zero_at_zero,
            monotone,
            separation,
            failures,
        }
    }

    /// `t -> phi'_+(t)` as an admissible function (power family: exact).
    pub fn derivative_function(&self) -> Result<Self> {
        match self.shape {
            Shape::Power { coef, exp } if exp > 1.0 => Self::scaled_power(coef * exp, exp - 1.0),
            _ => {
                if !self.convex && !self.has_closed_form_derivative() {
                    return Err(Error::NotConvex(self.name.clone()));
                }
                let base = self.clone();
                let d0 = base.right_derivative(0.0)?;
                if d0 != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "derivative of {} does not vanish at 0",
                        self.name
                    )));
                }
                Ok(Self::custom(
                    format!("d[{}]", self.name),
                    CustomShape {
                        eval: Arc::new(move |t| base.right_derivative(t).unwrap_or(f64::NAN)),
                        derivative: None,
                        inverse_derivative: None,
                    },
                    false,
                    false,
                    false,
                ))
            }
        }
    }

    /// `(phi')^{-1}` as an admissible function (power family: exact).
    pub fn inverse_derivative_function(&self) -> Result<Self> {
        match self.shape {
            Shape::Power { coef, exp } if exp > 1.0 => {
                let q = 1.0 / (exp - 1.0);
                Self::scaled_power((coef * exp).powf(-q), q)
            }
            _ => {
                // Fail early if the hypotheses are missing.
                self.inverse_right_derivative(1.0)?;
                let base = self.clone();
                Ok(Self::custom(
                    format!("dinv[{}]", self.name),
                    CustomShape {
                        eval: Arc::new(move |s| {
                            base.inverse_right_derivative(s).unwrap_or(f64::NAN)
                        }),
                        derivative: None,
                        inverse_derivative: None,
                    },
                    false,
                    false,
                    false,
                ))
            }
        }
    }

    /// `t -> int_0^t psi(s) ds`, closed form for the power family.
    pub fn running_integral(&self) -> Result<Self> {
        match self.shape {
            Shape::Power { coef, exp } => Self::scaled_power(coef / (exp + 1.0), exp + 1.0),
            _ => Err(Error::InvalidParameter(format!(
                "running integral only available in closed form for the power family, got {}",
                self.name
            ))),
        }
    }
}

fn table_eval(ts: &[f64], v: &[f64], t: f64) -> f64 {
    let n = ts.len();
    if t <= ts[0] {
        return v[0];
    }
    if t >= ts[n - 1] {
        let slope = (v[n - 1] - v[n - 2]) / (ts[n - 1] - ts[n - 2]);
        return if slope == 0.0 {
            v[n - 1]
        } else {
            v[n - 1] + slope * (t - ts[n - 1])
        };
    }
    let j = ts.partition_point(|x| *x <= t);
    let (t0, t1, v0, v1) = (ts[j - 1], ts[j], v[j - 1], v[j]);
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

fn table_right_slope(ts: &[f64], v: &[f64], t: f64) -> f64 {
    let n = ts.len();
    if t < ts[0] {
        return 0.0;
    }
    let j = ts.partition_point(|x| *x <= t).clamp(1, n - 1);
    (v[j] - v[j - 1]) / (ts[j] - ts[j - 1])
}

pub(crate) fn parse_params(rest: &str) -> Result<Vec<f64>> {
    rest.split([':', ','])
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let s = s.trim();
            if let Some((num, den)) = s.split_once('/') {
                let n: f64 = num.parse().map_err(|_| Error::Parse(s.to_string()))?;
                let d: f64 = den.parse().map_err(|_| Error::Parse(s.to_string()))?;
                Ok(n / d)
            } else {
                s.parse().map_err(|_| Error::Parse(format!("bad number `{s}`")))
            }
        })
        .collect()
}

pub(crate) fn fmt_num(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_two_flags_and_value() {
        let phi = AdmissibleFunction::construct_catalog("power", &[2.0]).unwrap();
        assert_eq!(phi.eval(3.0), 9.0);
        assert!(phi.is_convex() && phi.is_strictly_convex() && phi.is_differentiable());
    }

    #[test]
    fn linear_is_not_strictly_convex() {
        let phi = AdmissibleFunction::power(1.0).unwrap();
        assert_eq!(phi.eval(2.5), 2.5);
        assert!(!phi.is_strictly_convex());
        assert!(phi.is_convex());
    }

    #[test]
    fn capped_linear_is_admissible_not_convex() {
        let phi = AdmissibleFunction::from_id("capped-linear:1").unwrap();
        assert!(!phi.is_convex());
        assert_eq!(phi.eval(0.5), 0.5);
        assert_eq!(phi.eval(4.0), 1.0);
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 0.01).collect();
        assert!(phi.check_admissibility(&grid).pass());
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(
            AdmissibleFunction::construct_catalog("wiggle", &[1.0]),
            Err(Error::UnknownId(_))
        ));
        assert!(matches!(
            AdmissibleFunction::power(0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            AdmissibleFunction::power(-1.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            AdmissibleFunction::construct_catalog("table", &[0.0, 0.0, 1.0, 2.0, 2.0, 1.0]),
            Err(Error::NonMonotoneTable(_))
        ));
    }

    #[test]
    fn right_derivative_examples() {
        let sq = AdmissibleFunction::power(2.0).unwrap();
        assert_eq!(sq.right_derivative(1.0).unwrap(), 2.0);
        let lin = AdmissibleFunction::power(1.0).unwrap();
        assert_eq!(lin.right_derivative(0.0).unwrap(), 1.0);
        // max(t - 1, 0): convex, kink at 1, no closed form.
        let kink = AdmissibleFunction::custom(
            "hinge",
            CustomShape {
                eval: Arc::new(|t| (t - 1.0).max(0.0)),
                derivative: None,
                inverse_derivative: None,
            },
            true,
            false,
            false,
        );
        assert_relative_eq!(kink.right_derivative(1.0).unwrap(), 1.0, epsilon = 1e-7);
        assert_relative_eq!(kink.right_derivative(0.5).unwrap(), 0.0, epsilon = 1e-7);
    }

    #[test]
    fn right_derivative_needs_convexity_or_closed_form() {
        let bumpy = AdmissibleFunction::custom(
            "bumpy",
            CustomShape {
                eval: Arc::new(|t: f64| t.min(1.0)),
                derivative: None,
                inverse_derivative: None,
            },
            false,
            false,
            false,
        );
        assert!(matches!(bumpy.right_derivative(0.5), Err(Error::NotConvex(_))));
    }

    #[test]
    fn inverse_derivative_examples() {
        let sq = AdmissibleFunction::power(2.0).unwrap();
        assert_eq!(sq.inverse_right_derivative(1.0).unwrap(), 0.5);
        assert_eq!(sq.inverse_right_derivative(0.0).unwrap(), 0.0);
        // t^4 through bisection: closed-form derivative only, no inverse.
        let quartic = AdmissibleFunction::custom(
            "t4",
            CustomShape {
                eval: Arc::new(|t: f64| t.powi(4)),
                derivative: Some(Arc::new(|t: f64| 4.0 * t.powi(3))),
                inverse_derivative: None,
            },
            true,
            true,
            true,
        );
        assert_relative_eq!(quartic.inverse_right_derivative(4.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            quartic.inverse_right_derivative(4.0 * 27.0).unwrap(),
            3.0,
            epsilon = 1e-11
        );
    }

    #[test]
    fn inverse_derivative_rejects_bad_inputs() {
        let lin = AdmissibleFunction::power(1.0).unwrap();
        assert!(lin.inverse_right_derivative(1.0).is_err());
        let sq = AdmissibleFunction::power(2.0).unwrap();
        assert!(sq.inverse_right_derivative(-1.0).is_err());
        let capped = AdmissibleFunction::custom(
            "sat",
            CustomShape {
                eval: Arc::new(|t: f64| t * t),
                derivative: Some(Arc::new(|t: f64| (2.0 * t).min(3.0))),
                inverse_derivative: None,
            },
            true,
            true,
            true,
        );
        assert!(matches!(
            capped.inverse_right_derivative(5.0),
            Err(Error::InverseUnavailable(_))
        ));
    }

    #[test]
    fn phi_alpha_examples() {
        let sq = AdmissibleFunction::power(2.0).unwrap();
        assert_eq!(sq.phi_alpha(0.5, 1.0).unwrap(), 8.0);
        assert_eq!(sq.phi_alpha(0.3, 0.0).unwrap(), 0.0);
        let lin = AdmissibleFunction::power(1.0).unwrap();
        assert_eq!(lin.phi_alpha(0.5, 3.0).unwrap(), 2.0);
        assert!(sq.phi_alpha(1.0, 1.0).is_err());
        assert!(sq.phi_alpha(0.0, 1.0).is_err());
    }

    #[test]
    fn admissibility_report() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.05).collect();
        assert!(AdmissibleFunction::power(2.0).unwrap().check_admissibility(&grid).pass());
        let zero = AdmissibleFunction::custom(
            "zero",
            CustomShape {
                eval: Arc::new(|_| 0.0),
                derivative: None,
                inverse_derivative: None,
            },
            true,
            false,
            true,
        );
        let rep = zero.check_admissibility(&grid);
        assert!(rep.zero_at_zero && rep.monotone && !rep.separation);
        assert!(!rep.pass());
    }

    #[test]
    fn derived_functions_of_powers() {
        let sq = AdmissibleFunction::power(2.0).unwrap();
        let psi = sq.inverse_derivative_function().unwrap();
        assert_relative_eq!(psi.eval(3.0), 1.5);
        let q = AdmissibleFunction::power(4.0).unwrap();
        let psi4 = q.inverse_derivative_function().unwrap();
        assert_relative_eq!(psi4.eval(4.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(psi4.eval(32.0), 2.0, epsilon = 1e-14);
        let d = sq.derivative_function().unwrap();
        assert_eq!(d.eval(1.5), 3.0);
        let lin = AdmissibleFunction::power(1.0).unwrap();
        let phi = lin.running_integral().unwrap();
        assert_eq!(phi.eval(2.0), 2.0);
    }

    #[test]
    fn table_interpolates_and_extrapolates() {
        let phi = AdmissibleFunction::from_id("table:0,0,1,1,2,3").unwrap();
        assert_eq!(phi.eval(0.5), 0.5);
        assert_eq!(phi.eval(1.5), 2.0);
        assert_eq!(phi.eval(3.0), 5.0);
        assert!(phi.is_convex());
        assert_eq!(phi.right_derivative(1.0).unwrap(), 2.0);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn log_grid() -> Vec<f64> {
        (0..=90).map(|k| 1e-6 * 10f64.powf(k as f64 / 10.0)).collect()
    }

    fn quartic_without_inverse() -> AdmissibleFunction {
        AdmissibleFunction::custom(
            "t4",
            CustomShape {
                eval: Arc::new(|t: f64| t.powi(4)),
                derivative: Some(Arc::new(|t: f64| 4.0 * t.powi(3))),
                inverse_derivative: None,
            },
            true,
            true,
            true,
        )
    }

    proptest! {
        #[test]
        fn derivative_is_monotone(p in 1.0f64..6.0, c in 0.1f64..10.0, a in 1e-3f64..10.0, b in 1e-3f64..10.0) {
            let phi = AdmissibleFunction::scaled_power(c, p).unwrap();
            let (t1, t2) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(phi.right_derivative(t1).unwrap() <= phi.right_derivative(t2).unwrap());
            prop_assert!(phi.numeric_right_derivative(t1) <= phi.numeric_right_derivative(t2) * (1.0 + 1e-7));
        }

        #[test]
        fn closed_form_matches_numeric(p in 1.0f64..6.0, e in -3.0f64..3.0) {
            let phi = AdmissibleFunction::power(p).unwrap();
            let t = 10f64.powf(e);
            let exact = phi.right_derivative(t).unwrap();
            let approx = phi.numeric_right_derivative(t);
            prop_assert!((exact - approx).abs() <= 1e-6 * exact, "p={p} t={t} {exact} vs {approx}");
        }

        #[test]
        fn catalog_is_admissible(p in 0.1f64..6.0, c in 0.1f64..10.0) {
            let grid: Vec<f64> = std::iter::once(0.0).chain(log_grid()).collect();
            for phi in [
                AdmissibleFunction::power(p).unwrap(),
                AdmissibleFunction::scaled_power(c, p).unwrap(),
                AdmissibleFunction::capped_linear(c).unwrap(),
                AdmissibleFunction::table(vec![0.0, 1.0, 2.0], vec![0.0, c, c + p]).unwrap(),
            ] {
                let rep = phi.check_admissibility(&grid);
                prop_assert!(rep.pass(), "{}: {:?}", phi.name(), rep.failures);
            }
        }
    }

    #[test]
    fn inverse_round_trip_on_log_grid() {
        let fns = [
            AdmissibleFunction::power(2.0).unwrap(),
            AdmissibleFunction::power(4.0).unwrap(),
            AdmissibleFunction::scaled_power(0.3, 1.5).unwrap(),
            quartic_without_inverse(),
        ];
        for phi in &fns {
            for t in log_grid() {
                let s = phi.right_derivative(t).unwrap();
                let back = phi.inverse_right_derivative(s).unwrap();
                assert!(
                    (back - t).abs() <= 1e-9 * t,
                    "{}: t={t} back={back}",
                    phi.name()
                );
            }
        }
    }

    #[test]
    fn family_examples_parse() {
        for (id, _) in ADMISSIBLE_FAMILIES {
            AdmissibleFunction::from_id(id).unwrap();
        }
    }
}

//! Closed-form test functions addressable by string id.
//!
//! In two dimensions every entry is the separable sum `f(x) + f(y)` of its
//! one-dimensional form, except `indicator-ball`, which uses the Euclidean
//! ball.

use std::fmt;

use crate::admissible::{fmt_num, parse_params};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionKind {
    /// `a x^2`
    Quad { a: f64 },
    /// `x^4`
    Quartic,
    /// `x^4 + x^2`
    QuarticQuad,
    /// `|x|`
    Abs,
    /// `c |x|^q`
    PowerQ { q: f64, c: f64 },
    /// `(x^2 - 1)^2`
    DoubleWell,
    /// `max(|x| - 1, 0)^2`
    FlatWell,
    /// `0` for `x <= 0`, `x^2` for `x > 0`
    OneSided,
    /// `0` on `[c - r, c + r]`, `+inf` elsewhere
    IndicatorBall { c: f64, r: f64 },
    /// `|x| + x^2`
    AbsQuad,
    /// `c x`
    Linear { c: f64 },
    /// `1 - |x|` on `[-1, 1]`, `+inf` elsewhere
    ConcaveCap,
    /// `max(a x, b x)`
    Kink { a: f64, b: f64 },
    /// Piecewise-linear interpolation of `(x, y)` nodes, `+inf` outside.
    UserTable { xs: Vec<f64>, ys: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    pub kind: FunctionKind,
}

/// `(id, description)` for every registered function family.
pub const FUNCTION_IDS: &[(&str, &str)] = &[
    ("quad", "a*x^2 (quad:a, default a = 1)"),
    ("quartic", "x^4"),
    ("quartic-quad", "x^4 + x^2"),
    ("abs", "|x|"),
    ("power-q", "c*|x|^q (power-q:q or power-q:q:c)"),
    ("double-well", "(x^2 - 1)^2"),
    ("flat-well", "max(|x| - 1, 0)^2"),
    ("one-sided", "0 for x <= 0, x^2 for x > 0"),
    ("indicator-ball", "0 on the ball of radius r around c, +inf outside (indicator-ball:c:r)"),
    ("abs-quad", "|x| + x^2"),
    ("linear", "c*x (linear:c)"),
    ("concave-cap", "1 - |x| on [-1, 1], +inf outside"),
    ("kink", "max(a*x, b*x) (kink:a:b)"),
    ("user-table", "piecewise-linear through x0,y0,x1,y1,..., +inf outside"),
];

impl FunctionSpec {
    pub fn new(kind: FunctionKind) -> Self {
        Self { kind }
    }

    /// Parse ids such as `quad`, `quad:0.5`, `power-q:4/3:0.75`,
    /// `indicator-ball:0:1`.
    pub fn parse(id: &str) -> Result<Self> {
        let mut parts = id.trim().splitn(2, ':');
        let family = parts.next().unwrap_or_default();
        let params = match parts.next() {
            Some(rest) => parse_params(rest)?,
            None => Vec::new(),
        };
        Self::from_parts(family, &params)
    }

    pub fn from_parts(family: &str, params: &[f64]) -> Result<Self> {
        let arity = |lo: usize, hi: usize| -> Result<()> {
            if (lo..=hi).contains(&params.len()) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "`{family}` takes {lo}..={hi} parameters, got {}",
                    params.len()
                )))
            }
        };
        let kind = match family {
            "quad" => {
                arity(0, 1)?;
                FunctionKind::Quad {
                    a: params.first().copied().unwrap_or(1.0),
                }
            }
            "quartic" => {
                arity(0, 0)?;
                FunctionKind::Quartic
            }
            "quartic-quad" => {
                arity(0, 0)?;
                FunctionKind::QuarticQuad
            }
            "abs" => {
                arity(0, 0)?;
                FunctionKind::Abs
            }
            "power-q" => {
                arity(1, 2)?;
                let q = params[0];
                let c = params.get(1).copied().unwrap_or(1.0);
                if !(q > 0.0) || !(c > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "power-q needs q > 0 and c > 0, got q={q}, c={c}"
                    )));
                }
                FunctionKind::PowerQ { q, c }
            }
            "double-well" => {
                arity(0, 0)?;
                FunctionKind::DoubleWell
            }
            "flat-well" => {
                arity(0, 0)?;
                FunctionKind::FlatWell
            }
            "one-sided" => {
                arity(0, 0)?;
                FunctionKind::OneSided
            }
            "indicator-ball" => {
                arity(2, 2)?;
                if !(params[1] > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "indicator-ball radius must be positive, got {}",
                        params[1]
                    )));
                }
                FunctionKind::IndicatorBall {
                    c: params[0],
                    r: params[1],
                }
            }
            "abs-quad" => {
                arity(0, 0)?;
                FunctionKind::AbsQuad
            }
            "linear" => {
                arity(1, 1)?;
                FunctionKind::Linear { c: params[0] }
            }
            "concave-cap" => {
                arity(0, 0)?;
                FunctionKind::ConcaveCap
            }
            "kink" => {
                arity(2, 2)?;
                FunctionKind::Kink {
                    a: params[0],
                    b: params[1],
                }
            }
            "user-table" => {
                if params.len() < 4 || !params.len().is_multiple_of(2) {
                    return Err(Error::InvalidParameter(
                        "user-table needs at least two (x, y) pairs".into(),
                    ));
                }
                let (xs, ys): (Vec<f64>, Vec<f64>) =
                    params.chunks(2).map(|c| (c[0], c[1])).unzip();
                if xs.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidParameter(
                        "user-table x values must be strictly increasing".into(),
                    ));
                }
                FunctionKind::UserTable { xs, ys }
            }
            other => return Err(Error::UnknownId(other.to_string())),
        };
        Ok(Self { kind })
    }

    pub fn id(&self) -> String {
        use FunctionKind::*;
        match &self.kind {
            Quad { a } if *a == 1.0 => "quad".into(),
            Quad { a } => format!("quad:{}", fmt_num(*a)),
            Quartic => "quartic".into(),
            QuarticQuad => "quartic-quad".into(),
            Abs => "abs".into(),
            PowerQ { q, c } if *c == 1.0 => format!("power-q:{}", fmt_num(*q)),
            PowerQ { q, c } => format!("power-q:{}:{}", fmt_num(*q), fmt_num(*c)),
            DoubleWell => "double-well".into(),
            FlatWell => "flat-well".into(),
            OneSided => "one-sided".into(),
            IndicatorBall { c, r } => format!("indicator-ball:{}:{}", fmt_num(*c), fmt_num(*r)),
            AbsQuad => "abs-quad".into(),
            Linear { c } => format!("linear:{}", fmt_num(*c)),
            ConcaveCap => "concave-cap".into(),
            Kink { a, b } => format!("kink:{}:{}", fmt_num(*a), fmt_num(*b)),
            UserTable { xs, ys } => format!(
                "user-table:{}",
                xs.iter()
                    .zip(ys)
                    .map(|(x, y)| format!("{},{}", fmt_num(*x), fmt_num(*y)))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        }
    }

    /// One-dimensional value.
    pub fn eval1(&self, x: f64) -> f64 {
        use FunctionKind::*;
        match &self.kind {
            Quad { a } => a * x * x,
            Quartic => {
                let s = x * x;
                s * s
            }
            QuarticQuad => {
                let s = x * x;
                s * s + s
            }
            Abs => x.abs(),
            PowerQ { q, c } => c * x.abs().powf(*q),
            DoubleWell => {
                let s = x * x - 1.0;
                s * s
            }
            FlatWell => {
                let s = (x.abs() - 1.0).max(0.0);
                s * s
            }
            OneSided => {
                if x > 0.0 {
                    x * x
                } else {
                    0.0
                }
            }
            IndicatorBall { c, r } => {
                if (x - c).abs() <= *r {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            AbsQuad => x.abs() + x * x,
            Linear { c } => c * x,
            ConcaveCap => {
                if x.abs() <= 1.0 {
                    1.0 - x.abs()
                } else {
                    f64::INFINITY
                }
            }
            Kink { a, b } => (a * x).max(b * x),
            UserTable { xs, ys } => {
                let n = xs.len();
                if x < xs[0] || x > xs[n - 1] {
                    return f64::INFINITY;
                }
                let j = xs.partition_point(|t| *t <= x).clamp(1, n - 1);
                let (x0, x1) = (xs[j - 1], xs[j]);
                ys[j - 1] + (ys[j] - ys[j - 1]) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// Value at a point of dimension 1 or 2.
    pub fn eval(&self, p: &[f64]) -> f64 {
        match (&self.kind, p.len()) {
            (_, 1) => self.eval1(p[0]),
            (FunctionKind::IndicatorBall { c, r }, _) => {
                let d2: f64 = p.iter().map(|x| (x - c) * (x - c)).sum();
                if d2.sqrt() <= *r {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            _ => p.iter().map(|&x| self.eval1(x)).sum(),
        }
    }

    /// Whether the one-dimensional form is convex.
    pub fn is_convex(&self) -> bool {
        use FunctionKind::*;
        match &self.kind {
            Quad { a } => *a >= 0.0,
            PowerQ { q, .. } => *q >= 1.0,
            DoubleWell | ConcaveCap => false,
            Kink { a, b } => a <= b,
            UserTable { xs, ys } => {
                let s: Vec<f64> = (1..xs.len())
                    .map(|i| (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]))
                    .collect();
                s.windows(2).all(|w| w[0] <= w[1])
            }
            _ => true,
        }
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in [
            "quad",
            "quad:0.5",
            "quartic",
            "quartic-quad",
            "abs",
            "power-q:1.5",
            "power-q:1.3333333333333333:0.75",
            "double-well",
            "flat-well",
            "one-sided",
            "indicator-ball:0:1",
            "abs-quad",
            "linear:-1",
            "concave-cap",
            "kink:1:2",
            "user-table:0,0,1,1,2,4",
        ] {
            let spec = FunctionSpec::parse(id).unwrap();
            assert_eq!(spec.id(), id);
            assert_eq!(FunctionSpec::parse(&spec.id()).unwrap(), spec);
        }
    }

    #[test]
    fn fractions_parse() {
        let s = FunctionSpec::parse("power-q:4/3:3/4").unwrap();
        assert_eq!(
            s.kind,
            FunctionKind::PowerQ {
                q: 4.0 / 3.0,
                c: 0.75
            }
        );
    }

    #[test]
    fn unknown_and_bad_ids() {
        assert!(matches!(FunctionSpec::parse("sine"), Err(Error::UnknownId(_))));
        assert!(FunctionSpec::parse("indicator-ball:0").is_err());
        assert!(FunctionSpec::parse("power-q:-1").is_err());
        assert!(FunctionSpec::parse("quad:x").is_err());
    }

    #[test]
    fn values() {
        let dw = FunctionSpec::parse("double-well").unwrap();
        assert_eq!(dw.eval1(-2.0), 9.0);
        let fw = FunctionSpec::parse("flat-well").unwrap();
        assert_eq!(fw.eval1(0.5), 0.0);
        assert_eq!(fw.eval1(-3.0), 4.0);
        let os = FunctionSpec::parse("one-sided").unwrap();
        assert_eq!(os.eval1(-1.0), 0.0);
        assert_eq!(os.eval1(2.0), 4.0);
        let ball = FunctionSpec::parse("indicator-ball:0:1").unwrap();
        assert_eq!(ball.eval(&[0.6, 0.6]), 0.0);
        assert_eq!(ball.eval(&[0.8, 0.8]), f64::INFINITY);
        let q = FunctionSpec::parse("quad").unwrap();
        assert_eq!(q.eval(&[1.0, 2.0]), 5.0);
    }

    #[test]
    fn every_family_is_listed() {
        let samples = [
            "quad", "quartic", "quartic-quad", "abs", "power-q:2", "double-well", "flat-well",
            "one-sided", "indicator-ball:0:1", "abs-quad", "linear:1", "concave-cap", "kink:0:1",
            "user-table:0,0,1,1",
        ];
        assert_eq!(samples.len(), FUNCTION_IDS.len());
        for s in samples {
            let family = s.split(':').next().unwrap();
            assert!(FUNCTION_IDS.iter().any(|(id, _)| *id == family));
            FunctionSpec::parse(s).unwrap();
        }
    }
}

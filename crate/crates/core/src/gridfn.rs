//! Extended-real functions sampled on uniform box grids in one or two
//! dimensions.

use std::fmt::Write as _;

use crate::catalog::FunctionSpec;
use crate::error::{Error, Result};

/// Grid coordinates. One-dimensional points keep the second slot at 0.
pub type Point = [f64; 2];

pub fn dist(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    if dy == 0.0 {
        dx.abs()
    } else {
        dx.hypot(dy)
    }
}

/// A finite set of grid points in row-major order, without duplicates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(mut points: Vec<Point>) -> Self {
        points.sort_by(|a, b| a[1].total_cmp(&b[1]).then(a[0].total_cmp(&b[0])));
        points.dedup();
        Self { points }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.points.iter().any(|q| q == p)
    }

    /// Largest pairwise distance; 0 for sets with fewer than two points.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                d = d.max(dist(a, b));
            }
        }
        d
    }
}

/// Minimum Euclidean distance from `x` to the members of `s`; `+inf` for an
/// empty set.
pub fn distance_to_set(x: &Point, s: &PointSet) -> f64 {
    s.points
        .iter()
        .map(|p| dist(x, p))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    n: [usize; 2],
    values: Vec<f64>,
    name: String,
}

fn check_axis(lo: f64, hi: f64, n: usize) -> Result<()> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "points per axis must be odd and at least 3, got {n}"
        )));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidGrid(format!("degenerate box [{lo}, {hi}]")));
    }
    Ok(())
}

/// `i`-th node of `n` equally spaced points on `[lo, hi]`. Written as a
/// weighted mean so symmetric boxes give exactly symmetric nodes.
pub fn node(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    let m = (n - 1) as f64;
    (lo * (m - i as f64) + hi * i as f64) / m
}

impl GridFunction {
    /// Build from raw values in row-major order (axis 0 fastest).
    pub fn new(
        dim: usize,
        lo: [f64; 2],
        hi: [f64; 2],
        n: [usize; 2],
        values: Vec<f64>,
        name: impl Into<String>,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        for k in 0..dim {
            check_axis(lo[k], hi[k], n[k])?;
        }
        let (lo, hi, n) = if dim == 1 {
            ([lo[0], 0.0], [hi[0], 0.0], [n[0], 1])
        } else {
            (lo, hi, n)
        };
        let expected = n[0] * n[1];
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::InvalidGrid("values must not be NaN or -inf".into()));
        }
        if !values.iter().any(|v| v.is_finite()) {
            return Err(Error::ImproperFunction);
        }
        Ok(Self {
            dim,
            lo,
            hi,
            n,
            values,
            name: name.into(),
        })
    }

    /// Sample `f` at every node of the box.
    pub fn from_fn(
        dim: usize,
        lo: [f64; 2],
        hi: [f64; 2],
        n: [usize; 2],
        name: impl Into<String>,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        for k in 0..dim {
            check_axis(lo[k], hi[k], n[k])?;
        }
        let ny = if dim == 1 { 1 } else { n[1] };
        let mut values = Vec::with_capacity(n[0] * ny);
        for j in 0..ny {
            for i in 0..n[0] {
                let x = node(lo[0], hi[0], n[0], i);
                let v = if dim == 1 {
                    f(&[x])
                } else {
                    f(&[x, node(lo[1], hi[1], n[1], j)])
                };
                values.push(v);
            }
        }
        Self::new(dim, lo, hi, n, values, name)
    }

    /// Sample a catalog function on `[lo, hi]^dim` with `points` nodes per
    /// axis.
    pub fn sample_function(
        spec: &FunctionSpec,
        dim: usize,
        lo: f64,
        hi: f64,
        points: usize,
    ) -> Result<Self> {
        Self::from_fn(dim, [lo, lo], [hi, hi], [points, points], spec.id(), |p| spec.eval(p))
    }

    pub fn sample_1d(spec: &FunctionSpec, lo: f64, hi: f64, points: usize) -> Result<Self> {
        Self::sample_function(spec, 1, lo, hi, points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> [f64; 2] {
        self.lo
    }

    pub fn hi(&self) -> [f64; 2] {
        self.hi
    }

    pub fn points_per_axis(&self) -> [usize; 2] {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    /// Grid spacing per axis (0 on the unused axis in 1-D).
    pub fn spacing(&self) -> [f64; 2] {
        let mut h = [0.0; 2];
        for (k, hk) in h.iter_mut().enumerate().take(self.dim) {
            *hk = (self.hi[k] - self.lo[k]) / (self.n[k] - 1) as f64;
        }
        h
    }

    /// Largest spacing over the used axes.
    pub fn h(&self) -> f64 {
        let s = self.spacing();
        s[0].max(s[1])
    }

    /// Cell diagonal (equals `h` in 1-D).
    pub fn cell_diagonal(&self) -> f64 {
        let s = self.spacing();
        s[0].hypot(s[1])
    }

    /// Axis-0 node coordinates.
    pub fn axis(&self, k: usize) -> Vec<f64> {
        (0..self.n[k])
            .map(|i| node(self.lo[k], self.hi[k], self.n[k], i))
            .collect()
    }

    pub fn coord(&self, idx: usize) -> Point {
        let i = idx % self.n[0];
        let x = node(self.lo[0], self.hi[0], self.n[0], i);
        if self.dim == 1 {
            [x, 0.0]
        } else {
            let j = idx / self.n[0];
            [x, node(self.lo[1], self.hi[1], self.n[1], j)]
        }
    }

    /// Index of the grid node nearest to `p`, if `p` is within `1e-6 h` of
    /// it.
    pub fn index_of(&self, p: &Point) -> Option<usize> {
        let h = self.spacing();
        let mut idx = [0usize; 2];
        for k in 0..self.dim {
            let t = (p[k] - self.lo[k]) / h[k];
            let r = t.round();
            if r < 0.0 || r > (self.n[k] - 1) as f64 || (t - r).abs() > 1e-6 {
                return None;
            }
            idx[k] = r as usize;
        }
        Some(idx[0] + idx[1] * self.n[0])
    }

    pub fn value_at(&self, p: &Point) -> Option<f64> {
        self.index_of(p).map(|i| self.values[i])
    }

    fn check_point_dim(&self, p: &[f64]) -> Result<Point> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        Ok(if self.dim == 1 { [p[0], 0.0] } else { [p[0], p[1]] })
    }

    /// Indices of grid nodes in the closed Euclidean ball `B[center, r]`.
    pub fn ball_indices(&self, center: &Point, r: f64) -> Vec<usize> {
        let h = self.spacing();
        let rr = r * (1.0 + 1e-12);
        let range = |k: usize| -> (usize, usize) {
            let last = (self.n[k] - 1) as f64;
            let a = ((center[k] - rr - self.lo[k]) / h[k]).floor().clamp(0.0, last) as usize;
            let b = ((center[k] + rr - self.lo[k]) / h[k]).ceil().clamp(0.0, last) as usize;
            (a, b)
        };
        let (i0, i1) = range(0);
        let (j0, j1) = if self.dim == 2 { range(1) } else { (0, 0) };
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                let idx = i + j * self.n[0];
                if dist(&self.coord(idx), center) <= rr {
                    out.push(idx);
                }
            }
        }
        out
    }

    /// Pointwise `f(x) - <u, x>`; `+inf` stays `+inf`.
    pub fn tilt_perturb(&self, u: &[f64]) -> Result<Self> {
        let u = self.check_point_dim(u)?;
        let values = (0..self.len())
            .map(|i| {
                let v = self.values[i];
                if v.is_infinite() {
                    v
                } else {
                    let x = self.coord(i);
                    v - (u[0] * x[0] + u[1] * x[1])
                }
            })
            .collect();
        let mut out = self.clone();
        out.values = values;
        Ok(out)
    }

    /// `f + indicator of B[center, r]`.
    pub fn add_ball_indicator(&self, center: &[f64], r: f64) -> Result<Self> {
        let c = self.check_point_dim(center)?;
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
        }
        let inside = self.ball_indices(&c, r);
        if inside.is_empty() {
            return Err(Error::EmptyRegion(format!(
                "ball around {c:?} of radius {r} misses the grid"
            )));
        }
        let mut values = vec![f64::INFINITY; self.len()];
        for i in inside {
            values[i] = self.values[i];
        }
        if !values.iter().any(|v| v.is_finite()) {
            return Err(Error::EmptyRegion("no finite value left inside the ball".into()));
        }
        let mut out = self.clone();
        out.values = values;
        Ok(out)
    }

    /// Largest neighbour difference quotient between finite values inside
    /// `B[center, r]`.
    pub fn local_lipschitz(&self, center: &Point, r: f64) -> f64 {
        let h = self.spacing();
        let mut l: f64 = 0.0;
        for idx in self.ball_indices(center, r) {
            let v = self.values[idx];
            if !v.is_finite() {
                continue;
            }
            let i = idx % self.n[0];
            if i + 1 < self.n[0] {
                let w = self.values[idx + 1];
                if w.is_finite() {
                    l = l.max((w - v).abs() / h[0]);
                }
            }
            if self.dim == 2 && idx / self.n[0] + 1 < self.n[1] {
                let w = self.values[idx + self.n[0]];
                if w.is_finite() {
                    l = l.max((w - v).abs() / h[1]);
                }
            }
        }
        l
    }

    /// Minimum value over `B[center, r]` and the first index attaining it.
    pub fn ball_min(&self, center: &[f64], r: f64) -> Result<(f64, usize)> {
        let c = self.check_point_dim(center)?;
        let mut best: Option<(f64, usize)> = None;
        for idx in self.ball_indices(&c, r) {
            let v = self.values[idx];
            if v.is_finite() && best.is_none_or(|(b, _)| v < b) {
                best = Some((v, idx));
            }
        }
        best.ok_or_else(|| Error::EmptyRegion(format!("no finite value in B[{c:?}, {r}]")))
    }

    /// Grid points of `B[center, r]` within `tol` of the minimum over the
    /// ball. `tol = None` uses `1e-9 + L h` with `L` from
    /// [`local_lipschitz`](Self::local_lipschitz).
    pub fn localized_argmin(&self, center: &[f64], r: f64, tol: Option<f64>) -> Result<PointSet> {
        let (m, _) = self.ball_min(center, r)?;
        let c = self.check_point_dim(center)?;
        let tol = tol.unwrap_or_else(|| self.default_argmin_tol(&c, r));
        let pts = self
            .ball_indices(&c, r)
            .into_iter()
            .filter(|&i| self.values[i] <= m + tol)
            .map(|i| self.coord(i))
            .collect();
        Ok(PointSet::new(pts))
    }

    pub fn default_argmin_tol(&self, center: &Point, r: f64) -> f64 {
        1e-9 + self.local_lipschitz(center, r) * self.h()
    }

    /// Serialize as CSV: a column header, one `# dim, lo, hi, points` row
    /// per axis, then one value per line with `inf` for `+inf`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("# dim, lo, hi, points\n");
        for k in 0..self.dim {
            let _ = writeln!(s, "# {}, {}, {}, {}", self.dim, self.lo[k], self.hi[k], self.n[k]);
        }
        for v in &self.values {
            if v.is_infinite() {
                s.push_str("inf\n");
            } else {
                let _ = writeln!(s, "{v:?}");
            }
        }
        s
    }

    pub fn from_csv(text: &str, name: impl Into<String>) -> Result<Self> {
        let mut axes: Vec<(usize, f64, f64, usize)> = Vec::new();
        let mut values = Vec::new();
        let parse_f = |s: &str| -> Result<f64> {
            match s.trim() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                t => t.parse().map_err(|_| Error::Parse(format!("bad value `{t}`"))),
            }
        };
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let cols: Vec<&str> = rest.split(',').map(str::trim).collect();
                if cols.first() == Some(&"dim") {
                    continue;
                }
                if cols.len() != 4 {
                    return Err(Error::Parse(format!("bad header row `{line}`")));
                }
                let dim = cols[0].parse().map_err(|_| Error::Parse(cols[0].into()))?;
                let n = cols[3].parse().map_err(|_| Error::Parse(cols[3].into()))?;
                axes.push((dim, parse_f(cols[1])?, parse_f(cols[2])?, n));
            } else {
                values.push(parse_f(line)?);
            }
        }
        let dim = axes
            .first()
            .map(|a| a.0)
            .ok_or_else(|| Error::Parse("missing header row".into()))?;
        if axes.len() != dim {
            return Err(Error::Parse(format!(
                "expected {dim} axis rows, found {}",
                axes.len()
            )));
        }
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        let mut n = [1usize; 2];
        for (k, a) in axes.iter().enumerate() {
            lo[k] = a.1;
            hi[k] = a.2;
            n[k] = a.3;
        }
        Self::new(dim, lo, hi, n, values, name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(id: &str) -> FunctionSpec {
        FunctionSpec::parse(id).unwrap()
    }

    #[test]
    fn sampling_examples() {
        let q = GridFunction::sample_1d(&spec("quad"), -1.0, 1.0, 3).unwrap();
        assert_eq!(q.values(), &[1.0, 0.0, 1.0]);
        let b = GridFunction::sample_1d(&spec("indicator-ball:0:1"), -2.0, 2.0, 5).unwrap();
        assert_eq!(b.values(), &[f64::INFINITY, 0.0, 0.0, 0.0, f64::INFINITY]);
        let dw = GridFunction::sample_1d(&spec("double-well"), -2.0, 2.0, 5).unwrap();
        assert_eq!(dw.values(), &[9.0, 0.0, 1.0, 0.0, 9.0]);
    }

    #[test]
    fn sampling_errors() {
        assert!(GridFunction::sample_1d(&spec("quad"), -1.0, 1.0, 4).is_err());
        assert!(GridFunction::sample_1d(&spec("quad"), 1.0, 1.0, 5).is_err());
        assert!(GridFunction::sample_1d(&spec("indicator-ball:5:1"), -1.0, 1.0, 5).is_err());
    }

    #[test]
    fn symmetric_nodes() {
        let f = GridFunction::sample_1d(&spec("quad"), -2.0, 2.0, 101).unwrap();
        let xs = f.axis(0);
        assert_eq!(xs[50], 0.0);
        for i in 0..101 {
            assert_eq!(xs[i], -xs[100 - i]);
        }
    }

    #[test]
    fn tilt_examples() {
        let q = GridFunction::sample_1d(&spec("quad"), -1.0, 1.0, 3).unwrap();
        assert_eq!(q.tilt_perturb(&[1.0]).unwrap().values()[2], 0.0);
        assert_eq!(q.tilt_perturb(&[0.0]).unwrap(), q);
        let a = GridFunction::sample_1d(&spec("abs"), -1.0, 1.0, 3).unwrap();
        assert_eq!(a.tilt_perturb(&[2.0]).unwrap().values()[0], 3.0);
        assert!(matches!(
            a.tilt_perturb(&[1.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ball_indicator_examples() {
        let q = GridFunction::sample_1d(&spec("quad"), -2.0, 2.0, 9).unwrap();
        let g = q.add_ball_indicator(&[0.0], 1.0).unwrap();
        for i in 0..9 {
            let x = g.coord(i)[0];
            if x.abs() <= 1.0 {
                assert_eq!(g.value(i), x * x);
            } else {
                assert!(g.value(i).is_infinite());
            }
        }
        assert_eq!(q.add_ball_indicator(&[0.0], 10.0).unwrap(), q);
        let a = GridFunction::sample_1d(&spec("abs"), -2.0, 2.0, 9).unwrap();
        let g = a.add_ball_indicator(&[1.0], 0.5).unwrap();
        let finite: Vec<f64> = (0..9)
            .filter(|&i| g.value(i).is_finite())
            .map(|i| g.coord(i)[0])
            .collect();
        assert_eq!(finite, vec![0.5, 1.0, 1.5]);
    }

    #[test]
    fn argmin_examples() {
        let q = GridFunction::sample_1d(&spec("quad"), -2.0, 2.0, 41).unwrap();
        assert_eq!(
            q.localized_argmin(&[0.0], 1.0, Some(1e-9)).unwrap().points(),
            &[[0.0, 0.0]]
        );
        let lin = GridFunction::sample_1d(&spec("linear:-1"), -2.0, 2.0, 41).unwrap();
        assert_eq!(
            lin.localized_argmin(&[0.0], 1.0, Some(1e-9)).unwrap().points(),
            &[[1.0, 0.0]]
        );
        let dw = GridFunction::sample_1d(&spec("double-well"), -2.0, 2.0, 41).unwrap();
        assert_eq!(
            dw.localized_argmin(&[1.0], 0.5, Some(1e-9)).unwrap().points(),
            &[[1.0, 0.0]]
        );
        let ball = GridFunction::sample_1d(&spec("indicator-ball:0:1"), -2.0, 2.0, 41).unwrap();
        assert!(ball.localized_argmin(&[1.9], 0.3, None).is_err());
    }

    #[test]
    fn distance_examples() {
        let s = PointSet::new(vec![[1.0, 0.0], [-2.0, 0.0]]);
        assert_eq!(distance_to_set(&[0.0, 0.0], &s), 1.0);
        assert_eq!(distance_to_set(&[-2.0, 0.0], &s), 0.0);
        let s = PointSet::new(vec![[0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(distance_to_set(&[0.5, 0.0], &s), 0.5);
        assert_eq!(distance_to_set(&[0.5, 0.0], &PointSet::empty()), f64::INFINITY);
    }

    #[test]
    fn csv_round_trip() {
        let f = GridFunction::sample_function(&spec("indicator-ball:0:1"), 2, -1.5, 1.5, 7).unwrap();
        let text = f.to_csv();
        assert!(text.starts_with("# dim, lo, hi, points\n"));
        assert!(text.contains("inf"));
        let g = GridFunction::from_csv(&text, f.name()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn two_d_ball_is_euclidean() {
        let q = GridFunction::sample_function(&spec("quad"), 2, -1.0, 1.0, 5).unwrap();
        let g = q.add_ball_indicator(&[0.0, 0.0], 1.0).unwrap();
        assert!(g.value_at(&[0.5, 0.5]).unwrap().is_finite());
        assert!(g.value_at(&[1.0, 0.5]).unwrap().is_infinite());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    const IDS: &[&str] = &[
        "quad", "quartic", "abs", "double-well", "flat-well", "one-sided", "indicator-ball:0.3:1",
        "abs-quad", "kink:-1:2",
    ];

    proptest! {
        #[test]
        fn tilt_round_trip(k in 0..IDS.len(), u in -5.0f64..5.0, n in 1usize..40) {
            let f = GridFunction::sample_1d(&FunctionSpec::parse(IDS[k]).unwrap(), -2.0, 2.0, 2 * n + 1).unwrap();
            let back = f.tilt_perturb(&[u]).unwrap().tilt_perturb(&[-u]).unwrap();
            for (a, b) in f.values().iter().zip(back.values()) {
                if a.is_finite() {
                    prop_assert!((a - b).abs() <= 1e-12);
                } else {
                    prop_assert_eq!(a, b);
                }
            }
        }

        #[test]
        fn ball_indicator_idempotent(k in 0..IDS.len(), c in -1.5f64..1.5, r in 0.2f64..3.0, two_d in any::<bool>()) {
            let dim = if two_d { 2 } else { 1 };
            let f = GridFunction::sample_function(&FunctionSpec::parse(IDS[k]).unwrap(), dim, -2.0, 2.0, 21).unwrap();
            let center: Vec<f64> = vec![f.coord(f.ball_indices(&[c, 0.0], 0.1)[0])[0]; dim];
            if let Ok(once) = f.add_ball_indicator(&center, r) {
                let twice = once.add_ball_indicator(&center, r).unwrap();
                prop_assert_eq!(once, twice);
            }
        }

        #[test]
        fn argmin_matches_full_scan(k in 0..IDS.len(), u in -3.0f64..3.0, c in -1.5f64..1.5, r in 0.1f64..2.0) {
            let f = GridFunction::sample_1d(&FunctionSpec::parse(IDS[k]).unwrap(), -2.0, 2.0, 81).unwrap()
                .tilt_perturb(&[u]).unwrap();
            let Ok(set) = f.localized_argmin(&[c], r, None) else { return Ok(()); };
            prop_assert!(!set.is_empty());
            let mut m = f64::INFINITY;
            for i in 0..f.len() {
                if (f.coord(i)[0] - c).abs() <= r && f.value(i) < m {
                    m = f.value(i);
                }
            }
            let tol = f.default_argmin_tol(&[c, 0.0], r);
            for p in set.points() {
                prop_assert!(f.value_at(p).unwrap() <= m + tol);
            }
        }
    }
}

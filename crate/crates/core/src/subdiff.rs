//! Graphs of set-valued maps `R => R` built from segments, axis-parallel
//! rays and exact monotone power curves; limiting normal cones of such
//! graphs, the second-order subdifferential they induce, and the weighted
//! positive-definiteness test built on it.

use std::fmt::Write as _;

use serde_json::json;

use crate::admissible::AdmissibleFunction;
use crate::catalog::{FunctionKind, FunctionSpec};
use crate::certificate::{Certificate, Tracker};
use crate::conjugate::is_discretely_convex;
use crate::error::{Error, Result};
use crate::gridfn::GridFunction;

/// Closed interval `[lo, hi]`, possibly unbounded or a single point.
pub type Interval = (f64, f64);

/// `v = offset + sum_k c_k sign(x - shift) |x - shift|^{q_k}` on
/// `[xa, xb]`, with all `c_k, q_k > 0`, hence strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve {
    pub terms: Vec<(f64, f64)>,
    pub shift: f64,
    pub offset: f64,
    pub xa: f64,
    pub xb: f64,
}

impl PowerCurve {
    pub fn value(&self, x: f64) -> f64 {
        let t = x - self.shift;
        let a = t.abs();
        let s: f64 = self
            .terms
            .iter()
            .map(|(c, q)| if *q == 1.0 { c * a } else { c * a.powf(*q) })
            .sum();
        self.offset + s.copysign(t)
    }

    /// `dv/dx`, `+inf` where a term with exponent below 1 meets the shift.
    pub fn slope(&self, x: f64) -> f64 {
        let a = (x - self.shift).abs();
        self.terms
            .iter()
            .map(|(c, q)| {
                if *q == 1.0 {
                    *c
                } else if a == 0.0 {
                    if *q > 1.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    c * q * a.powf(q - 1.0)
                }
            })
            .sum()
    }

    pub fn inverse(&self, v: f64) -> Option<f64> {
        let (va, vb) = (self.value(self.xa), self.value(self.xb));
        if v < va || v > vb {
            return None;
        }
        if v == va {
            return Some(self.xa);
        }
        if v == vb {
            return Some(self.xb);
        }
        if let [(c, q)] = self.terms[..] {
            let t = ((v - self.offset).abs() / c).powf(1.0 / q);
            let x = self.shift + t.copysign(v - self.offset);
            return Some(x.clamp(self.xa, self.xb));
        }
        let (mut lo, mut hi) = (self.xa, self.xb);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.value(mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Piece {
    /// Segment from `p` to `q`. A coordinate may be infinite only on an
    /// axis-parallel piece, which is then a ray.
    Segment { p: [f64; 2], q: [f64; 2] },
    Curve(PowerCurve),
}

fn seg_dir(p: &[f64; 2], q: &[f64; 2]) -> [f64; 2] {
    let d = |a: f64, b: f64| {
        if a == b {
            0.0
        } else if a.is_finite() && b.is_finite() {
            b - a
        } else {
            (b - a).signum()
        }
    };
    [d(p[0], q[0]), d(p[1], q[1])]
}

fn hull(a: f64, b: f64) -> Interval {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

impl Piece {
    /// Values `v` with `(x, v)` on the piece.
    fn at_x(&self, x: f64) -> Option<Interval> {
        match self {
            Piece::Segment { p, q } => {
                if p[0] == q[0] {
                    return close(x, p[0]).then(|| hull(p[1], q[1]));
                }
                let (a, b) = hull(p[0], q[0]);
                if x < a && !close(x, a) || x > b && !close(x, b) {
                    return None;
                }
                if p[1] == q[1] {
                    return Some((p[1], p[1]));
                }
                let v = if x == p[0] {
                    p[1]
                } else if x == q[0] {
                    q[1]
                } else {
                    p[1] + (q[1] - p[1]) * (x - p[0]) / (q[0] - p[0])
                };
                Some((v, v))
            }
            Piece::Curve(c) => {
                if x < c.xa && !close(x, c.xa) || x > c.xb && !close(x, c.xb) {
                    return None;
                }
                let v = c.value(x.clamp(c.xa, c.xb));
                Some((v, v))
            }
        }
    }

    /// Points `x` with `(x, v)` on the piece.
    fn at_v(&self, v: f64) -> Option<Interval> {
        match self {
            Piece::Segment { p, q } => {
                if p[1] == q[1] {
                    return close(v, p[1]).then(|| hull(p[0], q[0]));
                }
                let (a, b) = hull(p[1], q[1]);
                if v < a && !close(v, a) || v > b && !close(v, b) {
                    return None;
                }
                if p[0] == q[0] {
                    return Some((p[0], p[0]));
                }
                let x = if v == p[1] {
                    p[0]
                } else if v == q[1] {
                    q[0]
                } else {
                    p[0] + (q[0] - p[0]) * (v - p[1]) / (q[1] - p[1])
                };
                Some((x, x))
            }
            Piece::Curve(c) => {
                let (va, vb) = (c.value(c.xa), c.value(c.xb));
                let v = if close(v, va) {
                    va
                } else if close(v, vb) {
                    vb
                } else {
                    v
                };
                c.inverse(v).map(|x| (x, x))
            }
        }
    }

    /// Euclidean distance from `pt` (an upper bound for curves).
    fn distance(&self, pt: &[f64; 2]) -> f64 {
        match self {
            Piece::Segment { p, q } => {
                if p.iter().chain(q.iter()).all(|c| c.is_finite()) {
                    let d = [q[0] - p[0], q[1] - p[1]];
                    let l2 = d[0] * d[0] + d[1] * d[1];
                    let t = if l2 == 0.0 {
                        0.0
                    } else {
                        (((pt[0] - p[0]) * d[0] + (pt[1] - p[1]) * d[1]) / l2).clamp(0.0, 1.0)
                    };
                    (pt[0] - p[0] - t * d[0]).hypot(pt[1] - p[1] - t * d[1])
                } else if p[0] == q[0] {
                    let (a, b) = hull(p[1], q[1]);
                    (pt[0] - p[0]).hypot(pt[1] - pt[1].clamp(a, b))
                } else {
                    let (a, b) = hull(p[0], q[0]);
                    (pt[1] - p[1]).hypot(pt[0] - pt[0].clamp(a, b))
                }
            }
            Piece::Curve(c) => {
                let mut d = f64::INFINITY;
                if let Some((v, _)) = self.at_x(pt[0]) {
                    d = d.min((pt[1] - v).abs());
                }
                if let Some((x, _)) = self.at_v(pt[1]) {
                    d = d.min((pt[0] - x).abs());
                }
                let ea = [c.xa, c.value(c.xa)];
                let eb = [c.xb, c.value(c.xb)];
                d.min((pt[0] - ea[0]).hypot(pt[1] - ea[1]))
                    .min((pt[0] - eb[0]).hypot(pt[1] - eb[1]))
            }
        }
    }

    /// Directions leaving `pt` along the piece (`pt` assumed on it).
    fn directions(&self, pt: &[f64; 2], tol: f64) -> Vec<[f64; 2]> {
        match self {
            Piece::Segment { p, q } => {
                let d = seg_dir(p, q);
                if d == [0.0, 0.0] {
                    return Vec::new();
                }
                let at = |e: &[f64; 2]| {
                    e[0].is_finite() && e[1].is_finite() && (pt[0] - e[0]).hypot(pt[1] - e[1]) <= tol
                };
                let mut out = Vec::new();
                if !at(q) {
                    out.push(d);
                }
                if !at(p) {
                    out.push([-d[0], -d[1]]);
                }
                out
            }
            Piece::Curve(c) => {
                let x = pt[0].clamp(c.xa, c.xb);
                let s = c.slope(x);
                let d = if s.is_infinite() { [0.0, 1.0] } else { [1.0, s] };
                let mut out = Vec::new();
                if (x - c.xb).abs() > tol {
                    out.push(d);
                }
                if (x - c.xa).abs() > tol {
                    out.push([-d[0], -d[1]]);
                }
                out
            }
        }
    }
}

pub(crate) fn merge(mut v: Vec<Interval>) -> Vec<Interval> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<Interval> = Vec::new();
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

pub(crate) fn dist_to_intervals(t: f64, set: &[Interval]) -> f64 {
    set.iter()
        .map(|&(a, b)| {
            if t < a {
                a - t
            } else if t > b {
                t - b
            } else {
                0.0
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Graph of a set-valued map `R => R`.
#[derive(Debug, Clone, PartialEq)]
pub struct SetValuedGraph {
    pieces: Vec<Piece>,
    samples: Vec<[f64; 2]>,
    /// `[x_lo, x_hi, v_lo, v_hi]`
    bbox: [f64; 4],
    /// Spacing of the data the graph was built from; `(0, 0)` for exact
    /// graphs.
    resolution: (f64, f64),
    /// Whether the pieces were cut at the box and continue beyond it.
    clipped: bool,
    pub metadata: Vec<String>,
}

const SAMPLES_PER_PIECE: usize = 41;
const SAMPLE_BUDGET: usize = 2000;

impl SetValuedGraph {
    pub fn new(
        pieces: Vec<Piece>,
        bbox: [f64; 4],
        resolution: (f64, f64),
        clipped: bool,
    ) -> Result<Self> {
        for p in &pieces {
            match p {
                Piece::Segment { p, q } => {
                    let finite = p.iter().chain(q.iter()).all(|c| c.is_finite());
                    let axis = p[0] == q[0] || p[1] == q[1];
                    if p.iter().chain(q.iter()).any(|c| c.is_nan()) || (!finite && !axis) {
                        return Err(Error::InvalidParameter(format!(
                            "segment {p:?}-{q:?}: infinite endpoints need an axis-parallel piece"
                        )));
                    }
                    if !(p[0].is_finite() && p[1].is_finite()) {
                        return Err(Error::InvalidParameter(format!(
                            "segment {p:?}-{q:?}: the first endpoint must be finite"
                        )));
                    }
                }
                Piece::Curve(c) => {
                    if !(c.xa < c.xb) || c.terms.iter().any(|(a, q)| !(*a > 0.0 && *q > 0.0)) {
                        return Err(Error::InvalidParameter("curve must be increasing".into()));
                    }
                }
            }
        }
        let mut g = Self {
            pieces,
            samples: Vec::new(),
            bbox,
            resolution,
            clipped,
            metadata: Vec::new(),
        };
        let per_piece = (SAMPLE_BUDGET / g.pieces.len().max(1)).clamp(2, SAMPLES_PER_PIECE);
        g.samples = g.build_samples(per_piece);
        Ok(g)
    }

    /// Graph from explicit segments; the box is the hull of the finite
    /// coordinates, padded by 1 where rays leave it.
    pub fn from_segments(segments: &[([f64; 2], [f64; 2])]) -> Result<Self> {
        let mut bbox = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        let mut ray = [false; 2];
        for (p, q) in segments {
            for e in [p, q] {
                for k in 0..2 {
                    if e[k].is_finite() {
                        bbox[2 * k] = bbox[2 * k].min(e[k]);
                        bbox[2 * k + 1] = bbox[2 * k + 1].max(e[k]);
                    } else {
                        ray[k] = true;
                    }
                }
            }
        }
        if segments.is_empty() {
            bbox = [0.0, 0.0, 0.0, 0.0];
        }
        for k in 0..2 {
            if ray[k] {
                bbox[2 * k] -= 1.0;
                bbox[2 * k + 1] += 1.0;
            }
        }
        let pieces = segments
            .iter()
            .map(|(p, q)| Piece::Segment { p: *p, q: *q })
            .collect();
        Self::new(pieces, bbox, (0.0, 0.0), false)
    }

    /// Connected polyline through `points`.
    pub fn polyline(points: &[[f64; 2]]) -> Result<Self> {
        let segs: Vec<_> = points.windows(2).map(|w| (w[0], w[1])).collect();
        Self::from_segments(&segs)
    }

    /// `v = c x` on `[lo, hi]`.
    pub fn line(c: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::from_segments(&[([lo, c * lo], [hi, c * hi])])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn samples(&self) -> &[[f64; 2]] {
        &self.samples
    }

    pub fn bbox(&self) -> [f64; 4] {
        self.bbox
    }

    pub fn resolution(&self) -> (f64, f64) {
        self.resolution
    }

    /// Diagonal of one sampling cell; 0 for exact graphs.
    pub fn cell_diagonal(&self) -> f64 {
        self.resolution.0.hypot(self.resolution.1)
    }

    fn build_samples(&self, per_piece: usize) -> Vec<[f64; 2]> {
        let [xl, xh, vl, vh] = self.bbox;
        let clip = |e: [f64; 2]| [e[0].clamp(xl, xh), e[1].clamp(vl, vh)];
        let mut out = Vec::new();
        for piece in &self.pieces {
            match piece {
                Piece::Segment { p, q } => {
                    if p == q {
                        out.push(*p);
                        continue;
                    }
                    let (a, b) = if p.iter().chain(q.iter()).all(|c| c.is_finite()) {
                        (*p, *q)
                    } else {
                        (clip(*p), clip(*q))
                    };
                    for i in 0..per_piece {
                        let t = i as f64 / (per_piece - 1) as f64;
                        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                    }
                }
                Piece::Curve(c) => {
                    for i in 0..per_piece {
                        let t = i as f64 / (per_piece - 1) as f64;
                        let x = c.xa + t * (c.xb - c.xa);
                        out.push([x, c.value(x)]);
                    }
                }
            }
        }
        out
    }

    /// `F(x)` as disjoint closed intervals.
    pub fn image(&self, x: f64) -> Vec<Interval> {
        merge(self.pieces.iter().filter_map(|p| p.at_x(x)).collect())
    }

    /// `F^{-1}(v)` as disjoint closed intervals.
    pub fn preimage(&self, v: f64) -> Vec<Interval> {
        merge(self.pieces.iter().filter_map(|p| p.at_v(v)).collect())
    }

    /// `d(v, F(x))`, `+inf` when `F(x)` is empty.
    pub fn dist_to_image(&self, x: f64, v: f64) -> f64 {
        dist_to_intervals(v, &self.image(x))
    }

    /// `d(x, F^{-1}(v))`, `+inf` when `F^{-1}(v)` is empty.
    pub fn dist_to_preimage(&self, v: f64, x: f64) -> f64 {
        dist_to_intervals(x, &self.preimage(v))
    }

    pub fn distance(&self, pt: &[f64; 2]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.distance(pt))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, pt: &[f64; 2], tol: f64) -> bool {
        self.distance(pt) <= tol
    }

    pub(crate) fn require_on_graph(&self, pt: &[f64; 2]) -> Result<()> {
        if self.contains(pt, 1e-9) {
            Ok(())
        } else {
            Err(Error::OffGraph(format!("({}, {}) is not on the graph", pt[0], pt[1])))
        }
    }

    /// Replace curves by chords whose vertical deviation is at most `tol`.
    pub fn linearize(&self, tol: f64) -> SetValuedGraph {
        let mut pieces = Vec::new();
        for piece in &self.pieces {
            match piece {
                Piece::Segment { .. } => pieces.push(piece.clone()),
                Piece::Curve(c) => {
                    let mut stack = vec![(c.xa, c.xb)];
                    let mut chords = Vec::new();
                    while let Some((a, b)) = stack.pop() {
                        let (va, vb) = (c.value(a), c.value(b));
                        let worst = (1..8)
                            .map(|k| {
                                let x = a + (b - a) * k as f64 / 8.0;
                                (c.value(x) - (va + (vb - va) * (x - a) / (b - a))).abs()
                            })
                            .fold(0.0, f64::max);
                        if worst <= tol || b - a < 1e-9 {
                            chords.push((a, b));
                        } else {
                            let m = 0.5 * (a + b);
                            stack.push((m, b));
                            stack.push((a, m));
                        }
                    }
                    for (a, b) in chords {
                        pieces.push(Piece::Segment {
                            p: [a, c.value(a)],
                            q: [b, c.value(b)],
                        });
                    }
                }
            }
        }
        let mut g = Self::new(pieces, self.bbox, self.resolution, self.clipped)
            .expect("chords of a valid curve are valid");
        g.metadata = self.metadata.clone();
        g.metadata.push(format!("curves linearized to vertical tolerance {tol:e}"));
        g
    }

    /// CSV of segments `x0,v0,x1,v1`; curves are linearized to `1e-4`.
    pub fn to_csv(&self) -> String {
        let lin = self.linearize(1e-4);
        let f = |v: f64| {
            if v == f64::INFINITY {
                "inf".to_string()
            } else if v == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                format!("{v:?}")
            }
        };
        let mut s = String::from("x0,v0,x1,v1\n");
        for p in &lin.pieces {
            if let Piece::Segment { p, q } = p {
                let _ = writeln!(s, "{},{},{},{}", f(p[0]), f(p[1]), f(q[0]), f(q[1]));
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut segs = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if line.starts_with('x') || line.starts_with('#') {
                continue;
            }
            let v: Vec<f64> = line
                .split(',')
                .map(|t| match t.trim() {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    t => t.parse().map_err(|_| Error::Parse(format!("bad number `{t}`"))),
                })
                .collect::<Result<_>>()?;
            if v.len() != 4 {
                return Err(Error::Parse(format!("expected 4 columns in `{line}`")));
            }
            segs.push(([v[0], v[1]], [v[2], v[3]]));
        }
        Self::from_segments(&segs)
    }
}

impl SetValuedGraph {
    /// Up to `n` evenly spaced points of every piece inside the window
    /// `[x_lo, x_hi] x [v_lo, v_hi]`.
    pub fn window_samples(&self, win: [f64; 4], n: usize) -> Vec<[f64; 2]> {
        let n = n.max(2);
        let mut out = Vec::new();
        for piece in &self.pieces {
            match piece {
                Piece::Segment { p, q } => {
                    // Only rays have infinite ends, and rays are axis-parallel,
                    // so pulling those ends in keeps the piece on its line.
                    let clamp = |e: &[f64; 2]| {
                        let c = |v: f64, lo: f64, hi: f64| if v.is_finite() { v } else { v.clamp(lo, hi) };
                        [c(e[0], win[0] - 1.0, win[1] + 1.0), c(e[1], win[2] - 1.0, win[3] + 1.0)]
                    };
                    let (a, b) = (clamp(p), clamp(q));
                    // Liang-Barsky clip of a + t (b - a), t in [0, 1].
                    let d = [b[0] - a[0], b[1] - a[1]];
                    let (mut t0, mut t1) = (0.0f64, 1.0f64);
                    let mut empty = false;
                    for (pk, qk) in [
                        (-d[0], a[0] - win[0]),
                        (d[0], win[1] - a[0]),
                        (-d[1], a[1] - win[2]),
                        (d[1], win[3] - a[1]),
                    ] {
                        if pk == 0.0 {
                            if qk < 0.0 {
                                empty = true;
                            }
                        } else {
                            let r = qk / pk;
                            if pk < 0.0 {
                                t0 = t0.max(r);
                            } else {
                                t1 = t1.min(r);
                            }
                        }
                    }
                    if empty || t0 > t1 {
                        continue;
                    }
                    let m = if t0 == t1 || d == [0.0, 0.0] { 1 } else { n };
                    for i in 0..m {
                        let t = if m == 1 { t0 } else { t0 + (t1 - t0) * i as f64 / (m - 1) as f64 };
                        let mut pt = [a[0] + t * d[0], a[1] + t * d[1]];
                        // Keep exact coordinates on axis-parallel pieces.
                        if d[0] == 0.0 {
                            pt[0] = a[0];
                        }
                        if d[1] == 0.0 {
                            pt[1] = a[1];
                        }
                        out.push(pt);
                    }
                }
                Piece::Curve(c) => {
                    let mut xa = c.xa.max(win[0]);
                    let mut xb = c.xb.min(win[1]);
                    if let Some(x) = c.inverse(win[2].max(c.value(c.xa))) {
                        xa = xa.max(x);
                    }
                    if let Some(x) = c.inverse(win[3].min(c.value(c.xb))) {
                        xb = xb.min(x);
                    }
                    if xa > xb || c.value(xa) > win[3] || c.value(xb) < win[2] {
                        continue;
                    }
                    for i in 0..n {
                        let x = xa + (xb - xa) * i as f64 / (n - 1) as f64;
                        out.push([x, c.value(x)]);
                    }
                }
            }
        }
        out
    }
}

fn clip_pieces(pieces: Vec<Piece>, lo: f64, hi: f64) -> Vec<Piece> {
    let mut out = Vec::new();
    for piece in pieces {
        match piece {
            Piece::Segment { p, q } => {
                if p[0] == q[0] {
                    if p[0] >= lo && p[0] <= hi {
                        out.push(Piece::Segment { p, q });
                    }
                    continue;
                }
                let (a, b) = hull(p[0], q[0]);
                let (ca, cb) = (a.max(lo), b.min(hi));
                if ca > cb {
                    continue;
                }
                let tmp = Piece::Segment { p, q };
                let va = tmp.at_x(ca).unwrap().0;
                let vb = tmp.at_x(cb).unwrap().0;
                out.push(Piece::Segment {
                    p: [ca, va],
                    q: [cb, vb],
                });
            }
            Piece::Curve(mut c) => {
                c.xa = c.xa.max(lo);
                c.xb = c.xb.min(hi);
                if c.xa < c.xb {
                    out.push(Piece::Curve(c));
                }
            }
        }
    }
    out
}

fn seg(p: [f64; 2], q: [f64; 2]) -> Piece {
    Piece::Segment { p, q }
}

fn curve(terms: Vec<(f64, f64)>, xa: f64, xb: f64) -> Piece {
    Piece::Curve(PowerCurve {
        terms,
        shift: 0.0,
        offset: 0.0,
        xa,
        xb,
    })
}

/// Exact graph of the subdifferential of a convex catalog function on
/// `[lo, hi]`.
pub fn subdifferential_graph(spec: &FunctionSpec, lo: f64, hi: f64) -> Result<SetValuedGraph> {
    use FunctionKind::*;
    if !(lo < hi) {
        return Err(Error::InvalidGrid(format!("degenerate box [{lo}, {hi}]")));
    }
    let x0 = lo.min(-2.0) - 1.0;
    let x1 = hi.max(2.0) + 1.0;
    let jump = |a: f64, b: f64| -> Vec<Piece> {
        if a < b {
            vec![seg([0.0, a], [0.0, b])]
        } else {
            Vec::new()
        }
    };
    let pieces: Vec<Piece> = match &spec.kind {
        Quad { a } if *a >= 0.0 => vec![seg([x0, 2.0 * a * x0], [x1, 2.0 * a * x1])],
        Quartic => vec![curve(vec![(4.0, 3.0)], x0, x1)],
        QuarticQuad => vec![curve(vec![(4.0, 3.0), (2.0, 1.0)], x0, x1)],
        Abs => {
            let mut v = vec![seg([x0, -1.0], [0.0, -1.0])];
            v.extend(jump(-1.0, 1.0));
            v.push(seg([0.0, 1.0], [x1, 1.0]));
            v
        }
        PowerQ { q, c } if *q > 1.0 => vec![curve(vec![(c * q, q - 1.0)], x0, x1)],
        PowerQ { q, c } if *q == 1.0 => {
            let mut v = vec![seg([x0, -c], [0.0, -c])];
            v.extend(jump(-c, *c));
            v.push(seg([0.0, *c], [x1, *c]));
            v
        }
        FlatWell => vec![
            seg([x0, 2.0 * (x0 + 1.0)], [-1.0, 0.0]),
            seg([-1.0, 0.0], [1.0, 0.0]),
            seg([1.0, 0.0], [x1, 2.0 * (x1 - 1.0)]),
        ],
        OneSided => vec![seg([x0, 0.0], [0.0, 0.0]), seg([0.0, 0.0], [x1, 2.0 * x1])],
        IndicatorBall { c, r } => vec![
            seg([c - r, 0.0], [c - r, f64::NEG_INFINITY]),
            seg([c - r, 0.0], [c + r, 0.0]),
            seg([c + r, 0.0], [c + r, f64::INFINITY]),
        ],
        AbsQuad => {
            let mut v = vec![seg([x0, 2.0 * x0 - 1.0], [0.0, -1.0])];
            v.extend(jump(-1.0, 1.0));
            v.push(seg([0.0, 1.0], [x1, 2.0 * x1 + 1.0]));
            v
        }
        Linear { c } => vec![seg([x0, *c], [x1, *c])],
        Kink { a, b } if a <= b => {
            let mut v = vec![seg([x0, *a], [0.0, *a])];
            v.extend(jump(*a, *b));
            v.push(seg([0.0, *b], [x1, *b]));
            v
        }
        UserTable { xs, ys } if spec.is_convex() => {
            let n = xs.len();
            let slopes: Vec<f64> = (1..n)
                .map(|i| (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]))
                .collect();
            let mut v = vec![seg([xs[0], slopes[0]], [xs[0], f64::NEG_INFINITY])];
            for i in 0..n - 1 {
                v.push(seg([xs[i], slopes[i]], [xs[i + 1], slopes[i]]));
                if i + 1 < n - 1 && slopes[i] < slopes[i + 1] {
                    v.push(seg([xs[i + 1], slopes[i]], [xs[i + 1], slopes[i + 1]]));
                }
            }
            v.push(seg([xs[n - 1], slopes[n - 2]], [xs[n - 1], f64::INFINITY]));
            v
        }
        _ => {
            return Err(Error::NotConvex(format!(
                "no exact subdifferential graph for `{}`; supply segments explicitly",
                spec.id()
            )))
        }
    };
    let pieces = clip_pieces(pieces, lo, hi);
    let mut vlo = f64::INFINITY;
    let mut vhi = f64::NEG_INFINITY;
    for p in &pieces {
        let vs = match p {
            Piece::Segment { p, q } => [p[1], q[1]],
            Piece::Curve(c) => [c.value(c.xa), c.value(c.xb)],
        };
        for v in vs.into_iter().filter(|v| v.is_finite()) {
            vlo = vlo.min(v);
            vhi = vhi.max(v);
        }
    }
    let pad = (0.1 * (vhi - vlo)).max(1.0);
    let mut g = SetValuedGraph::new(pieces, [lo, hi, vlo - pad, vhi + pad], (0.0, 0.0), true)?;
    g.metadata.push(format!("exact subdifferential graph of {}", spec.id()));
    g.metadata
        .push("convex function: Clarke and limiting subdifferentials coincide".into());
    Ok(g)
}

fn convexity_tol(f: &GridFunction) -> f64 {
    let m = f
        .values()
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    1e-9 * (1.0 + m)
}

/// `[sup of left quotients, inf of right quotients]` of a convex grid
/// function at the node `x`; a missing side gives an infinite end.
pub fn convex_subdifferential_1d(f: &GridFunction, x: f64) -> Result<Interval> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: f.dim(),
        });
    }
    if !is_discretely_convex(f, convexity_tol(f)) {
        return Err(Error::NotConvex(f.name().to_string()));
    }
    let i = f
        .index_of(&[x, 0.0])
        .ok_or_else(|| Error::InvalidParameter(format!("{x} is not a grid node")))?;
    let fx = f.value(i);
    if !fx.is_finite() {
        return Err(Error::InfiniteValue);
    }
    let xs = f.axis(0);
    let mut a = f64::NEG_INFINITY;
    let mut b = f64::INFINITY;
    for (j, (&y, &fy)) in xs.iter().zip(f.values()).enumerate() {
        if !fy.is_finite() || j == i {
            continue;
        }
        let q = (fx - fy) / (xs[i] - y);
        if j < i {
            a = a.max(q);
        } else {
            b = b.min(q);
        }
    }
    Ok((a, b))
}

/// Subdifferential graph of the piecewise-linear interpolant of a convex
/// grid function: a staircase of horizontal slopes joined by vertical
/// jumps at the nodes, with rays at the ends of the domain.
pub fn graph_from_convex_grid(f: &GridFunction) -> Result<SetValuedGraph> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: f.dim(),
        });
    }
    if !is_discretely_convex(f, convexity_tol(f)) {
        return Err(Error::NotConvex(f.name().to_string()));
    }
    let xs = f.axis(0);
    let idx: Vec<usize> = (0..f.len()).filter(|&i| f.value(i).is_finite()).collect();
    if idx.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::NotConvex(format!("{}: domain has gaps", f.name())));
    }
    let mut pieces = Vec::new();
    let (xl, xh) = (xs[idx[0]], xs[*idx.last().unwrap()]);
    if idx.len() == 1 {
        pieces.push(seg([xl, 0.0], [xl, f64::NEG_INFINITY]));
        pieces.push(seg([xl, 0.0], [xl, f64::INFINITY]));
    } else {
        let slopes: Vec<f64> = idx
            .windows(2)
            .map(|w| (f.value(w[1]) - f.value(w[0])) / (xs[w[1]] - xs[w[0]]))
            .collect();
        let first_open = idx[0] > 0;
        let last_open = *idx.last().unwrap() + 1 < f.len();
        // Beyond the box edge the graph continues; beyond the domain edge
        // the normal cone gives a ray.
        if first_open {
            pieces.push(seg([xl, slopes[0]], [xl, f64::NEG_INFINITY]));
        }
        let mut max_jump: f64 = 0.0;
        for k in 0..slopes.len() {
            pieces.push(seg([xs[idx[k]], slopes[k]], [xs[idx[k + 1]], slopes[k]]));
            if k + 1 < slopes.len() && slopes[k] < slopes[k + 1] {
                max_jump = max_jump.max(slopes[k + 1] - slopes[k]);
                pieces.push(seg([xs[idx[k + 1]], slopes[k]], [xs[idx[k + 1]], slopes[k + 1]]));
            }
        }
        if last_open {
            let s = *slopes.last().unwrap();
            pieces.push(seg([xh, s], [xh, f64::INFINITY]));
        }
        let (vl, vh) = (slopes[0], *slopes.last().unwrap());
        let pad = (0.1 * (vh - vl)).max(1.0);
        let mut g = SetValuedGraph::new(
            pieces,
            [xl, xh, vl - pad, vh + pad],
            (f.h(), max_jump),
            idx[0] == 0 || !last_open,
        )?;
        g.metadata.push(format!("staircase subdifferential of grid function {}", f.name()));
        return Ok(g);
    }
    let mut g = SetValuedGraph::new(pieces, [xl - 1.0, xh + 1.0, -1.0, 1.0], (f.h(), 0.0), false)?;
    g.metadata.push(format!("staircase subdifferential of grid function {}", f.name()));
    Ok(g)
}

/// One cone in the plane.
#[derive(Debug, Clone, PartialEq)]
pub enum Cone {
    /// `span{n}`
    Line([f64; 2]),
    /// `{n : <n, d> <= 0 for every listed d}`; the whole plane when empty.
    Polar(Vec<[f64; 2]>),
}

impl Cone {
    pub fn contains(&self, n: &[f64; 2], tol: f64) -> bool {
        match self {
            Cone::Line(d) => {
                let scale = d[0].hypot(d[1]) * n[0].hypot(n[1]);
                (d[0] * n[1] - d[1] * n[0]).abs() <= tol * scale.max(1.0)
            }
            Cone::Polar(ds) => ds.iter().all(|d| {
                let scale = d[0].hypot(d[1]) * n[0].hypot(n[1]);
                d[0] * n[0] + d[1] * n[1] <= tol * scale.max(1.0)
            }),
        }
    }
}

/// Finite union of cones, closed under positive scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSet {
    pub cones: Vec<Cone>,
}

impl ConeSet {
    pub fn contains(&self, n: &[f64; 2], tol: f64) -> bool {
        self.cones.iter().any(|c| c.contains(n, tol))
    }
}

fn parallel(a: &[f64; 2], b: &[f64; 2]) -> bool {
    let cross = a[0] * b[1] - a[1] * b[0];
    cross.abs() <= 1e-12 * a[0].hypot(a[1]) * b[0].hypot(b[1])
}

fn same_ray(a: &[f64; 2], b: &[f64; 2]) -> bool {
    parallel(a, b) && a[0] * b[0] + a[1] * b[1] > 0.0
}

const ON_GRAPH_TOL: f64 = 1e-9;

/// Limiting normal cone to the graph at `p`: the polar of the tangent
/// directions at `p` together with the normal lines of every piece through
/// `p`.
pub fn polyline_normal_cone(g: &SetValuedGraph, p: &[f64; 2]) -> Result<ConeSet> {
    g.require_on_graph(p)?;
    let mut dirs: Vec<[f64; 2]> = Vec::new();
    for piece in &g.pieces {
        if piece.distance(p) <= ON_GRAPH_TOL {
            for d in piece.directions(p, ON_GRAPH_TOL) {
                if !dirs.iter().any(|e| same_ray(e, &d)) {
                    dirs.push(d);
                }
            }
        }
    }
    if g.clipped {
        let [xl, xh, _, _] = g.bbox;
        if (p[0] - xl).abs() <= ON_GRAPH_TOL || (p[0] - xh).abs() <= ON_GRAPH_TOL {
            let extra: Vec<[f64; 2]> = dirs
                .iter()
                .map(|d| [-d[0], -d[1]])
                .filter(|d| !dirs.iter().any(|e| same_ray(e, d)))
                .collect();
            dirs.extend(extra);
        }
    }
    let normal = |d: &[f64; 2]| [-d[1], d[0]];
    let all_parallel = dirs.windows(2).all(|w| parallel(&w[0], &w[1]));
    if dirs.len() == 2 && all_parallel {
        return Ok(ConeSet {
            cones: vec![Cone::Line(normal(&dirs[0]))],
        });
    }
    let mut cones = vec![Cone::Polar(dirs.clone())];
    for d in &dirs {
        let n = normal(d);
        if !cones.iter().any(|c| matches!(c, Cone::Line(m) if parallel(m, &n))) {
            cones.push(Cone::Line(n));
        }
    }
    Ok(ConeSet { cones })
}

/// Subset of the real line, as disjoint closed intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct ZSet {
    pub intervals: Vec<Interval>,
}

impl ZSet {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_all(&self) -> bool {
        self.intervals == [(f64::NEG_INFINITY, f64::INFINITY)]
    }

    pub fn contains(&self, z: f64, tol: f64) -> bool {
        self.intervals
            .iter()
            .any(|&(a, b)| z >= a - tol * (1.0 + a.abs()) && z <= b + tol * (1.0 + b.abs()))
    }
}

fn cone_slice(c: &Cone, h: f64) -> Option<Interval> {
    match c {
        Cone::Line(n) => {
            if n[1] != 0.0 {
                let t = -h / n[1];
                let z = t * n[0];
                Some((z, z))
            } else if h == 0.0 {
                Some((f64::NEG_INFINITY, f64::INFINITY))
            } else {
                None
            }
        }
        Cone::Polar(ds) => {
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for d in ds {
                // z d_x - h d_y <= 0
                if d[0] > 0.0 {
                    hi = hi.min(h * d[1] / d[0]);
                } else if d[0] < 0.0 {
                    lo = lo.max(h * d[1] / d[0]);
                } else if h * d[1] < 0.0 {
                    return None;
                }
            }
            (lo <= hi).then_some((lo, hi))
        }
    }
}

/// `{z : (z, -h)` in the limiting normal cone at `(x, v)}`.
pub fn second_subdifferential(g: &SetValuedGraph, x: f64, v: f64, h: f64) -> Result<ZSet> {
    let cone = polyline_normal_cone(g, &[x, v])?;
    Ok(ZSet {
        intervals: merge(cone.cones.iter().filter_map(|c| cone_slice(c, h)).collect()),
    })
}

/// `psi'_+(d(x, F^{-1}(v - h)))`, `+inf` when the preimage is empty.
pub fn eta_psi(g: &SetValuedGraph, psi: &AdmissibleFunction, x: f64, v: f64, h: f64) -> Result<f64> {
    let d = g.dist_to_preimage(v - h, x);
    if d.is_infinite() {
        return Ok(f64::INFINITY);
    }
    psi.right_derivative(d)
}

/// Probe used for unbounded second-order sets.
pub const Z_PROBE: f64 = 1e6;
const H_POINTS: usize = 41;
const GRAPH_POINTS: usize = 41;

/// Check `kappa h^2 eta_psi(x, v)(h) <= z h` for graph samples `(x, v)` in
/// `B(center, r)`, `h` on a grid of `[-r, r]`, and every `z` in the second
/// subdifferential. Unbounded `z`-sets are probed at `+-1e6`.
pub fn check_condition_6_1(
    g: &SetValuedGraph,
    psi: &AdmissibleFunction,
    kappa: f64,
    r: f64,
    center: [f64; 2],
) -> Result<Certificate> {
    g.require_on_graph(&center)?;
    if !(kappa > 0.0 && r > 0.0) {
        return Err(Error::InvalidParameter("kappa and r must be positive".into()));
    }
    let rr = r * (1.0 - 1e-9);
    let mut pts = g.window_samples(
        [center[0] - rr, center[0] + rr, center[1] - rr, center[1] + rr],
        GRAPH_POINTS,
    );
    pts.insert(0, center);
    let hs: Vec<f64> = (0..H_POINTS)
        .map(|i| crate::gridfn::node(-r, r, H_POINTS, i))
        .collect();
    let (dx, dv) = g.resolution;
    let mut cert = Certificate::new("second-order-condition")
        .constant("kappa", kappa)
        .constant("r", r);
    let mut t = Tracker::new();
    let mut probes = 0usize;
    let mut empty = 0usize;
    for p in &pts {
        for &h in &hs {
            let zs = second_subdifferential(g, p[0], p[1], h)?;
            if zs.is_empty() {
                empty += 1;
                continue;
            }
            let eta = eta_psi(g, psi, p[0], p[1], h)?;
            let lhs = if h == 0.0 { 0.0 } else { kappa * h * h * eta };
            let d = g.dist_to_preimage(p[1] - h, p[0]);
            let res = if h != 0.0 && d.is_finite() && dx > 0.0 {
                kappa * h * h * (psi.right_derivative(d + dx)? - eta).max(0.0)
            } else {
                0.0
            };
            for &(a, b) in &zs.intervals {
                let mut z = if h > 0.0 { a } else { b };
                if h == 0.0 {
                    z = if a.is_finite() { a } else if b.is_finite() { b } else { 0.0 };
                }
                if z.is_infinite() {
                    z = z.signum() * Z_PROBE;
                    probes += 1;
                    cert.note("unbounded probe");
                }
                let rhs = z * h;
                let slack = 1e-9 * (1.0 + rhs.abs()) + res + h.abs() * dv;
                t.observe(lhs, rhs, slack, || vec![("x", p[0]), ("v", p[1]), ("h", h), ("z", z), ("eta", eta)]);
            }
        }
    }
    t.finish(&mut cert);
    cert.set_sweep("graph_samples", json!(pts.len()));
    cert.set_sweep("h_points", json!(H_POINTS));
    cert.set_sweep("unbounded_probes", json!(probes));
    cert.set_sweep("empty_z_sets", json!(empty));
    cert.set_sweep("z_probe", json!(Z_PROBE));
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(id: &str) -> FunctionSpec {
        FunctionSpec::parse(id).unwrap()
    }

    fn grid(id: &str, n: usize) -> GridFunction {
        GridFunction::sample_1d(&spec(id), -2.0, 2.0, n).unwrap()
    }

    #[test]
    fn grid_subdifferential_examples() {
        assert_eq!(convex_subdifferential_1d(&grid("abs", 41), 0.0).unwrap(), (-1.0, 1.0));
        let f = grid("quad", 401);
        let (a, b) = convex_subdifferential_1d(&f, 1.0).unwrap();
        assert!((a - 2.0).abs() <= 2.0 * f.h() && (b - 2.0).abs() <= 2.0 * f.h());
        let (a, b) = convex_subdifferential_1d(&grid("kink:1:2", 41), 0.0).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
        let (a, _) = convex_subdifferential_1d(&grid("quad", 41), -2.0).unwrap();
        assert_eq!(a, f64::NEG_INFINITY);
        assert!(matches!(
            convex_subdifferential_1d(&grid("double-well", 41), 0.0),
            Err(Error::NotConvex(_))
        ));
        assert!(matches!(
            convex_subdifferential_1d(&grid("indicator-ball:0:1", 41), 1.5),
            Err(Error::InfiniteValue)
        ));
    }

    #[test]
    fn abs_graph_has_three_pieces() {
        let g = subdifferential_graph(&spec("abs"), -2.0, 2.0).unwrap();
        assert_eq!(
            g.pieces(),
            &[
                Piece::Segment { p: [-2.0, -1.0], q: [0.0, -1.0] },
                Piece::Segment { p: [0.0, -1.0], q: [0.0, 1.0] },
                Piece::Segment { p: [0.0, 1.0], q: [2.0, 1.0] },
            ]
        );
        assert_eq!(g.image(0.0), vec![(-1.0, 1.0)]);
        assert_eq!(g.image(0.5), vec![(1.0, 1.0)]);
        assert_eq!(g.preimage(1.0), vec![(0.0, 2.0)]);
        assert_eq!(g.preimage(0.3), vec![(0.0, 0.0)]);
    }

    #[test]
    fn quad_and_indicator_graphs() {
        let g = subdifferential_graph(&spec("quad"), -2.0, 2.0).unwrap();
        assert_eq!(g.image(0.75), vec![(1.5, 1.5)]);
        let g = subdifferential_graph(&spec("indicator-ball:0:1"), -2.0, 2.0).unwrap();
        assert_eq!(g.image(-1.0), vec![(f64::NEG_INFINITY, 0.0)]);
        assert_eq!(g.image(1.0), vec![(0.0, f64::INFINITY)]);
        assert_eq!(g.image(0.2), vec![(0.0, 0.0)]);
        assert!(g.image(1.5).is_empty());
        assert_eq!(g.preimage(5.0), vec![(1.0, 1.0)]);
        assert!(g.to_csv().contains(",inf"));
        assert!(matches!(
            subdifferential_graph(&spec("double-well"), -2.0, 2.0),
            Err(Error::NotConvex(_))
        ));
    }

    #[test]
    fn curve_graphs_invert() {
        let g = subdifferential_graph(&spec("quartic"), -1.0, 1.0).unwrap();
        let x = g.preimage(0.5)[0].0;
        assert!((4.0 * x * x * x - 0.5).abs() < 1e-12);
        let g = subdifferential_graph(&spec("quartic-quad"), -1.0, 1.0).unwrap();
        let x = g.preimage(1.0)[0].0;
        assert!((4.0 * x.powi(3) + 2.0 * x - 1.0).abs() < 1e-12);
        let lin = g.linearize(1e-4);
        assert!(lin.pieces().iter().all(|p| matches!(p, Piece::Segment { .. })));
        let back = SetValuedGraph::from_csv(&g.to_csv()).unwrap();
        assert!((back.image(0.3)[0].0 - g.image(0.3)[0].0).abs() <= 1e-4);
    }

    #[test]
    fn normal_cone_examples() {
        let g = SetValuedGraph::line(2.0, -2.0, 2.0).unwrap();
        let c = polyline_normal_cone(&g, &[1.0, 2.0]).unwrap();
        assert_eq!(c.cones.len(), 1);
        assert!(c.contains(&[2.0, -1.0], 1e-12) && c.contains(&[-4.0, 2.0], 1e-12));
        assert!(!c.contains(&[1.0, 0.0], 1e-12));
        let g = subdifferential_graph(&spec("abs"), -2.0, 2.0).unwrap();
        let c = polyline_normal_cone(&g, &[0.0, 0.5]).unwrap();
        assert_eq!(c.cones.len(), 1);
        assert!(c.contains(&[1.0, 0.0], 1e-12));
        assert!(matches!(polyline_normal_cone(&g, &[5.0, 5.0]), Err(Error::OffGraph(_))));
        // Corner (0, 1): second quadrant plus both axes.
        let c = polyline_normal_cone(&g, &[0.0, 1.0]).unwrap();
        assert!(c.contains(&[-1.0, 1.0], 1e-12));
        assert!(c.contains(&[1.0, 0.0], 1e-12) && c.contains(&[0.0, -1.0], 1e-12));
        assert!(!c.contains(&[1.0, 1.0], 1e-12));
    }

    #[test]
    fn second_subdifferential_examples() {
        let g = subdifferential_graph(&spec("quad:0.5"), -2.0, 2.0).unwrap();
        for x in [-1.0, 0.0, 0.3, 1.7] {
            let z = second_subdifferential(&g, x, x, 1.0).unwrap();
            assert_eq!(z.intervals, vec![(1.0, 1.0)]);
        }
        let g = subdifferential_graph(&spec("abs"), -2.0, 2.0).unwrap();
        assert!(second_subdifferential(&g, 0.0, 0.5, 0.0).unwrap().is_all());
        assert!(second_subdifferential(&g, 0.0, 0.5, 1.0).unwrap().is_empty());
        assert!(second_subdifferential(&g, 3.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn eta_examples() {
        let g = subdifferential_graph(&spec("quad:0.5"), -2.0, 2.0).unwrap();
        let lin = AdmissibleFunction::power(1.0).unwrap();
        let sq = AdmissibleFunction::power(2.0).unwrap();
        assert_eq!(eta_psi(&g, &lin, 0.5, 0.5, 0.25).unwrap(), 1.0);
        for h in [-0.5, 0.25, 1.0] {
            let e = eta_psi(&g, &sq, 0.5, 0.5, h).unwrap();
            assert!((e - 2.0 * f64::abs(h)).abs() < 1e-12);
        }
        assert_eq!(eta_psi(&g, &lin, 0.5, 0.5, 10.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn condition_6_1_examples() {
        let g = subdifferential_graph(&spec("quad:0.5"), -2.0, 2.0).unwrap();
        let lin = AdmissibleFunction::power(1.0).unwrap();
        let c = check_condition_6_1(&g, &lin, 1.0, 0.5, [0.0, 0.0]).unwrap();
        assert!(c.passed(), "{}", c.to_json());
        assert!(c.margin.abs() < 1e-12);
        let c = check_condition_6_1(&g, &lin, 2.0, 0.5, [0.0, 0.0]).unwrap();
        assert!(!c.passed());
        assert!(c.violation.unwrap()["h"] != 0.0);
        assert!(check_condition_6_1(&g, &lin, 1.0, 0.5, [0.0, 1.0]).is_err());
    }

    #[test]
    fn graph_matches_grid_subdifferential() {
        for id in ["quad", "quartic", "abs", "abs-quad", "flat-well", "one-sided", "power-q:1.5", "kink:-1:2", "quartic-quad"] {
            let f = grid(id, 201);
            let g = subdifferential_graph(&spec(id), -2.0, 2.0).unwrap();
            for i in 1..200 {
                let x = f.coord(i)[0];
                let (a, b) = convex_subdifferential_1d(&f, x).unwrap();
                // Convexity brackets the difference quotients between the
                // exact subgradients at neighbouring nodes.
                let h = f.h();
                let span = |t: f64| {
                    let img = g.image(t);
                    (img[0].0, img.last().unwrap().1)
                };
                let (lm, _) = span(x - h);
                let (lo, hi) = span(x);
                let (_, hp) = span(x + h);
                let tol = 1e-9 * (1.0 + a.abs() + b.abs());
                assert!(a >= lm - tol && a <= hi + tol && b >= lo - tol && b <= hp + tol,
                    "{id} at {x}: grid [{a}, {b}] vs graph [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn window_samples_stay_on_graph() {
        let g = SetValuedGraph::line(2.0, -2.0, 2.0).unwrap();
        let pts = g.window_samples([-0.5, 0.5, -0.5, 0.5], 11);
        assert!(!pts.is_empty());
        for p in &pts {
            assert!((p[1] - 2.0 * p[0]).abs() < 1e-12, "{p:?}");
            assert!(p[1].abs() <= 0.5 + 1e-12);
        }
        let g = subdifferential_graph(&spec("abs"), -2.0, 2.0).unwrap();
        for p in g.window_samples([-0.5, 0.5, -0.5, 0.5], 11) {
            assert!(g.contains(&p, 1e-12), "{p:?}");
        }
    }

    #[test]
    fn staircase_graph() {
        let f = grid("abs", 41);
        let g = graph_from_convex_grid(&f).unwrap();
        assert_eq!(g.image(0.0), vec![(-1.0, 1.0)]);
        assert_eq!(g.image(0.05), vec![(1.0, 1.0)]);
        let ind = grid("indicator-ball:0:1", 41);
        let g = graph_from_convex_grid(&ind).unwrap();
        assert_eq!(g.image(1.0), vec![(0.0, f64::INFINITY)]);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn second_subdifferential_scales(k in 0usize..5, t in 0.0f64..1.0, h in -2.0f64..2.0, lam in 0.1f64..10.0) {
            let ids = ["quad", "abs", "flat-well", "indicator-ball:0:1", "quartic"];
            let g = subdifferential_graph(&FunctionSpec::parse(ids[k]).unwrap(), -2.0, 2.0).unwrap();
            let s = g.samples();
            let p = s[((s.len() - 1) as f64 * t) as usize];
            let z1 = second_subdifferential(&g, p[0], p[1], h).unwrap();
            let z2 = second_subdifferential(&g, p[0], p[1], lam * h).unwrap();
            for &(a, b) in &z1.intervals {
                for z in [a, b] {
                    if z.is_finite() {
                        prop_assert!(z2.contains(lam * z, 1e-9), "{z} {lam} {z2:?}");
                    }
                }
            }
        }
    }
}

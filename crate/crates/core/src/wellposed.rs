//! Tilt-minimizer maps and the checkers and searchers for stable local
//! well-posedness, tilt-stable local minima, their set-valued variants, and
//! the consistency harness that runs antecedent and consequent checks of the
//! main results side by side.

use std::fmt::Write as _;

use serde_json::json;

use crate::admissible::AdmissibleFunction;
use crate::catalog::FunctionSpec;
use crate::certificate::{Certificate, Tracker};
use crate::error::{Error, Result};
use crate::gridfn::{dist, distance_to_set, node, GridFunction, Point, PointSet};

/// Uniform points of the default dual grid.
pub const DUAL_POINTS: usize = 21;
/// Extra dual points `+-delta 2^-k`, `k = 1..=DUAL_GEOMETRIC`, so that tilts
/// approaching zero are probed.
pub const DUAL_GEOMETRIC: i32 = 60;
/// Zoom levels below the base grid.
pub const ZOOM_LEVELS: usize = 6;
/// Ratio between consecutive zoom radii.
pub const ZOOM_FACTOR: f64 = 8.0;
/// Points per axis on each zoom level.
pub const ZOOM_POINTS: usize = 201;
const SHRINK: f64 = 1.0 - 1e-9;
const ROUND: f64 = 1e-13;

/// Tilt vectors of `B(0, delta)`: a uniform grid plus points approaching
/// zero geometrically along the axes. `delta = 0` gives `{0}`.
pub fn dual_grid(dim: usize, delta: f64, points: usize) -> Vec<Point> {
    if !(delta > 0.0) {
        return vec![[0.0, 0.0]];
    }
    let dd = delta * SHRINK;
    let n = (points.max(1) / 2) * 2 + 1;
    let axis: Vec<f64> = if n == 1 {
        vec![0.0]
    } else {
        (0..n).map(|i| node(-dd, dd, n, i)).collect()
    };
    let levels = if dim == 1 { DUAL_GEOMETRIC } else { 20 };
    let mut out: Vec<Point> = Vec::new();
    if dim == 1 {
        out.extend(axis.iter().map(|&u| [u, 0.0]));
    } else {
        for &a in &axis {
            for &b in &axis {
                if a.hypot(b) <= dd {
                    out.push([a, b]);
                }
            }
        }
    }
    for k in 1..=levels {
        let s = dd * 2f64.powi(-k);
        out.push([s, 0.0]);
        out.push([-s, 0.0]);
        if dim == 2 {
            out.push([0.0, s]);
            out.push([0.0, -s]);
        }
    }
    out.sort_by(|a, b| a[1].total_cmp(&b[1]).then(a[0].total_cmp(&b[0])));
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TiltEntry {
    pub u: Point,
    /// Exact minimizers of the tilted grid function over `B[x̄, r]`.
    pub argmin: PointSet,
    /// Member of `argmin` closest to `x̄`; ties go to the smallest
    /// coordinates.
    pub selected: Point,
    pub min_value: f64,
    /// Upper bound on `min_value - inf f_u` over the cells next to
    /// `selected`, from supporting secant lines.
    pub min_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TiltMapTable {
    pub base: Point,
    pub r: f64,
    pub delta: f64,
    pub dim: usize,
    /// Cell diagonal of the primal grid.
    pub cell: f64,
    pub entries: Vec<TiltEntry>,
}

impl TiltMapTable {
    pub fn at_zero(&self) -> Option<&TiltEntry> {
        self.entries.iter().find(|e| e.u == [0.0, 0.0])
    }

    /// Largest argmin diameter over the table.
    pub fn max_argmin_diameter(&self) -> f64 {
        self.entries.iter().map(|e| e.argmin.diameter()).fold(0.0, f64::max)
    }

    /// Columns `u, x_u, min_value, argmin_size`, with two columns each for
    /// `u` and `x_u` in 2-D.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        if self.dim == 1 {
            s.push_str("u,selected,min_value,argmin_size\n");
        } else {
            s.push_str("u0,u1,selected0,selected1,min_value,argmin_size\n");
        }
        for e in &self.entries {
            if self.dim == 1 {
                let _ = writeln!(s, "{},{},{},{}", e.u[0], e.selected[0], e.min_value, e.argmin.len());
            } else {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    e.u[0], e.u[1], e.selected[0], e.selected[1], e.min_value, e.argmin.len()
                );
            }
        }
        s
    }
}

/// Lower bound for a convex function on the cell `[0, 1]` (grid units)
/// from the secant of `[-1, 0]` extended right and the secant of `[1, 2]`
/// extended left.
fn cell_lower_bound(fm1: Option<f64>, f0: f64, fp1: f64, fp2: Option<f64>) -> f64 {
    let a = fm1.map(|v| (f0, f0 - v));
    let b = fp2.map(|v| (fp1 - (v - fp1), v - fp1));
    let eval = |t: f64| {
        let mut m = f64::NEG_INFINITY;
        for (c, s) in [a, b].into_iter().flatten() {
            m = m.max(c + s * t);
        }
        if m == f64::NEG_INFINITY {
            f0.min(fp1)
        } else {
            m
        }
    };
    let mut lb = eval(0.0).min(eval(1.0));
    if let (Some((ca, sa)), Some((cb, sb))) = (a, b) {
        if sa != sb {
            let t = (cb - ca) / (sa - sb);
            if t > 0.0 && t < 1.0 {
                lb = lb.min(eval(t));
            }
        }
    }
    lb
}

fn min_error(g: &GridFunction, inside: &[bool], idx: usize) -> f64 {
    let n = g.points_per_axis();
    let f0 = g.value(idx);
    let mut lb = f0;
    for k in 0..g.dim() {
        let stride = if k == 0 { 1 } else { n[0] };
        let pos = if k == 0 { idx % n[0] } else { idx / n[0] } as isize;
        let get = |off: isize| -> Option<f64> {
            let p = pos + off;
            if p < 0 || p >= n[k] as isize {
                return None;
            }
            let j = (idx as isize + off * stride as isize) as usize;
            let v = g.value(j);
            (inside[j] && v.is_finite()).then_some(v)
        };
        for sign in [1isize, -1] {
            if let Some(fp1) = get(sign) {
                lb = lb.min(cell_lower_bound(get(-sign), f0, fp1, get(2 * sign)));
            }
        }
    }
    (f0 - lb).max(0.0)
}

fn lex_less(a: &Point, b: &Point) -> bool {
    (a[0], a[1]) < (b[0], b[1])
}

/// Minimizers of `f - <u, .>` over `B[x̄, r]` for every `u` of the dual
/// grid of `B(0, delta)`.
pub fn tilt_minimizer_map(
    f: &GridFunction,
    base: &[f64],
    r: f64,
    delta: f64,
    dual_points: usize,
) -> Result<TiltMapTable> {
    let xb = point_of(f, base)?;
    if !(r > 0.0) || delta < 0.0 {
        return Err(Error::InvalidParameter(format!("need r > 0 and delta >= 0, got {r}, {delta}")));
    }
    let ball = f.ball_indices(&xb, r);
    if ball.is_empty() {
        return Err(Error::EmptyRegion(format!("B[{xb:?}, {r}] misses the grid")));
    }
    match f.value_at(&xb) {
        Some(v) if v.is_finite() => {}
        Some(_) => return Err(Error::InfiniteValue),
        None => return Err(Error::OffGraph(format!("{xb:?} is not a grid node"))),
    }
    let mut inside = vec![false; f.len()];
    for &i in &ball {
        inside[i] = true;
    }
    let mut entries = Vec::new();
    for u in dual_grid(f.dim(), delta, dual_points) {
        let fu = f.tilt_perturb(&u[..f.dim()])?;
        let argmin = fu.localized_argmin(&xb[..f.dim()], r, Some(0.0))?;
        let mut selected = argmin.points()[0];
        for p in argmin.points() {
            let (dp, ds) = (dist(p, &xb), dist(&selected, &xb));
            if dp < ds || (dp == ds && lex_less(p, &selected)) {
                selected = *p;
            }
        }
        let sidx = fu.index_of(&selected).expect("argmin point is a node");
        entries.push(TiltEntry {
            u,
            min_value: fu.value(sidx),
            min_error: min_error(&fu, &inside, sidx),
            argmin,
            selected,
        });
    }
    Ok(TiltMapTable {
        base: xb,
        r,
        delta,
        dim: f.dim(),
        cell: f.cell_diagonal(),
        entries,
    })
}

fn point_of(f: &GridFunction, p: &[f64]) -> Result<Point> {
    if p.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: p.len(),
        });
    }
    Ok(if f.dim() == 1 { [p[0], 0.0] } else { [p[0], p[1]] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckKind {
    Slwp,
    Tslm,
    Swlwp,
    WeakTslm,
    MetricReg,
    StrongMetricReg,
}

impl CheckKind {
    pub const ALL: [CheckKind; 6] = [
        CheckKind::Slwp,
        CheckKind::Tslm,
        CheckKind::Swlwp,
        CheckKind::WeakTslm,
        CheckKind::MetricReg,
        CheckKind::StrongMetricReg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Slwp => "slwp",
            CheckKind::Tslm => "tslm",
            CheckKind::Swlwp => "swlwp",
            CheckKind::WeakTslm => "weak-tslm",
            CheckKind::MetricReg => "metric-reg",
            CheckKind::StrongMetricReg => "strong-metric-reg",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownId(format!("check kind {s}")))
    }

    pub fn is_tilt(self) -> bool {
        !matches!(self, CheckKind::MetricReg | CheckKind::StrongMetricReg)
    }

    pub fn uses_gamma(self) -> bool {
        matches!(self, CheckKind::Swlwp | CheckKind::WeakTslm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub r: f64,
    pub delta: f64,
    pub tau: f64,
    pub kappa: f64,
    pub gamma: f64,
}

impl Constants {
    pub fn new(r: f64, delta: f64, tau: f64, kappa: f64, gamma: f64) -> Result<Self> {
        for (k, v) in [("r", r), ("delta", delta), ("tau", tau), ("kappa", kappa), ("gamma", gamma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{k} must be positive, got {v}")));
            }
        }
        Ok(Self { r, delta, tau, kappa, gamma })
    }
}

/// Data of one well-posedness question: a grid function, a base point, an
/// admissible function (`phi` for growth checks, `psi` for tilt-map
/// checks) and constants.
#[derive(Debug, Clone)]
pub struct WellPosednessInstance {
    pub f: GridFunction,
    /// Catalog function behind `f`. When present, checks also run on
    /// finer grids around the base point.
    pub spec: Option<FunctionSpec>,
    pub base: Point,
    pub modulus: AdmissibleFunction,
    pub constants: Constants,
    pub dual_points: usize,
    pub zoom_levels: usize,
    /// Multiplier applied to every slack term.
    pub slack_scale: f64,
}

impl WellPosednessInstance {
    pub fn new(
        f: GridFunction,
        base: &[f64],
        modulus: AdmissibleFunction,
        constants: Constants,
    ) -> Result<Self> {
        let base = point_of(&f, base)?;
        match f.value_at(&base) {
            Some(v) if v.is_finite() => {}
            Some(_) => return Err(Error::InfiniteValue),
            None => return Err(Error::OffGraph(format!("{base:?} is not a grid node"))),
        }
        Ok(Self {
            f,
            spec: None,
            base,
            modulus,
            constants,
            dual_points: DUAL_POINTS,
            zoom_levels: 0,
            slack_scale: 1.0,
        })
    }

    /// Sample `spec` on `[lo, hi]^dim` and enable zoom levels.
    #[allow(clippy::too_many_arguments)]
    pub fn from_spec(
        spec: &FunctionSpec,
        dim: usize,
        lo: f64,
        hi: f64,
        points: usize,
        base: &[f64],
        modulus: AdmissibleFunction,
        constants: Constants,
    ) -> Result<Self> {
        let f = GridFunction::sample_function(spec, dim, lo, hi, points)?;
        let mut inst = Self::new(f, base, modulus, constants)?;
        inst.spec = Some(spec.clone());
        inst.zoom_levels = ZOOM_LEVELS;
        Ok(inst)
    }

    pub fn with_modulus(&self, modulus: AdmissibleFunction) -> Self {
        Self {
            modulus,
            ..self.clone()
        }
    }

    pub fn with_constants(&self, constants: Constants) -> Self {
        Self {
            constants,
            ..self.clone()
        }
    }

    fn base_slice(&self) -> &[f64] {
        &self.base[..self.f.dim()]
    }

    /// Distance from the base point to the nearest box face.
    pub fn box_room(&self) -> f64 {
        let (lo, hi) = (self.f.lo(), self.f.hi());
        (0..self.f.dim())
            .map(|k| (self.base[k] - lo[k]).min(hi[k] - self.base[k]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Smallest positive one-sided slope met at distance `rho / 2` from the
/// base point along the axes; the tilt needed to push a convex minimizer
/// that far. 0 when every such slope vanishes.
pub fn slope_scale(f: &GridFunction, base: &Point, rho: f64) -> f64 {
    let n = f.points_per_axis();
    let h = f.spacing();
    let mut best = f64::INFINITY;
    for k in 0..f.dim() {
        let stride = if k == 0 { 1 } else { n[0] };
        let Some(c) = f.index_of(base) else { return 0.0 };
        let pos = if k == 0 { c % n[0] } else { c / n[0] } as isize;
        let steps = ((rho / 2.0) / h[k]).round().max(1.0) as isize;
        for sign in [1isize, -1] {
            let p = pos + sign * steps;
            let q = p + sign;
            if q < 0 || q >= n[k] as isize || p < 0 || p >= n[k] as isize {
                continue;
            }
            let a = f.value((c as isize + (p - pos) * stride as isize) as usize);
            let b = f.value((c as isize + (q - pos) * stride as isize) as usize);
            let s = (b - a) / h[k];
            if s.is_finite() && s > 0.0 {
                best = best.min(s);
            }
        }
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

struct Level {
    f: GridFunction,
    r: f64,
    gamma: f64,
    table: TiltMapTable,
    /// Entries whose argmin stays off the ball boundary; all of them on
    /// the base level.
    used: Vec<usize>,
}

fn build_levels(inst: &WellPosednessInstance, r: f64, delta: f64, gamma: f64) -> Result<Vec<Level>> {
    let mut levels = Vec::new();
    let table = tilt_minimizer_map(&inst.f, inst.base_slice(), r, delta, inst.dual_points)?;
    let used = (0..table.entries.len()).collect();
    levels.push(Level {
        f: inst.f.clone(),
        r,
        gamma,
        table,
        used,
    });
    let Some(spec) = &inst.spec else {
        return Ok(levels);
    };
    let dim = inst.f.dim();
    let (lo, hi) = (inst.f.lo(), inst.f.hi());
    let half = (ZOOM_POINTS / 2) as f64;
    for k in 1..=inst.zoom_levels {
        let rho = r * ZOOM_FACTOR.powi(-(k as i32));
        let hk = rho / half;
        let mut zlo = [0.0; 2];
        let mut zhi = [0.0; 2];
        let mut n = [1usize; 2];
        for a in 0..dim {
            let below = (((inst.base[a] - lo[a]) / hk + 1e-9).floor()).min(half);
            let above = (((hi[a] - inst.base[a]) / hk + 1e-9).floor()).min(half);
            zlo[a] = inst.base[a] - below * hk;
            zhi[a] = inst.base[a] + above * hk;
            n[a] = (below + above) as usize + 1;
        }
        if n[..dim].iter().any(|&m| m < 3) {
            continue;
        }
        let f = GridFunction::from_fn(dim, zlo, zhi, n, spec.id(), |p| spec.eval(p))?;
        if f.index_of(&inst.base).is_none() {
            continue;
        }
        let dk = delta.min(slope_scale(&f, &inst.base, rho));
        let table = tilt_minimizer_map(&f, inst.base_slice(), rho, dk, inst.dual_points)?;
        let edge = rho - 1.5 * f.cell_diagonal();
        let used = (0..table.entries.len())
            .filter(|&i| {
                table.entries[i]
                    .argmin
                    .points()
                    .iter()
                    .all(|p| dist(p, &inst.base) <= edge)
            })
            .collect();
        levels.push(Level {
            f,
            r: rho,
            gamma: gamma * ZOOM_FACTOR.powi(-(k as i32)),
            table,
            used,
        });
    }
    Ok(levels)
}

/// `d(x, s)`; binary search in 1-D, where point sets are sorted.
fn set_distance(x: &Point, s: &PointSet, dim: usize) -> f64 {
    if dim != 1 {
        return distance_to_set(x, s);
    }
    let pts = s.points();
    if pts.is_empty() {
        return f64::INFINITY;
    }
    let k = pts.partition_point(|p| p[0] < x[0]);
    let mut d = f64::INFINITY;
    if k < pts.len() {
        d = d.min(pts[k][0] - x[0]);
    }
    if k > 0 {
        d = d.min(x[0] - pts[k - 1][0]);
    }
    d
}

/// One growth-type sample: `m(a d) <= b val` with slack
/// `m(a(d + e)) - m(a(d - e)^+) + b vs`.
#[derive(Debug, Clone, Copy)]
struct Growth {
    d: f64,
    e: f64,
    val: f64,
    vs: f64,
    lvl: u16,
    entry: u32,
    idx: u32,
}

/// One continuity-type sample between two tilts: primal distance `dx`,
/// dual distance `du`, selection error `e`.
#[derive(Debug, Clone, Copy)]
struct Cont {
    dx: f64,
    du: f64,
    e: f64,
    lvl: u16,
    i: u32,
    j: u32,
}

/// Constant-free requirement `lhs <= slack`.
#[derive(Debug, Clone, Copy)]
struct Pre {
    lhs: f64,
    slack: f64,
    what: &'static str,
    lvl: u16,
    entry: u32,
}

struct Prepared {
    kind: CheckKind,
    dim: usize,
    levels: Vec<Level>,
    growth: Vec<Growth>,
    cont: Vec<Cont>,
    pre: Vec<Pre>,
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

fn require_minimizer(level: &Level, base: &Point) -> Result<()> {
    let at0 = level.table.at_zero().expect("dual grid contains 0");
    if dist(&at0.selected, base) > 1e-9 * level.f.h() {
        return Err(Error::NotLocalMinimizer(format!(
            "{base:?} does not minimize {} over B[x̄, {}]",
            level.f.name(),
            level.r
        )));
    }
    Ok(())
}

fn prepare(kind: CheckKind, inst: &WellPosednessInstance, r: f64, delta: f64, gamma: f64) -> Result<Prepared> {
    if !kind.is_tilt() {
        return Err(Error::InvalidParameter(format!("{} is not a tilt check", kind.as_str())));
    }
    let levels = build_levels(inst, r, delta, gamma)?;
    if matches!(kind, CheckKind::Slwp | CheckKind::Swlwp) {
        require_minimizer(&levels[0], &inst.base)?;
    }
    let dim = inst.f.dim();
    let base = inst.base;
    let mut p = Prepared {
        kind,
        dim,
        levels: Vec::new(),
        growth: Vec::new(),
        cont: Vec::new(),
        pre: Vec::new(),
    };
    for (li, lv) in levels.iter().enumerate() {
        let lvl = li as u16;
        let e = lv.f.cell_diagonal();
        let entries = &lv.table.entries;
        match kind {
            CheckKind::Slwp | CheckKind::Swlwp => {
                let ball = lv.f.ball_indices(&base, lv.r);
                let gmax = lv.gamma * SHRINK;
                for &i in &lv.used {
                    let en = &entries[i];
                    let u = en.u;
                    let fsel = en.min_value + u[0] * en.selected[0] + u[1] * en.selected[1];
                    let scale_sel = fsel.abs() + (u[0] * en.selected[0] + u[1] * en.selected[1]).abs();
                    for &idx in &ball {
                        let v = lv.f.value(idx);
                        if !v.is_finite() {
                            continue;
                        }
                        let x = lv.f.coord(idx);
                        if kind == CheckKind::Swlwp && dist(&x, &base) > gmax {
                            continue;
                        }
                        let ux = u[0] * x[0] + u[1] * x[1];
                        let d = if kind == CheckKind::Slwp {
                            dist(&x, &en.selected)
                        } else {
                            set_distance(&x, &en.argmin, dim)
                        };
                        p.growth.push(Growth {
                            d,
                            e,
                            val: (v - ux) - en.min_value,
                            vs: en.min_error + ROUND * (v.abs() + ux.abs() + scale_sel),
                            lvl,
                            entry: i as u32,
                            idx: idx as u32,
                        });
                    }
                }
            }
            CheckKind::Tslm => {
                let zero = entries.iter().position(|en| en.u == [0.0, 0.0]).unwrap();
                p.pre.push(Pre {
                    lhs: dist(&entries[zero].selected, &base),
                    slack: 1e-9 * e,
                    what: "selection at zero",
                    lvl,
                    entry: zero as u32,
                });
                for &i in &lv.used {
                    p.pre.push(Pre {
                        lhs: entries[i].argmin.diameter(),
                        slack: e,
                        what: "argmin diameter",
                        lvl,
                        entry: i as u32,
                    });
                }
                for (a, &i) in lv.used.iter().enumerate() {
                    for &j in &lv.used[a + 1..] {
                        p.cont.push(Cont {
                            dx: dist(&entries[i].selected, &entries[j].selected),
                            du: dist(&entries[i].u, &entries[j].u),
                            e,
                            lvl,
                            i: i as u32,
                            j: j as u32,
                        });
                    }
                }
            }
            CheckKind::WeakTslm => {
                let gmax = lv.gamma * SHRINK;
                let local: Vec<Vec<Point>> = entries
                    .iter()
                    .map(|en| {
                        en.argmin
                            .points()
                            .iter()
                            .copied()
                            .filter(|q| dist(q, &base) <= gmax)
                            .collect()
                    })
                    .collect();
                for &i in &lv.used {
                    if local[i].is_empty() {
                        continue;
                    }
                    for &j in &lv.used {
                        if i == j {
                            continue;
                        }
                        let dx = local[i]
                            .iter()
                            .map(|q| set_distance(q, &entries[j].argmin, dim))
                            .fold(0.0, f64::max);
                        p.cont.push(Cont {
                            dx,
                            du: dist(&entries[i].u, &entries[j].u),
                            e,
                            lvl,
                            i: i as u32,
                            j: j as u32,
                        });
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    p.levels = levels;
    Ok(p)
}

impl Prepared {
    fn entry(&self, lvl: u16, i: u32) -> &TiltEntry {
        &self.levels[lvl as usize].table.entries[i as usize]
    }

    fn push_point(&self, out: &mut Vec<(&'static str, f64)>, names: [&'static str; 2], p: &Point) {
        out.push((names[0], p[0]));
        if self.dim == 2 {
            out.push((names[1], p[1]));
        }
    }

    fn growth_at(&self, g: &Growth) -> Vec<(&'static str, f64)> {
        let en = self.entry(g.lvl, g.entry);
        let x = self.levels[g.lvl as usize].f.coord(g.idx as usize);
        let mut out = vec![("level", g.lvl as f64)];
        self.push_point(&mut out, ["u", "u1"], &en.u);
        self.push_point(&mut out, ["x", "x1"], &x);
        self.push_point(&mut out, ["x_u", "x_u1"], &en.selected);
        out.push(("distance", g.d));
        out
    }

    fn cont_at(&self, c: &Cont) -> Vec<(&'static str, f64)> {
        let (a, b) = (self.entry(c.lvl, c.i), self.entry(c.lvl, c.j));
        let mut out = vec![("level", c.lvl as f64)];
        self.push_point(&mut out, ["u1", "u1_1"], &a.u);
        self.push_point(&mut out, ["u2", "u2_1"], &b.u);
        self.push_point(&mut out, ["m1", "m1_1"], &a.selected);
        self.push_point(&mut out, ["m2", "m2_1"], &b.selected);
        out.push(("primal_gap", c.dx));
        out
    }

    /// Run every sample through `t`. With `early`, stop at the first
    /// violation. Returns whether all visited samples passed.
    fn evaluate(&self, m: &AdmissibleFunction, kappa: f64, tau: f64, s: f64, early: bool, t: &mut Tracker) -> bool {
        let mut ok = true;
        for p in &self.pre {
            let pass = t.observe(p.lhs, 0.0, s * p.slack, || {
                let en = self.entry(p.lvl, p.entry);
                let mut out = vec![("level", p.lvl as f64), ("value", p.lhs)];
                self.push_point(&mut out, ["u", "u1"], &en.u);
                out.push((p.what, 1.0));
                out
            });
            ok &= pass;
            if early && !ok {
                return false;
            }
        }
        let (a, b) = match self.kind {
            CheckKind::Slwp => (kappa, tau),
            _ => (tau, kappa),
        };
        for g in &self.growth {
            let lhs = m.eval(a * g.d);
            let slack = m.eval(a * (g.d + g.e)) - m.eval(a * pos(g.d - g.e)) + b * g.vs;
            ok &= t.observe(lhs, b * g.val, s * slack, || self.growth_at(g));
            if early && !ok {
                return false;
            }
        }
        for c in &self.cont {
            let (lhs, rhs, slack) = if self.kind == CheckKind::Tslm {
                let rhs = m.eval(tau * c.du);
                (kappa * c.dx, rhs, 2.0 * kappa * c.e + 1e-12 * rhs)
            } else {
                let rhs = kappa * m.eval(tau * c.du);
                (c.dx, rhs, 2.0 * c.e + 1e-12 * rhs)
            };
            ok &= t.observe(lhs, rhs, s * slack, || self.cont_at(c));
            if early && !ok {
                return false;
            }
        }
        ok
    }

    /// For a power modulus `c t^p` the verdict depends on the constants only
    /// through `difficulty`; returns the largest passing difficulty, or
    /// `None` when a constant-free requirement fails.
    fn threshold(&self, c: f64, p: f64, s: f64) -> Option<f64> {
        if self.pre.iter().any(|q| q.lhs > s * q.slack) {
            return None;
        }
        let mut rho = f64::INFINITY;
        for g in &self.growth {
            let a = c * (g.d.powf(p) - s * ((g.d + g.e).powf(p) - pos(g.d - g.e).powf(p)));
            if a > 0.0 {
                rho = rho.min((g.val + s * g.vs) / a);
            }
        }
        for q in &self.cont {
            let gap = q.dx - 2.0 * s * q.e;
            if gap > 0.0 {
                rho = rho.min(c * q.du.powf(p) * (1.0 + 1e-12 * s) / gap);
            }
        }
        Some(rho.max(0.0))
    }

    fn describe(&self, cert: &mut Certificate, m: &AdmissibleFunction, s: f64) {
        cert.set_sweep("modulus", json!(m.name()));
        cert.set_sweep("slack_scale", json!(s));
        let levels: Vec<_> = self
            .levels
            .iter()
            .map(|lv| {
                json!({
                    "radius": lv.r,
                    "spacing": lv.f.h(),
                    "points": lv.f.len(),
                    "delta": lv.table.delta,
                    "tilts": lv.table.entries.len(),
                    "tilts_used": lv.used.len(),
                    "max_argmin_diameter": lv.table.max_argmin_diameter(),
                })
            })
            .collect();
        cert.set_sweep("levels", json!(levels));
    }
}

/// Ordering of `(kappa, tau)` difficulty for a power modulus with exponent `p`.
fn difficulty(kind: CheckKind, kappa: f64, tau: f64, p: f64) -> f64 {
    match kind {
        CheckKind::Slwp => kappa.powf(p) / tau,
        CheckKind::Swlwp => tau.powf(p) / kappa,
        CheckKind::Tslm => kappa / tau.powf(p),
        CheckKind::WeakTslm => 1.0 / (kappa * tau.powf(p)),
        _ => unreachable!(),
    }
}

fn tilt_certificate(kind: CheckKind, c: &Constants) -> Certificate {
    let cert = Certificate::new(kind.as_str())
        .constant("r", c.r)
        .constant("delta", c.delta)
        .constant("tau", c.tau)
        .constant("kappa", c.kappa);
    if kind.uses_gamma() {
        cert.constant("gamma", c.gamma)
    } else {
        cert
    }
}

fn run_prepared(p: &Prepared, inst: &WellPosednessInstance, c: &Constants) -> Certificate {
    let mut cert = tilt_certificate(p.kind, c);
    let mut t = Tracker::new();
    p.evaluate(&inst.modulus, c.kappa, c.tau, inst.slack_scale, false, &mut t);
    t.finish(&mut cert);
    p.describe(&mut cert, &inst.modulus, inst.slack_scale);
    cert
}

fn run_check(kind: CheckKind, inst: &WellPosednessInstance) -> Result<Certificate> {
    let c = inst.constants;
    let p = prepare(kind, inst, c.r, c.delta, c.gamma)?;
    Ok(run_prepared(&p, inst, &c))
}

/// `phi(kappa |x - x_u|) <= tau (f_u(x) - f_u(x_u))` for every grid `x` in
/// `B[x̄, r]` and every tilt of the dual grid, `x_u` the selected minimizer.
pub fn check_slwp(inst: &WellPosednessInstance) -> Result<Certificate> {
    run_check(CheckKind::Slwp, inst)
}

/// Single-valued tilt map with `M(0) = x̄` and
/// `kappa |M(u1) - M(u2)| <= psi(tau |u1 - u2|)`.
pub fn check_tslm(inst: &WellPosednessInstance) -> Result<Certificate> {
    run_check(CheckKind::Tslm, inst)
}

/// `phi(tau d(x, argmin f_u)) <= kappa (f_u(x) - min f_u)` for `x` in
/// `B(x̄, gamma)`, with the full argmin set.
pub fn check_swlwp(inst: &WellPosednessInstance) -> Result<Certificate> {
    run_check(CheckKind::Swlwp, inst)
}

/// `argmin f_x* ∩ B(x̄, gamma)` lies within `kappa psi(tau |x* - u*|)` of
/// `argmin f_u*` for all pairs of tilts.
pub fn check_weak_tslm(inst: &WellPosednessInstance) -> Result<Certificate> {
    run_check(CheckKind::WeakTslm, inst)
}

/// Ranges swept by [`search_certificate`]: `tau` and `kappa` over powers of
/// two, `r`, `delta` and `gamma` as fractions of their reference scales.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub log2_tau: (i32, i32),
    pub log2_kappa: (i32, i32),
    /// Fractions of the room between the base point and the box face.
    pub r_fracs: Vec<f64>,
    /// Fractions of the slope scale of `f` at distance `r/2`.
    pub delta_fracs: Vec<f64>,
    /// Fractions of `r`.
    pub gamma_fracs: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            log2_tau: (-10, 10),
            log2_kappa: (-10, 10),
            r_fracs: vec![0.25, 0.5, 1.0],
            delta_fracs: vec![0.25, 0.5, 1.0],
            gamma_fracs: vec![0.5, 1.0],
        }
    }
}

impl SweepSpec {
    /// Parse `tau=-10:10;kappa=-10:10;r=0.25,0.5,1;delta=0.5;gamma=1`.
    /// Missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Self::default();
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidSweep(format!("expected key=value, got {part}")))?;
            let range = |v: &str| -> Result<(i32, i32)> {
                let (a, b) = v
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidSweep(format!("expected lo:hi, got {v}")))?;
                let p = |x: &str| {
                    x.trim()
                        .parse::<i32>()
                        .map_err(|_| Error::InvalidSweep(format!("bad exponent {x}")))
                };
                Ok((p(a)?, p(b)?))
            };
            let list = |v: &str| -> Result<Vec<f64>> {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidSweep(format!("bad fraction {x}")))
                    })
                    .collect()
            };
            match key.trim() {
                "tau" => s.log2_tau = range(val)?,
                "kappa" => s.log2_kappa = range(val)?,
                "r" => s.r_fracs = list(val)?,
                "delta" => s.delta_fracs = list(val)?,
                "gamma" => s.gamma_fracs = list(val)?,
                other => return Err(Error::InvalidSweep(format!("unknown key {other}"))),
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (a, b)) in [("tau", self.log2_tau), ("kappa", self.log2_kappa)] {
            if a > b || a.abs() > 60 || b.abs() > 60 {
                return Err(Error::InvalidSweep(format!("{name} range {a}:{b}")));
            }
        }
        for (name, v) in [("r", &self.r_fracs), ("delta", &self.delta_fracs), ("gamma", &self.gamma_fracs)] {
            if v.is_empty() || v.iter().any(|x| !(*x > 0.0 && *x <= 1.0)) {
                return Err(Error::InvalidSweep(format!("{name} fractions must lie in (0, 1]")));
            }
        }
        Ok(())
    }

    fn taus(&self) -> Vec<f64> {
        (self.log2_tau.0..=self.log2_tau.1).map(|k| 2f64.powi(k)).collect()
    }

    fn kappas(&self) -> Vec<f64> {
        (self.log2_kappa.0..=self.log2_kappa.1).map(|k| 2f64.powi(k)).collect()
    }
}

impl std::fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        write!(
            f,
            "tau={}:{};kappa={}:{};r={};delta={};gamma={}",
            self.log2_tau.0,
            self.log2_tau.1,
            self.log2_kappa.0,
            self.log2_kappa.1,
            join(&self.r_fracs),
            join(&self.delta_fracs),
            join(&self.gamma_fracs)
        )
    }
}

/// What a search runs on.
#[derive(Debug, Clone, Copy)]
pub enum SearchTarget<'a> {
    /// Tilt checks; the instance constants are ignored.
    Tilt(&'a WellPosednessInstance),
    /// Metric regularity checks of a graph at `center`.
    Graph {
        graph: &'a crate::subdiff::SetValuedGraph,
        center: [f64; 2],
        psi: &'a AdmissibleFunction,
    },
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub kind: CheckKind,
    pub found: bool,
    /// Best passing certificate, or the failing certificate with the
    /// largest margin when nothing passed.
    pub certificate: Certificate,
    /// `(r, delta, gamma)` combinations examined.
    pub combos: usize,
    /// Combinations skipped because the base point was not a minimizer.
    pub skipped: usize,
}

/// Whether larger `tau` (first) and larger `kappa` (second) make a check
/// easier.
fn easier_up(kind: CheckKind) -> (bool, bool) {
    match kind {
        CheckKind::Slwp | CheckKind::Tslm => (true, false),
        CheckKind::Swlwp | CheckKind::MetricReg | CheckKind::StrongMetricReg => (false, true),
        CheckKind::WeakTslm => (true, true),
    }
}

/// Passing `(tau, kappa)` index pairs of a check that is monotone in both
/// constants. Walks the staircase boundary from the hardest `tau` row, so at
/// most `nt + nk` evaluations are made.
fn pass_region(
    kind: CheckKind,
    nt: usize,
    nk: usize,
    mut pass: impl FnMut(usize, usize) -> bool,
) -> Vec<(usize, usize)> {
    let (t_up, k_up) = easier_up(kind);
    // indices ordered from hardest to easiest
    let korder: Vec<usize> = if k_up { (0..nk).collect() } else { (0..nk).rev().collect() };
    let torder: Vec<usize> = if t_up { (0..nt).collect() } else { (0..nt).rev().collect() };
    let mut out = Vec::new();
    let mut pos = nk;
    for &i in &torder {
        while pos > 0 && pass(i, korder[pos - 1]) {
            pos -= 1;
        }
        out.extend(korder[pos..].iter().map(|&j| (i, j)));
    }
    out
}

fn unity_rank(taus: &[f64], kappas: &[f64], (i, j): (usize, usize)) -> (i64, usize, usize) {
    let d = taus[i].log2().abs() + kappas[j].log2().abs();
    (d.round() as i64, i, j)
}

fn easiest(kind: CheckKind, nt: usize, nk: usize) -> (usize, usize) {
    let (t_up, k_up) = easier_up(kind);
    (if t_up { nt - 1 } else { 0 }, if k_up { nk - 1 } else { 0 })
}

struct Best {
    pass: Option<Certificate>,
    fail: Option<Certificate>,
}

impl Best {
    fn offer(&mut self, cert: Certificate) {
        let slot = if cert.passed() { &mut self.pass } else { &mut self.fail };
        if slot.as_ref().is_none_or(|b| cert.margin > b.margin) {
            *slot = Some(cert);
        }
    }
}

/// Sweep the constants of `kind` and return the best certificate found.
pub fn search_certificate(kind: CheckKind, target: SearchTarget<'_>, sweep: &SweepSpec) -> Result<SearchOutcome> {
    sweep.validate()?;
    let taus = sweep.taus();
    let kappas = sweep.kappas();
    let (nt, nk) = (taus.len(), kappas.len());
    let mut best = Best { pass: None, fail: None };
    let mut combos = 0;
    let mut skipped = 0;
    let mut last_err = None;
    match target {
        SearchTarget::Tilt(inst) => {
            if !kind.is_tilt() {
                return Err(Error::InvalidParameter(format!("{} needs a graph target", kind.as_str())));
            }
            let room = inst.box_room();
            let gammas = if kind.uses_gamma() { sweep.gamma_fracs.clone() } else { vec![1.0] };
            let power = inst.modulus.power_params();
            for &rf in &sweep.r_fracs {
                let r = rf * room;
                if !(r > 0.0) {
                    continue;
                }
                let mut scale = slope_scale(&inst.f, &inst.base, r);
                if scale == 0.0 {
                    scale = inst.f.local_lipschitz(&inst.base, r);
                }
                if scale == 0.0 {
                    scale = 1.0;
                }
                for &df in &sweep.delta_fracs {
                    for &gf in &gammas {
                        combos += 1;
                        let c0 = Constants { r, delta: df * scale, tau: 1.0, kappa: 1.0, gamma: gf * r };
                        let prep = match prepare(kind, inst, c0.r, c0.delta, c0.gamma) {
                            Ok(p) => p,
                            Err(e @ Error::NotLocalMinimizer(_)) => {
                                skipped += 1;
                                last_err = Some(e);
                                continue;
                            }
                            Err(e) => return Err(e),
                        };
                        let s = inst.slack_scale;
                        let rho = power.map(|(c, p)| (prep.threshold(c, p, s), p));
                        let region = pass_region(kind, nt, nk, |i, j| match rho {
                            Some((None, _)) => false,
                            Some((Some(rho), p)) => difficulty(kind, kappas[j], taus[i], p) <= rho * (1.0 - 1e-9),
                            None => {
                                let mut t = Tracker::new();
                                prep.evaluate(&inst.modulus, kappas[j], taus[i], s, true, &mut t)
                            }
                        });
                        let mut ranked = region;
                        ranked.sort_by_key(|&ij| unity_rank(&taus, &kappas, ij));
                        let mut passed = false;
                        for &(i, j) in ranked.iter().take(4) {
                            let c = Constants { tau: taus[i], kappa: kappas[j], ..c0 };
                            let cert = run_prepared(&prep, inst, &c);
                            if cert.passed() {
                                best.offer(cert);
                                passed = true;
                                break;
                            }
                        }
                        if !passed {
                            let (i, j) = easiest(kind, nt, nk);
                            let c = Constants { tau: taus[i], kappa: kappas[j], ..c0 };
                            best.offer(run_prepared(&prep, inst, &c));
                        }
                    }
                }
            }
        }
        SearchTarget::Graph { graph, center, psi } => {
            if kind.is_tilt() {
                return Err(Error::InvalidParameter(format!("{} needs a tilt target", kind.as_str())));
            }
            let [xl, xh, vl, vh] = graph.bbox();
            let room_x = (center[0] - xl).min(xh - center[0]);
            let room = room_x.min((center[1] - vl).min(vh - center[1]));
            let deltas = if kind == CheckKind::StrongMetricReg { sweep.delta_fracs.clone() } else { vec![1.0] };
            for &rf in &sweep.r_fracs {
                let r = rf * room;
                if !(r > 0.0) {
                    continue;
                }
                for &df in &deltas {
                    combos += 1;
                    let delta = df * room_x;
                    let run = |tau: f64, kappa: f64| -> Result<Certificate> {
                        if kind == CheckKind::MetricReg {
                            crate::regularity::check_metric_regularity(graph, center, psi, tau, kappa, r)
                        } else {
                            crate::regularity::check_strong_metric_regularity(graph, center, psi, tau, kappa, r, delta)
                        }
                    };
                    run(1.0, 1.0)?;
                    let region = pass_region(kind, nt, nk, |i, j| run(taus[i], kappas[j]).map(|c| c.passed()).unwrap_or(false));
                    let mut ranked = region;
                    ranked.sort_by_key(|&ij| unity_rank(&taus, &kappas, ij));
                    match ranked.first() {
                        Some(&(i, j)) => best.offer(run(taus[i], kappas[j])?),
                        None => {
                            let (i, j) = easiest(kind, nt, nk);
                            best.offer(run(taus[i], kappas[j])?);
                        }
                    }
                }
            }
        }
    }
    let found = best.pass.is_some();
    let mut certificate = match (best.pass, best.fail) {
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => {
            return Err(last_err.unwrap_or_else(|| Error::InvalidSweep("sweep produced no combination".into())))
        }
    };
    certificate.set_sweep("search", json!(sweep.to_string()));
    certificate.set_sweep("search_combos", json!(combos));
    Ok(SearchOutcome {
        kind,
        found,
        certificate,
        combos,
        skipped,
    })
}

/// Argmin of `f` over `B[x̄, r]`, after checking that `x̄` attains it.
fn ball_argmin_at(f: &GridFunction, base: &[f64], r: f64) -> Result<(PointSet, f64)> {
    let xb = point_of(f, base)?;
    let idx = f
        .index_of(&xb)
        .ok_or_else(|| Error::NotLocalMinimizer(format!("{base:?} is not a grid node")))?;
    let (min, _) = f.ball_min(base, r)?;
    let fx = f.value(idx);
    if fx > min {
        return Err(Error::NotLocalMinimizer(format!(
            "f({base:?}) = {fx} exceeds the minimum {min} over B[x̄, {r}]"
        )));
    }
    Ok((f.localized_argmin(base, r, Some(0.0))?, fx))
}

/// Two-phase check: the slope hypothesis
/// `psi'_+(tau d(x, M)) <= kappa d(0, F(x))` on `B(x̄, delta) \ M`, then,
/// only if it holds, the growth conclusion
/// `psi(tau (1-alpha) d(x, M)) <= tau kappa (1-alpha)/alpha (f(x) - f(x̄))`
/// on `B(x̄, min(delta, r)/(1+alpha))`. `M` is the argmin of `f` over
/// `B[x̄, r]` and `g` the subdifferential graph of `f`.
#[allow(clippy::too_many_arguments)]
pub fn check_growth_from_slope(
    f: &GridFunction,
    g: &crate::subdiff::SetValuedGraph,
    base: &[f64],
    r: f64,
    psi: &AdmissibleFunction,
    tau: f64,
    kappa: f64,
    delta: f64,
    alpha: f64,
) -> Result<Certificate> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: f.dim() });
    }
    for (name, v) in [("r", r), ("tau", tau), ("kappa", kappa), ("delta", delta)] {
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let (m, fbar) = ball_argmin_at(f, base, r)?;
    let xb = point_of(f, base)?;
    let h = f.h();
    let dv = g.resolution().1;
    let mut cert = Certificate::new("growth-from-slope")
        .constant("r", r)
        .constant("tau", tau)
        .constant("kappa", kappa)
        .constant("delta", delta)
        .constant("alpha", alpha);

    let mut hyp = Tracker::new();
    let mut excluded = 0usize;
    for i in 0..f.len() {
        let x = f.coord(i);
        if dist(&x, &xb) >= delta {
            continue;
        }
        if m.contains(&x) {
            excluded += 1;
            continue;
        }
        let d = distance_to_set(&x, &m);
        let lhs = psi.right_derivative(tau * d)?;
        let low = psi.right_derivative(tau * (d - h).max(0.0))?;
        let rhs = kappa * g.dist_to_image(x[0], 0.0);
        let slack = (lhs - low) + kappa * dv + 1e-12 * rhs.abs();
        hyp.observe(lhs, rhs, slack, || vec![("x", x[0]), ("d", d)]);
    }
    let hyp_passed = hyp.passed();
    let hyp_summary = json!({
        "samples": hyp.samples(),
        "excluded_argmin": excluded,
        "passed": hyp_passed,
        "margin": crate::certificate::num(hyp.margin()),
    });
    hyp.finish(&mut cert);
    cert.set_sweep("phase1", hyp_summary);
    if !hyp_passed {
        cert.note("slope hypothesis fails; growth conclusion not tested");
        cert.set_sweep("phase2", json!("skipped"));
        return Ok(cert);
    }

    let radius = delta.min(r) / (1.0 + alpha);
    let factor = tau * kappa * (1.0 - alpha) / alpha;
    let mut con = Tracker::new();
    for i in 0..f.len() {
        let x = f.coord(i);
        if dist(&x, &xb) >= radius {
            continue;
        }
        let d = distance_to_set(&x, &m);
        let lhs = psi.eval(tau * (1.0 - alpha) * d);
        let low = psi.eval(tau * (1.0 - alpha) * (d - h).max(0.0));
        let rhs = factor * (f.value(i) - fbar);
        let slack = (lhs - low) + 1e-12 * rhs.abs();
        con.observe(lhs, rhs, slack, || vec![("x", x[0]), ("d", d)]);
    }
    let con_summary = json!({
        "samples": con.samples(),
        "radius": radius,
        "passed": con.passed(),
        "margin": crate::certificate::num(con.margin()),
    });
    con.finish(&mut cert);
    cert.set_sweep("phase2", con_summary);
    Ok(cert)
}

/// Range `[lo, hi]` of the cell difference quotients of a 1-D grid function
/// over the cells touching a node of the open ball `B(x̄, eps)`. Consecutive
/// quotient intervals share endpoints, so their union is this whole range.
pub fn slope_range(f: &GridFunction, base: &[f64], eps: f64) -> Result<(f64, f64)> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: f.dim() });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let xb = point_of(f, base)?;
    let h = f.h();
    let n = f.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        if (f.coord(i)[0] - xb[0]).abs() >= eps {
            continue;
        }
        for (a, b) in [(i.wrapping_sub(1), i), (i, i + 1)] {
            if a >= n || b >= n {
                continue;
            }
            let q = (f.value(b) - f.value(a)) / h;
            if q.is_finite() {
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
    }
    if lo > hi {
        return Err(Error::EmptyRegion(format!("no finite cell of the grid touches B({base:?}, {eps})")));
    }
    Ok((lo, hi))
}

/// Largest `gamma` with `[-gamma, gamma]` inside [`slope_range`]; zero when
/// the range misses an open neighbourhood of `0`.
pub fn slope_coverage(f: &GridFunction, base: &[f64], eps: f64) -> Result<f64> {
    let (lo, hi) = slope_range(f, base, eps)?;
    Ok((-lo).min(hi).max(0.0))
}

/// Check `B(0, gamma) ⊂ ∂f(B(x̄, eps))` through [`slope_range`].
pub fn check_interiority(f: &GridFunction, base: &[f64], eps: f64, gamma: f64) -> Result<Certificate> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let (lo, hi) = slope_range(f, base, eps)?;
    let mut cert = Certificate::new("interiority").constant("eps", eps).constant("gamma", gamma);
    let mut t = Tracker::new();
    t.observe(gamma, -lo, 0.0, || vec![("side", -1.0)]);
    t.observe(gamma, hi, 0.0, || vec![("side", 1.0)]);
    t.finish(&mut cert);
    cert.set_sweep("slope_range", json!([lo, hi]));
    Ok(cert)
}

/// Results that [`verify_theorem`] tests on grid instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TheoremId {
    T33,
    T34,
    P36,
    T45,
    T52,
    C53,
    P61,
    C62,
}

impl TheoremId {
    pub const ALL: [TheoremId; 8] = [
        TheoremId::T33,
        TheoremId::T34,
        TheoremId::P36,
        TheoremId::T45,
        TheoremId::T52,
        TheoremId::C53,
        TheoremId::P61,
        TheoremId::C62,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::T33 => "T3.3",
            TheoremId::T34 => "T3.4",
            TheoremId::P36 => "P3.6",
            TheoremId::T45 => "T4.5",
            TheoremId::T52 => "T5.2",
            TheoremId::C53 => "C5.3",
            TheoremId::P61 => "P6.1",
            TheoremId::C62 => "C6.2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownId(s.to_string()))
    }

    pub fn description(self) -> &'static str {
        match self {
            TheoremId::T33 => "strong phi'_+ regularity of the subdifferential implies phi-SLWP",
            TheoremId::T34 => "phi-SLWP implies strong phi' regularity of the localized convex hull subdifferential",
            TheoremId::P36 => "phi-SLWP implies 0 in int of the subdifferential image of every ball",
            TheoremId::T45 => "phi-SLWP iff (phi')^-1-TSLM",
            TheoremId::T52 => "phi-SLWP iff phi-SWLWP",
            TheoremId::C53 => "SLWP, SWLWP, TSLM, weak TSLM agree; strong regularity implies them and metric regularity",
            TheoremId::P61 => "second-order condition implies metric psi-regularity",
            TheoremId::C62 => "second-order condition on convex f implies SLWP with phi the integral of psi",
        }
    }
}

impl std::fmt::Display for TheoremId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Consistency {
    /// Every tested direction was observed.
    Consistent,
    /// No antecedent was certified.
    Vacuous,
    /// An antecedent was certified and its consequent refuted.
    Inconsistent,
}

impl Consistency {
    pub fn as_str(self) -> &'static str {
        match self {
            Consistency::Consistent => "CONSISTENT",
            Consistency::Vacuous => "VACUOUS",
            Consistency::Inconsistent => "INCONSISTENT",
        }
    }
}

/// A one-dimensional instance for [`verify_theorem`]. Which of `spec`,
/// `base`, `phi` and `psi` are needed depends on the theorem.
#[derive(Debug, Clone)]
pub struct TheoremInput {
    pub spec: Option<FunctionSpec>,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub base: Option<f64>,
    pub phi: Option<AdmissibleFunction>,
    pub psi: Option<AdmissibleFunction>,
    /// Subdifferential graph of `f`; built from the catalog when absent.
    pub graph: Option<crate::subdiff::SetValuedGraph>,
    pub sweep: SweepSpec,
    pub slack_scale: f64,
}

impl TheoremInput {
    /// Box `[-2, 2]` with 401 points and the default sweep.
    pub fn new(spec: FunctionSpec, base: f64) -> Self {
        Self {
            spec: Some(spec),
            lo: -2.0,
            hi: 2.0,
            points: 401,
            base: Some(base),
            phi: None,
            psi: None,
            graph: None,
            sweep: SweepSpec::default(),
            slack_scale: 1.0,
        }
    }

    pub fn with_phi(mut self, phi: AdmissibleFunction) -> Self {
        self.phi = Some(phi);
        self
    }

    pub fn with_psi(mut self, psi: AdmissibleFunction) -> Self {
        self.psi = Some(psi);
        self
    }
}

#[derive(Debug, Clone)]
pub struct TheoremReport {
    pub id: TheoremId,
    pub verdict: Consistency,
    /// One line per tested relation.
    pub details: Vec<String>,
    /// Labelled certificates behind the verdict.
    pub certificates: Vec<(String, Certificate)>,
}

impl TheoremReport {
    pub fn to_json(&self) -> String {
        let certs: Vec<_> = self
            .certificates
            .iter()
            .map(|(label, c)| json!({"label": label, "certificate": c.to_value()}))
            .collect();
        let v = json!({
            "theorem": self.id.as_str(),
            "verdict": self.verdict.as_str(),
            "details": self.details,
            "certificates": certs,
        });
        serde_json::to_string_pretty(&v).expect("report serializes")
    }
}

struct Verifier<'a> {
    input: &'a TheoremInput,
    spec: &'a FunctionSpec,
    base: f64,
    details: Vec<String>,
    certificates: Vec<(String, Certificate)>,
    verdicts: Vec<Consistency>,
}

type Found = (bool, Option<Certificate>);

impl<'a> Verifier<'a> {
    fn new(input: &'a TheoremInput) -> Result<Self> {
        let spec = input.spec.as_ref().ok_or_else(|| Error::MissingComponent("function".into()))?;
        let base = input.base.ok_or_else(|| Error::MissingComponent("base point".into()))?;
        Ok(Self {
            input,
            spec,
            base,
            details: Vec::new(),
            certificates: Vec::new(),
            verdicts: Vec::new(),
        })
    }

    fn phi(&self) -> Result<&'a AdmissibleFunction> {
        self.input.phi.as_ref().ok_or_else(|| Error::MissingComponent("phi".into()))
    }

    fn psi(&self) -> Result<&'a AdmissibleFunction> {
        self.input.psi.as_ref().ok_or_else(|| Error::MissingComponent("psi".into()))
    }

    fn subgraph(&self) -> Result<crate::subdiff::SetValuedGraph> {
        match &self.input.graph {
            Some(g) => Ok(g.clone()),
            None => crate::subdiff::subdifferential_graph(self.spec, self.input.lo, self.input.hi)
                .map_err(|e| Error::MissingComponent(format!("subdifferential graph ({e})"))),
        }
    }

    fn grid(&self) -> Result<GridFunction> {
        GridFunction::sample_1d(self.spec, self.input.lo, self.input.hi, self.input.points)
    }

    fn keep(&mut self, label: &str, found: bool, cert: Certificate) -> Found {
        self.certificates.push((label.to_string(), cert.clone()));
        (found, Some(cert))
    }

    fn tilt(&mut self, label: &str, kind: CheckKind, modulus: &AdmissibleFunction) -> Result<Found> {
        let i = self.input;
        let mut inst = WellPosednessInstance::from_spec(
            self.spec,
            1,
            i.lo,
            i.hi,
            i.points,
            &[self.base],
            modulus.clone(),
            Constants::new(1.0, 1.0, 1.0, 1.0, 1.0)?,
        )?;
        inst.slack_scale = i.slack_scale;
        match search_certificate(kind, SearchTarget::Tilt(&inst), &i.sweep) {
            Ok(o) => Ok(self.keep(label, o.found, o.certificate)),
            Err(Error::NotLocalMinimizer(msg)) => {
                self.details.push(format!("{label}: not found, base point is not a localized minimizer ({msg})"));
                Ok((false, None))
            }
            Err(e) => Err(e),
        }
    }

    fn graph(
        &mut self,
        label: &str,
        kind: CheckKind,
        g: &crate::subdiff::SetValuedGraph,
        psi: &AdmissibleFunction,
    ) -> Result<Found> {
        let center = [self.base, 0.0];
        if !g.contains(&center, 1e-9) {
            self.details.push(format!("{label}: not found, (x̄, 0) is off the graph"));
            return Ok((false, None));
        }
        let o = search_certificate(kind, SearchTarget::Graph { graph: g, center, psi }, &self.input.sweep)?;
        Ok(self.keep(label, o.found, o.certificate))
    }

    /// Largest swept `kappa` for which the second-order condition holds,
    /// trying each `r` fraction of the room around `(x̄, 0)`.
    fn second_order(&mut self, label: &str, g: &crate::subdiff::SetValuedGraph, psi: &AdmissibleFunction) -> Result<Found> {
        let center = [self.base, 0.0];
        if !g.contains(&center, 1e-9) {
            self.details.push(format!("{label}: not found, (x̄, 0) is off the graph"));
            return Ok((false, None));
        }
        let [xl, xh, vl, vh] = g.bbox();
        let room = (center[0] - xl).min(xh - center[0]).min(center[1] - vl).min(vh - center[1]);
        let kappas = self.input.sweep.kappas();
        let mut best: Option<Certificate> = None;
        let mut fail: Option<Certificate> = None;
        for &rf in &self.input.sweep.r_fracs {
            let r = rf * room;
            if !(r > 0.0) {
                continue;
            }
            let first = crate::subdiff::check_condition_6_1(g, psi, kappas[0], r, center)?;
            if !first.passed() {
                if fail.as_ref().is_none_or(|c| first.margin > c.margin) {
                    fail = Some(first);
                }
                continue;
            }
            let (mut lo, mut hi) = (0usize, kappas.len() - 1);
            let mut cert = first;
            while lo < hi {
                let mid = (lo + hi).div_ceil(2);
                let c = crate::subdiff::check_condition_6_1(g, psi, kappas[mid], r, center)?;
                if c.passed() {
                    lo = mid;
                    cert = c;
                } else {
                    hi = mid - 1;
                }
            }
            let k = cert.constants.get("kappa").copied().unwrap_or(0.0);
            if best.as_ref().is_none_or(|b| k > b.constants.get("kappa").copied().unwrap_or(0.0)) {
                best = Some(cert);
            }
        }
        match (best, fail) {
            (Some(c), _) => Ok(self.keep(label, true, c)),
            (None, Some(c)) => Ok(self.keep(label, false, c)),
            (None, None) => Err(Error::EmptyRegion("graph leaves no room around (x̄, 0)".into())),
        }
    }

    fn implies(&mut self, a: (&str, bool), b: (&str, bool)) {
        let (v, what) = match (a.1, b.1) {
            (false, _) => (Consistency::Vacuous, "antecedent not certified"),
            (true, true) => (Consistency::Consistent, "both certified"),
            (true, false) => (Consistency::Inconsistent, "antecedent certified, consequent not found"),
        };
        self.details.push(format!("{} => {}: {what}", a.0, b.0));
        self.verdicts.push(v);
    }

    fn equiv(&mut self, a: (&str, bool), b: (&str, bool)) {
        let (v, what) = match (a.1, b.1) {
            (true, true) => (Consistency::Consistent, "both found"),
            (false, false) => (Consistency::Consistent, "both fail"),
            _ => (Consistency::Inconsistent, "disagree"),
        };
        self.details.push(format!("{} <=> {}: {what}", a.0, b.0));
        self.verdicts.push(v);
    }

    fn unmet(&mut self, what: &str) {
        self.details.push(format!("hypothesis not met: {what}"));
        self.verdicts.push(Consistency::Vacuous);
    }

    fn finish(self, id: TheoremId) -> TheoremReport {
        let verdict = if self.verdicts.contains(&Consistency::Inconsistent) {
            Consistency::Inconsistent
        } else if self.verdicts.contains(&Consistency::Consistent) {
            Consistency::Consistent
        } else {
            Consistency::Vacuous
        };
        TheoremReport {
            id,
            verdict,
            details: self.details,
            certificates: self.certificates,
        }
    }
}

fn smooth_phi(phi: &AdmissibleFunction) -> bool {
    phi.is_differentiable()
        && phi.is_strictly_convex()
        && (phi.right_derivative(0.0) == Ok(0.0))
}

/// Run the antecedent and consequent searches of theorem `id` on `input`
/// and report whether the observed outcomes agree with it.
pub fn verify_theorem(id: TheoremId, input: &TheoremInput) -> Result<TheoremReport> {
    use crate::subdiff::graph_from_convex_grid;
    let mut v = Verifier::new(input)?;
    match id {
        TheoremId::T33 => {
            let phi = v.phi()?;
            let dphi = phi.derivative_function()?;
            let g = v.subgraph()?;
            let a = v.graph("strong-metric-reg(phi'_+)", CheckKind::StrongMetricReg, &g, &dphi)?;
            let b = if a.0 { v.tilt("slwp(phi)", CheckKind::Slwp, phi)? } else { (false, None) };
            v.implies(("strong-metric-reg(phi'_+)", a.0), ("slwp(phi)", b.0));
        }
        TheoremId::T34 => {
            let phi = v.phi()?;
            if !(phi.is_differentiable() && phi.is_strictly_convex()) {
                v.unmet("phi strictly convex and differentiable");
            } else {
                let dphi = phi.derivative_function()?;
                let a = v.tilt("slwp(phi)", CheckKind::Slwp, phi)?;
                let mut found = false;
                if let (true, Some(cert)) = &a {
                    let r = cert.constants["r"];
                    let grid = v.grid()?;
                    for k in 0..3 {
                        let rk = r / f64::from(1 << k);
                        let env = crate::conjugate::convex_envelope(&grid.add_ball_indicator(&[v.base], rk)?)?;
                        let g = graph_from_convex_grid(&env)?;
                        let label = format!("strong-metric-reg(phi') of co(f + indicator of B[x̄, {rk}])");
                        if v.graph(&label, CheckKind::StrongMetricReg, &g, &dphi)?.0 {
                            found = true;
                            break;
                        }
                    }
                }
                v.implies(("slwp(phi)", a.0), ("strong-metric-reg(phi') of the localized hull", found));
            }
        }
        TheoremId::P36 => {
            let phi = v.phi()?;
            let a = v.tilt("slwp(phi)", CheckKind::Slwp, phi)?;
            let mut all = a.0;
            if let (true, Some(cert)) = &a {
                let r = cert.constants["r"];
                let grid = v.grid()?;
                for eps in [r / 4.0, r / 2.0, r] {
                    let cover = slope_coverage(&grid, &[v.base], eps)?;
                    let gamma = if cover > 0.0 { cover / 2.0 } else { grid.h() };
                    let c = check_interiority(&grid, &[v.base], eps, gamma)?;
                    v.details.push(format!("eps = {eps}: slope coverage radius {cover}"));
                    all &= cover > 0.0 && c.passed();
                    v.certificates.push((format!("interiority(eps = {eps})"), c));
                }
            }
            v.implies(("slwp(phi)", a.0), ("0 in int of the slope image for eps in {r/4, r/2, r}", all));
        }
        TheoremId::T45 => {
            let phi = v.phi()?;
            if !smooth_phi(phi) {
                v.unmet("phi differentiable, strictly convex, phi'(0) = 0");
            } else {
                let psi = phi.inverse_derivative_function()?;
                let a = v.tilt("slwp(phi)", CheckKind::Slwp, phi)?;
                let b = v.tilt("tslm((phi')^-1)", CheckKind::Tslm, &psi)?;
                v.equiv(("slwp(phi)", a.0), ("tslm((phi')^-1)", b.0));
            }
        }
        TheoremId::T52 => {
            let phi = v.phi()?;
            if !smooth_phi(phi) {
                v.unmet("phi differentiable, strictly convex, phi'(0) = 0");
            } else {
                let a = v.tilt("slwp(phi)", CheckKind::Slwp, phi)?;
                let b = v.tilt("swlwp(phi)", CheckKind::Swlwp, phi)?;
                v.equiv(("slwp(phi)", a.0), ("swlwp(phi)", b.0));
            }
        }
        TheoremId::C53 => {
            let phi = v.phi()?;
            if !smooth_phi(phi) {
                v.unmet("phi differentiable, strictly convex, phi'(0) = 0");
            } else {
                let psi = phi.inverse_derivative_function()?;
                let dphi = phi.derivative_function()?;
                let g = v.subgraph()?;
                let s1 = ("(i) slwp", v.tilt("(i) slwp", CheckKind::Slwp, phi)?.0);
                let s2 = ("(ii) swlwp", v.tilt("(ii) swlwp", CheckKind::Swlwp, phi)?.0);
                let s3 = ("(iii) tslm", v.tilt("(iii) tslm", CheckKind::Tslm, &psi)?.0);
                let s4 = ("(iv) weak tslm", v.tilt("(iv) weak tslm", CheckKind::WeakTslm, &psi)?.0);
                let s5 = ("(v) strong-metric-reg", v.graph("(v) strong-metric-reg", CheckKind::StrongMetricReg, &g, &dphi)?.0);
                let s6 = ("(vi) metric-reg", v.graph("(vi) metric-reg", CheckKind::MetricReg, &g, &dphi)?.0);
                v.equiv(s1, s2);
                v.equiv(s1, s3);
                v.equiv(s1, s4);
                v.implies(s5, s1);
                v.implies(s5, s6);
                if v.spec.is_convex() {
                    v.equiv(s1, s5);
                    v.equiv(s5, s6);
                }
            }
        }
        TheoremId::P61 => {
            let psi = v.psi()?;
            if !psi.is_convex() {
                v.unmet("psi convex");
            } else {
                let g = v.subgraph()?;
                let a = v.second_order("second-order-condition(psi)", &g, psi)?;
                let b = if a.0 {
                    v.graph("metric-reg(psi)", CheckKind::MetricReg, &g, psi)?
                } else {
                    (false, None)
                };
                v.implies(("second-order-condition(psi)", a.0), ("metric-reg(psi)", b.0));
            }
        }
        TheoremId::C62 => {
            let psi = v.psi()?;
            if !psi.is_convex() {
                v.unmet("psi convex");
            } else if !v.spec.is_convex() {
                v.unmet("f convex");
            } else {
                let g = v.subgraph()?;
                let a = v.second_order("second-order-condition(psi)", &g, psi)?;
                let b = if a.0 {
                    let phi = psi.running_integral()?;
                    v.tilt("slwp(integral of psi)", CheckKind::Slwp, &phi)?
                } else {
                    (false, None)
                };
                v.implies(("second-order-condition(psi)", a.0), ("slwp(integral of psi)", b.0));
            }
        }
    }
    Ok(v.finish(id))
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    const FAMILIES: [&str; 6] = ["quad", "quartic", "abs-quad", "flat-well", "one-sided", "quartic-quad"];

    fn family(i: usize, a: f64) -> FunctionSpec {
        let id = if i == 0 { format!("quad:{a}") } else { FAMILIES[i].to_string() };
        FunctionSpec::parse(&id).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn dual_grid_stays_in_ball(dim in 1usize..3, delta in 1e-6f64..10.0, points in 1usize..40) {
            let g = dual_grid(dim, delta, points);
            prop_assert!(g.contains(&[0.0, 0.0]));
            for u in &g {
                prop_assert!(u[0].hypot(u[1]) < delta);
                prop_assert!(g.contains(&[-u[0], -u[1]]));
            }
        }

        #[test]
        fn tilt_selections_are_monotone(
            fi in 0usize..6,
            a in 0.25f64..3.0,
            r in 0.2f64..1.5,
            delta in 0.05f64..2.0,
        ) {
            // minimality at u1 and at u2, added up
            let f = GridFunction::sample_1d(&family(fi, a), -2.0, 2.0, 201).unwrap();
            let t = tilt_minimizer_map(&f, &[0.0], r, delta, 21).unwrap();
            for e1 in &t.entries {
                for e2 in &t.entries {
                    let p = (e1.u[0] - e2.u[0]) * (e1.selected[0] - e2.selected[0]);
                    prop_assert!(p >= -1e-11, "{e1:?} {e2:?}");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn slwp_pass_forces_singletons_and_interiority(
            fi in 0usize..6,
            a in 0.25f64..3.0,
            lt in -3i32..4,
            lk in -3i32..4,
            rf in 0.25f64..1.0,
        ) {
            let c = Constants::new(rf, rf, 2f64.powi(lt), 2f64.powi(lk), rf / 2.0).unwrap();
            let inst = WellPosednessInstance::from_spec(
                &family(fi, a), 1, -2.0, 2.0, 201, &[0.0], AdmissibleFunction::power(2.0).unwrap(), c,
            ).unwrap();
            let cert = check_slwp(&inst).unwrap();
            if cert.passed() {
                let t = tilt_minimizer_map(&inst.f, &[0.0], rf, rf, DUAL_POINTS).unwrap();
                prop_assert!(t.max_argmin_diameter() <= t.cell + 1e-12);
                for eps in [rf / 4.0, rf / 2.0, rf] {
                    prop_assert!(slope_coverage(&inst.f, &[0.0], eps).unwrap() > 0.0, "eps {}", eps);
                }
            }
        }
    }
}

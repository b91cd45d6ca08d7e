//! Discrete Legendre-Fenchel conjugates over grid samples, biconjugate
//! convex envelopes, power-law gradient moduli and the conjugate lower
//! bound for functions with a Hölder-type gradient.
//!
//! The conjugate is a max over sample points only, `max_i <u, x_i> - f_i`,
//! never an interpolated sup. Against the continuum conjugate this costs
//! `O(L h)`.

use serde_json::json;

use crate::certificate::{Certificate, Tracker};
use crate::error::{Error, Result};
use crate::gridfn::{node, GridFunction};

const EPS: f64 = f64::EPSILON;

/// Conjugate on the square dual box `[lo, hi]^dim` with `points` nodes per
/// axis.
pub fn conjugate_transform(f: &GridFunction, lo: f64, hi: f64, points: usize) -> Result<GridFunction> {
    conjugate_transform_box(f, [lo, lo], [hi, hi], [points, points])
}

/// Conjugate on an arbitrary dual box. 1-D uses the hull sweep, 2-D the
/// full scan.
pub fn conjugate_transform_box(
    f: &GridFunction,
    lo: [f64; 2],
    hi: [f64; 2],
    n: [usize; 2],
) -> Result<GridFunction> {
    let name = format!("conj[{}]", f.name());
    if f.dim() == 1 {
        let us: Vec<f64> = dual_axis(lo[0], hi[0], n[0])?;
        let vals = conjugate_1d(&f.axis(0), f.values(), &us);
        GridFunction::new(1, lo, hi, n, vals, name)
    } else {
        let u0 = dual_axis(lo[0], hi[0], n[0])?;
        let u1 = dual_axis(lo[1], hi[1], n[1])?;
        let vals = conjugate_2d_scan(f, &u0, &u1);
        GridFunction::new(2, lo, hi, n, vals, name)
    }
}

fn dual_axis(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 3 || n.is_multiple_of(2) || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "dual axis [{lo}, {hi}] with {n} points is not a valid grid"
        )));
    }
    Ok((0..n).map(|i| node(lo, hi, n, i)).collect())
}

/// Lower convex hull of the finite samples, as indices into `xs`.
fn lower_hull(xs: &[f64], fs: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::new();
    for i in (0..xs.len()).filter(|&i| fs[i].is_finite()) {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (xs[b] - xs[a]) * (fs[i] - fs[a]) - (fs[b] - fs[a]) * (xs[i] - xs[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// `g(u) = max_i u x_i - f_i` for sorted `us`, in time linear in
/// `xs.len() + us.len()` for generic data.
///
/// The pointer walks the hull by edge slope. Around it, every hull vertex
/// within rounding distance of the pointer value is kept, and every finite
/// sample lying within rounding distance of the adjacent hull edges is
/// re-evaluated with the same expression as a plain scan, so the result is
/// the same floating-point maximum.
pub fn conjugate_1d(xs: &[f64], fs: &[f64], us: &[f64]) -> Vec<f64> {
    let hull = lower_hull(xs, fs);
    if hull.is_empty() {
        return vec![f64::NEG_INFINITY; us.len()];
    }
    let xmax = hull
        .iter()
        .map(|&i| xs[i].abs())
        .chain(xs.iter().map(|x| x.abs()))
        .fold(0.0, f64::max);
    let fmax = fs
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let umax = us.iter().fold(0.0f64, |m, u| m.max(u.abs()));

    // Samples close enough to the hull to win a max after rounding.
    let near_tol = 16.0 * EPS * (umax * xmax + fmax) + f64::MIN_POSITIVE;
    let mut near: Vec<usize> = Vec::new();
    // near_start[j]: first entry of `near` with index >= hull[j].
    let mut near_start = Vec::with_capacity(hull.len() + 1);
    for j in 0..hull.len() {
        near_start.push(near.len());
        let a = hull[j];
        near.push(a);
        if j + 1 == hull.len() {
            break;
        }
        let b = hull[j + 1];
        let slope = (fs[b] - fs[a]) / (xs[b] - xs[a]);
        for i in a + 1..b {
            if !fs[i].is_finite() {
                continue;
            }
            let line = fs[a] + slope * (xs[i] - xs[a]);
            if fs[i] - line <= near_tol + 4.0 * EPS * (fs[i].abs() + line.abs()) {
                near.push(i);
            }
        }
    }
    near_start.push(near.len());

    let slopes: Vec<f64> = hull
        .windows(2)
        .map(|w| (fs[w[1]] - fs[w[0]]) / (xs[w[1]] - xs[w[0]]))
        .collect();
    let val = |u: f64, i: usize| u * xs[i] - fs[i];

    let mut out = Vec::with_capacity(us.len());
    let mut k = 0usize;
    for &u in us {
        while k < slopes.len() && slopes[k] < u {
            k += 1;
        }
        // Slopes from float division can be slightly out of order.
        while k > 0 && slopes[k - 1] >= u {
            k -= 1;
        }
        let vk = val(u, hull[k]);
        let tol = 16.0 * EPS * (u.abs() * xmax + fmax) + f64::MIN_POSITIVE;
        let mut a = k;
        while a > 0 && val(u, hull[a - 1]) >= vk - tol {
            a -= 1;
        }
        let mut b = k;
        while b + 1 < hull.len() && val(u, hull[b + 1]) >= vk - tol {
            b += 1;
        }
        let from = near_start[a.saturating_sub(1)];
        let to = near_start[(b + 2).min(hull.len())];
        let mut best = f64::NEG_INFINITY;
        for &i in &near[from..to] {
            let v = val(u, i);
            if v > best {
                best = v;
            }
        }
        out.push(best);
    }
    out
}

fn conjugate_2d_scan(f: &GridFunction, u0: &[f64], u1: &[f64]) -> Vec<f64> {
    let pts: Vec<(f64, f64, f64)> = (0..f.len())
        .filter(|&i| f.value(i).is_finite())
        .map(|i| {
            let p = f.coord(i);
            (p[0], p[1], f.value(i))
        })
        .collect();
    let mut out = Vec::with_capacity(u0.len() * u1.len());
    for &b in u1 {
        for &a in u0 {
            let mut best = f64::NEG_INFINITY;
            for &(x, y, v) in &pts {
                let s = a * x + b * y - v;
                if s > best {
                    best = s;
                }
            }
            out.push(best);
        }
    }
    out
}

/// 2-D conjugate through row-then-column 1-D transforms. Agrees with the
/// full scan up to rounding, not bit for bit.
pub fn conjugate_2d_factorized(
    f: &GridFunction,
    lo: [f64; 2],
    hi: [f64; 2],
    n: [usize; 2],
) -> Result<GridFunction> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: f.dim(),
        });
    }
    let u0 = dual_axis(lo[0], hi[0], n[0])?;
    let u1 = dual_axis(lo[1], hi[1], n[1])?;
    let xs = f.axis(0);
    let ys = f.axis(1);
    let [nx, ny] = f.points_per_axis();
    // rows[j][a] = max_x u0[a] x - f(x, y_j)
    let rows: Vec<Vec<f64>> = (0..ny)
        .map(|j| conjugate_1d(&xs, &f.values()[j * nx..(j + 1) * nx], &u0))
        .collect();
    let mut out = vec![0.0; u0.len() * u1.len()];
    for a in 0..u0.len() {
        let col: Vec<f64> = rows
            .iter()
            .map(|r| if r[a] == f64::NEG_INFINITY { f64::INFINITY } else { -r[a] })
            .collect();
        let g = conjugate_1d(&ys, &col, &u1);
        for (b, v) in g.into_iter().enumerate() {
            out[a + b * u0.len()] = v;
        }
    }
    GridFunction::new(2, lo, hi, n, out, format!("conj[{}]", f.name()))
}

/// Range of one-sided difference quotients between consecutive finite
/// samples along `axis`.
fn slope_range(f: &GridFunction, axis: usize) -> (f64, f64) {
    let [nx, ny] = f.points_per_axis();
    let coords = f.axis(axis);
    let (outer, inner) = if axis == 0 { (ny, nx) } else { (nx, ny) };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for o in 0..outer {
        let idx = |i: usize| if axis == 0 { i + o * nx } else { o + i * nx };
        let mut prev: Option<usize> = None;
        for i in 0..inner {
            if !f.value(idx(i)).is_finite() {
                continue;
            }
            if let Some(p) = prev {
                let q = (f.value(idx(i)) - f.value(idx(p))) / (coords[i] - coords[p]);
                lo = lo.min(q);
                hi = hi.max(q);
            }
            prev = Some(i);
        }
    }
    (lo, hi)
}

/// Biconjugate of `f`: two chained conjugates, with the dual box set to
/// the attained slope range padded by 10%. Points outside the convex hull
/// of `dom f` are `+inf`.
pub fn convex_envelope(f: &GridFunction) -> Result<GridFunction> {
    let dim = f.dim();
    let mut dlo = [0.0; 2];
    let mut dhi = [0.0; 2];
    let mut dn = [1usize; 2];
    for k in 0..dim {
        let (mut a, mut b) = slope_range(f, k);
        if a > b {
            // No two finite samples on any line along this axis.
            a = -1.0;
            b = 1.0;
        }
        if !(a.is_finite() && b.is_finite()) || a.abs().max(b.abs()) > 1e12 {
            return Err(Error::UnboundedBelow(format!(
                "slope range [{a}, {b}] along axis {k} explodes"
            )));
        }
        let pad = 0.1 * (b - a).max(1e-3 * (1.0 + a.abs().max(b.abs())));
        dlo[k] = a - pad;
        dhi[k] = b + pad;
        let m = f.points_per_axis()[k] - 1;
        dn[k] = if dim == 1 { 4 * m + 1 } else { 2 * m + 1 };
    }
    let conj = conjugate_transform_box(f, dlo, dhi, dn)?;
    let [nx, ny] = f.points_per_axis();
    let (plo, phi) = (f.lo(), f.hi());
    let back = conjugate_transform_box(&conj, plo, phi, [nx, ny])?;
    let inside = hull_mask(f);
    let vals: Vec<f64> = back
        .values()
        .iter()
        .zip(&inside)
        .map(|(v, keep)| if *keep { *v } else { f64::INFINITY })
        .collect();
    GridFunction::new(dim, plo, phi, [nx, ny], vals, format!("env[{}]", f.name()))
}

/// Which nodes lie in the convex hull of the finite samples.
fn hull_mask(f: &GridFunction) -> Vec<bool> {
    let finite: Vec<usize> = (0..f.len()).filter(|&i| f.value(i).is_finite()).collect();
    if finite.len() == f.len() {
        return vec![true; f.len()];
    }
    if f.dim() == 1 {
        let a = f.coord(finite[0])[0];
        let b = f.coord(*finite.last().unwrap())[0];
        return (0..f.len())
            .map(|i| {
                let x = f.coord(i)[0];
                x >= a && x <= b
            })
            .collect();
    }
    // Monotone chain on the finite nodes.
    let mut pts: Vec<[f64; 2]> = finite.iter().map(|&i| f.coord(i)).collect();
    pts.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    let scale = f.h() * f.h() * 1e-9;
    (0..f.len())
        .map(|i| {
            let p = f.coord(i);
            if hull.len() < 3 {
                return finite.iter().any(|&j| f.coord(j) == p)
                    || (hull.len() == 2 && {
                        let (a, b) = (hull[0], hull[1]);
                        cross(&a, &b, &p).abs() <= scale
                            && (p[0] - a[0]) * (p[0] - b[0]) <= scale
                            && (p[1] - a[1]) * (p[1] - b[1]) <= scale
                    });
            }
            (0..hull.len()).all(|k| cross(&hull[k], &hull[(k + 1) % hull.len()], &p) >= -scale)
        })
        .collect()
}

/// Three-point midpoint convexity along every grid line, up to `tol`.
/// Infinite values are skipped together with any triple touching them.
pub fn is_discretely_convex(f: &GridFunction, tol: f64) -> bool {
    let [nx, ny] = f.points_per_axis();
    let check = |a: f64, b: f64, c: f64| {
        !(a.is_finite() && b.is_finite() && c.is_finite()) || a + c - 2.0 * b >= -tol
    };
    for j in 0..ny {
        for i in 1..nx - 1 {
            let k = i + j * nx;
            if !check(f.value(k - 1), f.value(k), f.value(k + 1)) {
                return false;
            }
        }
    }
    if f.dim() == 2 {
        for j in 1..ny - 1 {
            for i in 0..nx {
                let k = i + j * nx;
                if !check(f.value(k - nx), f.value(k), f.value(k + nx)) {
                    return false;
                }
            }
        }
    }
    true
}

/// `omega(t) = coefficient * t^exponent` fitted to gradient differences.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessModulus {
    pub family: String,
    pub coefficient: f64,
    pub exponent: f64,
    /// `max(|grad g(x1) - grad g(x2)| - omega(|x1 - x2|), 0)` over the
    /// sampled pairs.
    pub residual: f64,
    /// Ratio between the final coefficient and the regression intercept.
    pub inflation: f64,
}

impl SmoothnessModulus {
    pub fn power(coefficient: f64, exponent: f64) -> Self {
        Self {
            family: "power".into(),
            coefficient,
            exponent,
            residual: 0.0,
            inflation: 1.0,
        }
    }

    pub fn omega(&self, t: f64) -> f64 {
        self.coefficient * t.powf(self.exponent)
    }

    pub fn omega_inverse(&self, s: f64) -> f64 {
        (s / self.coefficient).powf(1.0 / self.exponent)
    }

    /// `int_0^r omega^{-1}(s) ds` in closed form.
    pub fn inverse_integral(&self, r: f64) -> Result<f64> {
        if !(self.coefficient > 0.0 && self.exponent > 0.0) || self.family != "power" {
            return Err(Error::InvalidParameter(format!(
                "modulus {}*t^{} is not invertible",
                self.coefficient, self.exponent
            )));
        }
        let p = self.exponent;
        Ok(p / (p + 1.0) * (r / self.coefficient).powf(1.0 / p) * r)
    }
}

/// Central-difference derivative of a 1-D grid function at node `i`.
pub fn central_gradient(g: &GridFunction, i: usize) -> Result<f64> {
    let n = g.points_per_axis()[0];
    if g.dim() != 1 || i == 0 || i + 1 >= n {
        return Err(Error::GradientUndefined(format!("node {i} has no two neighbours")));
    }
    let (a, b) = (g.value(i - 1), g.value(i + 1));
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::GradientUndefined(format!("infinite neighbour at node {i}")));
    }
    let xs = (g.coord(i - 1)[0], g.coord(i + 1)[0]);
    Ok((b - a) / (xs.1 - xs.0))
}

fn gradient_field(g: &GridFunction, region: (f64, f64)) -> Result<Vec<(usize, [f64; 2])>> {
    let [nx, ny] = g.points_per_axis();
    let h = g.spacing();
    let mut out = Vec::new();
    for idx in 0..g.len() {
        let p = g.coord(idx);
        if (0..g.dim()).any(|k| p[k] < region.0 - 1e-12 || p[k] > region.1 + 1e-12) {
            continue;
        }
        let (i, j) = (idx % nx, idx / nx);
        let mut grad = [0.0; 2];
        for k in 0..g.dim() {
            let (lo_ok, hi_ok, step) = if k == 0 {
                (i > 0, i + 1 < nx, 1)
            } else {
                (j > 0, j + 1 < ny, nx)
            };
            if !(lo_ok && hi_ok) {
                return Err(Error::GradientUndefined(format!(
                    "region reaches the box edge at {p:?}"
                )));
            }
            let (a, b) = (g.value(idx - step), g.value(idx + step));
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::GradientUndefined(format!("infinite neighbour at {p:?}")));
            }
            grad[k] = (b - a) / (2.0 * h[k]);
        }
        out.push((idx, grad));
    }
    if out.is_empty() {
        return Err(Error::EmptyRegion("no grid node in the fitting region".into()));
    }
    Ok(out)
}

/// Fit `omega(t) = C t^p` to `|grad g(x1) - grad g(x2)|` over node pairs
/// at separations `h 2^k`, `k = 1..5`, inside `region` (per axis).
pub fn fit_smoothness_modulus(g: &GridFunction, region: (f64, f64)) -> Result<SmoothnessModulus> {
    let field = gradient_field(g, region)?;
    let nx = g.points_per_axis()[0];
    let h = g.spacing();
    let lookup: std::collections::HashMap<usize, [f64; 2]> = field.iter().cloned().collect();
    let mut scales = Vec::new();
    // Separation h itself is skipped: a kink midway between two nodes is
    // only seen at even multiples of h.
    for k in 1..6u32 {
        let s = 1usize << k;
        let mut worst: f64 = 0.0;
        let mut seen = false;
        for &(idx, ga) in &field {
            for axis in 0..g.dim() {
                let (col, row) = (idx % nx, idx / nx);
                let other = if axis == 0 {
                    if col + s >= nx {
                        continue;
                    }
                    idx + s
                } else {
                    idx + s * nx
                };
                let _ = row;
                if let Some(gb) = lookup.get(&other) {
                    worst = worst.max((ga[0] - gb[0]).hypot(ga[1] - gb[1]));
                    seen = true;
                }
            }
        }
        if seen {
            scales.push((h[0].max(h[1]) * s as f64, worst));
        }
    }
    let usable: Vec<(f64, f64)> = scales.iter().copied().filter(|(_, m)| *m > 0.0).collect();
    if usable.len() < 2 {
        return Err(Error::GradientUndefined(
            "too few gradient differences to fit a modulus".into(),
        ));
    }
    let n = usable.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(d, m) in &usable {
        let (x, y) = (d.ln(), m.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let p = slope.clamp(1e-3, 1.0);
    let intercept = ((sy - p * sx) / n).exp();
    let c = scales
        .iter()
        .map(|(d, m)| m / d.powf(p))
        .fold(intercept, f64::max);
    let residual = scales
        .iter()
        .map(|(d, m)| (m - c * d.powf(p)).max(0.0))
        .fold(0.0, f64::max);
    Ok(SmoothnessModulus {
        family: "power".into(),
        coefficient: c,
        exponent: p,
        residual,
        inflation: c / intercept,
    })
}

/// Check `g*(x*) >= x* u - g(u) + int_0^{|x* - g'(u)|} omega^{-1}` on each
/// `(u, x*)` sample. `u` must be an interior grid node; `g*` is the
/// discrete conjugate over all nodes.
pub fn check_conjugate_lower_bound(
    g: &GridFunction,
    modulus: &SmoothnessModulus,
    samples: &[(f64, f64)],
) -> Result<Certificate> {
    if g.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: g.dim(),
        });
    }
    modulus.inverse_integral(1.0)?;
    let xs = g.axis(0);
    let h = g.h();
    let lip = g.local_lipschitz(&[0.5 * (g.lo()[0] + g.hi()[0]), 0.0], g.hi()[0] - g.lo()[0]);
    let mut cert = Certificate::new("conjugate-lower-bound")
        .constant("omega_coefficient", modulus.coefficient)
        .constant("omega_exponent", modulus.exponent);
    let mut t = Tracker::new();
    for &(u, xstar) in samples {
        let i = g
            .index_of(&[u, 0.0])
            .ok_or_else(|| Error::InvalidParameter(format!("u = {u} is not a grid node")))?;
        let gu = g.value(i);
        let grad = central_gradient(g, i)?;
        let mut conj = f64::NEG_INFINITY;
        for (x, v) in xs.iter().zip(g.values()) {
            if v.is_finite() {
                conj = conj.max(xstar * x - v);
            }
        }
        let bound = xstar * u - gu + modulus.inverse_integral((xstar - grad).abs())?;
        let slack = 1e-8 + (xstar.abs() + lip) * h / 2.0;
        t.observe(bound, conj, slack, || vec![("u", u), ("x_star", xstar), ("grad_u", grad)]);
    }
    t.finish(&mut cert);
    cert.set_sweep("grid_h", json!(h));
    cert.set_sweep("slack_rule", "1e-8 + (|x*| + L) h / 2");
    cert.set_sweep("lipschitz", json!(lip));
    if modulus.residual > 0.0 || modulus.inflation > 1.0 + 1e-9 {
        cert.note(format!(
            "modulus coefficient inflated by {:.6} over the regression fit; bound weakened",
            modulus.inflation
        ));
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::FunctionSpec;

    fn sample(id: &str, lo: f64, hi: f64, n: usize) -> GridFunction {
        GridFunction::sample_1d(&FunctionSpec::parse(id).unwrap(), lo, hi, n).unwrap()
    }

    fn scan(f: &GridFunction, us: &[f64]) -> Vec<f64> {
        let xs = f.axis(0);
        us.iter()
            .map(|&u| {
                let mut m = f64::NEG_INFINITY;
                for (x, v) in xs.iter().zip(f.values()) {
                    if v.is_finite() {
                        let s = u * x - v;
                        if s > m {
                            m = s;
                        }
                    }
                }
                m
            })
            .collect()
    }

    #[test]
    fn half_square_is_self_conjugate() {
        let f = sample("quad:0.5", -2.0, 2.0, 401);
        let g = conjugate_transform(&f, -2.0, 2.0, 401).unwrap();
        for i in 0..401 {
            let u = g.coord(i)[0];
            assert!((g.value(i) - u * u / 2.0).abs() <= 1e-12, "u={u}");
        }
    }

    #[test]
    fn interval_indicator_gives_abs() {
        let f = sample("indicator-ball:0:1", -2.0, 2.0, 401);
        let g = conjugate_transform(&f, -3.0, 3.0, 301).unwrap();
        for i in 0..301 {
            let u = g.coord(i)[0];
            assert!((g.value(i) - u.abs()).abs() <= 1e-12);
        }
    }

    #[test]
    fn truncated_abs() {
        let f = sample("abs", -2.0, 2.0, 401);
        let g = conjugate_transform(&f, -2.0, 2.0, 41).unwrap();
        for i in 0..41 {
            let u = g.coord(i)[0];
            let want = if u.abs() <= 1.0 { 0.0 } else { 2.0 * (u.abs() - 1.0) };
            assert!((g.value(i) - want).abs() <= 1e-12, "u={u}");
        }
    }

    #[test]
    fn linear_function_matches_scan() {
        let f = sample("linear:0.3", -1.0, 1.0, 1001);
        let us: Vec<f64> = (0..201).map(|i| node(-1.0, 1.0, 201, i)).collect();
        assert_eq!(conjugate_1d(&f.axis(0), f.values(), &us), scan(&f, &us));
    }

    #[test]
    fn two_d_paths_agree() {
        let f = GridFunction::sample_function(&FunctionSpec::parse("abs-quad").unwrap(), 2, -1.0, 1.0, 21)
            .unwrap();
        let a = conjugate_transform(&f, -3.0, 3.0, 31).unwrap();
        let b = conjugate_2d_factorized(&f, [-3.0, -3.0], [3.0, 3.0], [31, 31]).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn envelope_examples() {
        let q = sample("quad", -2.0, 2.0, 201);
        let e = convex_envelope(&q).unwrap();
        for (a, b) in e.values().iter().zip(q.values()) {
            assert!((a - b).abs() <= 1e-9);
        }
        let cap = sample("concave-cap", -2.0, 2.0, 201);
        let e = convex_envelope(&cap).unwrap();
        for i in 0..201 {
            let x = e.coord(i)[0];
            if x.abs() <= 1.0 {
                assert!(e.value(i).abs() <= 1e-9, "x={x} {}", e.value(i));
            } else {
                assert!(e.value(i).is_infinite());
            }
        }
    }

    #[test]
    fn envelope_rejects_unbounded_slopes() {
        let f = GridFunction::new(1, [-1.0, 0.0], [1.0, 0.0], [3, 1], vec![0.0, -1e15, 0.0], "spike")
            .unwrap();
        assert!(matches!(convex_envelope(&f), Err(Error::UnboundedBelow(_))));
    }

    #[test]
    fn modulus_examples() {
        let g = sample("quad:0.5", -2.0, 2.0, 401);
        let m = fit_smoothness_modulus(&g, (-1.5, 1.5)).unwrap();
        assert!((m.exponent - 1.0).abs() < 1e-9 && (m.coefficient - 1.0).abs() < 1e-9);
        let g = sample("quartic", -1.1, 1.1, 2201);
        let m = fit_smoothness_modulus(&g, (-1.0, 1.0)).unwrap();
        assert!(m.exponent > 0.95, "{m:?}");
        assert!(m.coefficient > 10.5 && m.coefficient < 13.0, "{m:?}");
        let g = sample("power-q:4/3:3/4", -1.0, 1.0, 401);
        let m = fit_smoothness_modulus(&g, (-0.5, 0.5)).unwrap();
        assert!((m.exponent - 1.0 / 3.0).abs() < 0.03, "{m:?}");
        let bad = sample("indicator-ball:0:1", -2.0, 2.0, 41);
        assert!(fit_smoothness_modulus(&bad, (-1.5, 1.5)).is_err());
    }

    #[test]
    fn lower_bound_quadratic_example() {
        // u = 0.3, x* = 0.7: 0.21 - 0.045 + 0.08 = 0.245 = g*(0.7)
        let g = sample("quad:0.5", -2.0, 2.0, 401);
        let m = SmoothnessModulus::power(1.0, 1.0);
        let c = check_conjugate_lower_bound(&g, &m, &[(0.3, 0.7), (0.3, 0.6)]).unwrap();
        assert!(c.passed());
        assert!(c.margin.abs() <= 1e-12, "{}", c.margin);
        let w = c.witness.unwrap();
        assert!((w["rhs"] - 0.245).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_rejects_off_grid_u() {
        let g = sample("quad:0.5", -2.0, 2.0, 41);
        let m = SmoothnessModulus::power(1.0, 1.0);
        assert!(check_conjugate_lower_bound(&g, &m, &[(0.3333, 0.1)]).is_err());
        assert!(check_conjugate_lower_bound(&g, &SmoothnessModulus::power(0.0, 1.0), &[]).is_err());
    }
}

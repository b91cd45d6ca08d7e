//! Metric and strong metric regularity of planar graphs with respect to an
//! admissible function, monotonicity, and the graph-selection property.

use serde_json::json;

use crate::admissible::AdmissibleFunction;
use crate::certificate::{Certificate, Tracker};
use crate::error::{Error, Result};
use crate::gridfn::node;
use crate::subdiff::{Interval, SetValuedGraph};

/// Uniform points per axis of a sampled ball.
pub const BALL_POINTS: usize = 101;
/// Extra points `c +- r 2^-k`, `k = 1..=GEOMETRIC_LEVELS`, near the center.
pub const GEOMETRIC_LEVELS: i32 = 60;
const SHRINK: f64 = 1.0 - 1e-9;
const MONOTONE_TOL: f64 = 1e-12;
/// Relative tolerance within which graph lookups treat coordinates as equal.
const SNAP: f64 = 1e-12;

/// Sample points of the closed interval `[c - r', c + r']`, `r' = r(1 - 1e-9)`.
pub fn ball_axis(c: f64, r: f64) -> Vec<f64> {
    let rr = r * SHRINK;
    let mut out: Vec<f64> = (0..BALL_POINTS)
        .map(|i| node(c - rr, c + rr, BALL_POINTS, i))
        .collect();
    for k in 1..=GEOMETRIC_LEVELS {
        let s = rr * 2f64.powi(-k);
        out.push(c - s);
        out.push(c + s);
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

fn psi_at(psi: &AdmissibleFunction, t: f64) -> f64 {
    let v = psi.eval(t);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn positive(pairs: &[(&str, f64)]) -> Result<()> {
    for (k, v) in pairs {
        if !(*v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{k} must be positive, got {v}")));
        }
    }
    Ok(())
}

fn rel(a: f64, b: f64) -> f64 {
    let m = [a, b].iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
    1e-12 * (1.0 + m)
}

fn metric_samples(
    g: &SetValuedGraph,
    center: [f64; 2],
    psi: &AdmissibleFunction,
    tau: f64,
    kappa: f64,
    r: f64,
    cert: &mut Certificate,
) -> Vec<f64> {
    let xs = ball_axis(center[0], r);
    let ys = ball_axis(center[1], r);
    let (dx, dv) = g.resolution();
    let pre: Vec<Vec<Interval>> = ys.iter().map(|&y| g.preimage(y)).collect();
    let img: Vec<Vec<Interval>> = xs.iter().map(|&x| g.image(x)).collect();
    let mut t = Tracker::new();
    for (j, &y) in ys.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            let dpre = crate::subdiff::dist_to_intervals(x, &pre[j]);
            let dimg = crate::subdiff::dist_to_intervals(y, &img[i]);
            let lhs = psi_at(psi, tau * dpre);
            let rhs = kappa * dimg;
            let mut slack = rel(lhs, rhs);
            if dpre.is_finite() && dx > 0.0 {
                slack += lhs - psi_at(psi, tau * (dpre - dx).max(0.0));
            }
            if dimg.is_finite() {
                slack += kappa * dv;
            }
            t.observe(lhs, rhs, slack, || {
                vec![("x", x), ("y", y), ("d_preimage", dpre), ("d_image", dimg)]
            });
        }
    }
    t.finish(cert);
    cert.set_sweep("x_points", json!(xs.len()));
    cert.set_sweep("y_points", json!(ys.len()));
    cert.set_sweep("radius_shrink", json!(SHRINK));
    ys
}

/// `psi(tau d(x, F^{-1}(y))) <= kappa d(y, F(x))` on a sample grid of
/// `B(x̄, r) x B(ȳ, r)`.
pub fn check_metric_regularity(
    g: &SetValuedGraph,
    center: [f64; 2],
    psi: &AdmissibleFunction,
    tau: f64,
    kappa: f64,
    r: f64,
) -> Result<Certificate> {
    g.require_on_graph(&center)?;
    positive(&[("tau", tau), ("kappa", kappa), ("r", r)])?;
    let mut cert = Certificate::new("metric-regularity")
        .constant("tau", tau)
        .constant("kappa", kappa)
        .constant("r", r);
    cert.set_sweep("psi", json!(psi.name()));
    metric_samples(g, center, psi, tau, kappa, r, &mut cert);
    Ok(cert)
}

/// Metric regularity plus the singleton clause: for every sampled `y` near
/// `ȳ`, `F^{-1}(y) ∩ B(x̄, delta)` is nonempty with diameter at most the
/// graph's cell diagonal.
pub fn check_strong_metric_regularity(
    g: &SetValuedGraph,
    center: [f64; 2],
    psi: &AdmissibleFunction,
    tau: f64,
    kappa: f64,
    r: f64,
    delta: f64,
) -> Result<Certificate> {
    g.require_on_graph(&center)?;
    positive(&[("tau", tau), ("kappa", kappa), ("r", r), ("delta", delta)])?;
    let mut cert = Certificate::new("strong-metric-regularity")
        .constant("tau", tau)
        .constant("kappa", kappa)
        .constant("r", r)
        .constant("delta", delta);
    cert.set_sweep("psi", json!(psi.name()));
    let ys = metric_samples(g, center, psi, tau, kappa, r, &mut cert);
    let slack = g.cell_diagonal();
    let (lo, hi) = (center[0] - delta, center[0] + delta);
    let mut t = Tracker::new();
    let mut empty = 0usize;
    for &y in &ys {
        let local: Vec<Interval> = g
            .preimage(y)
            .into_iter()
            .filter_map(|(a, b)| {
                let (a, b) = (a.max(lo), b.min(hi));
                (a <= b).then_some((a, b))
            })
            .collect();
        let diam = match (local.first(), local.last()) {
            (Some(f), Some(l)) => l.1 - f.0,
            _ => {
                empty += 1;
                f64::INFINITY
            }
        };
        t.observe(diam, 0.0, slack, || vec![("y", y), ("diameter", diam)]);
    }
    t.finish(&mut cert);
    cert.set_sweep("singleton_slack", json!(slack));
    cert.set_sweep("empty_preimages", json!(empty));
    Ok(cert)
}

/// `(v1 - v2)(x1 - x2) >= -1e-12` over all pairs of graph samples.
pub fn check_monotone(g: &SetValuedGraph) -> Certificate {
    let s = g.samples();
    let mut cert = Certificate::new("monotone");
    let mut t = Tracker::new();
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            let (p, q) = (s[i], s[j]);
            let prod = (p[1] - q[1]) * (p[0] - q[0]);
            t.observe(0.0, prod, MONOTONE_TOL, || {
                vec![("x1", p[0]), ("v1", p[1]), ("x2", q[0]), ("v2", q[1])]
            });
        }
    }
    t.finish(&mut cert);
    cert.set_sweep("graph_samples", json!(s.len()));
    cert.set_sweep("tolerance", json!(MONOTONE_TOL));
    cert
}

/// Points of `[a, b]` where `d(., set)` can peak: the ends, the middle and
/// the midpoints of gaps of `set`.
fn peak_candidates(a: f64, b: f64, set: &[Interval]) -> Vec<f64> {
    let mut out = vec![a, b, 0.5 * (a + b)];
    for w in set.windows(2) {
        let m = 0.5 * (w[0].1 + w[1].0);
        if m > a && m < b {
            out.push(m);
        }
    }
    out
}

/// For sampled `z1, z2` in `B(z0, delta)` and every `v` in
/// `F(z1) ∩ B(z0*, gamma)`: `d(v, F(z2)) <= omega(|z2 - z1|)`.
pub fn check_selection_property_4_4(
    g: &SetValuedGraph,
    center: [f64; 2],
    omega: &AdmissibleFunction,
    gamma: f64,
    delta: f64,
) -> Result<Certificate> {
    g.require_on_graph(&center)?;
    positive(&[("gamma", gamma), ("delta", delta)])?;
    let mut cert = Certificate::new("selection-property")
        .constant("gamma", gamma)
        .constant("delta", delta);
    cert.set_sweep("omega", json!(omega.name()));
    let zs = ball_axis(center[0], delta);
    let gg = gamma * SHRINK;
    let (vlo, vhi) = (center[1] - gg, center[1] + gg);
    let images: Vec<Vec<Interval>> = zs.iter().map(|&z| g.image(z)).collect();
    let (dx, dv) = g.resolution();
    let mut t = Tracker::new();
    for (i, &z1) in zs.iter().enumerate() {
        let local: Vec<Interval> = images[i]
            .iter()
            .filter_map(|&(a, b)| {
                let (a, b) = (a.max(vlo), b.min(vhi));
                (a <= b).then_some((a, b))
            })
            .collect();
        if local.is_empty() {
            continue;
        }
        for (j, &z2) in zs.iter().enumerate() {
            let step = (z2 - z1).abs();
            let rhs = psi_at(omega, step);
            // graph lookups snap coordinates within SNAP (1 + |x|)
            let e = SNAP * (1.0 + z1.abs().max(z2.abs()));
            let extra = dv + e + psi_at(omega, step + dx + e) - rhs;
            for &(a, b) in &local {
                for v in peak_candidates(a, b, &images[j]) {
                    let d = crate::subdiff::dist_to_intervals(v, &images[j]);
                    let ev = SNAP * (1.0 + v.abs());
                    t.observe(d, rhs, rel(d, rhs) + extra + ev, || {
                        vec![("z1", z1), ("z2", z2), ("v", v), ("distance", d)]
                    });
                }
            }
        }
    }
    t.finish(&mut cert);
    cert.set_sweep("z_points", json!(zs.len()));
    cert.set_sweep("radius_shrink", json!(SHRINK));
    Ok(cert)
}

/// Largest `delta' <= delta` with `omega(t) < gamma` on `[0, delta')`,
/// found by bisection.
pub fn single_valuedness_radius(omega: &AdmissibleFunction, gamma: f64, delta: f64) -> f64 {
    if !(gamma > 0.0 && delta > 0.0) {
        return 0.0;
    }
    if psi_at(omega, delta) < gamma {
        return delta;
    }
    let (mut lo, mut hi) = (0.0, delta);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi_at(omega, mid) < gamma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::FunctionSpec;
    use crate::subdiff::subdifferential_graph;

    fn lin() -> AdmissibleFunction {
        AdmissibleFunction::power(1.0).unwrap()
    }

    fn two_branch() -> SetValuedGraph {
        SetValuedGraph::from_segments(&[
            ([-1.0, 1.0], [0.0, 0.0]),
            ([0.0, 0.0], [1.0, 1.0]),
            ([0.0, 2.0], [0.0, 2.0]),
        ])
        .unwrap()
    }

    fn parabola() -> SetValuedGraph {
        let pts: Vec<[f64; 2]> = (0..=400)
            .map(|i| {
                let x = node(-2.0, 2.0, 401, i);
                [x, x * x]
            })
            .collect();
        SetValuedGraph::polyline(&pts).unwrap()
    }

    #[test]
    fn metric_regularity_of_a_line() {
        let g = SetValuedGraph::line(2.0, -2.0, 2.0).unwrap();
        let c = check_metric_regularity(&g, [0.0, 0.0], &lin(), 1.0, 1.0, 1.0).unwrap();
        assert!(c.passed(), "{}", c.to_json());
        assert!(c.margin.abs() < 1e-12);
        let c = check_metric_regularity(&g, [0.0, 0.0], &lin(), 3.0, 1.0, 1.0).unwrap();
        assert!(!c.passed());
        assert!(c.margin < 0.0);
        let w = c.witness.unwrap();
        assert!(w["y"] != 2.0 * w["x"]);
        assert!(check_metric_regularity(&g, [0.0, 1.0], &lin(), 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn empty_image_is_vacuous() {
        let g = SetValuedGraph::line(1.0, 0.0, 2.0).unwrap();
        let c = check_metric_regularity(&g, [0.0, 0.0], &lin(), 1.0, 1.0, 0.5).unwrap();
        assert!(c.sweep["vacuous_samples"].as_u64().unwrap() > 0);
    }

    #[test]
    fn strong_metric_regularity() {
        let g = SetValuedGraph::line(2.0, -2.0, 2.0).unwrap();
        for delta in [0.5, 1.0, 5.0] {
            let c = check_strong_metric_regularity(&g, [0.0, 0.0], &lin(), 1.0, 1.0, 1.0, delta)
                .unwrap();
            assert!(c.passed(), "{}", c.to_json());
        }
        // F^{-1}(y) = y/2 leaves B(0, 0.1) once |y| > 0.2.
        let c = check_strong_metric_regularity(&g, [0.0, 0.0], &lin(), 1.0, 1.0, 1.0, 0.1).unwrap();
        assert!(!c.passed());
        assert!(c.sweep["empty_preimages"].as_u64().unwrap() > 0);
        let c = check_strong_metric_regularity(&parabola(), [1.0, 1.0], &lin(), 0.1, 10.0, 0.5, 3.0)
            .unwrap();
        assert!(!c.passed());
        let v = c.violation.clone().unwrap();
        // Chords of the parabola at spacing 0.01 shift the preimage slightly.
        assert!((v["diameter"] - 2.0 * v["y"].sqrt()).abs() < 1e-4);
        assert_eq!(parabola().preimage(1.0), vec![(-1.0, -1.0), (1.0, 1.0)]);
        // y < 0 near the vertex has no preimage at all.
        let c = check_strong_metric_regularity(&parabola(), [0.0, 0.0], &lin(), 0.1, 10.0, 0.5, 3.0)
            .unwrap();
        assert!(c.sweep["empty_preimages"].as_u64().unwrap() > 0);
        assert!(!c.passed());
    }

    #[test]
    fn monotonicity() {
        let g = subdifferential_graph(&FunctionSpec::parse("quad").unwrap(), -2.0, 2.0).unwrap();
        assert!(check_monotone(&g).passed());
        let c = check_monotone(&two_branch());
        assert!(!c.passed());
        assert!(c.margin < -0.5);
        let single = SetValuedGraph::from_segments(&[([1.0, 1.0], [1.0, 1.0])]).unwrap();
        assert!(check_monotone(&single).passed());
        assert!(!check_monotone(&parabola()).passed());
    }

    #[test]
    fn selection_property() {
        let c = check_selection_property_4_4(&two_branch(), [0.0, 0.0], &lin(), 1.0, 1.0).unwrap();
        assert!(c.passed(), "{}", c.to_json());
        let g = SetValuedGraph::line(2.0, -2.0, 2.0).unwrap();
        let two = AdmissibleFunction::scaled_power(2.0, 1.0).unwrap();
        let c = check_selection_property_4_4(&g, [0.0, 0.0], &two, 1.0, 1.0).unwrap();
        assert!(c.passed());
        assert!(c.margin.abs() < 1e-12);
        let c = check_selection_property_4_4(&g, [0.0, 0.0], &lin(), 1.0, 1.0).unwrap();
        assert!(!c.passed());
        assert!(check_selection_property_4_4(&g, [0.0, 3.0], &lin(), 1.0, 1.0).is_err());
    }

    #[test]
    fn radius_examples() {
        let two = AdmissibleFunction::scaled_power(2.0, 1.0).unwrap();
        assert!((single_valuedness_radius(&two, 1.0, 1.0) - 0.5).abs() < 1e-12);
        let sq = AdmissibleFunction::power(2.0).unwrap();
        assert_eq!(single_valuedness_radius(&sq, 4.0, 1.0), 1.0);
        assert!((single_valuedness_radius(&sq, 1.0, 3.0) - 1.0).abs() < 1e-12);
        assert_eq!(single_valuedness_radius(&sq, 0.0, 1.0), 0.0);
    }

    #[test]
    fn monotone_selection_gives_singletons() {
        let omegas = [lin(), AdmissibleFunction::scaled_power(2.0, 1.0).unwrap(),
            AdmissibleFunction::power(0.5).unwrap()];
        let mut checked = 0;
        for id in ["quad", "quartic", "abs", "abs-quad", "flat-well", "kink:-1:2", "linear:1"] {
            let g = subdifferential_graph(&FunctionSpec::parse(id).unwrap(), -2.0, 2.0).unwrap();
            if !check_monotone(&g).passed() {
                continue;
            }
            for x0 in [-1.0, 0.0, 0.5] {
                let v0 = g.image(x0)[0].0;
                for om in &omegas {
                    for (gamma, delta) in [(0.5, 0.5), (1.0, 0.25), (3.0, 1.0)] {
                        let c = check_selection_property_4_4(&g, [x0, v0], om, gamma, delta).unwrap();
                        if !c.passed() {
                            continue;
                        }
                        checked += 1;
                        let rad = single_valuedness_radius(om, gamma, delta);
                        for z in ball_axis(x0, rad) {
                            let img = g.image(z);
                            let diam = img.last().unwrap().1 - img[0].0;
                            assert!(diam <= g.cell_diagonal() + 2.0 * SNAP * (1.0 + z.abs()), "{id} at {z}: diameter {diam}");
                        }
                    }
                }
            }
        }
        assert!(checked > 0);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn line_scaling(c in 0.1f64..10.0, tau in 0.1f64..10.0, kappa in 0.1f64..10.0) {
            prop_assume!((tau / c - kappa).abs() > 1e-6 * kappa);
            let g = SetValuedGraph::line(c, -200.0, 200.0).unwrap();
            let psi = AdmissibleFunction::power(1.0).unwrap();
            let cert = check_metric_regularity(&g, [0.0, 0.0], &psi, tau, kappa, 0.5).unwrap();
            prop_assert_eq!(cert.passed(), tau / c <= kappa);
        }

        #[test]
        fn strong_implies_metric(k in 0usize..3, tau in 0.1f64..4.0, kappa in 0.1f64..4.0, delta in 0.1f64..3.0) {
            let graphs = [
                SetValuedGraph::line(2.0, -3.0, 3.0).unwrap(),
                SetValuedGraph::polyline(&[[-2.0, -1.0], [0.0, 0.0], [2.0, 3.0]]).unwrap(),
                SetValuedGraph::polyline(&[[-2.0, 4.0], [0.0, 0.0], [2.0, 4.0]]).unwrap(),
            ];
            let psi = AdmissibleFunction::power(1.0).unwrap();
            let g = &graphs[k];
            let s = check_strong_metric_regularity(g, [0.0, 0.0], &psi, tau, kappa, 0.5, delta).unwrap();
            let m = check_metric_regularity(g, [0.0, 0.0], &psi, tau, kappa, 0.5).unwrap();
            prop_assert!(!s.passed() || m.passed());
        }
    }
}

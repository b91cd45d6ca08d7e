//! Executing a scenario and writing its report.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::json;
use tiltlab::subdiff::subdifferential_graph;
use tiltlab::wellposed::{
    check_growth_from_slope, check_slwp, check_swlwp, check_tslm, check_weak_tslm,
    search_certificate, tilt_minimizer_map, verify_theorem, CheckKind, Consistency, Constants,
    SearchOutcome, SearchTarget, TheoremInput, TheoremReport, TiltMapTable, WellPosednessInstance,
    DUAL_POINTS,
};
use tiltlab::regularity::{check_metric_regularity, check_strong_metric_regularity};
use tiltlab::{AdmissibleFunction, Certificate, GridFunction};

use crate::scenario::{Job, Scenario};

/// Result of one job.
#[derive(Debug, Clone)]
pub enum Outcome {
    Certificate(Certificate),
    Search(SearchOutcome),
    Theorem(TheoremReport),
    TiltMap(TiltMapTable),
    /// The job could not run; the message names the cause.
    Error(String),
}

#[derive(Debug, Clone)]
pub struct ReportEntry {
    pub name: String,
    pub outcome: Outcome,
}

impl ReportEntry {
    pub fn is_inconsistent(&self) -> bool {
        matches!(&self.outcome, Outcome::Theorem(r) if r.verdict == Consistency::Inconsistent)
    }

    pub fn is_error(&self) -> bool {
        matches!(self.outcome, Outcome::Error(_))
    }

    /// One human-readable line.
    pub fn summary_line(&self) -> String {
        match &self.outcome {
            Outcome::Certificate(c) => {
                format!("{:<28} {:<26} {:<5} margin={}", self.name, c.kind, c.verdict.as_str(), c.margin)
            }
            Outcome::Search(s) => format!(
                "{:<28} {:<26} {:<5} margin={} found={} combos={}",
                self.name,
                s.certificate.kind,
                s.certificate.verdict.as_str(),
                s.certificate.margin,
                s.found,
                s.combos
            ),
            Outcome::Theorem(r) => format!("{:<28} {:<26} {}", self.name, "theorem", r.verdict.as_str()),
            Outcome::TiltMap(t) => format!(
                "{:<28} {:<26} {} tilts, max argmin diameter {}",
                self.name,
                "tilt-map",
                t.entries.len(),
                t.max_argmin_diameter()
            ),
            Outcome::Error(e) => format!("{:<28} {:<26} {}", self.name, "error", e),
        }
    }
}

fn constants_of(s: &Scenario) -> Result<Constants> {
    let c = s.constants;
    Ok(Constants::new(c.r, c.delta, c.tau, c.kappa, c.gamma)?)
}

fn require_phi(s: &Scenario, what: &str) -> Result<AdmissibleFunction> {
    s.phi.clone().with_context(|| format!("{what} needs [modulus] phi"))
}

/// Modulus used by a tilt check: `phi` for growth kinds, `psi` (or
/// `(phi')^{-1}`) for continuity kinds.
fn tilt_modulus(s: &Scenario, kind: CheckKind) -> Result<AdmissibleFunction> {
    match kind {
        CheckKind::Slwp | CheckKind::Swlwp => require_phi(s, kind.as_str()),
        _ => match &s.psi {
            Some(p) => Ok(p.clone()),
            None => Ok(require_phi(s, kind.as_str())?.inverse_derivative_function()?),
        },
    }
}

/// Modulus for graph checks: `psi`, else `phi'`.
fn graph_modulus(s: &Scenario, what: &str) -> Result<AdmissibleFunction> {
    match &s.psi {
        Some(p) => Ok(p.clone()),
        None => Ok(require_phi(s, what)?.derivative_function()?),
    }
}

fn instance(s: &Scenario, kind: CheckKind) -> Result<WellPosednessInstance> {
    let mut inst = WellPosednessInstance::from_spec(
        &s.spec,
        s.dim,
        s.lo,
        s.hi,
        s.points,
        &s.base,
        tilt_modulus(s, kind)?,
        constants_of(s)?,
    )?;
    inst.slack_scale = s.slack_scale;
    Ok(inst)
}

fn one_dim(s: &Scenario, what: &str) -> Result<()> {
    if s.dim != 1 {
        bail!("{what} is one-dimensional; scenario has dim {}", s.dim);
    }
    Ok(())
}

fn run_job(s: &Scenario, job: Job) -> Result<Outcome> {
    let c = s.constants;
    match job {
        Job::Check(kind) if kind.is_tilt() => {
            let inst = instance(s, kind)?;
            let cert = match kind {
                CheckKind::Slwp => check_slwp(&inst)?,
                CheckKind::Tslm => check_tslm(&inst)?,
                CheckKind::Swlwp => check_swlwp(&inst)?,
                _ => check_weak_tslm(&inst)?,
            };
            Ok(Outcome::Certificate(cert))
        }
        Job::Check(kind) => {
            one_dim(s, kind.as_str())?;
            let g = subdifferential_graph(&s.spec, s.lo, s.hi)?;
            let psi = graph_modulus(s, kind.as_str())?;
            let center = [s.base[0], 0.0];
            let cert = if kind == CheckKind::MetricReg {
                check_metric_regularity(&g, center, &psi, c.tau, c.kappa, c.r)?
            } else {
                check_strong_metric_regularity(&g, center, &psi, c.tau, c.kappa, c.r, c.delta)?
            };
            Ok(Outcome::Certificate(cert))
        }
        Job::GrowthFromSlope => {
            one_dim(s, "growth-from-slope")?;
            let f = GridFunction::sample_function(&s.spec, 1, s.lo, s.hi, s.points)?;
            let g = subdifferential_graph(&s.spec, s.lo, s.hi)?;
            let psi = graph_modulus(s, "growth-from-slope")?;
            let cert = check_growth_from_slope(&f, &g, &s.base, c.r, &psi, c.tau, c.kappa, c.delta, c.alpha)?;
            Ok(Outcome::Certificate(cert))
        }
        Job::Search(kind) if kind.is_tilt() => {
            let inst = instance(s, kind)?;
            Ok(Outcome::Search(search_certificate(kind, SearchTarget::Tilt(&inst), &s.sweep)?))
        }
        Job::Search(kind) => {
            one_dim(s, kind.as_str())?;
            let graph = subdifferential_graph(&s.spec, s.lo, s.hi)?;
            let psi = graph_modulus(s, kind.as_str())?;
            let target = SearchTarget::Graph {
                graph: &graph,
                center: [s.base[0], 0.0],
                psi: &psi,
            };
            Ok(Outcome::Search(search_certificate(kind, target, &s.sweep)?))
        }
        Job::Verify(id) => {
            one_dim(s, "theorem verification")?;
            let input = TheoremInput {
                spec: Some(s.spec.clone()),
                lo: s.lo,
                hi: s.hi,
                points: s.points,
                base: Some(s.base[0]),
                phi: s.phi.clone(),
                psi: s.psi.clone(),
                graph: None,
                sweep: s.sweep.clone(),
                slack_scale: s.slack_scale,
            };
            Ok(Outcome::Theorem(verify_theorem(id, &input)?))
        }
        Job::TiltMap => {
            let f = GridFunction::sample_function(&s.spec, s.dim, s.lo, s.hi, s.points)?;
            Ok(Outcome::TiltMap(tilt_minimizer_map(&f, &s.base, c.r, c.delta, DUAL_POINTS)?))
        }
    }
}

fn entry(s: &Scenario, job: Job) -> ReportEntry {
    let outcome = run_job(s, job).unwrap_or_else(|e| Outcome::Error(format!("{e:#}")));
    ReportEntry { name: job.name(), outcome }
}

/// Run every job of the scenario. With `parallel` the jobs are spread over
/// threads; entries always come back in scenario order.
pub fn run_scenario(s: &Scenario) -> Vec<ReportEntry> {
    if !s.parallel || s.jobs.len() < 2 {
        return s.jobs.iter().map(|&j| entry(s, j)).collect();
    }
    let workers = std::thread::available_parallelism().map_or(2, |n| n.get()).min(s.jobs.len());
    let mut slots: Vec<Option<ReportEntry>> = vec![None; s.jobs.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..s.jobs.len())
                        .step_by(workers)
                        .map(|i| (i, entry(s, s.jobs[i])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, e) in h.join().expect("worker panicked") {
                slots[i] = Some(e);
            }
        }
    });
    slots.into_iter().map(|e| e.expect("every job ran")).collect()
}

/// Exit status for a finished run: 1 if a theorem came out inconsistent,
/// 2 if a job errored, else 0.
pub fn exit_status(entries: &[ReportEntry]) -> i32 {
    if entries.iter().any(ReportEntry::is_inconsistent) {
        1
    } else if entries.iter().any(ReportEntry::is_error) {
        2
    } else {
        0
    }
}

/// Lower-case alphanumerics, with every other run of characters turned
/// into a single `-`.
fn slug(name: &str) -> String {
    name.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_ascii_lowercase)
        .collect::<Vec<_>>()
        .join("-")
}

fn constants_field(c: &Certificate) -> String {
    c.constants.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

fn csv_row(out: &mut String, check: &str, c: &Certificate) {
    let _ = writeln!(out, "{},{},{},{},{}", check, c.kind, c.verdict.as_str(), c.margin, constants_field(c));
}

pub const SUMMARY_HEADER: &str = "check,kind,verdict,margin,constants";

/// Text of `summary.csv`.
pub fn summary_csv(entries: &[ReportEntry]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for e in entries {
        match &e.outcome {
            Outcome::Certificate(c) => csv_row(&mut out, &e.name, c),
            Outcome::Search(s) => csv_row(&mut out, &e.name, &s.certificate),
            Outcome::Theorem(r) => {
                let _ = writeln!(out, "{},theorem,{},,", e.name, r.verdict.as_str());
                for (label, c) in &r.certificates {
                    csv_row(&mut out, &format!("{}/{}", e.name, slug(label)), c);
                }
            }
            Outcome::TiltMap(_) => {}
            Outcome::Error(_) => {
                let _ = writeln!(out, "{},error,error,,", e.name);
            }
        }
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Write `summary.csv` plus one file per entry into `dir`. File names are
/// `NN-<job>.json` (or `.csv` for tilt maps), numbered in scenario order.
pub fn emit_report(entries: &[ReportEntry], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write(&dir.join("summary.csv"), &summary_csv(entries))?;
    for (i, e) in entries.iter().enumerate() {
        let stem = format!("{:02}-{}", i + 1, slug(&e.name));
        match &e.outcome {
            Outcome::Certificate(c) => write(&dir.join(format!("{stem}.json")), &c.to_json())?,
            Outcome::Search(s) => {
                let v = json!({
                    "kind": s.kind.as_str(),
                    "found": s.found,
                    "combos": s.combos,
                    "skipped": s.skipped,
                    "certificate": s.certificate.to_value(),
                });
                let text = serde_json::to_string_pretty(&v).expect("search outcome serializes");
                write(&dir.join(format!("{stem}.json")), &text)?
            }
            Outcome::Theorem(r) => write(&dir.join(format!("{stem}.json")), &r.to_json())?,
            Outcome::TiltMap(t) => write(&dir.join(format!("{stem}.csv")), &t.to_csv())?,
            Outcome::Error(msg) => {
                let text = serde_json::to_string_pretty(&json!({"error": msg})).expect("string serializes");
                write(&dir.join(format!("{stem}.json")), &text)?
            }
        }
    }
    Ok(())
}

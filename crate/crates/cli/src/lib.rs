//! Command-line front end for tiltlab: scenario files, report writing and
//! the registry listing.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod run;
pub mod scenario;

use tiltlab::catalog::FUNCTION_IDS;
use tiltlab::wellposed::{CheckKind, TheoremId};
use tiltlab::ADMISSIBLE_FAMILIES;

pub use run::{emit_report, exit_status, run_scenario, summary_csv, Outcome, ReportEntry};
pub use scenario::{Job, Scenario};

/// Every registered id with a one-line description: catalog functions,
/// admissible families, checks, searches and theorems.
pub fn catalog_list() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    out.extend(FUNCTION_IDS.iter().map(|(id, d)| (id.to_string(), format!("function: {d}"))));
    out.extend(ADMISSIBLE_FAMILIES.iter().map(|(id, d)| (id.to_string(), format!("admissible: {d}"))));
    for k in CheckKind::ALL {
        out.push((format!("check:{}", k.as_str()), format!("check at fixed constants ({})", k.as_str())));
    }
    out.push(("check:growth-from-slope".into(), "slope bound implies quadratic-type growth".into()));
    for k in CheckKind::ALL {
        out.push((format!("search:{}", k.as_str()), format!("search constants for {}", k.as_str())));
    }
    for t in TheoremId::ALL {
        out.push((format!("verify:{}", t.as_str()), t.description().to_string()));
    }
    out.push(("tiltmap".into(), "tabulate tilt-perturbed minimizers".into()));
    out
}

/// Number of entries [`catalog_list`] returns.
pub fn registry_size() -> usize {
    FUNCTION_IDS.len() + ADMISSIBLE_FAMILIES.len() + 2 * CheckKind::ALL.len() + 1 + TheoremId::ALL.len() + 1
}

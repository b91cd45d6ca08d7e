//! Certificates: the constants a checker tested, its verdict, the worst
//! margin over all samples and the sample that produced it.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

/// JSON number, with non-finite values written as the strings `inf`,
/// `-inf`, `nan`.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub type Sample = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub kind: String,
    pub constants: BTreeMap<String, f64>,
    pub verdict: Verdict,
    /// Minimum over samples of `rhs - lhs`, before slack.
    pub margin: f64,
    /// Sample attaining `margin`.
    pub witness: Option<Sample>,
    /// Worst sample once slack is subtracted, present when the check fails.
    pub violation: Option<Sample>,
    /// Grids, slacks and counters used by the check.
    pub sweep: BTreeMap<String, Value>,
    pub notes: Vec<String>,
}

impl Certificate {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            constants: BTreeMap::new(),
            verdict: Verdict::Pass,
            margin: f64::INFINITY,
            witness: None,
            violation: None,
            sweep: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }

    pub fn constant(mut self, name: &str, v: f64) -> Self {
        self.constants.insert(name.to_string(), v);
        self
    }

    pub fn set_sweep(&mut self, key: &str, v: impl Into<Value>) {
        self.sweep.insert(key.to_string(), v.into());
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        if !self.notes.contains(&msg) {
            self.notes.push(msg);
        }
    }

    /// Force a failure not tied to an inequality sample (e.g. a broken
    /// precondition discovered during the sweep).
    pub fn fail_with(&mut self, msg: impl Into<String>, sample: Sample) {
        self.verdict = Verdict::Fail;
        if self.margin >= 0.0 {
            self.margin = -f64::INFINITY;
            self.witness = Some(sample.clone());
        }
        if self.violation.is_none() {
            self.violation = Some(sample);
        }
        self.note(msg);
    }

    pub fn to_value(&self) -> Value {
        let map_num = |m: &BTreeMap<String, f64>| -> Value {
            Value::Object(m.iter().map(|(k, v)| (k.clone(), num(*v))).collect())
        };
        json!({
            "kind": self.kind,
            "constants": map_num(&self.constants),
            "verdict": self.verdict.as_str(),
            "margin": num(self.margin),
            "witness": self.witness.as_ref().map(map_num).unwrap_or(Value::Null),
            "violation": self.violation.as_ref().map(map_num).unwrap_or(Value::Null),
            "sweep": Value::Object(self.sweep.clone().into_iter().collect()),
            "notes": self.notes,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("certificate serializes")
    }
}

impl Serialize for Certificate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_value().serialize(s)
    }
}

/// Accumulates `lhs <= rhs + slack` samples into a certificate.
#[derive(Debug, Clone)]
pub struct Tracker {
    margin: f64,
    witness: Option<Sample>,
    worst: f64,
    violation: Option<Sample>,
    samples: usize,
    vacuous: usize,
    max_slack: f64,
}

impl Default for Tracker {
    fn default() -> Self {
        Self::new()
    }
}

pub fn sample(pairs: &[(&str, f64)]) -> Sample {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

impl Tracker {
    pub fn new() -> Self {
        Self {
            margin: f64::INFINITY,
            witness: None,
            worst: f64::INFINITY,
            violation: None,
            samples: 0,
            vacuous: 0,
            max_slack: 0.0,
        }
    }

    /// Record one inequality. An infinite `rhs` counts as a vacuous pass.
    /// Returns whether the sample passed.
    pub fn observe(
        &mut self,
        lhs: f64,
        rhs: f64,
        slack: f64,
        at: impl FnOnce() -> Vec<(&'static str, f64)>,
    ) -> bool {
        self.samples += 1;
        self.max_slack = self.max_slack.max(slack);
        if rhs == f64::INFINITY {
            self.vacuous += 1;
            return true;
        }
        let m = rhs - lhs;
        let adjusted = m + slack;
        let need_margin = m < self.margin;
        let need_violation = adjusted < 0.0 && adjusted < self.worst;
        if need_margin || need_violation {
            let mut s: Sample = at().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            s.insert("lhs".into(), lhs);
            s.insert("rhs".into(), rhs);
            s.insert("slack".into(), slack);
            if need_violation {
                self.worst = adjusted;
                self.violation = Some(s.clone());
            }
            if need_margin {
                self.margin = m;
                self.witness = Some(s);
            }
        }
        !(adjusted < 0.0)
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Fold the samples into `cert`, keeping any earlier failure.
    pub fn finish(self, cert: &mut Certificate) {
        if self.margin < cert.margin {
            cert.margin = self.margin;
            cert.witness = self.witness;
        }
        if let Some(v) = self.violation {
            cert.verdict = Verdict::Fail;
            if cert.violation.is_none() {
                cert.violation = Some(v);
            }
        }
        let add = |cert: &mut Certificate, key: &str, n: usize| {
            let prev = cert.sweep.get(key).and_then(Value::as_u64).unwrap_or(0);
            cert.sweep.insert(key.into(), json!(prev + n as u64));
        };
        add(cert, "samples", self.samples);
        add(cert, "vacuous_samples", self.vacuous);
        let prev = cert
            .sweep
            .get("max_slack")
            .and_then(Value::as_f64)
            .unwrap_or(0.0);
        cert.sweep
            .insert("max_slack".into(), num(prev.max(self.max_slack)));
    }
}

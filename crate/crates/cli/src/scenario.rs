//! Scenario files: TOML with `[function]`, `[modulus]`, `[run]`,
//! `[constants]` and `[output]` sections.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use tiltlab::wellposed::{CheckKind, SweepSpec, TheoremId};
use tiltlab::{AdmissibleFunction, FunctionSpec};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSection {
    pub id: String,
    #[serde(rename = "box", default = "default_box")]
    pub bounds: [f64; 2],
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub base: Option<Vec<f64>>,
}

fn default_box() -> [f64; 2] {
    [-2.0, 2.0]
}

fn default_points() -> usize {
    401
}

fn default_dim() -> usize {
    1
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulusSection {
    pub phi: Option<String>,
    pub psi: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub checks: Vec<String>,
    #[serde(default)]
    pub sweep: Option<String>,
    #[serde(default = "one")]
    pub slack_scale: f64,
    #[serde(default)]
    pub parallel: bool,
}

fn one() -> f64 {
    1.0
}

/// Constants for `check:` jobs and the tilt map; every field has a default.
#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    #[serde(default = "one")]
    pub r: f64,
    #[serde(default = "one")]
    pub delta: f64,
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default = "half")]
    pub gamma: f64,
    #[serde(default = "half")]
    pub alpha: f64,
}

fn half() -> f64 {
    0.5
}

impl Default for ConstantsSection {
    fn default() -> Self {
        Self {
            r: 1.0,
            delta: 1.0,
            tau: 1.0,
            kappa: 1.0,
            gamma: 0.5,
            alpha: 0.5,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub function: FunctionSection,
    #[serde(default)]
    pub modulus: ModulusSection,
    pub run: RunSection,
    #[serde(default)]
    pub constants: ConstantsSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// One requested job.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Job {
    Check(CheckKind),
    GrowthFromSlope,
    Search(CheckKind),
    Verify(TheoremId),
    TiltMap,
}

impl Job {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "tiltmap" {
            return Ok(Job::TiltMap);
        }
        let Some((head, rest)) = s.split_once(':') else {
            bail!("unknown check `{s}`; expected check:<kind>, search:<kind>, verify:<theorem> or tiltmap");
        };
        Ok(match head {
            "check" if rest == "growth-from-slope" => Job::GrowthFromSlope,
            "check" => Job::Check(CheckKind::parse(rest)?),
            "search" => Job::Search(CheckKind::parse(rest)?),
            "verify" => Job::Verify(TheoremId::parse(rest)?),
            _ => bail!("unknown check `{s}`"),
        })
    }

    pub fn name(&self) -> String {
        match self {
            Job::Check(k) => format!("check:{}", k.as_str()),
            Job::GrowthFromSlope => "check:growth-from-slope".into(),
            Job::Search(k) => format!("search:{}", k.as_str()),
            Job::Verify(t) => format!("verify:{}", t.as_str()),
            Job::TiltMap => "tiltmap".into(),
        }
    }
}

/// A validated scenario with every id resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: FunctionSpec,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub dim: usize,
    pub base: Vec<f64>,
    pub phi: Option<AdmissibleFunction>,
    pub psi: Option<AdmissibleFunction>,
    pub jobs: Vec<Job>,
    pub sweep: SweepSpec,
    pub slack_scale: f64,
    pub parallel: bool,
    pub constants: ConstantsSection,
    pub out_dir: Option<PathBuf>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).context("cannot parse scenario")?;
        Self::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let f = file.function;
        let spec = FunctionSpec::parse(&f.id).with_context(|| format!("function id `{}`", f.id))?;
        if !(f.dim == 1 || f.dim == 2) {
            bail!("dim must be 1 or 2, got {}", f.dim);
        }
        let [lo, hi] = f.bounds;
        if !(lo < hi) || f.points < 3 {
            bail!("need box lo < hi and at least 3 points");
        }
        let base = f.base.unwrap_or_else(|| vec![0.0; f.dim]);
        if base.len() != f.dim {
            bail!("base has {} coordinates, dim is {}", base.len(), f.dim);
        }
        let modulus = |id: &Option<String>| -> Result<Option<AdmissibleFunction>> {
            id.as_deref()
                .map(|s| AdmissibleFunction::from_id(s).with_context(|| format!("admissible id `{s}`")))
                .transpose()
        };
        let jobs = file.run.checks.iter().map(|s| Job::parse(s)).collect::<Result<Vec<_>>>()?;
        let sweep = match &file.run.sweep {
            Some(s) => SweepSpec::parse(s)?,
            None => SweepSpec::default(),
        };
        if !(file.run.slack_scale >= 0.0 && file.run.slack_scale.is_finite()) {
            bail!("slack_scale must be finite and nonnegative");
        }
        let c = file.constants;
        for (k, v) in [("r", c.r), ("delta", c.delta), ("tau", c.tau), ("kappa", c.kappa), ("gamma", c.gamma)] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("constant {k} must be positive, got {v}");
            }
        }
        if !(c.alpha > 0.0 && c.alpha < 1.0) {
            bail!("constant alpha must lie in (0, 1), got {}", c.alpha);
        }
        Ok(Self {
            spec,
            lo,
            hi,
            points: f.points,
            dim: f.dim,
            base,
            phi: modulus(&file.modulus.phi)?,
            psi: modulus(&file.modulus.psi)?,
            jobs,
            sweep,
            slack_scale: file.run.slack_scale,
            parallel: file.run.parallel,
            constants: c,
            out_dir: file.output.dir,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario() {
        let s = Scenario::from_toml("[function]\nid = \"quad\"\n[run]\nchecks = [\"verify:T4.5\", \"tiltmap\"]\n").unwrap();
        assert_eq!(s.jobs, vec![Job::Verify(TheoremId::T45), Job::TiltMap]);
        assert_eq!(s.base, vec![0.0]);
        assert_eq!(s.constants, ConstantsSection::default());
        assert_eq!(s.sweep, SweepSpec::default());
    }

    #[test]
    fn bad_scenarios() {
        let bad = [
            "[function]\nid = \"nope\"\n[run]\nchecks = []\n",
            "[function]\nid = \"quad\"\n[run]\nchecks = [\"check:foo\"]\n",
            "[function]\nid = \"quad\"\n[run]\nchecks = [\"verify:T9.9\"]\n",
            "[function]\nid = \"quad\"\ncolour = 1\n[run]\nchecks = []\n",
            "[function]\nid = \"quad\"\nbase = [0.0, 1.0]\n[run]\nchecks = []\n",
            "[function]\nid = \"quad\"\n[run]\nchecks = []\nsweep = \"tau=4:1\"\n",
            "[function]\nid = \"quad\"\n[run]\nchecks = []\n[constants]\ntau = -1.0\n",
            "[function]\nid = \"quad\"\n[modulus]\nphi = \"pow:2\"\n[run]\nchecks = []\n",
            "not toml at all",
        ];
        for b in bad {
            assert!(Scenario::from_toml(b).is_err(), "{b}");
        }
    }

    #[test]
    fn job_names_round_trip() {
        for s in ["check:slwp", "check:growth-from-slope", "search:metric-reg", "verify:C6.2", "tiltmap"] {
            assert_eq!(Job::parse(s).unwrap().name(), s);
        }
    }
}

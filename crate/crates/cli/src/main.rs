// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tiltlab::conjugate::{conjugate_transform, convex_envelope};
use tiltlab::{FunctionSpec, GridFunction};
use tiltlab_cli::scenario::{ConstantsSection, FunctionSection, ModulusSection, OutputSection, RunSection, ScenarioFile};
use tiltlab_cli::{catalog_list, emit_report, exit_status, run_scenario, Scenario};

#[derive(Parser)]
#[command(name = "tiltlab", version, about = "Numerical checks of tilt stability and well-posedness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a TOML scenario file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// List every registered id.
    Catalog,
    /// Write the conjugate of a catalog function as CSV.
    Conjugate {
        function: String,
        /// Primal box as lo:hi.
        #[arg(value_name = "LO:HI", allow_hyphen_values = true)]
        bounds: String,
        points: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Dual box as lo:hi; defaults to the primal box.
        #[arg(long, allow_hyphen_values = true)]
        dual: Option<String>,
        #[arg(long)]
        dual_points: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the convex envelope of a catalog function as CSV.
    Envelope {
        function: String,
        #[arg(value_name = "LO:HI", allow_hyphen_values = true)]
        bounds: String,
        points: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate tilt-perturbed minimizers.
    Tiltmap {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one check (check:<kind>, search:<kind> or check:growth-from-slope).
    Check {
        /// Check name, with or without the `check:` prefix.
        kind: String,
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Verify one theorem on an instance.
    Verify {
        id: String,
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Args, Clone, Default)]
struct RunOpts {
    /// Directory for summary.csv and per-check files.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Multiplier applied to every slack term.
    #[arg(long)]
    slack_override: Option<f64>,
    /// Search sweep, e.g. "tau=-10:10;kappa=-10:10;r=0.5,1".
    #[arg(long)]
    sweep: Option<String>,
    /// Run independent jobs on several threads.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Catalog function id, e.g. quad:0.5.
    function: String,
    #[arg(long = "box", value_name = "LO:HI", default_value = "-2:2", allow_hyphen_values = true)]
    bounds: String,
    #[arg(long, default_value_t = 401)]
    points: usize,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Base point, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    base: Option<Vec<f64>>,
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    psi: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
}

fn parse_range(s: &str) -> Result<[f64; 2]> {
    let (a, b) = s.split_once(':').with_context(|| format!("expected lo:hi, got `{s}`"))?;
    let lo: f64 = a.trim().parse().with_context(|| format!("bad number `{a}`"))?;
    let hi: f64 = b.trim().parse().with_context(|| format!("bad number `{b}`"))?;
    if !(lo < hi) {
        bail!("need lo < hi in `{s}`");
    }
    Ok([lo, hi])
}

fn scenario_from_args(inst: &InstanceArgs, check: String, opts: &RunOpts) -> Result<Scenario> {
    let file = ScenarioFile {
        function: FunctionSection {
            id: inst.function.clone(),
            bounds: parse_range(&inst.bounds)?,
            points: inst.points,
            dim: inst.dim,
            base: inst.base.clone(),
        },
        modulus: ModulusSection {
            phi: inst.phi.clone(),
            psi: inst.psi.clone(),
        },
        run: RunSection {
            checks: vec![check],
            sweep: None,
            slack_scale: 1.0,
            parallel: false,
        },
        constants: ConstantsSection {
            r: inst.r,
            delta: inst.delta,
            tau: inst.tau,
            kappa: inst.kappa,
            gamma: inst.gamma,
            alpha: inst.alpha,
        },
        output: OutputSection::default(),
    };
    apply_opts(Scenario::from_file(file)?, opts)
}

fn apply_opts(mut s: Scenario, opts: &RunOpts) -> Result<Scenario> {
    if let Some(dir) = &opts.out_dir {
        s.out_dir = Some(dir.clone());
    }
    if let Some(m) = opts.slack_override {
        if !(m >= 0.0 && m.is_finite()) {
            bail!("--slack-override must be finite and nonnegative");
        }
        s.slack_scale = m;
    }
    if let Some(sw) = &opts.sweep {
        s.sweep = tiltlab::wellposed::SweepSpec::parse(sw)?;
    }
    s.parallel |= opts.parallel;
    Ok(s)
}

fn execute(s: &Scenario) -> Result<i32> {
    let entries = run_scenario(s);
    for e in &entries {
        println!("{}", e.summary_line());
        if let tiltlab_cli::Outcome::Theorem(r) = &e.outcome {
            for d in &r.details {
                println!("    {d}");
            }
        }
    }
    if let Some(dir) = &s.out_dir {
        emit_report(&entries, dir)?;
    }
    Ok(exit_status(&entries))
}

fn write_grid(g: &GridFunction, out: &PathBuf) -> Result<i32> {
    std::fs::write(out, g.to_csv()).with_context(|| format!("cannot write {}", out.display()))?;
    Ok(0)
}

fn real_main() -> Result<i32> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, opts } => execute(&apply_opts(Scenario::load(&config)?, &opts)?),
        Command::Catalog => {
            for (id, desc) in catalog_list() {
                println!("{id:<28} {desc}");
            }
            Ok(0)
        }
        Command::Conjugate { function, bounds, points, dim, dual, dual_points, out } => {
            let spec = FunctionSpec::parse(&function)?;
            let [lo, hi] = parse_range(&bounds)?;
            let f = GridFunction::sample_function(&spec, dim, lo, hi, points)?;
            let [dlo, dhi] = match dual {
                Some(d) => parse_range(&d)?,
                None => [lo, hi],
            };
            write_grid(&conjugate_transform(&f, dlo, dhi, dual_points.unwrap_or(points))?, &out)
        }
        Command::Envelope { function, bounds, points, dim, out } => {
            let spec = FunctionSpec::parse(&function)?;
            let [lo, hi] = parse_range(&bounds)?;
            let f = GridFunction::sample_function(&spec, dim, lo, hi, points)?;
            write_grid(&convex_envelope(&f)?, &out)
        }
        Command::Tiltmap { inst, out } => {
            let s = scenario_from_args(&inst, "tiltmap".into(), &RunOpts::default())?;
            let entries = run_scenario(&s);
            match &entries[0].outcome {
                tiltlab_cli::Outcome::TiltMap(t) => {
                    std::fs::write(&out, t.to_csv()).with_context(|| format!("cannot write {}", out.display()))?;
                    println!("{}", entries[0].summary_line());
                    Ok(0)
                }
                tiltlab_cli::Outcome::Error(e) => bail!("{e}"),
                _ => unreachable!("tiltmap job yields a table"),
            }
        }
        Command::Check { kind, inst, opts } => {
            let name = if kind.contains(':') { kind } else { format!("check:{kind}") };
            execute(&scenario_from_args(&inst, name, &opts)?)
        }
        Command::Verify { id, inst, opts } => {
            let name = if id.starts_with("verify:") { id } else { format!("verify:{id}") };
            execute(&scenario_from_args(&inst, name, &opts)?)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use cachelab::adversary::{certify, phase_stats, rental_det_adversary, rental_rand_adversary, zapping_adversary, AdversaryVariant};
use cachelab::bounds::{bounds, BoundQuery, Problem, Setting};
use cachelab::gen::{generate, GenSpec};
use cachelab::harness::{run_experiment, ExperimentSpec};
use cachelab::model::{CostModel, ProblemParams, RentMode};
use cachelab::oracle::opt;
use cachelab::rational::{parse_rat, Rat};
use cachelab::registry::PolicySpec;
use cachelab::rng::Seed;
use cachelab::sim::{Simulation, Target};
use cachelab::trace_io::{emit_trace, parse_trace};
use cachelab::worklog::work_log_lines;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "cachelab", version, about = "Online file caching with rental costs and zapping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run policies on a trace and report ratios against OPT.
    Run(RunArgs),
    /// Solve a small instance exactly.
    Opt(OptArgs),
    /// Generate a lower-bound request sequence against a policy.
    Adversary(AdversaryArgs),
    /// Look up reference bounds.
    Bounds(BoundsArgs),
    /// Generate a random trace.
    Gen(GenArgs),
}

#[derive(Args)]
struct ParamArgs {
    /// Cache size.
    #[arg(long)]
    k: u64,
    /// Rent per resident file per step, e.g. `1/4`.
    #[arg(long, default_value = "0", value_parser = rational)]
    lambda: Rat,
    /// Zap cost; zapping is disabled when absent.
    #[arg(long, value_parser = rational)]
    zap_cost: Option<Rat>,
    /// Cost model: paging, weighted-paging, bit, fault or general.
    #[arg(long, default_value = "general")]
    model: String,
    /// Charge rent per file or in proportion to size.
    #[arg(long, value_enum, default_value_t = RentArg::PerFile)]
    rent_mode: RentArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum RentArg {
    PerFile,
    PerSize,
}

impl ParamArgs {
    fn params(&self) -> anyhow::Result<ProblemParams> {
        let mut p = ProblemParams::new(self.k, self.lambda).with_model(CostModel::parse(&self.model)?);
        p.zap_cost = self.zap_cost;
        p.rent_mode = match self.rent_mode {
            RentArg::PerFile => RentMode::PerFile,
            RentArg::PerSize => RentMode::PerSize,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Policy names, comma separated or repeated.
    #[arg(long = "policy", required = true, value_delimiter = ',')]
    policies: Vec<String>,
    #[command(flatten)]
    params: ParamArgs,
    /// Trials per randomized policy.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, env = "CACHELAB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write CILP work records as JSON lines (first trial of each policy).
    #[arg(long)]
    work_log: Option<PathBuf>,
    /// Skip the potential-function checks.
    #[arg(long)]
    no_invariants: bool,
}

#[derive(Args)]
struct OptArgs {
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct AdversaryArgs {
    #[arg(long, value_parser = ["rental-det", "rental-rand", "zapping"])]
    variant: String,
    /// Policy the adversary plays against.
    #[arg(long)]
    target: String,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
    #[arg(long, env = "CACHELAB_SEED", default_value_t = 0)]
    seed: u64,
    /// Write the generated trace here.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    problem: String,
    #[arg(long, default_value = "det")]
    setting: String,
    #[arg(long)]
    k: u64,
    #[arg(long, value_parser = rational)]
    lambda: Option<Rat>,
    #[arg(long, value_parser = rational)]
    zap_cost: Option<Rat>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 5)]
    files: usize,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    /// Probability that a step is a tick.
    #[arg(long, default_value_t = 0.0)]
    tick_density: f64,
    #[arg(long, default_value_t = 1)]
    size_min: u64,
    #[arg(long, default_value_t = 1)]
    size_max: u64,
    #[arg(long, default_value_t = 1)]
    cost_min: u64,
    #[arg(long, default_value_t = 1)]
    cost_max: u64,
    #[arg(long, env = "CACHELAB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn rational(s: &str) -> Result<Rat, String> {
    parse_rat(s).map_err(|e| e.to_string())
}

fn read_trace(path: &Path) -> anyhow::Result<cachelab::model::Trace> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_trace(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout(), "{}", text.trim_end());
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn cmd_run(a: RunArgs) -> anyhow::Result<()> {
    let spec = ExperimentSpec {
        trace: read_trace(&a.trace)?,
        policies: a.policies.iter().map(|p| PolicySpec::parse(p)).collect::<Result<_, _>>()?,
        params: a.params.params()?,
        trials: a.trials,
        seed: Seed(a.seed),
        check_invariants: !a.no_invariants,
    };
    let report = run_experiment(&spec)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &a.work_log {
        let mut lines = String::new();
        for row in &report.rows {
            for line in work_log_lines(&row.work_log).lines() {
                let mut v: Value = serde_json::from_str(line)?;
                v["policy"] = json!(row.policy);
                lines.push_str(&v.to_string());
                lines.push('\n');
            }
        }
        fs::write(path, lines).with_context(|| format!("writing {}", path.display()))?;
    }
    let text = match a.format {
        Format::Json => pretty(&report.to_json()),
        Format::Csv => report.to_csv()?,
    };
    emit(a.out.as_deref(), &text)
}

fn cmd_opt(a: OptArgs) -> anyhow::Result<()> {
    let trace = read_trace(&a.trace)?;
    let sol = opt(&trace, &a.params.params()?)?;
    emit(None, &pretty(&sol.to_json(&trace)))
}

fn cmd_adversary(a: AdversaryArgs) -> anyhow::Result<()> {
    let params = a.params.params()?;
    let target = PolicySpec::parse(&a.target)?;
    let seed = Seed(a.seed);
    let mut sim = Simulation::new(target.build(&params, seed), &params);
    let variant = AdversaryVariant::parse(&a.variant).expect("validated by clap");
    let (trace, report) = match variant {
        AdversaryVariant::RentalDeterministic => {
            let r = rental_det_adversary(&mut sim, &params, a.steps)?;
            let v = r.to_json();
            (r.trace, v)
        }
        AdversaryVariant::Zapping => {
            let r = zapping_adversary(&mut sim, &params, usize::MAX, a.steps)?;
            let v = r.to_json();
            (r.trace, v)
        }
        AdversaryVariant::RentalRandomized => {
            let trace = rental_rand_adversary(params.k, a.steps, seed);
            for e in &trace.events {
                sim.serve(&trace.catalog, e)?;
            }
            let cert = certify(&trace, &params)?;
            let alg = sim.ledger().clone();
            let stats = phase_stats(&trace, params.k);
            let v = json!({
                "steps": trace.len(),
                "alg": alg.to_json(),
                "opt_upper": cachelab::rational::fmt_rat(&cert.opt_upper),
                "opt_provenance": cert.provenance,
                "ratio": (cert.opt_upper > Rat::from_integer(0)).then(|| cachelab::rational::to_f64(&(alg.total() / cert.opt_upper))),
                "phases": stats.phases,
                "mean_phase_length": stats.mean_length,
                "expected_phase_length": stats.expected_k_hk,
            });
            (trace, v)
        }
    };
    if let Some(path) = &a.trace_out {
        fs::write(path, emit_trace(&trace)).with_context(|| format!("writing {}", path.display()))?;
    }
    let mut report = report;
    report["variant"] = json!(variant.name());
    report["target"] = json!(target.name());
    emit(None, &pretty(&report))
}

fn cmd_bounds(a: BoundsArgs) -> anyhow::Result<()> {
    let Some(problem) = Problem::parse(&a.problem) else {
        bail!("unknown problem `{}`", a.problem);
    };
    let Some(setting) = Setting::parse(&a.setting) else {
        bail!("unknown setting `{}`", a.setting);
    };
    let q = BoundQuery {
        problem,
        setting,
        k: a.k,
        lambda: a.lambda,
        zap_cost: a.zap_cost,
    };
    let b = bounds(&q)?;
    emit(None, &pretty(&b.to_json(&q)))
}

fn cmd_gen(a: GenArgs) -> anyhow::Result<()> {
    let spec = GenSpec {
        files: a.files,
        steps: a.steps,
        tick_density: a.tick_density,
        size_range: (a.size_min, a.size_max),
        cost_range: (a.cost_min, a.cost_max),
    };
    let trace = generate(&spec, Seed(a.seed))?;
    emit(a.out.as_deref(), &emit_trace(&trace))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use cachelab::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::Invariant(_) | Error::Capacity { .. } | Error::InvalidDecision { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Opt(a) => cmd_opt(a),
        Command::Adversary(a) => cmd_adversary(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

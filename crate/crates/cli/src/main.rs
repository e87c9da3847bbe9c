use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use prowlnet::controller::{self, RunConfig, RunRecord};
use prowlnet::generators::{Generator, GeneratorSpec, Model};
use prowlnet::harness::{self, ExperimentPlan, SourceSpec, SweepAxis};
use prowlnet::ingest::{self, DatasetSpec};
use prowlnet::observation::write_audit_jsonl;
use prowlnet::PolicyKind;

const EXIT_MAX_TICKS: u8 = 3;
const EXIT_INPUT: u8 = 2;
const EXIT_FAILED: u8 = 1;

#[derive(Parser)]
#[command(
    name = "prowlnet",
    version,
    about = "Access-unit prowling on growing networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump a synthetic event stream as an edge list.
    Generate(GenerateArgs),
    /// One centralization run; writes the record as JSON.
    Run(RunArgs),
    /// Domination cost per policy, radius and walk length.
    Exp1(ExpArgs),
    /// Domination cost against average degree, size and radius.
    Exp2(ExpArgs),
    /// Average-opinion trajectories until a threshold.
    Exp3(ExpArgs),
    /// Cross-check the simulator against brute-force references.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value = "ba")]
    model: Model,
    /// Initial network size.
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 6)]
    avg_degree: usize,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Extra ticks to emit after the initial network is built.
    #[arg(long, default_value_t = 0)]
    ticks: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Read a timestamped edge list instead of generating a network.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Dataset protocol: facebook, wikitalk, citation or enron.
    #[arg(long, requires = "dataset")]
    preset: Option<String>,
    #[arg(long, requires = "dataset")]
    initial_stamp: Option<usize>,
    #[arg(long, default_value = "bdeg")]
    policy: PolicyKind,
    #[arg(long = "r", default_value_t = 2)]
    radius: u32,
    #[arg(long = "k", default_value_t = 4)]
    steps: usize,
    /// Timestamps per selection tick (datasets default to their preset).
    #[arg(long)]
    cadence: Option<u32>,
    #[arg(long = "epsilon", default_values_t = [0.01])]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed for the generated network; defaults to --seed.
    #[arg(long)]
    graph_seed: Option<u64>,
    #[arg(long, default_value_t = 1_000_000)]
    max_ticks: u64,
    /// Ticks to keep running after domination.
    #[arg(long, default_value_t = 0)]
    tail: u64,
    /// JSON record path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-tick CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Query log as JSON lines.
    #[arg(long)]
    audit_log: Option<PathBuf>,
}

#[derive(Args)]
struct ExpArgs {
    /// TOML plan; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    policy: Vec<PolicyKind>,
    #[arg(long = "r", value_delimiter = ',')]
    radius: Vec<u32>,
    #[arg(long = "k", value_delimiter = ',')]
    steps: Vec<usize>,
    #[arg(long = "epsilon", value_delimiter = ',')]
    epsilons: Vec<f64>,
    /// Replace the plan's sources with generated ones.
    #[arg(long, value_delimiter = ',')]
    model: Vec<Model>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    avg_degree: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Sweeps to run in exp2: degree, size, radius.
    #[arg(long, value_delimiter = ',', value_parser = parse_axis)]
    axis: Vec<SweepAxis>,
    /// Mean-opinion target in exp3.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    max_ticks: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1000)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    SweepAxis::ALL
        .into_iter()
        .find(|a| a.name().eq_ignore_ascii_case(s))
        .ok_or_else(|| format!("unknown axis `{s}` (expected degree, size or radius)"))
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: e.to_string(),
        }
    }

    fn failed(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_FAILED,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Exp1(a) => exp(a, 1),
        Command::Exp2(a) => exp(a, 2),
        Command::Exp3(a) => exp(a, 3),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            Failure::input(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn generate(a: GenerateArgs) -> Result<u8, Failure> {
    let spec = GeneratorSpec::new(a.model.model, a.model.n, a.model.avg_degree, a.seed);
    let mut g = Generator::new(spec).map_err(Failure::input)?;
    let mut events = Vec::new();
    while g.node_count() < a.model.n {
        events.extend(g.next_events());
    }
    for _ in 0..a.ticks {
        events.extend(g.next_events());
    }
    let mut out = output(a.out.as_deref())?;
    ingest::write_edge_list(&mut out, &events).map_err(Failure::failed)?;
    Ok(0)
}

fn run(a: RunArgs) -> Result<u8, Failure> {
    let mut cfg = RunConfig {
        radius: a.radius,
        steps: a.steps,
        policy: a.policy,
        cadence: a.cadence.unwrap_or(1),
        epsilons: a.epsilons.clone(),
        seed: a.seed,
        max_ticks: a.max_ticks,
        tail_ticks: a.tail,
        keep_audit_log: a.audit_log.is_some(),
        ..RunConfig::default()
    };
    cfg.validate().map_err(Failure::input)?;
    let record = match &a.dataset {
        Some(path) => {
            let mut spec = match &a.preset {
                Some(name) => DatasetSpec::preset(name, path).map_err(Failure::input)?,
                None => DatasetSpec::new(path, 0, 1),
            };
            if let Some(i) = a.initial_stamp {
                spec.initial_stamp = i;
            }
            if let Some(m) = a.cadence {
                spec.cadence = m;
            }
            cfg.cadence = spec.cadence;
            let loaded = ingest::load(&spec).map_err(Failure::input)?;
            info!("loaded {:?}", loaded.report);
            let mut stream = loaded.stream;
            controller::run(loaded.warmup, &mut stream, &cfg)
        }
        None => {
            let spec = GeneratorSpec::new(
                a.model.model,
                a.model.n,
                a.model.avg_degree,
                a.graph_seed.unwrap_or(a.seed),
            );
            let (inst, mut g) = prowlnet::generators::warm_start(spec).map_err(Failure::input)?;
            controller::run(inst, &mut g, &cfg)
        }
    }
    .map_err(Failure::failed)?;
    write_run(&record, &a)?;
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    Ok(if record.dominated() {
        0
    } else {
        EXIT_MAX_TICKS
    })
}

fn write_run(record: &RunRecord, a: &RunArgs) -> Result<(), Failure> {
    let mut out = output(a.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, record).map_err(Failure::failed)?;
    writeln!(out).map_err(Failure::failed)?;
    out.flush().map_err(Failure::failed)?;
    if let Some(p) = &a.csv {
        record
            .write_ticks_csv(output(Some(p))?)
            .map_err(Failure::failed)?;
    }
    if let Some(p) = &a.audit_log {
        write_audit_jsonl(output(Some(p))?, &record.audit_log).map_err(Failure::failed)?;
    }
    Ok(())
}

fn plan_from(a: &ExpArgs) -> Result<ExperimentPlan, Failure> {
    let mut plan = match &a.config {
        Some(p) => ExperimentPlan::load(p).map_err(Failure::input)?,
        None => ExperimentPlan::default(),
    };
    if let Some(r) = a.reps {
        plan.repetitions = r;
    }
    if let Some(s) = a.seed {
        plan.base_seed = s;
    }
    if let Some(o) = &a.out {
        plan.out_dir = o.clone();
    }
    if !a.policy.is_empty() {
        plan.policies = a.policy.clone();
    }
    if !a.radius.is_empty() {
        plan.radii = a.radius.clone();
        plan.sweep.radii = a.radius.clone();
    }
    if !a.steps.is_empty() {
        plan.steps = a.steps.clone();
        plan.sweep.steps = a.steps[0];
        plan.opinion.steps = a.steps[0];
    }
    if !a.epsilons.is_empty() {
        plan.epsilons = a.epsilons.clone();
    }
    if let Some(n) = a.n {
        plan.sweep.size = n;
    }
    if let Some(d) = a.avg_degree {
        plan.sweep.avg_degree = d;
    }
    if !a.model.is_empty() {
        plan.sweep.models = a.model.clone();
        plan.sources = a
            .model
            .iter()
            .map(|&m| SourceSpec::model(m, plan.sweep.size, plan.sweep.avg_degree))
            .collect();
    }
    if a.workers.is_some() {
        plan.workers = a.workers;
    }
    if let Some(t) = a.threshold {
        plan.opinion.threshold = t;
    }
    if let Some(m) = a.max_ticks {
        plan.max_ticks = m;
        plan.opinion.max_ticks = m;
    }
    plan.validate().map_err(Failure::input)?;
    Ok(plan)
}

fn exp(a: ExpArgs, which: u8) -> Result<u8, Failure> {
    let plan = plan_from(&a)?;
    let paths = match which {
        1 => {
            let res = harness::experiment1(&plan).map_err(Failure::failed)?;
            for notice in &res.skipped {
                eprintln!("notice: {notice}");
            }
            harness::write_exp1(&plan.out_dir, &res)
        }
        2 => {
            let axes = if a.axis.is_empty() {
                SweepAxis::ALL.to_vec()
            } else {
                a.axis.clone()
            };
            let series = harness::experiment2(&plan, &axes).map_err(Failure::failed)?;
            harness::write_exp2(&plan.out_dir, &series)
        }
        _ => {
            let series = harness::experiment3(&plan).map_err(Failure::failed)?;
            harness::write_exp3(&plan.out_dir, &series)
        }
    }
    .map_err(Failure::failed)?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(0)
}

fn verify(a: VerifyArgs) -> Result<u8, Failure> {
    let checks = harness::verify(a.instances, a.seed);
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    Ok(if checks.iter().all(|c| c.passed) {
        0
    } else {
        EXIT_FAILED
    })
}

//! Repeated seeded runs over grids of sources and policies.
//!
//! Jobs run on a rayon pool; results are gathered in job order, so output
//! never depends on scheduling.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{self, ControllerError, RunConfig, RunRecord};
use crate::dynamics;
use crate::fixtures;
use crate::generators::{self, GeneratorError, GeneratorSpec, Model};
use crate::graph::{NetworkInstance, NodeId};
use crate::ingest::{self, DatasetSpec, IngestError, LoadedDataset};
use crate::oracle::{self, SmallGraph};
use crate::prowl::PolicyKind;
use crate::source::EventStream;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Where a run's network comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    Model {
        model: Model,
        size: usize,
        avg_degree: usize,
    },
    Dataset {
        name: String,
        #[serde(flatten)]
        spec: DatasetSpec,
    },
}

impl SourceSpec {
    pub fn model(model: Model, size: usize, avg_degree: usize) -> Self {
        SourceSpec::Model {
            model,
            size,
            avg_degree,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SourceSpec::Model {
                model,
                size,
                avg_degree,
            } => format!("{model}-n{size}-d{avg_degree}"),
            SourceSpec::Dataset { name, .. } => name.clone(),
        }
    }
}

/// A source ready to spawn runs: datasets are parsed once and cloned per run.
#[derive(Debug, Clone)]
pub enum PreparedSource {
    Model(GeneratorSpec),
    Dataset {
        loaded: Box<LoadedDataset>,
        cadence: u32,
    },
}

impl PreparedSource {
    pub fn prepare(source: &SourceSpec) -> Result<Self, HarnessError> {
        Ok(match source {
            SourceSpec::Model {
                model,
                size,
                avg_degree,
            } => {
                let spec = GeneratorSpec::new(*model, *size, *avg_degree, 0);
                spec.validate()?;
                PreparedSource::Model(spec)
            }
            SourceSpec::Dataset { spec, .. } => PreparedSource::Dataset {
                loaded: Box::new(ingest::load(spec)?),
                cadence: spec.cadence,
            },
        })
    }

    /// One run. `generator_seed` only affects model sources.
    pub fn run(&self, cfg: &RunConfig, generator_seed: u64) -> Result<RunRecord, HarnessError> {
        match self {
            PreparedSource::Model(spec) => {
                let spec = GeneratorSpec {
                    seed: generator_seed,
                    ..spec.clone()
                };
                let (inst, mut gen) = generators::warm_start(spec)?;
                Ok(controller::run(inst, &mut gen, cfg)?)
            }
            PreparedSource::Dataset { loaded, cadence } => {
                let cfg = RunConfig {
                    cadence: *cadence,
                    ..cfg.clone()
                };
                let mut stream: EventStream = loaded.stream.clone();
                Ok(controller::run(loaded.warmup.clone(), &mut stream, &cfg)?)
            }
        }
    }
}

/// Seeds for repetition `rep`: the network depends only on the repetition,
/// so every policy in a cell sees the same networks.
pub fn rep_seeds(base: u64, rep: usize) -> (u64, u64) {
    let generator = base.wrapping_add(rep as u64);
    let policy = splitmix(generator ^ 0x5eed_0f90_11c7);
    (generator, policy)
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentPlan {
    pub policies: Vec<PolicyKind>,
    pub radii: Vec<u32>,
    pub steps: Vec<usize>,
    pub sources: Vec<SourceSpec>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub epsilons: Vec<f64>,
    pub max_ticks: u64,
    pub out_dir: PathBuf,
    /// Worker threads; all cores when unset.
    pub workers: Option<usize>,
    pub sweep: SweepPlan,
    pub opinion: OpinionPlan,
}

/// Parameter sweeps over generated networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepPlan {
    pub models: Vec<Model>,
    pub degrees: Vec<usize>,
    pub sizes: Vec<usize>,
    pub radii: Vec<u32>,
    pub size: usize,
    pub avg_degree: usize,
    pub radius: u32,
    pub steps: usize,
}

/// Average-opinion tracking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpinionPlan {
    pub threshold: f64,
    pub radius: u32,
    pub steps: usize,
    pub max_ticks: u64,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            policies: PolicyKind::ALL.to_vec(),
            radii: vec![1, 2],
            steps: vec![4, 7, 10],
            sources: Model::ALL
                .iter()
                .map(|&m| SourceSpec::model(m, 1000, 6))
                .collect(),
            repetitions: 10,
            base_seed: 0,
            epsilons: vec![0.01],
            max_ticks: 1_000_000,
            out_dir: PathBuf::from("results"),
            workers: None,
            sweep: SweepPlan::default(),
            opinion: OpinionPlan::default(),
        }
    }
}

impl Default for SweepPlan {
    fn default() -> Self {
        SweepPlan {
            models: Model::ALL.to_vec(),
            degrees: vec![4, 6, 8, 10, 12, 14],
            sizes: vec![1000, 2000, 3000, 4000, 5000],
            radii: vec![1, 2, 3, 4],
            size: 5000,
            avg_degree: 6,
            radius: 2,
            steps: 4,
        }
    }
}

impl Default for OpinionPlan {
    fn default() -> Self {
        OpinionPlan {
            threshold: 0.8,
            radius: 2,
            steps: 4,
            max_ticks: 100_000,
        }
    }
}

impl ExperimentPlan {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Plan(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Plan(m.to_string()));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.policies.is_empty() {
            return bad("no policies");
        }
        if self.radii.contains(&0) || self.sweep.radii.contains(&0) || self.sweep.radius == 0 {
            return bad("radii must be at least 1");
        }
        if self.steps.contains(&0) || self.sweep.steps == 0 || self.opinion.steps == 0 {
            return bad("walk lengths must be at least 1");
        }
        if !(self.opinion.threshold > 0.0 && self.opinion.threshold <= 1.0) {
            return bad("opinion threshold must lie in (0, 1]");
        }
        Ok(())
    }

    fn base_config(&self) -> RunConfig {
        RunConfig {
            epsilons: self.epsilons.clone(),
            max_ticks: self.max_ticks,
            ..RunConfig::default()
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool, HarnessError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = self.workers {
            b = b.num_threads(w.max(1));
        }
        b.build().map_err(|e| HarnessError::Pool(e.to_string()))
    }
}

/// What the tables need from one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub generator_seed: u64,
    pub policy_seed: u64,
    pub dominated: bool,
    /// Domination cost in ticks.
    pub cost: Option<u64>,
    pub units: Option<usize>,
    pub t_epsilon: Vec<Option<u64>>,
    /// The dominating set passed an independent full-graph check.
    pub verified: bool,
    pub audit_violations: u64,
    pub ticks: u64,
}

impl RunSummary {
    fn of(rec: &RunRecord, generator_seed: u64, policy_seed: u64) -> Self {
        let r = rec.config.radius;
        RunSummary {
            generator_seed,
            policy_seed,
            dominated: rec.dominated(),
            cost: rec.domination_cost(),
            units: rec.domination.map(|d| d.units),
            t_epsilon: rec.centralization.iter().map(|c| c.t_epsilon).collect(),
            verified: rec
                .dominated_instance()
                .is_some_and(|inst| inst.access_dominates(r)),
            audit_violations: rec.audit_violations,
            ticks: rec.ticks.len() as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and population standard deviation; `None` for no samples.
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Some(MeanStd {
            mean,
            std: var.sqrt(),
        })
    }

    pub fn display(&self) -> String {
        format!("{:.1}±{:.1}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub source: String,
    pub policy: PolicyKind,
    pub radius: u32,
    pub steps: usize,
    pub runs: Vec<RunSummary>,
}

impl CellResult {
    pub fn costs(&self) -> Vec<f64> {
        self.runs
            .iter()
            .filter_map(|r| r.cost)
            .map(|c| c as f64)
            .collect()
    }

    pub fn cost(&self) -> Option<MeanStd> {
        MeanStd::of(&self.costs())
    }

    pub fn dominated_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.dominated).count()
    }
}

struct Job {
    cell: usize,
    cfg: RunConfig,
    generator_seed: u64,
}

fn run_jobs(
    plan: &ExperimentPlan,
    sources: &[PreparedSource],
    cells: &[(usize, RunConfig)],
) -> Result<Vec<Vec<RunSummary>>, HarnessError> {
    let jobs: Vec<Job> = cells
        .iter()
        .enumerate()
        .flat_map(|(cell, (_, cfg))| {
            (0..plan.repetitions).map(move |rep| {
                let (generator_seed, policy_seed) = rep_seeds(plan.base_seed, rep);
                Job {
                    cell,
                    cfg: RunConfig {
                        seed: policy_seed,
                        ..cfg.clone()
                    },
                    generator_seed,
                }
            })
        })
        .collect();
    let results: Vec<Result<RunSummary, HarnessError>> = plan.pool()?.install(|| {
        jobs.par_iter()
            .map(|job| {
                let source = &sources[cells[job.cell].0];
                let rec = source.run(&job.cfg, job.generator_seed)?;
                Ok(RunSummary::of(&rec, job.generator_seed, job.cfg.seed))
            })
            .collect()
    });
    let mut grouped = vec![Vec::new(); cells.len()];
    for (job, res) in jobs.iter().zip(results) {
        grouped[job.cell].push(res?);
    }
    Ok(grouped)
}

/// Prepares every source, skipping (with a notice) those that fail to load.
fn prepare_sources(sources: &[SourceSpec]) -> (Vec<(usize, PreparedSource)>, Vec<String>) {
    let mut ready = Vec::new();
    let mut skipped = Vec::new();
    for (i, s) in sources.iter().enumerate() {
        match PreparedSource::prepare(s) {
            Ok(p) => ready.push((i, p)),
            Err(e) => {
                let notice = format!("skipping source {}: {e}", s.label());
                warn!("{notice}");
                skipped.push(notice);
            }
        }
    }
    (ready, skipped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp1Result {
    pub cells: Vec<CellResult>,
    pub skipped: Vec<String>,
}

/// Domination cost per (source, policy, radius, walk length).
pub fn experiment1(plan: &ExperimentPlan) -> Result<Exp1Result, HarnessError> {
    plan.validate()?;
    let (ready, skipped) = prepare_sources(&plan.sources);
    let prepared: Vec<PreparedSource> = ready.iter().map(|(_, p)| p.clone()).collect();
    let mut keys = Vec::new();
    let mut cells = Vec::new();
    for (si, (orig, _)) in ready.iter().enumerate() {
        for &policy in &plan.policies {
            for &radius in &plan.radii {
                for &steps in &plan.steps {
                    keys.push((plan.sources[*orig].label(), policy, radius, steps));
                    cells.push((
                        si,
                        RunConfig {
                            policy,
                            radius,
                            steps,
                            ..plan.base_config()
                        },
                    ));
                }
            }
        }
    }
    info!(
        "experiment 1: {} cells x {} repetitions",
        cells.len(),
        plan.repetitions
    );
    let runs = run_jobs(plan, &prepared, &cells)?;
    let cells = keys
        .into_iter()
        .zip(runs)
        .map(|((source, policy, radius, steps), runs)| CellResult {
            source,
            policy,
            radius,
            steps,
            runs,
        })
        .collect();
    Ok(Exp1Result { cells, skipped })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.3}"))
}

pub fn exp1_csv(result: &Exp1Result) -> String {
    let mut out = String::from(
        "source,policy,r,k,runs,dominated,cost_mean,cost_std,cost,units_mean,t_epsilon_mean\n",
    );
    for c in &result.cells {
        let cost = c.cost();
        let units: Vec<f64> = c
            .runs
            .iter()
            .filter_map(|r| r.units)
            .map(|u| u as f64)
            .collect();
        let t_eps: Vec<f64> = c
            .runs
            .iter()
            .filter_map(|r| r.t_epsilon.first().copied().flatten())
            .map(|t| t as f64)
            .collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            c.source,
            c.policy,
            c.radius,
            c.steps,
            c.runs.len(),
            c.dominated_runs(),
            fmt_opt(cost.map(|m| m.mean)),
            fmt_opt(cost.map(|m| m.std)),
            cost.map_or_else(String::new, |m| m.display()),
            fmt_opt(MeanStd::of(&units).map(|m| m.mean)),
            fmt_opt(MeanStd::of(&t_eps).map(|m| m.mean)),
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Degree,
    Size,
    Radius,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 3] = [SweepAxis::Degree, SweepAxis::Size, SweepAxis::Radius];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Degree => "degree",
            SweepAxis::Size => "size",
            SweepAxis::Radius => "radius",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSeries {
    pub model: Model,
    pub axis: SweepAxis,
    /// `(axis value, cell)` in sweep order.
    pub points: Vec<(u64, CellResult)>,
}

impl SweepSeries {
    /// Mean cost per axis value for one policy.
    pub fn curve(&self, policy: PolicyKind) -> Vec<(u64, f64)> {
        self.points
            .iter()
            .filter(|(_, c)| c.policy == policy)
            .filter_map(|(x, c)| c.cost().map(|m| (*x, m.mean)))
            .collect()
    }
}

/// Domination cost against average degree, initial size and radius.
pub fn experiment2(
    plan: &ExperimentPlan,
    axes: &[SweepAxis],
) -> Result<Vec<SweepSeries>, HarnessError> {
    plan.validate()?;
    let sw = &plan.sweep;
    let mut prepared = Vec::new();
    let mut cells = Vec::new();
    let mut keys = Vec::new();
    for &model in &sw.models {
        for &axis in axes {
            let values: Vec<u64> = match axis {
                SweepAxis::Degree => sw.degrees.iter().map(|&d| d as u64).collect(),
                SweepAxis::Size => sw.sizes.iter().map(|&n| n as u64).collect(),
                SweepAxis::Radius => sw.radii.iter().map(|&r| r as u64).collect(),
            };
            for x in values {
                let (size, degree, radius) = match axis {
                    SweepAxis::Degree => (sw.size, x as usize, sw.radius),
                    SweepAxis::Size => (x as usize, sw.avg_degree, sw.radius),
                    SweepAxis::Radius => (sw.size, sw.avg_degree, x as u32),
                };
                let source = SourceSpec::model(model, size, degree);
                prepared.push(PreparedSource::prepare(&source)?);
                let si = prepared.len() - 1;
                for &policy in &plan.policies {
                    keys.push((model, axis, x, source.label(), policy, radius));
                    cells.push((
                        si,
                        RunConfig {
                            policy,
                            radius,
                            steps: sw.steps,
                            ..plan.base_config()
                        },
                    ));
                }
            }
        }
    }
    info!(
        "experiment 2: {} cells x {} repetitions",
        cells.len(),
        plan.repetitions
    );
    let runs = run_jobs(plan, &prepared, &cells)?;
    let mut series: Vec<SweepSeries> = Vec::new();
    for ((model, axis, x, source, policy, radius), runs) in keys.into_iter().zip(runs) {
        let cell = CellResult {
            source,
            policy,
            radius,
            steps: sw.steps,
            runs,
        };
        match series.last_mut() {
            Some(s) if s.model == model && s.axis == axis => s.points.push((x, cell)),
            _ => series.push(SweepSeries {
                model,
                axis,
                points: vec![(x, cell)],
            }),
        }
    }
    Ok(series)
}

pub fn sweep_csv(series: &SweepSeries) -> String {
    let mut out = format!(
        "{},policy,runs,dominated,cost_mean,cost_std,cost\n",
        series.axis.name()
    );
    for (x, c) in &series.points {
        let cost = c.cost();
        let _ = writeln!(
            out,
            "{x},{},{},{},{},{},{}",
            c.policy,
            c.runs.len(),
            c.dominated_runs(),
            fmt_opt(cost.map(|m| m.mean)),
            fmt_opt(cost.map(|m| m.std)),
            cost.map_or_else(String::new, |m| m.display()),
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionSeries {
    pub source: String,
    pub policy: PolicyKind,
    /// Per repetition: mean opinion after each tick.
    pub runs: Vec<Vec<f64>>,
    /// Per repetition: first tick with mean opinion at or above the threshold.
    pub reached: Vec<Option<u64>>,
}

impl OpinionSeries {
    /// Mean over repetitions, finished runs holding their last value.
    pub fn aligned_mean(&self, len: usize) -> Vec<f64> {
        (0..len)
            .map(|t| {
                let vals: Vec<f64> = self
                    .runs
                    .iter()
                    .filter_map(|r| r.get(t).or(r.last()).copied())
                    .collect();
                vals.iter().sum::<f64>() / vals.len().max(1) as f64
            })
            .collect()
    }

    /// Mean ticks to threshold over repetitions that reached it.
    pub fn ticks_to_threshold(&self) -> Option<MeanStd> {
        let xs: Vec<f64> = self.reached.iter().flatten().map(|&t| t as f64).collect();
        MeanStd::of(&xs)
    }
}

/// Mean opinion per tick and the first tick at or above the threshold.
type OpinionTrace = (Vec<f64>, Option<u64>);

fn opinion_run(
    source: &PreparedSource,
    cfg: &RunConfig,
    generator_seed: u64,
    threshold: f64,
) -> Result<OpinionTrace, HarnessError> {
    let rec = source.run(cfg, generator_seed)?;
    let means: Vec<f64> = rec.ticks.iter().map(|t| t.opinion.mean).collect();
    let reached = rec
        .ticks
        .iter()
        .find(|t| t.opinion.mean >= threshold)
        .map(|t| t.tick);
    Ok((means, reached))
}

/// Mean-opinion trajectories per (source, policy) until the threshold.
pub fn experiment3(plan: &ExperimentPlan) -> Result<Vec<OpinionSeries>, HarnessError> {
    plan.validate()?;
    let op = &plan.opinion;
    let (ready, skipped) = prepare_sources(&plan.sources);
    for notice in skipped {
        info!("{notice}");
    }
    let mut jobs = Vec::new();
    for (si, (orig, _)) in ready.iter().enumerate() {
        for &policy in &plan.policies {
            for rep in 0..plan.repetitions {
                let (generator_seed, policy_seed) = rep_seeds(plan.base_seed, rep);
                let cfg = RunConfig {
                    policy,
                    radius: op.radius,
                    steps: op.steps,
                    seed: policy_seed,
                    max_ticks: op.max_ticks,
                    tail_ticks: op.max_ticks,
                    stop_at_mean_opinion: Some(op.threshold),
                    epsilons: Vec::new(),
                    ..RunConfig::default()
                };
                jobs.push((si, *orig, policy, cfg, generator_seed));
            }
        }
    }
    let results: Vec<Result<OpinionTrace, HarnessError>> = plan.pool()?.install(|| {
        jobs.par_iter()
            .map(|(si, _, _, cfg, gs)| opinion_run(&ready[*si].1, cfg, *gs, op.threshold))
            .collect()
    });
    let mut series: Vec<OpinionSeries> = Vec::new();
    for ((_, orig, policy, _, _), res) in jobs.iter().zip(results) {
        let (means, reached) = res?;
        let source = plan.sources[*orig].label();
        match series.last_mut() {
            Some(s) if s.source == source && s.policy == *policy => {
                s.runs.push(means);
                s.reached.push(reached);
            }
            _ => series.push(OpinionSeries {
                source,
                policy: *policy,
                runs: vec![means],
                reached: vec![reached],
            }),
        }
    }
    Ok(series)
}

/// Wide per-tick table for one source: `tick,<policy>...`.
pub fn opinion_csv(series: &[&OpinionSeries]) -> String {
    let len = series
        .iter()
        .flat_map(|s| s.runs.iter().map(Vec::len))
        .max()
        .unwrap_or(0);
    let mut out = String::from("tick");
    for s in series {
        let _ = write!(out, ",{}", s.policy);
    }
    out.push('\n');
    let means: Vec<Vec<f64>> = series.iter().map(|s| s.aligned_mean(len)).collect();
    for t in 0..len {
        let _ = write!(out, "{}", t + 1);
        for m in &means {
            let _ = write!(out, ",{:.6}", m[t]);
        }
        out.push('\n');
    }
    out
}

pub fn threshold_csv(series: &[OpinionSeries]) -> String {
    let mut out = String::from("source,policy,runs,reached,ticks_mean,ticks_std\n");
    for s in series {
        let m = s.ticks_to_threshold();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.source,
            s.policy,
            s.runs.len(),
            s.reached.iter().flatten().count(),
            fmt_opt(m.map(|m| m.mean)),
            fmt_opt(m.map(|m| m.std)),
        );
    }
    out
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, HarnessError> {
    let io = |source| HarnessError::Io {
        path: dir.join(name),
        source,
    };
    fs::create_dir_all(dir).map_err(io)?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(io)?;
    Ok(path)
}

/// Writes every table an experiment produces; returns the paths.
pub fn write_exp1(dir: &Path, result: &Exp1Result) -> Result<Vec<PathBuf>, HarnessError> {
    Ok(vec![write_file(dir, "exp1.csv", &exp1_csv(result))?])
}

pub fn write_exp2(dir: &Path, series: &[SweepSeries]) -> Result<Vec<PathBuf>, HarnessError> {
    series
        .iter()
        .map(|s| {
            write_file(
                dir,
                &format!("exp2_{}_{}.csv", s.model, s.axis.name()),
                &sweep_csv(s),
            )
        })
        .collect()
}

pub fn write_exp3(dir: &Path, series: &[OpinionSeries]) -> Result<Vec<PathBuf>, HarnessError> {
    let mut paths = vec![write_file(
        dir,
        "exp3_threshold.csv",
        &threshold_csv(series),
    )?];
    let mut sources: Vec<&str> = series.iter().map(|s| s.source.as_str()).collect();
    sources.dedup();
    for src in sources {
        let group: Vec<&OpinionSeries> = series.iter().filter(|s| s.source == src).collect();
        paths.push(write_file(
            dir,
            &format!("exp3_{src}.csv"),
            &opinion_csv(&group),
        )?);
    }
    Ok(paths)
}

/// One line of the `verify` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Cross-checks the fast paths against the oracle.
pub fn verify(instances: usize, seed: u64) -> Vec<Check> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..instances {
        let (inst, region, r) = random_instance(&mut rng, 15);
        let (small, _) = SmallGraph::from_instance(&inst).expect("at most 15 nodes");
        let fast = dynamics::step_opinions(&inst, &region);
        let slow = oracle::reference_degroot_step(&small, inst.opinions(), inst.access_mask(), r);
        for (a, b) in fast.iter().zip(&slow) {
            worst = worst.max((a - b).abs());
        }
    }
    checks.push(Check {
        name: "opinion update matches reference".into(),
        passed: worst <= 1e-12,
        detail: format!("{instances} instances, max abs diff {worst:.3e}"),
    });

    let fixture = fixtures::ring_of_spiders();
    let (small, _) = SmallGraph::from_instance(&fixture).expect("33 nodes");
    let (minimum, _) = oracle::min_dominating_set(&small, 2);
    for kind in PolicyKind::ALL {
        let cfg = RunConfig {
            policy: kind,
            seed: rng.gen(),
            seed_node: Some(NodeId(0)),
            ..RunConfig::default()
        };
        let outcome = controller::run(fixture.clone(), &mut crate::source::Frozen, &cfg);
        let (passed, detail) = match outcome {
            Ok(rec) => {
                let units = rec.domination.map(|d| d.units);
                let ok = units.is_some_and(|u| u >= minimum)
                    && rec
                        .dominated_instance()
                        .is_some_and(|i| i.access_dominates(2))
                    && rec.audit_violations == 0;
                (ok, format!("units {units:?}, oracle minimum {minimum}"))
            }
            Err(e) => (false, e.to_string()),
        };
        checks.push(Check {
            name: format!("{kind} dominates the spider ring"),
            passed,
            detail,
        });
    }
    checks
}

/// A random graph on at most `max_n` nodes with random opinions and access units.
pub fn random_instance<R: rand::Rng>(
    rng: &mut R,
    max_n: usize,
) -> (NetworkInstance, Vec<bool>, u32) {
    let n = rng.gen_range(2..=max_n as u64);
    let p = rng.gen_range(0.1..0.6);
    let mut inst = NetworkInstance::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                inst.apply_event(&crate::graph::GraphEvent::edge(u, v, 0))
                    .expect("u < v");
            }
        }
    }
    if inst.node_count() == 0 {
        inst.apply_event(&crate::graph::GraphEvent::edge(0u64, 1u64, 0))
            .expect("distinct");
    }
    let opinions: Vec<f64> = (0..inst.node_count()).map(|_| rng.gen::<f64>()).collect();
    inst.set_opinions(opinions);
    for i in 0..inst.node_count() {
        if rng.gen_bool(0.2) {
            inst.add_access_at(i);
        }
    }
    let r = rng.gen_range(1..=3);
    let region = inst.graph().ball_mask(inst.access_indices().to_vec(), r);
    (inst, region, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_plan() -> ExperimentPlan {
        ExperimentPlan {
            policies: vec![PolicyKind::Lran, PolicyKind::Bdeg],
            radii: vec![2],
            steps: vec![4, 7],
            sources: vec![SourceSpec::model(Model::Ba, 60, 4)],
            repetitions: 3,
            workers: Some(2),
            ..ExperimentPlan::default()
        }
    }

    #[test]
    fn mean_std_is_population() {
        let m = MeanStd::of(&[1.0, 3.0]).unwrap();
        assert_eq!((m.mean, m.std), (2.0, 1.0));
        assert_eq!(m.display(), "2.0±1.0");
        assert!(MeanStd::of(&[]).is_none());
    }

    #[test]
    fn seeds_are_distinct() {
        let seeds: std::collections::BTreeSet<u64> = (0..100)
            .flat_map(|r| {
                let (a, b) = rep_seeds(7, r);
                [a, b]
            })
            .collect();
        assert_eq!(seeds.len(), 200);
    }

    #[test]
    fn exp1_shape_and_determinism() {
        let plan = small_plan();
        let a = experiment1(&plan).unwrap();
        assert_eq!(a.cells.len(), 2 * 2);
        assert!(a
            .cells
            .iter()
            .all(|c| c.runs.len() == 3 && c.dominated_runs() == 3));
        assert!(a.cells.iter().flat_map(|c| &c.runs).all(|r| r.verified));
        let b = experiment1(&ExperimentPlan {
            workers: Some(1),
            ..plan
        })
        .unwrap();
        assert_eq!(exp1_csv(&a), exp1_csv(&b));
        assert_eq!(exp1_csv(&a).lines().count(), 5);
        // lran ignores k.
        let lran: Vec<&CellResult> = a
            .cells
            .iter()
            .filter(|c| c.policy == PolicyKind::Lran)
            .collect();
        assert_eq!(lran[0].costs(), lran[1].costs());
    }

    #[test]
    fn missing_dataset_is_skipped() {
        let plan = ExperimentPlan {
            sources: vec![SourceSpec::Dataset {
                name: "absent".into(),
                spec: DatasetSpec::new("/nonexistent/edges.txt", 10, 1),
            }],
            ..small_plan()
        };
        let res = experiment1(&plan).unwrap();
        assert!(res.cells.is_empty());
        assert_eq!(res.skipped.len(), 1);
    }

    #[test]
    fn plan_toml_round_trip() {
        let text = r#"
            policies = ["bdeg", "lran"]
            radii = [2]
            repetitions = 4
            [[sources]]
            kind = "model"
            model = "sb"
            size = 100
            avg_degree = 6
            [[sources]]
            kind = "dataset"
            name = "tiny"
            path = "edges.txt"
            initial_stamp = 3
            cadence = 2
            [sweep]
            degrees = [4, 8]
            [opinion]
            threshold = 0.9
        "#;
        let plan = ExperimentPlan::from_toml(text).unwrap();
        assert_eq!(plan.policies, vec![PolicyKind::Bdeg, PolicyKind::Lran]);
        assert_eq!(plan.sources[0], SourceSpec::model(Model::Sb, 100, 6));
        match &plan.sources[1] {
            SourceSpec::Dataset { name, spec } => {
                assert_eq!(name, "tiny");
                assert_eq!((spec.initial_stamp, spec.cadence), (3, 2));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(plan.sweep.degrees, vec![4, 8]);
        assert_eq!(plan.sweep.radii, vec![1, 2, 3, 4]);
        assert_eq!(plan.opinion.threshold, 0.9);
        assert!(ExperimentPlan::from_toml("repetitions = \"x\"").is_err());
    }

    #[test]
    fn exp2_one_csv_per_model_axis() {
        let plan = ExperimentPlan {
            sweep: SweepPlan {
                models: vec![Model::Ba, Model::Rc],
                degrees: vec![4, 6],
                sizes: vec![50, 80],
                radii: vec![1, 2],
                size: 60,
                ..SweepPlan::default()
            },
            ..small_plan()
        };
        let series = experiment2(&plan, &SweepAxis::ALL).unwrap();
        assert_eq!(series.len(), 6);
        let dir = tempfile::tempdir().unwrap();
        let paths = write_exp2(dir.path(), &series).unwrap();
        assert_eq!(paths.len(), 6);
        assert!(paths.iter().any(|p| p.ends_with("exp2_rc_radius.csv")));
        assert_eq!(series[0].curve(PolicyKind::Bdeg).len(), 2);
    }

    #[test]
    fn exp3_series_are_aligned() {
        let plan = ExperimentPlan {
            opinion: OpinionPlan {
                threshold: 0.5,
                ..OpinionPlan::default()
            },
            ..small_plan()
        };
        let series = experiment3(&plan).unwrap();
        assert_eq!(series.len(), 2);
        assert!(series.iter().all(|s| s.reached.iter().all(Option::is_some)));
        let refs: Vec<&OpinionSeries> = series.iter().collect();
        let csv = opinion_csv(&refs);
        let widths: Vec<usize> = csv.lines().map(|l| l.split(',').count()).collect();
        assert!(widths.iter().all(|&w| w == 3));
    }

    #[test]
    fn verify_passes() {
        let checks = verify(50, 1);
        assert!(checks.iter().all(|c| c.passed), "{checks:#?}");
    }
}

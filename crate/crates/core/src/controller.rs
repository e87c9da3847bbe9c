//! The domination-driven centralization loop and its cost metrics.
//!
//! Each tick: apply `cadence` timestamps of events, then select (until the
//! access set dominates, one prowl per tick; afterwards every node that
//! arrives outside the accessible region is committed directly), then run one
//! synchronous opinion update with the new access set.

use std::io::Write;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::Coverage;
use crate::dynamics::{self, DynamicsError, OpinionSummary};
use crate::graph::{GraphError, NetworkInstance, NodeId};
use crate::observation::{replay_audit, AuditEntry, FirewallViolation, PartialView};
use crate::prowl::{PolicyKind, ProwlTrace, Prowler, SelectError, SelectionPolicy};
use crate::source::EventSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub radius: u32,
    /// Maximum walk length k.
    pub steps: usize,
    pub policy: PolicyKind,
    /// Source timestamps consumed per tick.
    pub cadence: u32,
    pub epsilons: Vec<f64>,
    pub seed: u64,
    pub max_ticks: u64,
    /// Ticks to keep running after domination.
    pub tail_ticks: u64,
    /// First access unit; a uniformly random node when unset or absent.
    pub seed_node: Option<NodeId>,
    /// Stop as soon as the mean opinion reaches this value.
    pub stop_at_mean_opinion: Option<f64>,
    /// Replay every selection's audit log against the full graph.
    pub audit: bool,
    pub keep_audit_log: bool,
    pub convergence_max_steps: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            radius: 2,
            steps: 4,
            policy: PolicyKind::Bdeg,
            cadence: 1,
            epsilons: vec![0.01],
            seed: 0,
            max_ticks: 1_000_000,
            tail_ticks: 0,
            seed_node: None,
            stop_at_mean_opinion: None,
            audit: true,
            keep_audit_log: false,
            convergence_max_steps: 1_000_000,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ControllerError> {
        let bad = |m: &str| Err(ControllerError::InvalidConfig(m.to_string()));
        if self.radius < 1 {
            return bad("radius must be at least 1");
        }
        if self.steps < 1 {
            return bad("walk length k must be at least 1");
        }
        if self.cadence < 1 {
            return bad("cadence must be at least 1");
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return bad("every epsilon must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("tick {tick}: firewall violation: {violation}")]
    Firewall {
        tick: u64,
        violation: FirewallViolation,
    },
    #[error("tick {tick}: selection failed: {source}")]
    Select { tick: u64, source: SelectError },
    #[error("tick {tick}: policy returned {node}, which is not a new access unit")]
    PolicyContract { tick: u64, node: NodeId },
    #[error("the run never reached a dominating access set")]
    NotDominated,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("failed to write output: {0}")]
    Output(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub nodes: usize,
    pub edges: usize,
    pub new_nodes: usize,
    pub access_units: usize,
    /// `|N_t|`
    pub access_nb: usize,
    /// `|N̄_t|`
    pub anti_nb: usize,
    /// `|N̄_{t-1}|`, measured at the end of the previous tick.
    pub prev_anti_nb: usize,
    /// `|N_t \ N_{t-1}|`
    pub new_access_nb: usize,
    /// A prowl (or the first pick) ran this tick.
    pub selected: bool,
    pub added: Vec<NodeId>,
    pub dominating: bool,
    pub unit_growth_violation: bool,
    pub opinion: OpinionSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominationPoint {
    pub tick: u64,
    pub units: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralizationPoint {
    pub epsilon: f64,
    /// First tick at which every opinion is at least `1 - epsilon`.
    pub tick: Option<u64>,
    /// `|S_t|` at that tick.
    pub units: Option<usize>,
    /// Update steps needed on the frozen instance at the domination tick.
    pub t_epsilon: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Dominated,
    OpinionThreshold,
    MaxTicks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub policy_name: String,
    pub outcome: RunOutcome,
    pub initial_nodes: usize,
    pub initial_edges: usize,
    pub ticks: Vec<TickRecord>,
    pub domination: Option<DominationPoint>,
    pub centralization: Vec<CentralizationPoint>,
    pub traces: Vec<ProwlTrace>,
    pub frozen_from: Option<u64>,
    pub unit_growth_violations: u64,
    pub audit_violations: u64,
    pub extended_bset_query: bool,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub audit_log: Vec<AuditEntry>,
    #[serde(skip)]
    dominated_instance: Option<NetworkInstance>,
}

impl RunRecord {
    pub fn dominated(&self) -> bool {
        self.domination.is_some()
    }

    /// Domination cost in ticks (selection opportunities).
    pub fn domination_cost(&self) -> Option<u64> {
        self.domination.map(|d| d.tick)
    }

    /// The instance `G_δ` right after the dominating selection.
    pub fn dominated_instance(&self) -> Option<&NetworkInstance> {
        self.dominated_instance.as_ref()
    }

    pub fn final_access_units(&self) -> usize {
        self.ticks.last().map_or(0, |t| t.access_units)
    }

    /// Ticks, from the first dominating one on, where domination was lost.
    pub fn domination_lapses(&self) -> Vec<u64> {
        let Some(d) = self.domination else {
            return Vec::new();
        };
        self.ticks
            .iter()
            .filter(|t| t.tick >= d.tick && !t.dominating)
            .map(|t| t.tick)
            .collect()
    }

    fn pre_domination_selections(&self) -> impl Iterator<Item = &TickRecord> {
        let limit = self.domination.map_or(u64::MAX, |d| d.tick);
        self.ticks
            .iter()
            .filter(move |t| t.selected && t.tick <= limit)
    }

    /// Ticks that added access units but grew the access neighborhood by
    /// fewer than two nodes.
    pub fn growth_violations(&self) -> Vec<u64> {
        self.ticks
            .iter()
            .filter(|t| !t.added.is_empty() && t.new_access_nb < 2)
            .map(|t| t.tick)
            .collect()
    }

    /// Ticks violating `|N̄_{t-1}| - |N̄_t| >= |N_t \ N_{t-1}| - 1`.
    pub fn anti_neighborhood_violations(&self) -> Vec<u64> {
        self.ticks
            .iter()
            .filter(|t| (t.prev_anti_nb as i64 - t.anti_nb as i64) < t.new_access_nb as i64 - 1)
            .map(|t| t.tick)
            .collect()
    }

    /// Pre-domination selection ticks where the selections still needed
    /// exceeded `|N̄_t|`.
    pub fn cost_bound_violations(&self) -> Vec<u64> {
        let Some(d) = self.domination else {
            return Vec::new();
        };
        let selection_ticks: Vec<u64> = self.pre_domination_selections().map(|t| t.tick).collect();
        self.pre_domination_selections()
            .filter(|t| {
                let remaining = selection_ticks
                    .iter()
                    .filter(|&&s| s > t.tick && s <= d.tick)
                    .count();
                remaining > t.anti_nb
            })
            .map(|t| t.tick)
            .collect()
    }

    /// Whether `|S_t|` never decreased.
    pub fn access_monotone(&self) -> bool {
        self.ticks
            .windows(2)
            .all(|w| w[0].access_units <= w[1].access_units)
    }

    pub fn to_json(&self) -> Result<String, ControllerError> {
        serde_json::to_string_pretty(self).map_err(|e| ControllerError::Output(e.to_string()))
    }

    /// Per-tick series as CSV.
    pub fn write_ticks_csv<W: Write>(&self, out: W) -> Result<(), ControllerError> {
        let err = |e: csv::Error| ControllerError::Output(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "tick",
            "nodes",
            "edges",
            "access_units",
            "anti_nb",
            "dominating",
            "min_opinion",
            "mean_opinion",
            "max_opinion",
        ])
        .map_err(err)?;
        for t in &self.ticks {
            w.write_record([
                t.tick.to_string(),
                t.nodes.to_string(),
                t.edges.to_string(),
                t.access_units.to_string(),
                t.anti_nb.to_string(),
                u8::from(t.dominating).to_string(),
                t.opinion.min.to_string(),
                t.opinion.mean.to_string(),
                t.opinion.max.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush()
            .map_err(|e| ControllerError::Output(e.to_string()))
    }
}

/// Update steps for all opinions on the frozen dominated instance to reach `1 - epsilon`.
pub fn compute_t_epsilon(record: &RunRecord, epsilon: f64) -> Result<u64, ControllerError> {
    let inst = record
        .dominated_instance
        .as_ref()
        .ok_or(ControllerError::NotDominated)?;
    let conv = dynamics::run_to_convergence(
        inst,
        record.config.radius,
        epsilon,
        record.config.convergence_max_steps,
    )?;
    Ok(conv.steps)
}

/// Runs the built-in policy named in `cfg`.
pub fn run(
    initial: NetworkInstance,
    source: &mut dyn EventSource,
    cfg: &RunConfig,
) -> Result<RunRecord, ControllerError> {
    let mut policy = Prowler::new(cfg.policy, cfg.steps.max(1), cfg.seed);
    run_with_policy(initial, source, cfg, &mut policy)
}

pub fn run_with_policy(
    initial: NetworkInstance,
    source: &mut dyn EventSource,
    cfg: &RunConfig,
    policy: &mut dyn SelectionPolicy,
) -> Result<RunRecord, ControllerError> {
    cfg.validate()?;
    let radius = cfg.radius;
    let mut inst = initial;
    inst.set_time(0);
    let mut cov = Coverage::with_sources(inst.graph(), inst.access_indices(), radius);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);

    let mut record = RunRecord {
        config: cfg.clone(),
        policy_name: policy.name(),
        outcome: RunOutcome::MaxTicks,
        initial_nodes: inst.node_count(),
        initial_edges: inst.edge_count(),
        ticks: Vec::new(),
        domination: None,
        centralization: cfg
            .epsilons
            .iter()
            .map(|&epsilon| CentralizationPoint {
                epsilon,
                tick: None,
                units: None,
                t_epsilon: None,
            })
            .collect(),
        traces: Vec::new(),
        frozen_from: None,
        unit_growth_violations: 0,
        audit_violations: 0,
        extended_bset_query: false,
        warnings: Vec::new(),
        audit_log: Vec::new(),
        dominated_instance: None,
    };

    let mut prev_nb = cov.access_nbhd_count();
    let mut prev_anti = inst.node_count() - prev_nb;
    let mut tick = 0u64;

    while tick < cfg.max_ticks {
        tick += 1;
        inst.set_time(tick);

        let mut new_nodes = Vec::new();
        for _ in 0..cfg.cadence {
            let Some(events) = source.next_stamp() else {
                record.frozen_from.get_or_insert(tick);
                break;
            };
            for ev in &events {
                let eff = inst.apply_event(ev)?;
                cov.sync_nodes(inst.graph());
                new_nodes.extend(eff.new_nodes());
                if let Some((a, b)) = eff.edge {
                    cov.on_edge(inst.graph(), a, b);
                }
            }
        }
        let unit_violation = new_nodes.len() > 1;
        if unit_violation {
            record.unit_growth_violations += 1;
            if record.unit_growth_violations == 1 && policy_is_prowling(cfg) {
                let msg = format!(
                    "tick {tick}: {} nodes arrived in one tick; growth is not unit",
                    new_nodes.len()
                );
                warn!("{msg}");
                record.warnings.push(msg);
            }
        }

        let n = inst.node_count();
        let mut added = Vec::new();
        let mut selected = false;
        if record.domination.is_none() {
            if n > 0 && !cov.is_dominating(n) {
                let idx = if inst.access_count() == 0 {
                    cfg.seed_node
                        .and_then(|id| inst.graph().index_of(id))
                        .unwrap_or_else(|| rng.gen_range(0..n))
                } else {
                    select_one(&inst, &cov, tick, cfg, policy, &mut record)?
                };
                inst.add_access_at(idx);
                cov.add_source(inst.graph(), idx);
                added.push(inst.graph().id(idx));
                selected = true;
            }
            if n > 0 && cov.is_dominating(n) {
                record.domination = Some(DominationPoint {
                    tick,
                    units: inst.access_count(),
                });
                record.dominated_instance = Some(inst.clone());
            }
        } else {
            let outside: Vec<usize> = new_nodes
                .iter()
                .copied()
                .filter(|&v| !cov.in_region(v))
                .collect();
            for v in outside {
                if inst.add_access_at(v) {
                    cov.add_source(inst.graph(), v);
                    added.push(inst.graph().id(v));
                }
            }
        }

        let next = dynamics::step_with(inst.graph(), inst.opinions(), inst.access_mask(), |v| {
            cov.in_region(v)
        });
        inst.set_opinions(next);
        let summary = OpinionSummary::of(inst.opinions()).unwrap_or(OpinionSummary {
            min: 0.0,
            mean: 0.0,
            max: 0.0,
        });

        let nb = cov.access_nbhd_count();
        let anti = n - nb;
        record.ticks.push(TickRecord {
            tick,
            nodes: n,
            edges: inst.edge_count(),
            new_nodes: new_nodes.len(),
            access_units: inst.access_count(),
            access_nb: nb,
            anti_nb: anti,
            prev_anti_nb: prev_anti,
            new_access_nb: nb - prev_nb,
            selected,
            added,
            dominating: n > 0 && cov.is_dominating(n),
            unit_growth_violation: unit_violation,
            opinion: summary,
        });
        prev_nb = nb;
        prev_anti = anti;

        for point in record.centralization.iter_mut() {
            if point.tick.is_none() && n > 0 && summary.min >= 1.0 - point.epsilon {
                point.tick = Some(tick);
                point.units = Some(inst.access_count());
            }
        }

        if let Some(d) = record.domination {
            if tick - d.tick >= cfg.tail_ticks {
                record.outcome = RunOutcome::Dominated;
                break;
            }
        }
        if let Some(threshold) = cfg.stop_at_mean_opinion {
            if n > 0 && summary.mean >= threshold {
                record.outcome = RunOutcome::OpinionThreshold;
                break;
            }
        }
    }

    if record.outcome == RunOutcome::MaxTicks && record.dominated() {
        record.outcome = RunOutcome::Dominated;
    }
    if record.dominated() {
        for i in 0..record.centralization.len() {
            let eps = record.centralization[i].epsilon;
            match compute_t_epsilon(&record, eps) {
                Ok(steps) => record.centralization[i].t_epsilon = Some(steps),
                Err(e) => record.warnings.push(format!("t_epsilon({eps}): {e}")),
            }
        }
    }
    Ok(record)
}

fn policy_is_prowling(cfg: &RunConfig) -> bool {
    cfg.policy.is_prowling()
}

fn select_one(
    inst: &NetworkInstance,
    cov: &Coverage,
    tick: u64,
    cfg: &RunConfig,
    policy: &mut dyn SelectionPolicy,
    record: &mut RunRecord,
) -> Result<usize, ControllerError> {
    let mut view = PartialView::new(inst.graph(), cov, inst.opinions(), tick);
    let trace = policy.select(&mut view).map_err(|e| match e {
        SelectError::Firewall(violation) => ControllerError::Firewall { tick, violation },
        other => ControllerError::Select {
            tick,
            source: other,
        },
    })?;
    record.extended_bset_query |= view.used_extended_bset_query();
    let log = view.into_audit_log();
    if cfg.audit {
        if let Err(v) = replay_audit(&log, inst.graph(), &inst.access_units(), cfg.radius) {
            record.audit_violations += 1;
            let msg = format!("tick {tick}: audit replay rejected the query log: {v}");
            warn!("{msg}");
            record.warnings.push(msg);
        }
    }
    let idx = inst
        .graph()
        .index_of(trace.chosen)
        .filter(|&i| !inst.is_access_unit(i))
        .ok_or(ControllerError::PolicyContract {
            tick,
            node: trace.chosen,
        })?;
    if cfg.keep_audit_log {
        record.audit_log.extend(log);
    }
    record.traces.push(trace);
    Ok(idx)
}

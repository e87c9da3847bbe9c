//! The controller's window onto the network during one selection.
//!
//! A [`PartialView`] knows the accessible region of the previous access units
//! together with every edge attached to it. Anything beyond has to be obtained
//! by inquiring the 1⁺-neighborhood of a node the walk has legitimately
//! reached. Every query is appended to an audit log that [`replay_audit`] can
//! re-check against the full graph.

use std::collections::{HashMap, HashSet, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::Coverage;
use crate::graph::{Graph, NodeId};

/// `r ∸ 1`: `r - 1` for `r >= 2`, otherwise 1.
pub fn radius_less_one(radius: u32) -> u32 {
    radius.saturating_sub(1).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Region,
    Boundary,
    Frontier,
    Inquire,
    Degree,
    NDegree,
    InRegion,
    InBset,
    IsAccessUnit,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub tick: u64,
    pub kind: QueryKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subject: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborInfo {
    pub node: NodeId,
    pub degree: usize,
    pub opinion: f64,
    /// Whether the neighbor lies in the accessible region (the region is known).
    pub in_region: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodReport {
    pub center: NodeId,
    pub degree: usize,
    pub opinion: f64,
    pub neighbors: Vec<NeighborInfo>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FirewallViolation {
    #[error("{kind:?} query on {node} is outside the observable region")]
    Illegal { kind: QueryKind, node: NodeId },
    #[error("node {0} does not exist")]
    Unknown(NodeId),
    #[error("exterior fallback requested while the region still has a boundary")]
    PrematureFallback,
}

/// Read access for one selection call at tick `tick`.
pub struct PartialView<'a> {
    graph: &'a Graph,
    coverage: &'a Coverage,
    opinions: &'a [f64],
    tick: u64,
    revealed: HashSet<usize>,
    inquired: HashSet<usize>,
    bset_cache: HashMap<usize, bool>,
    log: Vec<AuditEntry>,
    extended_bset: bool,
}

impl<'a> PartialView<'a> {
    /// `coverage` must describe the previous access set on the current graph.
    pub fn new(graph: &'a Graph, coverage: &'a Coverage, opinions: &'a [f64], tick: u64) -> Self {
        PartialView {
            graph,
            coverage,
            opinions,
            tick,
            revealed: HashSet::new(),
            inquired: HashSet::new(),
            bset_cache: HashMap::new(),
            log: Vec::new(),
            extended_bset: false,
        }
    }

    pub fn radius(&self) -> u32 {
        self.coverage.radius()
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn audit_log(&self) -> &[AuditEntry] {
        &self.log
    }

    pub fn into_audit_log(self) -> Vec<AuditEntry> {
        self.log
    }

    /// Set once a B-set membership test needed a search deeper than one hop.
    pub fn used_extended_bset_query(&self) -> bool {
        self.extended_bset
    }

    fn record(&mut self, kind: QueryKind, subject: Option<usize>) {
        self.log.push(AuditEntry {
            tick: self.tick,
            kind,
            subject: subject.map(|i| self.graph.id(i)),
        });
    }

    fn idx(&self, id: NodeId) -> Result<usize, FirewallViolation> {
        self.graph
            .index_of(id)
            .ok_or(FirewallViolation::Unknown(id))
    }

    fn adjacent_to_region(&self, v: usize) -> bool {
        self.graph
            .neighbors(v)
            .iter()
            .any(|&u| self.coverage.in_region(u))
    }

    /// Nodes whose identity is known: the region, its outer rim, and anything
    /// named in an inquiry report.
    fn visible(&self, v: usize) -> bool {
        self.coverage.in_region(v) || self.revealed.contains(&v) || self.adjacent_to_region(v)
    }

    fn degree_known(&self, v: usize) -> bool {
        self.coverage.in_region(v) || self.revealed.contains(&v) || self.inquired.contains(&v)
    }

    fn require(&self, ok: bool, kind: QueryKind, v: usize) -> Result<(), FirewallViolation> {
        if ok {
            Ok(())
        } else {
            Err(FirewallViolation::Illegal {
                kind,
                node: self.graph.id(v),
            })
        }
    }

    /// `AC_t(S_{t-1})`, in node arrival order.
    pub fn accessible_region(&mut self) -> Vec<NodeId> {
        self.record(QueryKind::Region, None);
        (0..self.graph.node_count())
            .filter(|&v| self.coverage.in_region(v))
            .map(|v| self.graph.id(v))
            .collect()
    }

    /// Region nodes with at least one edge leaving the region.
    pub fn boundary_nodes(&mut self) -> Vec<NodeId> {
        self.record(QueryKind::Boundary, None);
        (0..self.graph.node_count())
            .filter(|&v| {
                self.coverage.in_region(v)
                    && self
                        .graph
                        .neighbors(v)
                        .iter()
                        .any(|&u| !self.coverage.in_region(u))
            })
            .map(|v| self.graph.id(v))
            .collect()
    }

    /// Nodes outside the region adjacent to it, without duplicates.
    pub fn frontier(&mut self) -> Vec<NodeId> {
        self.record(QueryKind::Frontier, None);
        let mut seen = vec![false; self.graph.node_count()];
        let mut out = Vec::new();
        for v in 0..self.graph.node_count() {
            if !self.coverage.in_region(v) {
                continue;
            }
            for &u in self.graph.neighbors(v) {
                if !self.coverage.in_region(u) && !seen[u] {
                    seen[u] = true;
                    out.push(u);
                }
            }
        }
        out.into_iter().map(|v| self.graph.id(v)).collect()
    }

    /// The 1⁺-neighborhood of `id`: its neighbors with their true degrees and opinions.
    pub fn inquire(&mut self, id: NodeId) -> Result<NeighborhoodReport, FirewallViolation> {
        let v = self.idx(id)?;
        self.require(self.visible(v), QueryKind::Inquire, v)?;
        self.record(QueryKind::Inquire, Some(v));
        self.inquired.insert(v);
        let neighbors = self
            .graph
            .neighbors(v)
            .iter()
            .map(|&u| {
                self.revealed.insert(u);
                NeighborInfo {
                    node: self.graph.id(u),
                    degree: self.graph.degree_at(u),
                    opinion: self.opinions[u],
                    in_region: self.coverage.in_region(u),
                }
            })
            .collect();
        Ok(NeighborhoodReport {
            center: id,
            degree: self.graph.degree_at(v),
            opinion: self.opinions[v],
            neighbors,
        })
    }

    pub fn degree(&mut self, id: NodeId) -> Result<usize, FirewallViolation> {
        let v = self.idx(id)?;
        self.require(self.degree_known(v), QueryKind::Degree, v)?;
        self.record(QueryKind::Degree, Some(v));
        Ok(self.graph.degree_at(v))
    }

    /// Neighbors of `id` outside the access neighborhood of the previous access
    /// set. Needs the full neighbor list: region nodes or inquired nodes only.
    pub fn n_degree(&mut self, id: NodeId) -> Result<usize, FirewallViolation> {
        let v = self.idx(id)?;
        let ok = self.coverage.in_region(v) || self.inquired.contains(&v);
        self.require(ok, QueryKind::NDegree, v)?;
        self.record(QueryKind::NDegree, Some(v));
        Ok(self.coverage.n_degree(self.graph, v))
    }

    pub fn in_region(&mut self, id: NodeId) -> Result<bool, FirewallViolation> {
        let v = self.idx(id)?;
        self.require(self.visible(v), QueryKind::InRegion, v)?;
        self.record(QueryKind::InRegion, Some(v));
        Ok(self.coverage.in_region(v))
    }

    pub fn is_access_unit(&mut self, id: NodeId) -> Result<bool, FirewallViolation> {
        let v = self.idx(id)?;
        self.require(self.visible(v), QueryKind::IsAccessUnit, v)?;
        self.record(QueryKind::IsAccessUnit, Some(v));
        Ok(self.coverage.is_source(v))
    }

    /// Whether `id` lies within distance `r ∸ 1` of the exterior set.
    pub fn in_bset(&mut self, id: NodeId) -> Result<bool, FirewallViolation> {
        let v = self.idx(id)?;
        self.require(self.visible(v), QueryKind::InBset, v)?;
        self.record(QueryKind::InBset, Some(v));
        if let Some(&b) = self.bset_cache.get(&v) {
            return Ok(b);
        }
        let depth = radius_less_one(self.radius());
        if depth > 1 {
            self.extended_bset = true;
        }
        let b = near_exterior(self.graph, self.coverage, v, depth);
        self.bset_cache.insert(v, b);
        Ok(b)
    }

    /// The whole exterior set. Only granted when the region has no boundary,
    /// i.e. the remaining exterior is cut off from the access units.
    pub fn fallback_exterior(&mut self) -> Result<Vec<NodeId>, FirewallViolation> {
        let has_boundary = (0..self.graph.node_count()).any(|v| {
            self.coverage.in_region(v)
                && self
                    .graph
                    .neighbors(v)
                    .iter()
                    .any(|&u| !self.coverage.in_region(u))
        });
        if has_boundary {
            return Err(FirewallViolation::PrematureFallback);
        }
        self.record(QueryKind::Fallback, None);
        Ok((0..self.graph.node_count())
            .filter(|&v| !self.coverage.in_region(v))
            .map(|v| self.graph.id(v))
            .collect())
    }
}

/// Truncated BFS from `v`: is any node within `depth` hops outside the region?
fn near_exterior(graph: &Graph, coverage: &Coverage, v: usize, depth: u32) -> bool {
    if !coverage.in_region(v) {
        return true;
    }
    let mut seen = HashSet::from([v]);
    let mut queue = VecDeque::from([(v, 0u32)]);
    while let Some((u, d)) = queue.pop_front() {
        if d == depth {
            continue;
        }
        for &w in graph.neighbors(u) {
            if !coverage.in_region(w) {
                return true;
            }
            if seen.insert(w) {
                queue.push_back((w, d + 1));
            }
        }
    }
    false
}

/// Re-checks an audit log against the full graph, recomputing the accessible
/// region from scratch with a plain BFS from `previous_access`.
pub fn replay_audit(
    log: &[AuditEntry],
    graph: &Graph,
    previous_access: &[NodeId],
    radius: u32,
) -> Result<(), FirewallViolation> {
    let sources = previous_access
        .iter()
        .map(|&id| graph.index_of(id).ok_or(FirewallViolation::Unknown(id)))
        .collect::<Result<Vec<_>, _>>()?;
    let region = graph.ball_mask(sources, radius);
    let rim: HashSet<usize> = (0..graph.node_count())
        .filter(|&v| !region[v] && graph.neighbors(v).iter().any(|&u| region[u]))
        .collect();
    let has_boundary = !rim.is_empty();
    let mut revealed: HashSet<usize> = HashSet::new();
    let mut inquired: HashSet<usize> = HashSet::new();
    for entry in log {
        let subject = match entry.subject {
            Some(id) => Some(graph.index_of(id).ok_or(FirewallViolation::Unknown(id))?),
            None => None,
        };
        let illegal = |v: usize| FirewallViolation::Illegal {
            kind: entry.kind,
            node: graph.id(v),
        };
        let visible = |v: usize, revealed: &HashSet<usize>| {
            region[v] || rim.contains(&v) || revealed.contains(&v)
        };
        match (entry.kind, subject) {
            (QueryKind::Region | QueryKind::Boundary | QueryKind::Frontier, _) => {}
            (QueryKind::Fallback, _) => {
                if has_boundary {
                    return Err(FirewallViolation::PrematureFallback);
                }
            }
            (QueryKind::Inquire, Some(v)) => {
                if !visible(v, &revealed) {
                    return Err(illegal(v));
                }
                inquired.insert(v);
                revealed.extend(graph.neighbors(v).iter().copied());
            }
            (QueryKind::Degree, Some(v)) => {
                if !(region[v] || revealed.contains(&v) || inquired.contains(&v)) {
                    return Err(illegal(v));
                }
            }
            (QueryKind::NDegree, Some(v)) => {
                if !(region[v] || inquired.contains(&v)) {
                    return Err(illegal(v));
                }
            }
            (QueryKind::InRegion | QueryKind::InBset | QueryKind::IsAccessUnit, Some(v)) => {
                if !visible(v, &revealed) {
                    return Err(illegal(v));
                }
            }
            (_, None) => {}
        }
    }
    Ok(())
}

/// Writes the log as JSON lines.
pub fn write_audit_jsonl<W: Write>(mut out: W, log: &[AuditEntry]) -> std::io::Result<()> {
    for entry in log {
        serde_json::to_writer(&mut out, entry)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

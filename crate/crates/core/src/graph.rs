//! Incremental undirected simple graphs and the network instances built on them.
//!
//! Nodes are addressed externally by [`NodeId`] and internally by a dense index
//! assigned in arrival order. Nodes only ever enter through an incident edge, so
//! every node has degree at least one.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of an agent. Stable for the lifetime of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for NodeId {
    fn from(v: u64) -> Self {
        NodeId(v)
    }
}

/// An edge arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEvent {
    pub u: NodeId,
    pub v: NodeId,
    pub stamp: u64,
}

impl GraphEvent {
    pub fn edge(u: impl Into<NodeId>, v: impl Into<NodeId>, stamp: u64) -> Self {
        GraphEvent {
            u: u.into(),
            v: v.into(),
            stamp,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop on node {0} rejected")]
    SelfLoop(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

/// What a single edge arrival changed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventEffect {
    /// Dense endpoints of the inserted edge; `None` for a duplicate.
    pub edge: Option<(usize, usize)>,
    new_nodes: [Option<usize>; 2],
}

impl EventEffect {
    pub fn new_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.new_nodes.iter().flatten().copied()
    }

    pub fn new_node_count(&self) -> usize {
        self.new_nodes.iter().flatten().count()
    }
}

/// Undirected simple graph that only grows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Graph {
    ids: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    adj: Vec<Vec<usize>>,
    edge_set: HashSet<(usize, usize)>,
    edge_list: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn id(&self, idx: usize) -> NodeId {
        self.ids[idx]
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    /// Node ids in arrival order.
    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn neighbors(&self, idx: usize) -> &[usize] {
        &self.adj[idx]
    }

    pub fn degree_at(&self, idx: usize) -> usize {
        self.adj[idx].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_set.contains(&canonical(a, b))
    }

    /// Edges as dense pairs, in insertion order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edge_list
    }

    fn intern(&mut self, id: NodeId) -> (usize, bool) {
        if let Some(&idx) = self.index.get(&id) {
            return (idx, false);
        }
        let idx = self.ids.len();
        self.ids.push(id);
        self.index.insert(id, idx);
        self.adj.push(Vec::new());
        (idx, true)
    }

    /// Inserts the undirected edge `{u, v}`; a duplicate leaves the graph unchanged.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<EventEffect, GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        let (a, a_new) = self.intern(u);
        let (b, b_new) = self.intern(v);
        let mut effect = EventEffect {
            edge: None,
            new_nodes: [a_new.then_some(a), b_new.then_some(b)],
        };
        if self.edge_set.insert(canonical(a, b)) {
            self.adj[a].push(b);
            self.adj[b].push(a);
            self.edge_list.push(canonical(a, b));
            effect.edge = Some((a, b));
        }
        Ok(effect)
    }

    /// Multi-source BFS truncated at depth `radius`. Entry `i` holds the
    /// distance of node `i` from the nearest source, or `None` beyond `radius`.
    pub fn truncated_distances(
        &self,
        sources: impl IntoIterator<Item = usize>,
        radius: u32,
    ) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::new();
        for s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let d = dist[u].expect("queued nodes have a distance");
            if d >= radius {
                continue;
            }
            for &w in &self.adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Membership mask of the radius-`radius` ball around `sources`.
    pub fn ball_mask(&self, sources: impl IntoIterator<Item = usize>, radius: u32) -> Vec<bool> {
        self.truncated_distances(sources, radius)
            .into_iter()
            .map(|d| d.is_some())
            .collect()
    }

    pub(crate) fn resolve<'a>(
        &self,
        ids: impl IntoIterator<Item = &'a NodeId>,
    ) -> Result<Vec<usize>, GraphError> {
        ids.into_iter()
            .map(|&id| self.index_of(id).ok_or(GraphError::UnknownNode(id)))
            .collect()
    }

    /// Nodes within distance `radius` of some node of `sources`.
    pub fn within_distance<'a>(
        &self,
        sources: impl IntoIterator<Item = &'a NodeId>,
        radius: u32,
    ) -> Result<BTreeSet<NodeId>, GraphError> {
        let src = self.resolve(sources)?;
        Ok(self
            .ball_mask(src, radius)
            .into_iter()
            .enumerate()
            .filter_map(|(i, inside)| inside.then_some(self.ids[i]))
            .collect())
    }

    pub fn degree(&self, id: NodeId) -> Result<usize, GraphError> {
        self.index_of(id)
            .map(|i| self.degree_at(i))
            .ok_or(GraphError::UnknownNode(id))
    }

    /// True iff every node lies within distance `radius` of `set`.
    pub fn is_dominating<'a>(
        &self,
        set: impl IntoIterator<Item = &'a NodeId>,
        radius: u32,
    ) -> Result<bool, GraphError> {
        let src = self.resolve(set)?;
        Ok(self.ball_mask(src, radius).into_iter().all(|b| b))
    }
}

fn canonical(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Snapshot `(V_t, E_t, C_t, S_t)` of a network at tick `time`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkInstance {
    graph: Graph,
    opinions: Vec<f64>,
    access: Vec<bool>,
    access_order: Vec<usize>,
    time: u64,
}

impl NetworkInstance {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an instance by applying `edges` in order. Self-loops are rejected.
    pub fn from_edges<I, A>(edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (A, A)>,
        A: Into<NodeId>,
    {
        let mut inst = Self::new();
        for (u, v) in edges {
            inst.apply_event(&GraphEvent::edge(u, v, 0))?;
        }
        Ok(inst)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn set_time(&mut self, t: u64) {
        self.time = t;
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// Applies one edge arrival. New endpoints start with opinion 0.
    pub fn apply_event(&mut self, ev: &GraphEvent) -> Result<EventEffect, GraphError> {
        let effect = self.graph.add_edge(ev.u, ev.v)?;
        for _ in effect.new_nodes() {
            self.opinions.push(0.0);
            self.access.push(false);
        }
        Ok(effect)
    }

    /// Opinions indexed by dense node index.
    pub fn opinions(&self) -> &[f64] {
        &self.opinions
    }

    pub fn opinion(&self, id: NodeId) -> Result<f64, GraphError> {
        self.graph
            .index_of(id)
            .map(|i| self.opinions[i])
            .ok_or(GraphError::UnknownNode(id))
    }

    /// Replaces the opinion vector; must be aligned with the node indices.
    pub fn set_opinions(&mut self, opinions: Vec<f64>) {
        assert_eq!(
            opinions.len(),
            self.graph.node_count(),
            "opinion vector misaligned"
        );
        self.opinions = opinions;
    }

    pub fn set_opinion(&mut self, id: NodeId, value: f64) -> Result<(), GraphError> {
        let i = self.graph.index_of(id).ok_or(GraphError::UnknownNode(id))?;
        self.opinions[i] = value;
        Ok(())
    }

    /// Access-unit mask indexed by dense node index.
    pub fn access_mask(&self) -> &[bool] {
        &self.access
    }

    pub fn is_access_unit(&self, idx: usize) -> bool {
        self.access[idx]
    }

    /// Access units in the order they were committed.
    pub fn access_units(&self) -> Vec<NodeId> {
        self.access_order
            .iter()
            .map(|&i| self.graph.id(i))
            .collect()
    }

    pub fn access_indices(&self) -> &[usize] {
        &self.access_order
    }

    pub fn access_count(&self) -> usize {
        self.access_order.len()
    }

    /// Commits `id` as an access unit. Returns false if it already was one.
    pub fn add_access_unit(&mut self, id: NodeId) -> Result<bool, GraphError> {
        let i = self.graph.index_of(id).ok_or(GraphError::UnknownNode(id))?;
        Ok(self.add_access_at(i))
    }

    pub fn add_access_at(&mut self, idx: usize) -> bool {
        if self.access[idx] {
            return false;
        }
        self.access[idx] = true;
        self.access_order.push(idx);
        true
    }

    pub fn within_distance<'a>(
        &self,
        sources: impl IntoIterator<Item = &'a NodeId>,
        radius: u32,
    ) -> Result<BTreeSet<NodeId>, GraphError> {
        self.graph.within_distance(sources, radius)
    }

    pub fn degree(&self, id: NodeId) -> Result<usize, GraphError> {
        self.graph.degree(id)
    }

    pub fn is_dominating<'a>(
        &self,
        set: impl IntoIterator<Item = &'a NodeId>,
        radius: u32,
    ) -> Result<bool, GraphError> {
        self.graph.is_dominating(set, radius)
    }

    /// Whether the current access units dominate at `radius`.
    pub fn access_dominates(&self, radius: u32) -> bool {
        self.graph
            .ball_mask(self.access_order.iter().copied(), radius)
            .into_iter()
            .all(|b| b)
    }
}

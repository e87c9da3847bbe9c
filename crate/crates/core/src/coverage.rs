//! Incremental bookkeeping of the accessible region and the access
//! neighborhood while the graph and the access set both grow.
//!
//! Distances to the access set can only shrink under edge insertions and new
//! access units, so a truncated BFS relaxation from the changed endpoint keeps
//! every distance `<= radius` exact.

use std::collections::VecDeque;

use crate::graph::Graph;

const FAR: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct Coverage {
    radius: u32,
    dist: Vec<u32>,
    covered: usize,
    source: Vec<bool>,
    in_nbhd: Vec<bool>,
    nbhd: usize,
    queue: VecDeque<usize>,
}

impl Coverage {
    /// Empty access set over the current nodes of `graph`.
    pub fn new(graph: &Graph, radius: u32) -> Self {
        let n = graph.node_count();
        Coverage {
            radius,
            dist: vec![FAR; n],
            covered: 0,
            source: vec![false; n],
            in_nbhd: vec![false; n],
            nbhd: 0,
            queue: VecDeque::new(),
        }
    }

    pub fn with_sources(graph: &Graph, sources: &[usize], radius: u32) -> Self {
        let mut cov = Self::new(graph, radius);
        for &s in sources {
            cov.add_source(graph, s);
        }
        cov
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Extends the per-node arrays to cover nodes that joined the graph.
    pub fn sync_nodes(&mut self, graph: &Graph) {
        let n = graph.node_count();
        if n > self.dist.len() {
            self.dist.resize(n, FAR);
            self.source.resize(n, false);
            self.in_nbhd.resize(n, false);
        }
    }

    /// Call after the edge `{a, b}` was inserted into `graph`.
    pub fn on_edge(&mut self, graph: &Graph, a: usize, b: usize) {
        self.sync_nodes(graph);
        if self.source[a] {
            self.mark_nbhd(b);
        }
        if self.source[b] {
            self.mark_nbhd(a);
        }
        let (da, db) = (self.dist[a], self.dist[b]);
        if da < self.radius && da + 1 < db {
            self.lower(b, da + 1);
            self.relax(graph);
        } else if db < self.radius && db + 1 < da {
            self.lower(a, db + 1);
            self.relax(graph);
        }
    }

    pub fn add_source(&mut self, graph: &Graph, s: usize) {
        self.sync_nodes(graph);
        if self.source[s] {
            return;
        }
        self.source[s] = true;
        self.mark_nbhd(s);
        for &w in graph.neighbors(s) {
            self.mark_nbhd(w);
        }
        if self.dist[s] != 0 {
            self.lower(s, 0);
            self.relax(graph);
        }
    }

    fn mark_nbhd(&mut self, v: usize) {
        if !self.in_nbhd[v] {
            self.in_nbhd[v] = true;
            self.nbhd += 1;
        }
    }

    fn lower(&mut self, v: usize, d: u32) {
        if self.dist[v] == FAR {
            self.covered += 1;
        }
        self.dist[v] = d;
        self.queue.push_back(v);
    }

    fn relax(&mut self, graph: &Graph) {
        while let Some(u) = self.queue.pop_front() {
            let d = self.dist[u];
            if d >= self.radius {
                continue;
            }
            for &w in graph.neighbors(u) {
                if self.dist[w] > d + 1 {
                    self.lower(w, d + 1);
                }
            }
        }
    }

    /// Distance to the access set, if within the radius.
    pub fn dist(&self, v: usize) -> Option<u32> {
        match self.dist.get(v) {
            Some(&d) if d != FAR => Some(d),
            _ => None,
        }
    }

    pub fn in_region(&self, v: usize) -> bool {
        self.dist.get(v).is_some_and(|&d| d != FAR)
    }

    pub fn is_source(&self, v: usize) -> bool {
        self.source.get(v).copied().unwrap_or(false)
    }

    pub fn covered_count(&self) -> usize {
        self.covered
    }

    /// `|X_t|` for a graph of `node_count` nodes.
    pub fn exterior_count(&self, node_count: usize) -> usize {
        node_count - self.covered
    }

    pub fn is_dominating(&self, node_count: usize) -> bool {
        self.covered == node_count
    }

    pub fn in_access_nbhd(&self, v: usize) -> bool {
        self.in_nbhd.get(v).copied().unwrap_or(false)
    }

    /// `|N_t|`.
    pub fn access_nbhd_count(&self) -> usize {
        self.nbhd
    }

    /// Number of neighbors of `v` outside the access neighborhood.
    pub fn n_degree(&self, graph: &Graph, v: usize) -> usize {
        graph
            .neighbors(v)
            .iter()
            .filter(|&&u| !self.in_access_nbhd(u))
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphEvent, NetworkInstance, NodeId};
    use proptest::prelude::*;

    fn full_dist(inst: &NetworkInstance, sources: &[usize], r: u32) -> Vec<Option<u32>> {
        inst.graph().truncated_distances(sources.iter().copied(), r)
    }

    #[test]
    fn path_distances() {
        let inst = NetworkInstance::from_edges([(0u64, 1u64), (1, 2), (2, 3)]).unwrap();
        let cov = Coverage::with_sources(inst.graph(), &[0], 2);
        assert_eq!(
            (0..4).map(|v| cov.dist(v)).collect::<Vec<_>>(),
            vec![Some(0), Some(1), Some(2), None]
        );
        assert_eq!(cov.covered_count(), 3);
        assert_eq!(cov.access_nbhd_count(), 2);
        assert_eq!(cov.n_degree(inst.graph(), 1), 1);
    }

    #[test]
    fn new_edge_to_source_extends_neighborhood() {
        let mut inst = NetworkInstance::from_edges([(0u64, 1u64), (1, 2), (2, 3)]).unwrap();
        let mut cov = Coverage::with_sources(inst.graph(), &[0], 1);
        let eff = inst.apply_event(&GraphEvent::edge(0u64, 3u64, 1)).unwrap();
        let (a, b) = eff.edge.unwrap();
        cov.on_edge(inst.graph(), a, b);
        assert!(cov.in_access_nbhd(3));
        assert_eq!(cov.dist(3), Some(1));
        assert_eq!(cov.covered_count(), 3);
    }

    proptest! {
        // Incremental distances agree with a fresh truncated BFS after any
        // interleaving of edge arrivals and new sources.
        #[test]
        fn incremental_matches_full_bfs(
            ops in proptest::collection::vec((0u64..14, 0u64..14, any::<bool>()), 1..60),
            r in 1u32..4,
        ) {
            let mut inst = NetworkInstance::new();
            let mut cov = Coverage::new(inst.graph(), r);
            let mut sources = Vec::new();
            for (u, v, make_source) in ops {
                if u != v {
                    let eff = inst.apply_event(&GraphEvent::edge(u, v, 0)).unwrap();
                    cov.sync_nodes(inst.graph());
                    if let Some((a, b)) = eff.edge {
                        cov.on_edge(inst.graph(), a, b);
                    }
                }
                if make_source {
                    if let Some(s) = inst.graph().index_of(NodeId(u)) {
                        cov.add_source(inst.graph(), s);
                        if !sources.contains(&s) { sources.push(s); }
                    }
                }
                let expect = full_dist(&inst, &sources, r);
                let got: Vec<_> = (0..inst.node_count()).map(|i| cov.dist(i)).collect();
                prop_assert_eq!(&got, &expect);
                prop_assert_eq!(cov.covered_count(), expect.iter().filter(|d| d.is_some()).count());
                let nb = inst.graph().ball_mask(sources.iter().copied(), 1);
                prop_assert_eq!(cov.access_nbhd_count(), nb.iter().filter(|&&b| b).count());
            }
        }
    }
}

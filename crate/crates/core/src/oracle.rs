//! Brute-force references for validating the fast paths.
//!
//! Nothing here touches the incremental graph, its BFS, or the opinion
//! update. Graphs are at most 64 nodes, stored as adjacency bitmasks.

use thiserror::Error;

use crate::graph::{NetworkInstance, NodeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("graph has {0} nodes; the oracle handles at most {max}", max = SmallGraph::MAX_NODES)]
    TooLarge(usize),
    #[error("edge ({0}, {1}) is out of range or a self-loop")]
    BadEdge(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmallGraph {
    adj: Vec<u64>,
}

impl SmallGraph {
    pub const MAX_NODES: usize = 64;

    pub fn new(n: usize) -> Result<Self, OracleError> {
        if n > Self::MAX_NODES {
            return Err(OracleError::TooLarge(n));
        }
        Ok(SmallGraph { adj: vec![0; n] })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, OracleError> {
        let mut g = SmallGraph::new(n)?;
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Copies an instance's edge list; node `i` is the instance's `i`-th node.
    pub fn from_instance(inst: &NetworkInstance) -> Result<(Self, Vec<NodeId>), OracleError> {
        let g = inst.graph();
        let small = SmallGraph::from_edges(g.node_count(), g.edges())?;
        Ok((small, g.node_ids().to_vec()))
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<(), OracleError> {
        let n = self.adj.len();
        if u == v || u >= n || v >= n {
            return Err(OracleError::BadEdge(u, v));
        }
        self.adj[u] |= 1 << v;
        self.adj[v] |= 1 << u;
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        bits(self.adj[v])
    }

    fn full(&self) -> u64 {
        match self.adj.len() {
            64 => u64::MAX,
            n => (1u64 << n) - 1,
        }
    }

    /// `balls(r)[v]` is the set of nodes within distance `r` of `v`.
    pub fn balls(&self, r: u32) -> Vec<u64> {
        (0..self.adj.len())
            .map(|v| {
                let mut ball = 1u64 << v;
                for _ in 0..r {
                    let grown = bits(ball).fold(ball, |acc, u| acc | self.adj[u]);
                    if grown == ball {
                        break;
                    }
                    ball = grown;
                }
                ball
            })
            .collect()
    }

    /// All-pairs hop distances by Floyd-Warshall; `None` when disconnected.
    pub fn distances(&self) -> Vec<Vec<Option<u32>>> {
        let n = self.adj.len();
        let mut d = vec![vec![None; n]; n];
        for (v, row) in d.iter_mut().enumerate() {
            row[v] = Some(0);
            for u in self.neighbors(v) {
                row[u] = Some(1);
            }
        }
        for k in 0..n {
            let via = d[k].clone();
            for row in d.iter_mut() {
                let Some(ik) = row[k] else { continue };
                for (cell, kj) in row.iter_mut().zip(&via) {
                    if let Some(kj) = kj {
                        if cell.is_none_or(|ij| ik + kj < ij) {
                            *cell = Some(ik + kj);
                        }
                    }
                }
            }
        }
        d
    }
}

fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            return None;
        }
        let i = mask.trailing_zeros() as usize;
        mask &= mask - 1;
        Some(i)
    })
}

pub fn is_dominating(g: &SmallGraph, set: &[usize], r: u32) -> bool {
    let balls = g.balls(r);
    set.iter().fold(0u64, |acc, &v| acc | balls[v]) == g.full()
}

/// Repeatedly adds the node whose ball covers the most uncovered nodes
/// (lowest index on ties).
pub fn greedy_dominating_set(g: &SmallGraph, r: u32) -> Vec<usize> {
    let balls = g.balls(r);
    let full = g.full();
    let mut covered = 0u64;
    let mut set = Vec::new();
    while covered != full {
        let best = (0..balls.len())
            .max_by_key(|&v| ((balls[v] & !covered).count_ones(), std::cmp::Reverse(v)))
            .expect("nonempty while uncovered nodes remain");
        covered |= balls[best];
        set.push(best);
    }
    set
}

/// Exact minimum distance-`r` dominating set by branch and bound.
pub fn min_dominating_set(g: &SmallGraph, r: u32) -> (usize, Vec<usize>) {
    let balls = g.balls(r);
    let mut best = greedy_dominating_set(g, r);
    let max_ball = balls
        .iter()
        .map(|b| b.count_ones())
        .max()
        .unwrap_or(1)
        .max(1);
    let mut chosen = Vec::new();
    branch(&balls, g.full(), 0, max_ball, &mut chosen, &mut best);
    (best.len(), best)
}

fn branch(
    balls: &[u64],
    full: u64,
    covered: u64,
    max_ball: u32,
    chosen: &mut Vec<usize>,
    best: &mut Vec<usize>,
) {
    if covered == full {
        if chosen.len() < best.len() {
            *best = chosen.clone();
        }
        return;
    }
    let uncovered = (full & !covered).count_ones();
    let lower = chosen.len() + uncovered.div_ceil(max_ball) as usize;
    if lower >= best.len() {
        return;
    }
    // Some member of the lowest uncovered node's ball must be chosen.
    let u = (full & !covered).trailing_zeros() as usize;
    let mut options: Vec<usize> = bits(balls[u]).collect();
    options.sort_by_key(|&v| std::cmp::Reverse((balls[v] & !covered).count_ones()));
    for v in options {
        chosen.push(v);
        branch(balls, full, covered | balls[v], max_ball, chosen, best);
        chosen.pop();
    }
}

/// One synchronous update, computed directly from the update rule with
/// Floyd-Warshall distances.
pub fn reference_degroot_step(
    g: &SmallGraph,
    opinions: &[f64],
    access: &[bool],
    r: u32,
) -> Vec<f64> {
    let n = g.node_count();
    let d = g.distances();
    let in_region = |v: usize| (0..n).any(|s| access[s] && d[s][v].is_some_and(|x| x <= r));
    let mut next = vec![0.0; n];
    for v in 0..n {
        let nbrs: Vec<usize> = g.neighbors(v).collect();
        next[v] = if access[v] {
            1.0
        } else if !in_region(v) {
            if nbrs.is_empty() {
                opinions[v]
            } else {
                let mut sum = 0.0;
                for &u in &nbrs {
                    sum += opinions[u];
                }
                sum / nbrs.len() as f64
            }
        } else {
            let mut sum = 1.0;
            let mut count = 1.0;
            for &u in &nbrs {
                if !access[u] {
                    sum += opinions[u];
                    count += 1.0;
                }
            }
            sum / count
        };
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> SmallGraph {
        let e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        SmallGraph::from_edges(n, &e).unwrap()
    }

    fn cycle(n: usize) -> SmallGraph {
        let e: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        SmallGraph::from_edges(n, &e).unwrap()
    }

    /// Smallest dominating subset by plain enumeration, for cross-checking.
    fn exhaustive_min(g: &SmallGraph, r: u32) -> usize {
        let n = g.node_count();
        (0u64..1 << n)
            .filter(|&m| {
                let set: Vec<usize> = bits(m).collect();
                is_dominating(g, &set, r)
            })
            .map(|m| m.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn star_needs_one() {
        let g = SmallGraph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert_eq!(min_dominating_set(&g, 1), (1, vec![0]));
        assert_eq!(greedy_dominating_set(&g, 1), vec![0]);
    }

    #[test]
    fn path_and_cycle_minimums() {
        assert_eq!(exhaustive_min(&path(5), 1), 2);
        assert_eq!(min_dominating_set(&path(5), 1).0, 2);
        assert_eq!(exhaustive_min(&cycle(6), 1), 2);
        assert_eq!(min_dominating_set(&cycle(6), 1).0, 2);
        assert!(greedy_dominating_set(&path(5), 2).len() <= 2);
    }

    #[test]
    fn branch_and_bound_matches_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..150 {
            let n = rng.gen_range(1..=12);
            let mut g = SmallGraph::new(n).unwrap();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(0.25) {
                        g.add_edge(u, v).unwrap();
                    }
                }
            }
            for r in 1..=3 {
                let (size, witness) = min_dominating_set(&g, r);
                assert_eq!(witness.len(), size);
                assert!(is_dominating(&g, &witness, r));
                assert_eq!(size, exhaustive_min(&g, r));
                let greedy = greedy_dominating_set(&g, r);
                assert!(is_dominating(&g, &greedy, r));
                assert!(greedy.len() >= size);
            }
        }
    }

    #[test]
    fn size_limit() {
        assert_eq!(SmallGraph::new(65).unwrap_err(), OracleError::TooLarge(65));
        assert!(SmallGraph::new(64).is_ok());
        assert!(SmallGraph::from_edges(3, &[(1, 1)]).is_err());
    }

    #[test]
    fn distances_and_balls_agree() {
        let g = cycle(7);
        let d = g.distances();
        for r in 0..4 {
            for (v, ball) in g.balls(r).into_iter().enumerate() {
                let expect = (0..7)
                    .filter(|&u| d[v][u].unwrap() <= r)
                    .fold(0u64, |m, u| m | 1 << u);
                assert_eq!(ball, expect);
            }
        }
    }

    #[test]
    fn reference_step_path_values() {
        let g = path(3);
        let c1 = reference_degroot_step(&g, &[0.0, 0.0, 0.0], &[true, false, false], 1);
        assert_eq!(c1, vec![1.0, 0.5, 0.0]);
        let all = reference_degroot_step(&g, &[0.2, 0.3, 0.4], &[true; 3], 1);
        assert_eq!(all, vec![1.0; 3]);
        let lone = SmallGraph::new(2).unwrap();
        assert_eq!(
            reference_degroot_step(&lone, &[0.3, 0.0], &[false, true], 1),
            vec![0.3, 1.0]
        );
    }
}

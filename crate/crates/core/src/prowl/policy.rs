use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeId;
use crate::observation::{FirewallViolation, NeighborInfo, PartialView};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Lran,
    Ldeg,
    Xran,
    Xdeg,
    Bran,
    Bdeg,
    Bnde,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::Lran,
        PolicyKind::Ldeg,
        PolicyKind::Xran,
        PolicyKind::Xdeg,
        PolicyKind::Bran,
        PolicyKind::Bdeg,
        PolicyKind::Bnde,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Lran => "lran",
            PolicyKind::Ldeg => "ldeg",
            PolicyKind::Xran => "xran",
            PolicyKind::Xdeg => "xdeg",
            PolicyKind::Bran => "bran",
            PolicyKind::Bdeg => "bdeg",
            PolicyKind::Bnde => "bnde",
        }
    }

    /// Walks out of the accessible region (everything except lran/ldeg).
    pub fn is_prowling(self) -> bool {
        !matches!(self, PolicyKind::Lran | PolicyKind::Ldeg)
    }

    /// Always returns a node of the exterior set.
    pub fn is_exterior_based(self) -> bool {
        matches!(self, PolicyKind::Xran | PolicyKind::Xdeg)
    }

    /// Always returns a node of the B-set.
    pub fn is_bset(self) -> bool {
        matches!(self, PolicyKind::Bran | PolicyKind::Bdeg | PolicyKind::Bnde)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown policy `{0}` (expected lran, ldeg, xran, xdeg, bran, bdeg or bnde)")]
pub struct UnknownPolicy(pub String);

impl FromStr for PolicyKind {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownPolicy(s.to_string()))
    }
}

/// Result of one selection call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProwlTrace {
    pub tick: u64,
    /// `w_0 … w_j`; a single node for the local policies and the fallback.
    pub walk: Vec<NodeId>,
    pub chosen: NodeId,
    /// Number of audit-log entries the call produced.
    pub queries: usize,
    /// The region had no boundary and the node was drawn from the exterior set.
    pub fallback: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelectError {
    #[error("exterior set is empty; nothing to select")]
    NothingToDo,
    #[error(transparent)]
    Firewall(#[from] FirewallViolation),
}

/// Anything that can choose the next access unit through a [`PartialView`].
pub trait SelectionPolicy {
    fn name(&self) -> String;
    fn select(&mut self, view: &mut PartialView<'_>) -> Result<ProwlTrace, SelectError>;
}

/// The seven built-in policies.
#[derive(Debug, Clone)]
pub struct Prowler {
    kind: PolicyKind,
    steps: usize,
    rng: ChaCha8Rng,
}

/// Where a walk may move.
#[derive(Clone, Copy)]
enum Domain {
    Exterior,
    Bset,
}

impl Prowler {
    /// `steps` is the maximum walk length k (at least 1).
    pub fn new(kind: PolicyKind, steps: usize, seed: u64) -> Self {
        assert!(steps >= 1, "walk length must be at least 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        Prowler { kind, steps, rng }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn pick<T: Copy>(&mut self, items: &[T]) -> Option<T> {
        items.choose(&mut self.rng).copied()
    }

    /// Uniform choice among the items with the largest key.
    fn pick_max(&mut self, scored: &[(NodeId, usize)]) -> Option<NodeId> {
        let best = scored.iter().map(|&(_, s)| s).max()?;
        let top: Vec<NodeId> = scored
            .iter()
            .filter(|&&(_, s)| s == best)
            .map(|&(n, _)| n)
            .collect();
        self.pick(&top)
    }

    fn trace(view: &PartialView<'_>, walk: Vec<NodeId>, fallback: bool) -> ProwlTrace {
        ProwlTrace {
            tick: view.tick(),
            chosen: *walk.last().expect("walk is never empty"),
            walk,
            queries: view.audit_log().len(),
            fallback,
        }
    }

    fn fallback(&mut self, view: &mut PartialView<'_>) -> Result<ProwlTrace, SelectError> {
        let exterior = view.fallback_exterior()?;
        let chosen = self.pick(&exterior).ok_or(SelectError::NothingToDo)?;
        Ok(Self::trace(view, vec![chosen], true))
    }

    fn local_random(&mut self, view: &mut PartialView<'_>) -> Result<ProwlTrace, SelectError> {
        let frontier = view.frontier();
        match self.pick(&frontier) {
            Some(chosen) => Ok(Self::trace(view, vec![chosen], false)),
            None => self.fallback(view),
        }
    }

    fn local_degree(&mut self, view: &mut PartialView<'_>) -> Result<ProwlTrace, SelectError> {
        if view.boundary_nodes().is_empty() {
            return self.fallback(view);
        }
        let mut scored = Vec::new();
        for v in view.accessible_region() {
            if !view.is_access_unit(v)? {
                scored.push((v, view.n_degree(v)?));
            }
        }
        let chosen = self.pick_max(&scored).ok_or(SelectError::NothingToDo)?;
        Ok(Self::trace(view, vec![chosen], false))
    }

    fn in_domain(
        view: &mut PartialView<'_>,
        n: &NeighborInfo,
        domain: Domain,
    ) -> Result<bool, SelectError> {
        Ok(match domain {
            Domain::Exterior => !n.in_region,
            Domain::Bset => view.in_bset(n.node)?,
        })
    }

    fn random_step(
        &mut self,
        view: &mut PartialView<'_>,
        at: NodeId,
        domain: Domain,
    ) -> Result<Option<NodeInfoLite>, SelectError> {
        let report = view.inquire(at)?;
        let mut cands = Vec::new();
        for n in &report.neighbors {
            if Self::in_domain(view, n, domain)? {
                cands.push(NodeInfoLite::from(n));
            }
        }
        Ok(self.pick(&cands))
    }

    fn degree_step(
        &mut self,
        view: &mut PartialView<'_>,
        at: NodeId,
        domain: Domain,
    ) -> Result<Option<NodeInfoLite>, SelectError> {
        let report = view.inquire(at)?;
        let mut scored = Vec::new();
        let mut info = Vec::new();
        for n in &report.neighbors {
            if n.degree > report.degree && Self::in_domain(view, n, domain)? {
                scored.push((n.node, n.degree));
                info.push(NodeInfoLite::from(n));
            }
        }
        Ok(self.pick_max(&scored).map(|c| {
            *info
                .iter()
                .find(|i| i.node == c)
                .expect("candidate recorded")
        }))
    }

    /// From a region node: climb in N-degree among B-set neighbors.
    fn n_degree_step(
        &mut self,
        view: &mut PartialView<'_>,
        at: NodeId,
    ) -> Result<Option<NodeInfoLite>, SelectError> {
        let report = view.inquire(at)?;
        let base = view.n_degree(at)?;
        let mut scored = Vec::new();
        let mut info = Vec::new();
        for n in &report.neighbors {
            // N-degree never exceeds degree.
            if n.degree <= base || !view.in_bset(n.node)? {
                continue;
            }
            if !n.in_region {
                view.inquire(n.node)?;
            }
            let nd = view.n_degree(n.node)?;
            if nd > base {
                scored.push((n.node, nd));
                info.push(NodeInfoLite::from(n));
            }
        }
        Ok(self.pick_max(&scored).map(|c| {
            *info
                .iter()
                .find(|i| i.node == c)
                .expect("candidate recorded")
        }))
    }

    fn prowl(&mut self, view: &mut PartialView<'_>) -> Result<ProwlTrace, SelectError> {
        let boundary = view.boundary_nodes();
        let Some(w0) = self.pick(&boundary) else {
            return self.fallback(view);
        };
        let report = view.inquire(w0)?;
        let outward: Vec<NodeInfoLite> = report
            .neighbors
            .iter()
            .filter(|n| !n.in_region)
            .map(NodeInfoLite::from)
            .collect();
        let mut current = self
            .pick(&outward)
            .expect("a boundary node has a neighbor outside the region");
        let mut walk = vec![w0, current.node];
        for _ in 1..self.steps {
            let next = match self.kind {
                PolicyKind::Xran => self.random_step(view, current.node, Domain::Exterior)?,
                PolicyKind::Bran => self.random_step(view, current.node, Domain::Bset)?,
                PolicyKind::Xdeg => self.degree_step(view, current.node, Domain::Exterior)?,
                PolicyKind::Bdeg => self.degree_step(view, current.node, Domain::Bset)?,
                PolicyKind::Bnde if current.in_region => self.n_degree_step(view, current.node)?,
                PolicyKind::Bnde => self.degree_step(view, current.node, Domain::Bset)?,
                PolicyKind::Lran | PolicyKind::Ldeg => unreachable!("local policies do not walk"),
            };
            match next {
                Some(n) => {
                    walk.push(n.node);
                    current = n;
                }
                None => break,
            }
        }
        Ok(Self::trace(view, walk, false))
    }
}

#[derive(Debug, Clone, Copy)]
struct NodeInfoLite {
    node: NodeId,
    in_region: bool,
}

impl From<&NeighborInfo> for NodeInfoLite {
    fn from(n: &NeighborInfo) -> Self {
        NodeInfoLite {
            node: n.node,
            in_region: n.in_region,
        }
    }
}

impl SelectionPolicy for Prowler {
    fn name(&self) -> String {
        self.kind.name().to_string()
    }

    fn select(&mut self, view: &mut PartialView<'_>) -> Result<ProwlTrace, SelectError> {
        match self.kind {
            PolicyKind::Lran => self.local_random(view),
            PolicyKind::Ldeg => self.local_degree(view),
            _ => self.prowl(view),
        }
    }
}

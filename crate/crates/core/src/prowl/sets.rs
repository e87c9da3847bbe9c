//! Whole-graph computations of the sets that drive selection: the exterior
//! set, the B-set, and the access neighborhood.
//!
//! Policies never call these; they go through a [`PartialView`]. These are the
//! global definitions the view's local answers are checked against.
//!
//! [`PartialView`]: crate::observation::PartialView

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::graph::{GraphError, NetworkInstance, NodeId};
use crate::observation::radius_less_one;

fn to_ids(instance: &NetworkInstance, mask: &[bool], want: bool) -> BTreeSet<NodeId> {
    mask.iter()
        .enumerate()
        .filter(|&(_, &m)| m == want)
        .map(|(i, _)| instance.graph().id(i))
        .collect()
}

/// `X = V \ AC(access)`.
pub fn exterior_set(
    instance: &NetworkInstance,
    access: &[NodeId],
    radius: u32,
) -> Result<BTreeSet<NodeId>, GraphError> {
    let src = instance.graph().resolve(access)?;
    let region = instance.graph().ball_mask(src, radius);
    Ok(to_ids(instance, &region, false))
}

/// Nodes within distance `r ∸ 1` of the exterior set.
pub fn b_set(
    instance: &NetworkInstance,
    access: &[NodeId],
    radius: u32,
) -> Result<BTreeSet<NodeId>, GraphError> {
    let g = instance.graph();
    let src = g.resolve(access)?;
    let region = g.ball_mask(src, radius);
    let exterior = region
        .iter()
        .enumerate()
        .filter(|&(_, &r)| !r)
        .map(|(i, _)| i);
    let near = g.ball_mask(exterior, radius_less_one(radius));
    Ok(to_ids(instance, &near, true))
}

/// `N = ⋃ closed neighborhoods of access`.
pub fn access_neighborhood(
    instance: &NetworkInstance,
    access: &[NodeId],
) -> Result<BTreeSet<NodeId>, GraphError> {
    instance.within_distance(access, 1)
}

/// Number of neighbors of `v` outside the access neighborhood.
pub fn n_degree(
    instance: &NetworkInstance,
    access: &[NodeId],
    v: NodeId,
) -> Result<usize, GraphError> {
    let g = instance.graph();
    let vi = g.index_of(v).ok_or(GraphError::UnknownNode(v))?;
    let nb = g.ball_mask(g.resolve(access)?, 1);
    Ok(g.neighbors(vi).iter().filter(|&&u| !nb[u]).count())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralSets {
    pub exterior: BTreeSet<NodeId>,
    pub bset: BTreeSet<NodeId>,
    pub access_nb: BTreeSet<NodeId>,
    pub anti_nb: BTreeSet<NodeId>,
}

impl StructuralSets {
    pub fn compute(
        instance: &NetworkInstance,
        access: &[NodeId],
        radius: u32,
    ) -> Result<Self, GraphError> {
        let access_nb = access_neighborhood(instance, access)?;
        let anti_nb = instance
            .graph()
            .node_ids()
            .iter()
            .filter(|v| !access_nb.contains(v))
            .copied()
            .collect();
        Ok(StructuralSets {
            exterior: exterior_set(instance, access, radius)?,
            bset: b_set(instance, access, radius)?,
            access_nb,
            anti_nb,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u64]) -> BTreeSet<NodeId> {
        v.iter().map(|&x| NodeId(x)).collect()
    }

    // s=0, a=1, b=2, c=3, d=4: s-a, a-b, b-c, b-d, c-d.
    fn fixture() -> NetworkInstance {
        NetworkInstance::from_edges([(0u64, 1u64), (1, 2), (2, 3), (2, 4), (3, 4)]).unwrap()
    }

    #[test]
    fn exterior_examples() {
        let p3 = NetworkInstance::from_edges([(0u64, 1u64), (1, 2)]).unwrap();
        assert_eq!(exterior_set(&p3, &[], 1).unwrap(), ids(&[0, 1, 2]));
        assert_eq!(exterior_set(&p3, &[NodeId(1)], 1).unwrap(), ids(&[]));
        assert_eq!(exterior_set(&p3, &[NodeId(0)], 1).unwrap(), ids(&[2]));
    }

    #[test]
    fn bset_examples() {
        let g = fixture();
        assert_eq!(exterior_set(&g, &[NodeId(0)], 2).unwrap(), ids(&[3, 4]));
        assert_eq!(b_set(&g, &[NodeId(0)], 2).unwrap(), ids(&[2, 3, 4]));
        // r = 1: X = {b, c, d}, one hop further adds a.
        assert_eq!(exterior_set(&g, &[NodeId(0)], 1).unwrap(), ids(&[2, 3, 4]));
        assert_eq!(b_set(&g, &[NodeId(0)], 1).unwrap(), ids(&[1, 2, 3, 4]));
        assert_eq!(b_set(&g, &[NodeId(2)], 2).unwrap(), ids(&[]));
    }

    #[test]
    fn n_degree_examples() {
        let g = fixture();
        let s = [NodeId(0)];
        assert_eq!(access_neighborhood(&g, &s).unwrap(), ids(&[0, 1]));
        assert_eq!(n_degree(&g, &s, NodeId(1)).unwrap(), 1);
        assert_eq!(n_degree(&g, &s, NodeId(2)).unwrap(), 2);
        assert_eq!(n_degree(&g, &s, NodeId(0)).unwrap(), 0);
        assert!(n_degree(&g, &s, NodeId(9)).is_err());
    }

    #[test]
    fn structural_sets_partition() {
        let g = fixture();
        let sets = StructuralSets::compute(&g, &[NodeId(0)], 1).unwrap();
        assert_eq!(sets.access_nb.len() + sets.anti_nb.len(), g.node_count());
        assert!(sets.exterior.is_subset(&sets.bset));
    }
}

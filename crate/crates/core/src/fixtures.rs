//! Small committed networks used by tests and the `verify` command.

use crate::graph::{NetworkInstance, NodeId};

/// Groups in [`ring_of_spiders`].
pub const SPIDER_GROUPS: u64 = 6;

/// A 33-node ring of six spiders. Each spider is a center with two legs of
/// length two (`center - middle - leaf`). Consecutive centers are joined
/// directly or through one connector node, alternately.
///
/// Ids: spider `g` uses `5g` (center), `5g+1`, `5g+3` (middles) and `5g+2`,
/// `5g+4` (leaves); connectors are 30, 31, 32.
///
/// At radius 2 the two leaves of a spider are only both reachable from its
/// center, so the six centers form the unique minimum dominating set.
pub fn ring_of_spiders() -> NetworkInstance {
    let mut edges = Vec::new();
    for g in 0..SPIDER_GROUPS {
        let c = 5 * g;
        edges.extend([(c, c + 1), (c + 1, c + 2), (c, c + 3), (c + 3, c + 4)]);
    }
    let center = |g: u64| 5 * (g % SPIDER_GROUPS);
    let mut connector = 30;
    for g in 0..SPIDER_GROUPS {
        if g % 2 == 0 {
            edges.extend([(center(g), connector), (connector, center(g + 1))]);
            connector += 1;
        } else {
            edges.push((center(g), center(g + 1)));
        }
    }
    NetworkInstance::from_edges(edges).expect("fixture has no loops")
}

/// Centers of [`ring_of_spiders`].
pub fn spider_centers() -> Vec<NodeId> {
    (0..SPIDER_GROUPS).map(|g| NodeId(5 * g)).collect()
}

/// `s - a - b`, with `b - c`, `b - d`, `c - d` (ids 0..=4).
pub fn tadpole() -> NetworkInstance {
    NetworkInstance::from_edges([(0u64, 1u64), (1, 2), (2, 3), (2, 4), (3, 4)])
        .expect("fixture has no loops")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{is_dominating, min_dominating_set, SmallGraph};

    #[test]
    fn ring_shape() {
        let g = ring_of_spiders();
        assert_eq!(g.node_count(), 33);
        assert_eq!(g.edge_count(), 24 + 9);
    }

    #[test]
    fn centers_are_the_minimum() {
        let inst = ring_of_spiders();
        let (small, ids) = SmallGraph::from_instance(&inst).unwrap();
        let (size, witness) = min_dominating_set(&small, 2);
        assert_eq!(size, 6);
        let mut w: Vec<NodeId> = witness.iter().map(|&i| ids[i]).collect();
        w.sort();
        assert_eq!(w, spider_centers());
        let idx: Vec<usize> = spider_centers()
            .iter()
            .map(|c| ids.iter().position(|x| x == c).unwrap())
            .collect();
        assert!(is_dominating(&small, &idx, 2));
        assert!(inst.is_dominating(&spider_centers(), 2).unwrap());
    }
}

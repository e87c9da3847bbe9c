//! Synchronous decentralized DeGroot updates with committed access units.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, NetworkInstance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("opinion vector is empty")]
    Empty,
    #[error("epsilon must lie in (0, 1], got {0}")]
    BadEpsilon(f64),
    #[error("no convergence within {max_steps} steps (min opinion {min_opinion})")]
    NotConverged { max_steps: u64, min_opinion: f64 },
    #[error(transparent)]
    Csv(#[from] CsvErrorMessage),
}

/// String form of a CSV failure, so the error stays `Clone + PartialEq`.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct CsvErrorMessage(pub String);

/// One synchronous update.
///
/// * access units move to 1;
/// * nodes outside `in_region` take the mean of all neighbors;
/// * the remaining nodes average 1 with their non-access neighbors.
///
/// All reads come from `opinions`. A node without neighbors keeps its value.
pub fn step_with<R>(graph: &Graph, opinions: &[f64], access: &[bool], in_region: R) -> Vec<f64>
where
    R: Fn(usize) -> bool,
{
    (0..graph.node_count())
        .map(|v| {
            if access[v] {
                return 1.0;
            }
            let nbrs = graph.neighbors(v);
            if !in_region(v) {
                if nbrs.is_empty() {
                    return opinions[v];
                }
                let sum: f64 = nbrs.iter().map(|&u| opinions[u]).sum();
                return sum / nbrs.len() as f64;
            }
            let (sum, count) = nbrs
                .iter()
                .filter(|&&u| !access[u])
                .fold((0.0, 0usize), |(s, c), &u| (s + opinions[u], c + 1));
            (1.0 + sum) / (1 + count) as f64
        })
        .collect()
}

/// `C_{t+1}` for `instance`, where `region` is the accessible-region mask of
/// the instance's access units.
pub fn step_opinions(instance: &NetworkInstance, region: &[bool]) -> Vec<f64> {
    step_with(
        instance.graph(),
        instance.opinions(),
        instance.access_mask(),
        |v| region[v],
    )
}

pub fn average_opinion(opinions: &[f64]) -> Result<f64, DynamicsError> {
    if opinions.is_empty() {
        return Err(DynamicsError::Empty);
    }
    Ok(opinions.iter().sum::<f64>() / opinions.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpinionSummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl OpinionSummary {
    pub fn of(opinions: &[f64]) -> Result<Self, DynamicsError> {
        let mean = average_opinion(opinions)?;
        let (min, max) = opinions
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        Ok(OpinionSummary { min, mean, max })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub steps: u64,
    pub opinions: Vec<f64>,
}

fn check_epsilon(epsilon: f64) -> Result<f64, DynamicsError> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(1.0 - epsilon)
    } else {
        Err(DynamicsError::BadEpsilon(epsilon))
    }
}

fn min_of(opinions: &[f64]) -> f64 {
    opinions.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Iterates the update on the frozen `instance` until every opinion is at
/// least `1 - epsilon`. `observe(prev, next)` sees each step.
pub fn run_to_convergence_with<F>(
    instance: &NetworkInstance,
    radius: u32,
    epsilon: f64,
    max_steps: u64,
    mut observe: F,
) -> Result<Convergence, DynamicsError>
where
    F: FnMut(&[f64], &[f64]),
{
    let target = check_epsilon(epsilon)?;
    if instance.node_count() == 0 {
        return Err(DynamicsError::Empty);
    }
    let graph = instance.graph();
    let region = graph.ball_mask(instance.access_indices().iter().copied(), radius);
    let access = instance.access_mask();
    let mut current = instance.opinions().to_vec();
    let mut steps = 0;
    while min_of(&current) < target {
        if steps == max_steps {
            return Err(DynamicsError::NotConverged {
                max_steps,
                min_opinion: min_of(&current),
            });
        }
        let next = step_with(graph, &current, access, |v| region[v]);
        observe(&current, &next);
        current = next;
        steps += 1;
    }
    Ok(Convergence {
        steps,
        opinions: current,
    })
}

pub fn run_to_convergence(
    instance: &NetworkInstance,
    radius: u32,
    epsilon: f64,
    max_steps: u64,
) -> Result<Convergence, DynamicsError> {
    run_to_convergence_with(instance, radius, epsilon, max_steps, |_, _| {})
}

/// Writes `tick,min,mean,max` rows.
pub fn write_opinion_series<W: Write>(
    out: W,
    series: impl IntoIterator<Item = (u64, OpinionSummary)>,
) -> Result<(), DynamicsError> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| CsvErrorMessage(e.to_string());
    w.write_record(["tick", "min", "mean", "max"])
        .map_err(wrap)?;
    for (tick, s) in series {
        w.write_record([
            tick.to_string(),
            s.min.to_string(),
            s.mean.to_string(),
            s.max.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| CsvErrorMessage(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeId;

    // Path a(0)-b(1)-c(2) with S = {a}, r = 1.
    fn path_with_unit() -> NetworkInstance {
        let mut inst = NetworkInstance::from_edges([(0u64, 1u64), (1, 2)]).unwrap();
        inst.add_access_unit(NodeId(0)).unwrap();
        inst
    }

    /// Scalar transcription of the update for the three-node path, used as the oracle.
    fn path_oracle(c: [f64; 3]) -> [f64; 3] {
        let (_a, b, c2) = (c[0], c[1], c[2]);
        // b is in AC({a}) with a in S: non-S neighbor is c only.
        // c is outside AC: mean over its single neighbor b.
        [1.0, (1.0 + c2) / 2.0, b]
    }

    #[test]
    fn access_unit_goes_to_one() {
        let mut inst = path_with_unit();
        inst.set_opinion(NodeId(0), 0.2).unwrap();
        let region = inst.graph().ball_mask([0], 1);
        assert_eq!(step_opinions(&inst, &region)[0], 1.0);
    }

    #[test]
    fn path_steps_match_hand_evaluation() {
        let mut inst = path_with_unit();
        let region = inst.graph().ball_mask([0], 1);
        let mut oracle = [0.0; 3];
        let mut history = Vec::new();
        for _ in 0..3 {
            let next = step_opinions(&inst, &region);
            oracle = path_oracle(oracle);
            assert_eq!(next, oracle.to_vec());
            inst.set_opinions(next.clone());
            history.push(next);
        }
        assert_eq!(history[0], vec![1.0, 0.5, 0.0]);
        assert_eq!(history[2], vec![1.0, 0.75, 0.5]);
    }

    #[test]
    fn path_convergence_count() {
        // Oracle: iterate the scalar transcription until min >= 0.7.
        let mut c = [0.0; 3];
        let mut expected = 0;
        while c.iter().copied().fold(f64::INFINITY, f64::min) < 0.7 {
            c = path_oracle(c);
            expected += 1;
        }
        assert_eq!(expected, 4);
        let conv = run_to_convergence(&path_with_unit(), 1, 0.3, 1000).unwrap();
        assert_eq!(conv.steps, expected);
    }

    #[test]
    fn single_committed_node_needs_no_steps() {
        let mut inst = NetworkInstance::from_edges([(0u64, 1u64)]).unwrap();
        inst.add_access_unit(NodeId(0)).unwrap();
        inst.add_access_unit(NodeId(1)).unwrap();
        inst.set_opinions(vec![1.0, 1.0]);
        assert_eq!(run_to_convergence(&inst, 1, 0.01, 10).unwrap().steps, 0);
    }

    #[test]
    fn all_committed_converges_in_one_step() {
        let mut inst = NetworkInstance::from_edges([(0u64, 1u64), (1, 2), (2, 3)]).unwrap();
        for i in 0..4 {
            inst.add_access_unit(NodeId(i)).unwrap();
        }
        let conv = run_to_convergence(&inst, 1, 1e-9, 10).unwrap();
        assert_eq!(conv.steps, 1);
        assert!(conv.opinions.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn no_access_units_fails_to_converge() {
        let inst = NetworkInstance::from_edges([(0u64, 1u64)]).unwrap();
        let err = run_to_convergence(&inst, 1, 0.1, 50).unwrap_err();
        assert!(matches!(
            err,
            DynamicsError::NotConverged { max_steps: 50, .. }
        ));
    }

    #[test]
    fn epsilon_one_is_immediate_and_bad_epsilon_rejected() {
        assert_eq!(
            run_to_convergence(&path_with_unit(), 1, 1.0, 0)
                .unwrap()
                .steps,
            0
        );
        assert_eq!(
            run_to_convergence(&path_with_unit(), 1, 0.0, 10),
            Err(DynamicsError::BadEpsilon(0.0))
        );
    }

    #[test]
    fn all_neighbors_committed_gives_one() {
        // Star centre 0 outside S, all leaves committed, r = 1: centre is in AC
        // with no non-S neighbors, so (1 + 0) / (1 + 0) = 1.
        let mut inst = NetworkInstance::from_edges([(0u64, 1u64), (0, 2)]).unwrap();
        inst.add_access_unit(NodeId(1)).unwrap();
        inst.add_access_unit(NodeId(2)).unwrap();
        let region = inst
            .graph()
            .ball_mask(inst.access_indices().iter().copied(), 1);
        assert_eq!(step_opinions(&inst, &region)[0], 1.0);
    }

    #[test]
    fn average_opinion_examples() {
        assert_eq!(average_opinion(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(average_opinion(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(average_opinion(&[1.0, 0.5, 0.0]).unwrap(), 0.5);
        assert_eq!(average_opinion(&[]), Err(DynamicsError::Empty));
    }

    #[test]
    fn multiple_accessors_do_not_add_weight() {
        // v = 0 has non-S neighbors {3}; in one instance it is covered by one
        // access unit, in the other by two.
        let one = {
            let mut i = NetworkInstance::from_edges([(0u64, 1u64), (0, 3), (3, 4)]).unwrap();
            i.add_access_unit(NodeId(1)).unwrap();
            i
        };
        let two = {
            let mut i =
                NetworkInstance::from_edges([(0u64, 1u64), (0, 3), (3, 4), (0, 2)]).unwrap();
            i.add_access_unit(NodeId(1)).unwrap();
            i.add_access_unit(NodeId(2)).unwrap();
            i
        };
        let mut one = one;
        let mut two = two;
        one.set_opinion(NodeId(3), 0.3).unwrap();
        two.set_opinion(NodeId(3), 0.3).unwrap();
        let r1 = one
            .graph()
            .ball_mask(one.access_indices().iter().copied(), 1);
        let r2 = two
            .graph()
            .ball_mask(two.access_indices().iter().copied(), 1);
        let a = step_opinions(&one, &r1)[0];
        let b = step_opinions(&two, &r2)[0];
        assert_eq!(a, b);
        assert_eq!(a, (1.0 + 0.3) / 2.0);
    }

    #[test]
    fn series_csv_layout() {
        let mut buf = Vec::new();
        let s = OpinionSummary::of(&[0.0, 0.5, 1.0]).unwrap();
        write_opinion_series(&mut buf, [(1, s)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "tick,min,mean,max\n1,0,0.5,1\n"
        );
    }
}

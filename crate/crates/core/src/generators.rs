//! Seeded growth models that emit unit-growth event streams.
//!
//! Every tick adds at most one node. Models:
//! - `ba`: preferential attachment, each arrival links to d̄/2 distinct nodes
//!   chosen proportionally to degree.
//! - `sb`: three equal communities; an arrival links to each same-community
//!   node with probability `9d̄/(8n)` and to other nodes with a sixth of that.
//! - `jr`: Jackson-Rogers style; an arrival meets d̄/2 random parents and d̄/2
//!   neighbors of parents, linking to each with probability `p`.
//! - `rc`: with probability `α` a node arrives and links to one node chosen by
//!   degree, otherwise an edge joins two existing nodes chosen by degree.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphEvent, NetworkInstance};
use crate::source::EventSource;

const COMMUNITIES: usize = 3;
const RC_RETRIES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Ba,
    Sb,
    Jr,
    Rc,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::Ba, Model::Sb, Model::Jr, Model::Rc];

    pub fn name(self) -> &'static str {
        match self {
            Model::Ba => "ba",
            Model::Sb => "sb",
            Model::Jr => "jr",
            Model::Rc => "rc",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Model::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| GeneratorError::UnknownModel(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("unknown model `{0}` (expected ba, sb, jr or rc)")]
    UnknownModel(String),
    #[error("average degree must be at least 2, got {0}")]
    DegreeTooSmall(usize),
    #[error("model {model} needs an even average degree, got {avg_degree}")]
    OddDegree { model: Model, avg_degree: usize },
    #[error("initial size {size} is smaller than the average degree {avg_degree}")]
    TooSmall { size: usize, avg_degree: usize },
    #[error("parameter {name} = {value} is outside {range}")]
    BadParameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    pub model: Model,
    /// Node count of the warm-up instance.
    pub initial_size: usize,
    pub avg_degree: usize,
    pub seed: u64,
    /// Inter-community probability relative to the intra-community one.
    pub sb_inter_ratio: f64,
    pub jr_link_prob: f64,
    /// Defaults to d̄/2.
    pub jr_parents: Option<usize>,
    /// Defaults to d̄/2.
    pub jr_parent_neighbors: Option<usize>,
    /// Node-arrival probability; defaults to 2/d̄.
    pub rc_alpha: Option<f64>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            model: Model::Ba,
            initial_size: 200,
            avg_degree: 6,
            seed: 0,
            sb_inter_ratio: 1.0 / 6.0,
            jr_link_prob: 0.5,
            jr_parents: None,
            jr_parent_neighbors: None,
            rc_alpha: None,
        }
    }
}

impl GeneratorSpec {
    pub fn new(model: Model, initial_size: usize, avg_degree: usize, seed: u64) -> Self {
        GeneratorSpec {
            model,
            initial_size,
            avg_degree,
            seed,
            ..GeneratorSpec::default()
        }
    }

    pub fn rc_alpha(&self) -> f64 {
        self.rc_alpha.unwrap_or(2.0 / self.avg_degree as f64)
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        let d = self.avg_degree;
        if d < 2 {
            return Err(GeneratorError::DegreeTooSmall(d));
        }
        if matches!(self.model, Model::Ba | Model::Jr) && !d.is_multiple_of(2) {
            return Err(GeneratorError::OddDegree {
                model: self.model,
                avg_degree: d,
            });
        }
        if self.initial_size < d {
            return Err(GeneratorError::TooSmall {
                size: self.initial_size,
                avg_degree: d,
            });
        }
        let unit = |name, value: f64| {
            if value > 0.0 && value <= 1.0 {
                Ok(())
            } else {
                Err(GeneratorError::BadParameter {
                    name,
                    value,
                    range: "(0, 1]",
                })
            }
        };
        unit("sb_inter_ratio", self.sb_inter_ratio)?;
        unit("jr_link_prob", self.jr_link_prob)?;
        unit("rc_alpha", self.rc_alpha())?;
        Ok(())
    }
}

/// A running model. Yields one tick per [`EventSource::next_stamp`] call and
/// never runs out.
#[derive(Debug, Clone)]
pub struct Generator {
    spec: GeneratorSpec,
    rng: ChaCha8Rng,
    adj: Vec<Vec<u32>>,
    edges: HashSet<(u32, u32)>,
    /// Every edge contributes both endpoints; uniform draws are degree-proportional.
    endpoints: Vec<u32>,
    community: Vec<usize>,
    members: [Vec<u32>; COMMUNITIES],
    tick: u64,
}

impl Generator {
    pub fn new(spec: GeneratorSpec) -> Result<Self, GeneratorError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(3);
        Ok(Generator {
            spec,
            rng,
            adj: Vec::new(),
            edges: HashSet::new(),
            endpoints: Vec::new(),
            community: Vec::new(),
            members: Default::default(),
            tick: 0,
        })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Ticks emitted so far.
    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Grows the model until it has `initial_size` nodes and returns that
    /// network, with zero opinions and no access units.
    pub fn warm_up(&mut self) -> NetworkInstance {
        let mut inst = NetworkInstance::new();
        while self.node_count() < self.spec.initial_size {
            for ev in self.next_events() {
                inst.apply_event(&ev)
                    .expect("generated edges are never loops");
            }
        }
        inst
    }

    /// The events of the next tick.
    pub fn next_events(&mut self) -> Vec<GraphEvent> {
        self.tick += 1;
        let before = self.edges.len();
        let mut out = Vec::new();
        if self.adj.is_empty() {
            self.bootstrap(&mut out);
        } else {
            match self.spec.model {
                Model::Ba => self.ba_tick(&mut out),
                Model::Sb => self.sb_tick(&mut out),
                Model::Jr => self.jr_tick(&mut out),
                Model::Rc => self.rc_tick(&mut out),
            }
        }
        debug_assert_eq!(self.edges.len() - before, out.len());
        out
    }

    fn bootstrap(&mut self, out: &mut Vec<GraphEvent>) {
        let size = self.spec.avg_degree / 2 + 1;
        for _ in 0..size {
            self.add_node();
        }
        for u in 0..size as u32 {
            for v in u + 1..size as u32 {
                self.link(u, v, out);
            }
        }
    }

    fn add_node(&mut self) -> u32 {
        let id = self.adj.len() as u32;
        let c = self.adj.len() % COMMUNITIES;
        self.adj.push(Vec::new());
        self.community.push(c);
        self.members[c].push(id);
        id
    }

    fn link(&mut self, u: u32, v: u32, out: &mut Vec<GraphEvent>) -> bool {
        let key = (u.min(v), u.max(v));
        if u == v || !self.edges.insert(key) {
            return false;
        }
        self.adj[u as usize].push(v);
        self.adj[v as usize].push(u);
        self.endpoints.extend([u, v]);
        out.push(GraphEvent::edge(u as u64, v as u64, self.tick));
        true
    }

    fn by_degree(&mut self) -> u32 {
        *self
            .endpoints
            .choose(&mut self.rng)
            .expect("the bootstrap graph has edges")
    }

    fn ba_tick(&mut self, out: &mut Vec<GraphEvent>) {
        let want = self.spec.avg_degree / 2;
        let mut targets = Vec::with_capacity(want);
        while targets.len() < want {
            let t = self.by_degree();
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        let v = self.add_node();
        for t in targets {
            self.link(v, t, out);
        }
    }

    fn sb_tick(&mut self, out: &mut Vec<GraphEvent>) {
        let n = self.adj.len();
        let p_in = (9.0 * self.spec.avg_degree as f64 / (8.0 * n as f64)).min(1.0);
        let p_out = p_in * self.spec.sb_inter_ratio;
        let v = self.add_node();
        let own = self.community[v as usize];
        for u in 0..v {
            let p = if self.community[u as usize] == own {
                p_in
            } else {
                p_out
            };
            if self.rng.gen_bool(p) {
                self.link(v, u, out);
            }
        }
        if out.is_empty() {
            let peers: Vec<u32> = self.members[own]
                .iter()
                .copied()
                .filter(|&u| u != v)
                .collect();
            let u = match peers.choose(&mut self.rng) {
                Some(&u) => u,
                None => self.rng.gen_range(0..v),
            };
            self.link(v, u, out);
        }
    }

    fn jr_tick(&mut self, out: &mut Vec<GraphEvent>) {
        let half = self.spec.avg_degree / 2;
        let n = self.adj.len();
        let parents: Vec<u32> = rand::seq::index::sample(
            &mut self.rng,
            n,
            self.spec.jr_parents.unwrap_or(half).min(n),
        )
        .into_iter()
        .map(|i| i as u32)
        .collect();
        let mut second: Vec<u32> = parents
            .iter()
            .flat_map(|&p| self.adj[p as usize].iter().copied())
            .filter(|u| !parents.contains(u))
            .collect();
        second.sort_unstable();
        second.dedup();
        let meet = self
            .spec
            .jr_parent_neighbors
            .unwrap_or(half)
            .min(second.len());
        let second: Vec<u32> = second
            .choose_multiple(&mut self.rng, meet)
            .copied()
            .collect();
        let v = self.add_node();
        let p = self.spec.jr_link_prob;
        for &u in parents.iter().chain(&second) {
            if self.rng.gen_bool(p) {
                self.link(v, u, out);
            }
        }
        if out.is_empty() {
            let u = *parents.choose(&mut self.rng).expect("at least one parent");
            self.link(v, u, out);
        }
    }

    fn rc_tick(&mut self, out: &mut Vec<GraphEvent>) {
        if self.rng.gen_bool(self.spec.rc_alpha()) {
            let t = self.by_degree();
            let v = self.add_node();
            self.link(v, t, out);
            return;
        }
        for _ in 0..RC_RETRIES {
            let (a, b) = (self.by_degree(), self.by_degree());
            if self.link(a, b, out) {
                return;
            }
        }
    }
}

impl EventSource for Generator {
    fn next_stamp(&mut self) -> Option<Vec<GraphEvent>> {
        Some(self.next_events())
    }
}

/// Builds the warm-up instance for `spec` and returns it with the generator
/// positioned to continue the stream.
pub fn warm_start(spec: GeneratorSpec) -> Result<(NetworkInstance, Generator), GeneratorError> {
    let mut g = Generator::new(spec)?;
    let inst = g.warm_up();
    Ok((inst, g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grown(model: Model, n: usize, d: usize, seed: u64) -> NetworkInstance {
        warm_start(GeneratorSpec::new(model, n, d, seed)).unwrap().0
    }

    #[test]
    fn ba_arrival_emits_half_degree_edges() {
        let mut g = Generator::new(GeneratorSpec::new(Model::Ba, 10, 6, 1)).unwrap();
        assert_eq!(g.next_events().len(), 6); // K_4 bootstrap
        for _ in 0..200 {
            let before = g.node_count();
            assert_eq!(g.next_events().len(), 3);
            assert_eq!(g.node_count(), before + 1);
        }
    }

    #[test]
    fn rc_arrival_rate_is_alpha() {
        let spec = GeneratorSpec::new(Model::Rc, 10, 6, 2);
        assert!((spec.rc_alpha() - 1.0 / 3.0).abs() < 1e-15);
        let mut g = Generator::new(spec).unwrap();
        g.next_events();
        let ticks = 30_000;
        let start = g.node_count();
        for _ in 0..ticks {
            g.next_events();
        }
        let rate = (g.node_count() - start) as f64 / ticks as f64;
        // Binomial std at this size is about 0.0027.
        assert!((rate - 1.0 / 3.0).abs() < 0.015, "rate {rate}");
    }

    #[test]
    fn unit_growth_every_tick() {
        for model in Model::ALL {
            let mut g = Generator::new(GeneratorSpec::new(model, 10, 6, 3)).unwrap();
            g.next_events();
            for _ in 0..2000 {
                let before = g.node_count();
                let evs = g.next_events();
                assert!(g.node_count() - before <= 1, "{model}");
                assert!(evs.iter().all(|e| e.u != e.v));
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        for model in Model::ALL {
            let a = grown(model, 300, 6, 9);
            let b = grown(model, 300, 6, 9);
            let c = grown(model, 300, 6, 10);
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn infeasible_parameters_rejected() {
        let bad = [
            GeneratorSpec::new(Model::Ba, 100, 5, 0),
            GeneratorSpec::new(Model::Jr, 100, 7, 0),
            GeneratorSpec::new(Model::Sb, 100, 1, 0),
            GeneratorSpec::new(Model::Rc, 4, 6, 0),
        ];
        for spec in bad {
            assert!(Generator::new(spec).is_err());
        }
        assert!(Generator::new(GeneratorSpec::new(Model::Sb, 100, 5, 0)).is_ok());
        assert_eq!("JR".parse::<Model>().unwrap(), Model::Jr);
        assert!("er".parse::<Model>().is_err());
    }

    #[test]
    fn mean_degree_near_target() {
        for model in Model::ALL {
            let mut total = 0.0;
            for seed in 0..10 {
                let g = grown(model, 5000, 6, seed);
                total += 2.0 * g.edge_count() as f64 / g.node_count() as f64;
            }
            let mean = total / 10.0;
            assert!((mean - 6.0).abs() <= 0.6, "{model}: mean degree {mean}");
        }
    }

    #[test]
    fn degree_tails_have_expected_magnitude() {
        let max_degree = |g: &NetworkInstance| {
            (0..g.node_count())
                .map(|v| g.graph().degree_at(v))
                .max()
                .unwrap()
        };
        let ba = grown(Model::Ba, 5000, 6, 4);
        let sb = grown(Model::Sb, 5000, 6, 4);
        let (ba, sb) = (max_degree(&ba), max_degree(&sb));
        assert!(ba > 100, "ba max degree {ba}");
        assert!(sb < 50 && 3 * sb < ba, "sb max degree {sb}, ba {ba}");
    }
}

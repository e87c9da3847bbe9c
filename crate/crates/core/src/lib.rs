//! Domination-driven centralization of opinion dynamics on growing networks.
//!
//! A controller commits agents ("access units") whose opinions are pinned to 1.
//! Each unit reveals the nodes within distance r of it. Selection policies
//! prowl outward from that region through local inquiries only, and the run
//! stops once the access units dominate the network at distance r.

pub mod controller;
pub mod coverage;
pub mod dynamics;
pub mod fixtures;
pub mod generators;
pub mod graph;
pub mod harness;
pub mod ingest;
pub mod observation;
pub mod oracle;
pub mod prowl;
pub mod source;

pub use controller::{run, run_with_policy, RunConfig, RunOutcome, RunRecord};
pub use generators::{Generator, GeneratorSpec, Model};
pub use graph::{Graph, GraphError, GraphEvent, NetworkInstance, NodeId};
pub use prowl::{PolicyKind, Prowler, SelectionPolicy};
pub use source::{EventSource, EventStream, Frozen};

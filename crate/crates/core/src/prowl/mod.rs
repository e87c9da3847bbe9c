//! Access-unit selection policies and the set computations behind them.
//!
//! Two local baselines pick from the accessible region or its rim (`lran`,
//! `ldeg`). The five prowling policies start on the region boundary, step out,
//! and walk for at most k edges: a random or degree-ascending walk confined to
//! the exterior set (`xran`, `xdeg`), or to the B-set (`bran`, `bdeg`, and
//! `bnde`, which climbs N-degree while inside the region).

mod policy;
mod sets;

pub use policy::{PolicyKind, ProwlTrace, Prowler, SelectError, SelectionPolicy, UnknownPolicy};
pub use sets::{access_neighborhood, b_set, exterior_set, n_degree, StructuralSets};

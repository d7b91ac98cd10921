//! Simulation and verification toolkit for the contact process with dynamic
//! edges (CPDE).
//!
//! An infection spreads along the edges of a finite graph (path, cycle or
//! torus) while every edge flips between open and closed on its own. All
//! randomness of a replica lives in keyed Poisson event streams
//! ([`streams`]), so any number of coupled processes can be driven by the same
//! realization.

pub mod blocks;
pub mod couplings;
pub mod engine;
pub mod estimators;
pub mod error;
pub mod model;
pub mod oracle;
pub mod parallel;
pub mod rng;
pub mod streams;
pub mod topology;

pub use engine::{simulate_cpde, simulate_cpde_reference, Extinction, SimOptions, SimOutcome};
pub use error::{Error, Result};
pub use model::{edge_marginal, sample_initial_environment, Configuration, Params};
pub use rng::ReplicaKey;
pub use streams::{sample_event_streams, EventStreams, LazyStreams, StreamKind, StreamSet};
pub use topology::{Topology, TopologyKind};

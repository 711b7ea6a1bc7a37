//! Replica placement for IoT data across mini clouds.
//!
//! A datum arriving at a gateway must be copied to `r` distinct mini clouds.
//! The placement cost is the time to push the datum from its gateway into the
//! best entry cloud plus the slowest star-propagation from that entry cloud to
//! the remaining replicas. [`optimize::hs_optimize`] searches allocation
//! vectors with a harmony-memory procedure; random search, a genetic
//! algorithm, forest optimization and exhaustive enumeration are provided for
//! comparison. [`harness`] replays seeded scenarios timestep by timestep and
//! aggregates cost, access delay and energy.

pub mod cli;
pub mod cost;
pub mod error;
pub mod harness;
pub mod model;
pub mod optimize;
pub mod scenario;
pub mod seed;

pub use cost::{access_delay, placement_energy, replication_cost, AllocationVector, CostBreakdown, EnergyParams};
pub use error::{Error, Result};
pub use model::{commit_placement, validate_topology, DataItem, Gateway, LinkMatrix, MiniCloud, Policy, Topology};

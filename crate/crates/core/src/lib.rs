//! Stochastic extinction–colonisation dynamics on finite networks.
//!
//! A patch network is a connected undirected [`Graph`]. Each generation, every
//! occupied patch empties with probability `e`, then every empty patch is
//! colonised with probability `1 - (1 - c)^k`, `k` being its number of
//! occupied neighbours. The all-empty state is absorbing.
//!
//! * [`netgen`] builds ER, community, lattice and preferential-attachment
//!   networks with an exact edge count.
//! * [`dynamics`] simulates the chain and estimates finite-horizon
//!   persistence and occupancy by crude Monte Carlo.
//! * [`exact`] builds the `2^n`-state transition matrices for small `n`.
//! * [`meanfield`] iterates the independence approximation.
//! * [`rareevent`] estimates tiny persistence or extinction probabilities.
//! * [`experiment`] runs factorial sensitivity designs.

pub mod csv;
pub mod dynamics;
pub mod error;
pub mod estimate;
pub mod exact;
pub mod experiment;
pub mod meanfield;
pub mod netgen;
pub mod par;
pub mod rareevent;
pub mod rng;

pub use dynamics::{ColonisationSource, Occupancy, Params};
pub use error::{Error, Result};
pub use estimate::{Estimate, Method};
pub use netgen::Graph;
pub use par::Exec;
pub use rng::Seed;

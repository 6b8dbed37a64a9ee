//! Network generation and characterisation.

mod generators;
mod graph;
mod metrics;

pub use generators::{
    attachment_counts, community, community_of, edges_for_density, erdos_renyi, lattice, lattice_cap,
    pref_attach, GeneratorOptions, Topology, TopologySpec,
};
pub use graph::{max_edges, Graph};
pub use metrics::{graph_metrics, leading_adjacency_eigenvalue, GraphMetrics, DEFAULT_EIGEN_TOL};

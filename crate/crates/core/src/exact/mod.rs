//! Exact analysis of the chain over all `2^n` occupancy states.
//!
//! States are bitmasks read as integers; index 0 is the coffin state.

mod heatmap;
mod horizon;
mod matrices;
mod spectral;

pub use heatmap::{contour_extinction, extinction_heatmap, Heatmap, HeatmapOptions};
pub use horizon::{finite_horizon, finite_horizon_matrix_free, HorizonRow, HorizonTable};
pub use matrices::{
    build_transition, build_transition_with, DenseMatrix, ExactConfig, SparseMatrix, TransitionMatrices,
    DEFAULT_EXACT_CAP, MATRIX_FREE_CAP, MAX_EXACT_CAP,
};
pub use spectral::{
    convergence_diagnostics, mean_extinction_time, mean_extinction_times, qsd, qsd_with, tv_series, tv_to_qsd,
    ConvergenceReport, QsdResult, DEFAULT_MAX_ITERATIONS, DEFAULT_QSD_REGIME_THRESHOLD, DEFAULT_QSD_TOL,
    MIN_DIAGNOSTIC_HORIZON,
};

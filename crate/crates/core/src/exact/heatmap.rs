use serde::{Deserialize, Serialize};

use super::horizon::finite_horizon_matrix_free;
use super::matrices::{build_transition, DEFAULT_EXACT_CAP};
use crate::csv::CsvWriter;
use crate::dynamics::{estimate_crude, Occupancy, Params};
use crate::error::{ensure, Result};
use crate::estimate::Method;
use crate::netgen::{leading_adjacency_eigenvalue, Graph, DEFAULT_EIGEN_TOL};
use crate::par::Exec;
use crate::rng::Seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapOptions {
    /// Largest patch count evaluated exactly; larger graphs are simulated.
    pub exact_cap: usize,
    /// Replicates per grid point when simulating.
    pub n_reps: usize,
    pub seed: Seed,
}

impl Default for HeatmapOptions {
    fn default() -> Self {
        HeatmapOptions { exact_cap: DEFAULT_EXACT_CAP, n_reps: 10_000, seed: Seed(0) }
    }
}

/// Extinction probabilities `P(#Z_{n_gen} = 0)` over an `(e, c)` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub e_grid: Vec<f64>,
    pub c_grid: Vec<f64>,
    /// `extinction[i][j]` is the value at `(e_grid[i], c_grid[j])`.
    pub extinction: Vec<Vec<f64>>,
    pub lambda_a1: f64,
    pub method: Method,
}

impl Heatmap {
    /// CSV with columns `e,c,p_extinct,e_over_c`.
    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new(&["e", "c", "p_extinct", "e_over_c"]);
        for (i, &e) in self.e_grid.iter().enumerate() {
            for (j, &c) in self.c_grid.iter().enumerate() {
                w.row([e, c, self.extinction[i][j], e / c]);
            }
        }
        w.finish()
    }

    /// Points of the mean-field frontier `e / c = λ_{A,1}` across the `e`
    /// grid, as CSV with columns `e,c`. Points with `c > 1` are skipped.
    pub fn contour_csv(&self) -> String {
        let mut w = CsvWriter::new(&["e", "c"]);
        for &e in &self.e_grid {
            let c = e / self.lambda_a1;
            if c <= 1.0 {
                w.row([e, c]);
            }
        }
        w.finish()
    }
}

fn extinction_at(graph: &Graph, e: f64, c: f64, n_gen: usize, z0: &Occupancy, opts: &HeatmapOptions, idx: u64) -> Result<f64> {
    let params = Params::new(e, c)?;
    if graph.n() <= opts.exact_cap {
        let mask = z0.to_mask().expect("small graph");
        if graph.n() <= DEFAULT_EXACT_CAP {
            let tm = build_transition(graph, &params)?;
            return Ok(super::finite_horizon(&tm, mask, n_gen)?.last().p_extinct);
        }
        return Ok(finite_horizon_matrix_free(graph, &params, mask, n_gen)?.last().p_extinct);
    }
    let report = estimate_crude(graph, &params, z0, n_gen, opts.n_reps, opts.seed.child(idx), &Exec::sequential())?;
    Ok(1.0 - report.persistence().value)
}

pub fn extinction_heatmap(
    graph: &Graph,
    e_grid: &[f64],
    c_grid: &[f64],
    n_gen: usize,
    z0: &Occupancy,
    opts: &HeatmapOptions,
    exec: &Exec,
) -> Result<Heatmap> {
    ensure(!e_grid.is_empty() && !c_grid.is_empty(), || "empty grid".into())?;
    ensure(z0.n() == graph.n(), || "initial state does not match the graph".into())?;
    let lambda_a1 = leading_adjacency_eigenvalue(graph, DEFAULT_EIGEN_TOL)?;
    let nc = c_grid.len();
    let cells = exec.map(e_grid.len() * nc, |k| {
        extinction_at(graph, e_grid[k / nc], c_grid[k % nc], n_gen, z0, opts, k as u64)
    });
    let flat = cells.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(Heatmap {
        e_grid: e_grid.to_vec(),
        c_grid: c_grid.to_vec(),
        extinction: flat.chunks(nc).map(<[f64]>::to_vec).collect(),
        lambda_a1,
        method: if graph.n() <= opts.exact_cap { Method::Exact } else { Method::Crude },
    })
}

/// Extinction probability along the frontier `c = e / λ_{A,1}`, returned as
/// `(e, c, p_extinct)` triples; values of `e` giving `c > 1` are skipped.
pub fn contour_extinction(
    graph: &Graph,
    e_values: &[f64],
    n_gen: usize,
    z0: &Occupancy,
    opts: &HeatmapOptions,
    exec: &Exec,
) -> Result<Vec<(f64, f64, f64)>> {
    let lambda = leading_adjacency_eigenvalue(graph, DEFAULT_EIGEN_TOL)?;
    let points: Vec<(f64, f64)> = e_values.iter().map(|&e| (e, e / lambda)).filter(|&(_, c)| c <= 1.0).collect();
    exec.map(points.len(), |k| {
        let (e, c) = points[k];
        extinction_at(graph, e, c, n_gen, z0, opts, k as u64).map(|p| (e, c, p))
    })
    .into_iter()
    .collect()
}

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::design::{Cell, Design};
use crate::csv::CsvWriter;
use crate::dynamics::{estimate_crude, Occupancy, Params};
use crate::error::Result;
use crate::estimate::{Diagnostics, Method};
use crate::exact::{build_transition, finite_horizon, finite_horizon_matrix_free, DEFAULT_EXACT_CAP};
use crate::netgen::{leading_adjacency_eigenvalue, Graph, TopologySpec, DEFAULT_EIGEN_TOL};
use crate::par::Exec;
use crate::rareevent::{ips_persistence, is_extinction, IpsConfig, TwistSchedule, DEFAULT_BATCHES};
use crate::rng::Seed;

/// One (cell, replicate) outcome. Failed rows carry the error message and
/// NaN estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub cell: usize,
    pub topology: String,
    pub n: usize,
    pub n_edges: usize,
    pub density: f64,
    pub e: f64,
    pub c: f64,
    pub replicate: usize,
    pub method: Option<Method>,
    pub persistence: f64,
    pub persistence_se: f64,
    pub occupancy: f64,
    pub occupancy_se: f64,
    pub cond_occupancy: f64,
    pub lambda_a1: f64,
    pub fingerprint: String,
    pub n_work: u64,
    pub error: Option<String>,
    /// Wall-clock time; left out of the CSV, which must not depend on the
    /// machine.
    #[serde(skip)]
    pub runtime_ms: f64,
}

pub const RESULT_COLUMNS: [&str; 18] = [
    "cell",
    "topology",
    "n",
    "n_edges",
    "density",
    "e",
    "c",
    "replicate",
    "method",
    "persistence",
    "persistence_se",
    "occupancy",
    "occupancy_se",
    "cond_occupancy",
    "lambda_a1",
    "fingerprint",
    "n_work",
    "error",
];

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut w = CsvWriter::new(&RESULT_COLUMNS);
    for r in rows {
        w.row([
            r.cell.to_string(),
            r.topology.clone(),
            r.n.to_string(),
            r.n_edges.to_string(),
            r.density.to_string(),
            r.e.to_string(),
            r.c.to_string(),
            r.replicate.to_string(),
            r.method.map(|m| m.to_string()).unwrap_or_default(),
            r.persistence.to_string(),
            r.persistence_se.to_string(),
            r.occupancy.to_string(),
            r.occupancy_se.to_string(),
            r.cond_occupancy.to_string(),
            r.lambda_a1.to_string(),
            r.fingerprint.clone(),
            r.n_work.to_string(),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    w.finish()
}

struct Response {
    method: Method,
    persistence: f64,
    persistence_se: f64,
    occupancy: f64,
    occupancy_se: f64,
    cond_occupancy: f64,
    n_work: u64,
}

/// Exact when the graph is small enough, otherwise crude Monte Carlo; when
/// fewer than `escalation_events` survivals (or extinctions) are seen, the
/// persistence estimate is redone with IPS (or IS) on the same budget.
fn estimate_row(design: &Design, graph: &Graph, params: &Params, z0: &Occupancy, seed: Seed) -> Result<Response> {
    let cfg = &design.estimator;
    let n_gen = design.n_gen;
    if graph.n() <= cfg.exact_cap {
        let mask = z0.to_mask().expect("exact graphs fit a mask");
        let table = if graph.n() <= DEFAULT_EXACT_CAP {
            finite_horizon(&build_transition(graph, params)?, mask, n_gen)?
        } else {
            finite_horizon_matrix_free(graph, params, mask, n_gen)?
        };
        let last = table.last();
        return Ok(Response {
            method: Method::Exact,
            persistence: last.p_persist,
            persistence_se: 0.0,
            occupancy: last.mean_occ,
            occupancy_se: 0.0,
            cond_occupancy: last.cond_mean_occ,
            n_work: 0,
        });
    }

    let exec = Exec::sequential();
    let report = estimate_crude(graph, params, z0, n_gen, cfg.n_reps, seed.child(0), &exec)?;
    let h = report.at_horizon();
    let mut out = Response {
        method: Method::Crude,
        persistence: h.persistence.value,
        persistence_se: h.persistence.std_error,
        occupancy: h.occupancy.value,
        occupancy_se: h.occupancy.std_error,
        cond_occupancy: h.conditional_occupancy.value,
        n_work: cfg.n_reps as u64,
    };
    if !cfg.escalate {
        return Ok(out);
    }
    let survivors = (h.persistence.value * cfg.n_reps as f64).round() as u64;
    let extinctions = cfg.n_reps as u64 - survivors;
    if survivors < cfg.escalation_events {
        let ips = IpsConfig::new((cfg.n_reps / DEFAULT_BATCHES).max(2));
        let est = ips_persistence(graph, params, z0, n_gen, &ips, seed.child(1), &exec)?;
        let cond = match &est.diagnostics {
            Diagnostics::Ips(d) => d.conditional_occupancy,
            _ => unreachable!("IPS estimates carry IPS diagnostics"),
        };
        out.method = Method::Ips;
        out.persistence = est.value;
        out.persistence_se = est.std_error;
        out.cond_occupancy = cond;
        out.occupancy = cond * est.value;
        out.n_work += est.n_work;
    } else if extinctions < cfg.escalation_events && params.e > 0.0 && params.e < 1.0 {
        let schedule = TwistSchedule::linear_default(params.e, n_gen);
        let est = is_extinction(graph, params, z0, n_gen, &schedule, cfg.n_reps, seed.child(2), &exec)?;
        out.method = Method::Is;
        out.persistence = 1.0 - est.value;
        out.persistence_se = est.std_error;
        out.n_work += est.n_work;
    }
    Ok(out)
}

/// Graph for (topology, density, replicate) with its leading eigenvalue.
type GraphSlot = std::result::Result<(Graph, f64), String>;

fn graph_seed(design: &Design, density_index: usize, replicate: usize) -> Seed {
    // shared by all topologies: comparisons are paired by replicate
    design.seed.child(0).child(density_index as u64).child(replicate as u64)
}

fn row_seed(design: &Design, cell: &Cell, replicate: usize) -> Seed {
    // independent of the topology, giving common random numbers across it
    design
        .seed
        .child(1)
        .child(cell.density_index as u64)
        .child(cell.e_index as u64)
        .child(cell.c_index as u64)
        .child(replicate as u64)
}

/// Runs every (cell, replicate) of the design. Rows come back sorted by cell
/// then replicate and do not depend on the worker count.
pub fn run_factorial(design: &Design, exec: &Exec) -> Result<Vec<ResultRow>> {
    design.validate()?;
    let n = design.n;
    let edges = design.density.edge_counts(n);
    let n_topo = design.topologies.len();
    let n_dens = edges.len();
    let reps = design.replicates;

    let graphs: Vec<GraphSlot> = exec.map(n_topo * n_dens * reps, |k| {
        let (ti, rest) = (k / (n_dens * reps), k % (n_dens * reps));
        let (di, r) = (rest / reps, rest % reps);
        let spec = TopologySpec::new(design.topologies[ti].clone(), n, edges[di]);
        let mut rng = graph_seed(design, di, r).rng();
        spec.generate(&mut rng)
            .and_then(|g| leading_adjacency_eigenvalue(&g, DEFAULT_EIGEN_TOL).map(|l| (g, l)))
            .map_err(|e| e.to_string())
    });

    let cells = design.cells();
    let z0 = design.initial.state(n);
    let rows = exec.map(cells.len() * reps, |k| {
        let cell = &cells[k / reps];
        let r = k % reps;
        let started = Instant::now();
        let slot = &graphs[(cell.topology_index * n_dens + cell.density_index) * reps + r];
        let mut row = ResultRow {
            cell: cell.index,
            topology: cell.topology.label(),
            n,
            n_edges: cell.n_edges,
            density: cell.n_edges as f64 / crate::netgen::max_edges(n).max(1) as f64,
            e: cell.e,
            c: cell.c,
            replicate: r,
            method: None,
            persistence: f64::NAN,
            persistence_se: f64::NAN,
            occupancy: f64::NAN,
            occupancy_se: f64::NAN,
            cond_occupancy: f64::NAN,
            lambda_a1: f64::NAN,
            fingerprint: String::new(),
            n_work: 0,
            error: None,
            runtime_ms: 0.0,
        };
        let outcome = slot.clone().and_then(|(graph, lambda)| {
            row.lambda_a1 = lambda;
            row.fingerprint = graph.fingerprint();
            let params = Params::new(cell.e, cell.c).map_err(|e| e.to_string())?;
            estimate_row(design, &graph, &params, &z0, row_seed(design, cell, r)).map_err(|e| e.to_string())
        });
        match outcome {
            Ok(resp) => {
                row.method = Some(resp.method);
                row.persistence = resp.persistence;
                row.persistence_se = resp.persistence_se;
                row.occupancy = resp.occupancy;
                row.occupancy_se = resp.occupancy_se;
                row.cond_occupancy = resp.cond_occupancy;
                row.n_work = resp.n_work;
            }
            Err(msg) => row.error = Some(msg),
        }
        row.runtime_ms = started.elapsed().as_secs_f64() * 1e3;
        row
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{CFactor, DensityFactor, EstimatorConfig};
    use crate::netgen::Topology;

    fn design(n: usize, e: Vec<f64>) -> Design {
        Design {
            name: String::new(),
            n,
            n_gen: 15,
            topologies: vec![Topology::Er, Topology::Pa { power: 1.0 }],
            density: DensityFactor::Fractions(vec![0.5]),
            e,
            c: CFactor::Values(vec![0.2]),
            replicates: 2,
            estimator: EstimatorConfig { n_reps: 400, ..Default::default() },
            initial: Default::default(),
            seed: Seed(11),
        }
    }

    #[test]
    fn no_extinction_means_certain_persistence() {
        for n in [6, 20] {
            let rows = run_factorial(&design(n, vec![0.0]), &Exec::sequential()).unwrap();
            assert_eq!(rows.len(), 4);
            for r in &rows {
                assert_eq!(r.persistence, 1.0, "{r:?}");
                assert_eq!(r.occupancy, n as f64);
                assert!(r.error.is_none());
            }
        }
    }

    #[test]
    fn exact_rows_have_zero_error() {
        let rows = run_factorial(&design(6, vec![0.1, 0.3]), &Exec::sequential()).unwrap();
        assert!(rows.iter().all(|r| r.method == Some(Method::Exact) && r.persistence_se == 0.0));
        // paired replicate networks: same edge count, same replicate index
        assert_eq!(rows[0].fingerprint, rows[2].fingerprint);
        assert_ne!(rows[0].fingerprint, rows[1].fingerprint);
    }

    #[test]
    fn deterministic_csv_and_escalation() {
        let d = design(20, vec![0.05, 0.9]);
        let a = rows_to_csv(&run_factorial(&d, &Exec::sequential()).unwrap());
        let b = rows_to_csv(&run_factorial(&d, &Exec::with_workers(3)).unwrap());
        assert_eq!(a, b);
        let rows = run_factorial(&d, &Exec::sequential()).unwrap();
        // e = 0.05 on a dense graph: extinction essentially never observed
        assert!(rows.iter().filter(|r| r.e == 0.05).all(|r| r.method == Some(Method::Is)));
        // e = 0.9, c = 0.2: survival essentially never observed
        assert!(rows.iter().filter(|r| r.e == 0.9).all(|r| r.method == Some(Method::Ips)));
        assert!(a.starts_with(&RESULT_COLUMNS.join(",")));
    }
}

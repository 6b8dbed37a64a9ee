use serde::{Deserialize, Serialize};

use super::graph::Graph;
use crate::error::{Error, Result};

pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 1_000_000;

/// Leading eigenvalue of the adjacency matrix by power iteration.
///
/// Iterates on `A + I` so that bipartite graphs (whose spectrum is symmetric
/// about zero) still have a strictly dominant eigenvalue. For a positive
/// iterate `x` the Collatz–Wielandt ratios `(Bx)_u / x_u` bracket the
/// spectral radius of `B = A + I`; iteration stops once that bracket is
/// narrower than `tol`, which stays reliable when the spectral gap is small
/// and successive Rayleigh quotients barely move. Graphs are connected, so
/// `B` is irreducible and the bracket closes.
pub fn leading_adjacency_eigenvalue(graph: &Graph, tol: f64) -> Result<f64> {
    let n = graph.n();
    if graph.n_edges() == 0 {
        return Ok(0.0);
    }
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    for _ in 0..MAX_ITERATIONS {
        let (mut lo, mut hi, mut peak) = (f64::INFINITY, 0.0f64, 0.0f64);
        for u in 0..n {
            y[u] = x[u] + graph.neighbors(u).iter().map(|&v| x[v as usize]).sum::<f64>();
            let ratio = y[u] / x[u];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            peak = peak.max(y[u]);
        }
        if hi - lo < tol {
            return Ok(0.5 * (lo + hi) - 1.0);
        }
        x.iter_mut().zip(&y).for_each(|(a, b)| *a = b / peak);
    }
    Err(Error::NoConvergence { what: "adjacency power iteration", iterations: MAX_ITERATIONS })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub n: usize,
    pub n_edges: usize,
    pub density: f64,
    pub degrees: Vec<usize>,
    pub max_degree: usize,
    pub min_degree: usize,
    pub mean_degree: f64,
    pub lambda_a1: f64,
    pub components: usize,
    pub fingerprint: String,
}

pub fn graph_metrics(graph: &Graph) -> GraphMetrics {
    let degrees = graph.degrees();
    GraphMetrics {
        n: graph.n(),
        n_edges: graph.n_edges(),
        density: graph.density(),
        max_degree: degrees.iter().copied().max().unwrap_or(0),
        min_degree: degrees.iter().copied().min().unwrap_or(0),
        mean_degree: 2.0 * graph.n_edges() as f64 / graph.n() as f64,
        lambda_a1: leading_adjacency_eigenvalue(graph, DEFAULT_EIGEN_TOL).unwrap_or(f64::NAN),
        components: graph.component_count(),
        fingerprint: graph.fingerprint(),
        degrees,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lambda(g: &Graph) -> f64 {
        leading_adjacency_eigenvalue(g, DEFAULT_EIGEN_TOL).unwrap()
    }

    #[test]
    fn closed_form_spectra() {
        for n in [2, 3, 7, 20] {
            assert!((lambda(&Graph::complete(n)) - (n - 1) as f64).abs() < 1e-8);
            assert!((lambda(&Graph::star(n)) - ((n - 1) as f64).sqrt()).abs() < 1e-8);
        }
        assert!((lambda(&Graph::cycle(10)) - 2.0).abs() < 1e-8);
        assert!((lambda(&Graph::cycle(7)) - 2.0).abs() < 1e-8);
        assert!((lambda(&Graph::path(3)) - 2f64.sqrt()).abs() < 1e-8);
        assert_eq!(lambda(&Graph::path(1)), 0.0);
    }

    #[test]
    fn small_graph_metrics() {
        let k4 = graph_metrics(&Graph::complete(4));
        assert_eq!(k4.density, 1.0);
        assert_eq!(k4.degrees, vec![3; 4]);
        assert!((k4.lambda_a1 - 3.0).abs() < 1e-8);

        let p3 = graph_metrics(&Graph::path(3));
        assert!((p3.density - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(p3.degrees, vec![1, 2, 1]);
        assert!((p3.lambda_a1 - 2f64.sqrt()).abs() < 1e-8);
        assert_eq!(p3.components, 1);
    }

    #[test]
    fn matches_dense_symmetric_eigensolver() {
        use crate::netgen::{lattice, pref_attach, GeneratorOptions};
        use crate::Seed;
        let mut rng = Seed(11).rng();
        let graphs = [
            lattice(50, 263, &mut rng, GeneratorOptions::default()).unwrap(),
            lattice(100, 495, &mut rng, GeneratorOptions::default()).unwrap(),
            pref_attach(100, 495, 3.0, &mut rng).unwrap(),
        ];
        for g in &graphs {
            let a = nalgebra::DMatrix::<f64>::from_fn(g.n(), g.n(), |i, j| if g.has_edge(i, j) { 1.0 } else { 0.0 });
            let oracle: f64 = a.symmetric_eigenvalues().max();
            assert!((lambda(g) - oracle).abs() < 1e-9, "{} vs {oracle}", lambda(g));
        }
    }
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::csv::CsvWriter;
use crate::dynamics::{check_start, Kernel, Occupancy, Params};
use crate::error::{ensure, Result};
use crate::estimate::{mean_and_se, Diagnostics, Estimate, Method};
use crate::netgen::Graph;
use crate::par::Exec;
use crate::rng::{Seed, SimRng};

pub const DEFAULT_BATCHES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpsConfig {
    /// Particles per batch.
    pub n_particles: usize,
    /// Independent batches; the standard error is taken across them.
    pub n_batches: usize,
    /// Report `∏ #E_t` (the product of death fractions) instead of
    /// `∏ (1 − #E_t)`. Only useful for comparison: it is not an estimator of
    /// either persistence or extinction.
    pub literal_product: bool,
}

impl IpsConfig {
    pub fn new(n_particles: usize) -> Self {
        IpsConfig { n_particles, n_batches: DEFAULT_BATCHES, literal_product: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpsDiagnostics {
    /// Death fraction `#E_t` for `t = 1..=n_gen`, averaged over batches.
    pub death_fractions: Vec<f64>,
    pub batch_estimates: Vec<f64>,
    /// Batches in which every particle died in a single generation.
    pub degenerate_batches: usize,
    /// Mean `#Z_{n_gen}` over surviving particles, an estimate of
    /// `E(#Z_{n_gen} | #Z_{n_gen} > 0)`.
    pub conditional_occupancy: f64,
    pub literal_product: bool,
}

impl IpsDiagnostics {
    /// CSV with columns `t,death_fraction`.
    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new(&["t", "death_fraction"]);
        for (t, f) in self.death_fractions.iter().enumerate() {
            w.row([(t + 1).to_string(), f.to_string()]);
        }
        w.finish()
    }
}

struct Batch {
    log_survival: f64,
    literal: f64,
    death_fractions: Vec<f64>,
    degenerate: bool,
    cond_occ: f64,
}

fn run_batch(graph: &Graph, params: &Params, z0: &Occupancy, n_gen: usize, n: usize, seed: Seed) -> Batch {
    let mut kernel = Kernel::new(graph, *params);
    let mut rngs: Vec<SimRng> = (0..n).map(|i| seed.child(i as u64).rng()).collect();
    let mut select = seed.child(u64::MAX).rng();
    let mut states = vec![z0.clone(); n];
    let mut death_fractions = Vec::with_capacity(n_gen);
    let mut log_survival = 0.0;
    let mut literal = 1.0;
    let mut alive = Vec::with_capacity(n);
    for _ in 0..n_gen {
        alive.clear();
        for (i, (s, r)) in states.iter_mut().zip(rngs.iter_mut()).enumerate() {
            kernel.step(s, r);
            if !s.is_empty() {
                alive.push(i);
            }
        }
        let frac = (n - alive.len()) as f64 / n as f64;
        death_fractions.push(frac);
        literal *= frac;
        if alive.is_empty() {
            death_fractions.resize(n_gen, 1.0);
            return Batch { log_survival: f64::NEG_INFINITY, literal, death_fractions, degenerate: true, cond_occ: 0.0 };
        }
        log_survival += (1.0 - frac).ln();
        // regenerate the dead from survivors chosen uniformly
        let mut next_alive = alive.iter().copied().peekable();
        for i in 0..n {
            if next_alive.peek() == Some(&i) {
                next_alive.next();
                continue;
            }
            let src = alive[select.random_range(0..alive.len())];
            let copy = states[src].clone();
            states[i] = copy;
        }
    }
    // the final regeneration leaves every particle alive; the survivors at
    // the horizon are exactly the current states
    let cond_occ = states.iter().map(|s| s.count() as f64).sum::<f64>() / n as f64;
    Batch { log_survival, literal, death_fractions, degenerate: false, cond_occ }
}

/// Interacting-particle estimate of `P(#Z_{n_gen} > 0)`.
///
/// Each batch evolves `n_particles` copies of the chain; after every
/// generation the particles that hit the coffin state are replaced by copies
/// of survivors chosen uniformly. With `#E_t` the fraction that died at
/// generation `t`, the batch estimate `∏ (1 − #E_t)` is unbiased.
pub fn ips_persistence(
    graph: &Graph,
    params: &Params,
    z0: &Occupancy,
    n_gen: usize,
    cfg: &IpsConfig,
    seed: Seed,
    exec: &Exec,
) -> Result<Estimate> {
    params.validate()?;
    check_start(graph, z0, n_gen)?;
    ensure(cfg.n_particles >= 2, || "at least two particles are needed".into())?;
    ensure(cfg.n_batches >= 1, || "at least one batch is needed".into())?;
    ensure(!z0.is_empty(), || "particles cannot start in the coffin state".into())?;

    let batches = exec.map(cfg.n_batches, |b| run_batch(graph, params, z0, n_gen, cfg.n_particles, seed.child(b as u64)));
    let values: Vec<f64> = batches
        .iter()
        .map(|b| if cfg.literal_product { b.literal } else { b.log_survival.exp() })
        .collect();
    let (value, se) = if values.len() >= 2 { mean_and_se(&values) } else { (values[0], f64::NAN) };
    let k = batches.len() as f64;
    let death_fractions =
        (0..n_gen).map(|t| batches.iter().map(|b| b.death_fractions[t]).sum::<f64>() / k).collect();
    let live: Vec<&Batch> = batches.iter().filter(|b| !b.degenerate).collect();
    let conditional_occupancy =
        if live.is_empty() { 0.0 } else { live.iter().map(|b| b.cond_occ).sum::<f64>() / live.len() as f64 };
    let diagnostics = IpsDiagnostics {
        death_fractions,
        batch_estimates: values,
        degenerate_batches: batches.len() - live.len(),
        conditional_occupancy,
        literal_product: cfg.literal_product,
    };
    Ok(Estimate {
        value,
        std_error: se,
        method: Method::Ips,
        n_work: (cfg.n_particles * cfg.n_batches) as u64,
        diagnostics: Diagnostics::Ips(diagnostics),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(e: &Estimate) -> &IpsDiagnostics {
        match &e.diagnostics {
            Diagnostics::Ips(d) => d,
            _ => panic!("missing diagnostics"),
        }
    }

    #[test]
    fn no_extinction_gives_one() {
        let g = Graph::cycle(5);
        let p = Params::new(0.0, 0.3).unwrap();
        let est = ips_persistence(&g, &p, &Occupancy::from_mask(5, 1), 10, &IpsConfig::new(50), Seed(1), &Exec::sequential())
            .unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.std_error, 0.0);
        assert!(diag(&est).death_fractions.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn single_patch() {
        let g = Graph::path(1);
        let p = Params::new(0.5, 0.5).unwrap();
        let est =
            ips_persistence(&g, &p, &Occupancy::full(1), 3, &IpsConfig::new(2000), Seed(3), &Exec::sequential()).unwrap();
        assert!(est.covers(0.125, 3.0), "{est:?}");
        assert!((diag(&est).conditional_occupancy - 1.0).abs() < 1e-15);
    }

    #[test]
    fn total_die_out_is_flagged() {
        let g = Graph::path(2);
        let p = Params::new(1.0, 0.5).unwrap();
        let est =
            ips_persistence(&g, &p, &Occupancy::full(2), 4, &IpsConfig::new(10), Seed(0), &Exec::sequential()).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(diag(&est).degenerate_batches, DEFAULT_BATCHES);
    }

    #[test]
    fn literal_product_is_not_persistence() {
        let g = Graph::path(1);
        let p = Params::new(0.5, 0.5).unwrap();
        let cfg = IpsConfig { literal_product: true, ..IpsConfig::new(1000) };
        let est = ips_persistence(&g, &p, &Occupancy::full(1), 3, &cfg, Seed(3), &Exec::sequential()).unwrap();
        assert!(est.value < 0.2 && (est.value - 0.125).abs() < 0.01);
        let p = Params::new(0.0, 0.5).unwrap();
        let est = ips_persistence(&g, &p, &Occupancy::full(1), 3, &cfg, Seed(3), &Exec::sequential()).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn deterministic_across_workers() {
        let g = Graph::star(6);
        let p = Params::new(0.3, 0.2).unwrap();
        let cfg = IpsConfig::new(100);
        let z0 = Occupancy::full(6);
        let a = ips_persistence(&g, &p, &z0, 20, &cfg, Seed(9), &Exec::sequential()).unwrap();
        let b = ips_persistence(&g, &p, &z0, 20, &cfg, Seed(9), &Exec::with_workers(4)).unwrap();
        assert_eq!(a, b);
        assert!(diag(&a).to_csv().starts_with("t,death_fraction\n1,"));
    }
}

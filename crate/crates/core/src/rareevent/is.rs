use serde::{Deserialize, Serialize};

use crate::csv::CsvWriter;
use crate::dynamics::{check_start, Kernel, Occupancy, Params};
use crate::error::{ensure, Result};
use crate::estimate::{Diagnostics, Estimate, Method};
use crate::netgen::Graph;
use crate::par::Exec;
use crate::rng::Seed;

/// Twisted extinction rates `e_t` for `t = 1..=n_gen`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TwistSchedule(pub Vec<f64>);

impl TwistSchedule {
    pub fn constant(e: f64, n_gen: usize) -> Self {
        TwistSchedule(vec![e; n_gen])
    }

    /// Linear ramp from `e` at the first generation to `min(3e, 0.9)` at the
    /// last: twisting harder late in the run keeps the weights better
    /// behaved than a constant twist of the same strength.
    pub fn linear_default(e: f64, n_gen: usize) -> Self {
        let end = (3.0 * e).min(0.9);
        Self::linear(e, end, n_gen)
    }

    pub fn linear(start: f64, end: f64, n_gen: usize) -> Self {
        if n_gen <= 1 {
            return TwistSchedule(vec![start; n_gen]);
        }
        let span = (n_gen - 1) as f64;
        TwistSchedule((0..n_gen).map(|t| start + (end - start) * t as f64 / span).collect())
    }

    pub fn validate(&self, n_gen: usize) -> Result<()> {
        ensure(self.0.len() == n_gen, || format!("schedule has {} entries for {} generations", self.0.len(), n_gen))?;
        ensure(self.0.iter().all(|&e| e > 0.0 && e < 1.0), || "twisted rates must lie in (0, 1)".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsDiagnostics {
    /// Trajectories extinct by the horizon.
    pub hits: u64,
    /// `(Σ w)^2 / Σ w^2` over the hits.
    pub effective_sample_size: f64,
    pub min_log10_weight: f64,
    pub max_log10_weight: f64,
    /// `(floor(log10 w), count)` over the hits, sorted by bin.
    pub log10_weight_histogram: Vec<(i32, u64)>,
}

impl IsDiagnostics {
    /// CSV with columns `log10_weight_bin,count`.
    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new(&["log10_weight_bin", "count"]);
        for (b, k) in &self.log10_weight_histogram {
            w.row([b.to_string(), k.to_string()]);
        }
        w.finish()
    }
}

const CHUNK: usize = 256;

/// Weighted indicators of the trajectories in one chunk (0 for survivors).
fn run_chunk(
    graph: &Graph,
    params: &Params,
    z0: &Occupancy,
    schedule: &TwistSchedule,
    range: std::ops::Range<usize>,
    seed: Seed,
) -> Vec<f64> {
    let mut kernel = Kernel::new(graph, *params);
    let e = params.e;
    // log-ratios per generation: per death and per survivor
    let logs: Vec<(f64, f64)> = schedule.0.iter().map(|&et| ((e / et).ln(), ((1.0 - e) / (1.0 - et)).ln())).collect();
    let mut state = z0.clone();
    range
        .map(|r| {
            let mut rng = seed.child(r as u64).rng();
            state.clone_from(z0);
            let mut log_w = 0.0;
            for (&et, &(ld, ls)) in schedule.0.iter().zip(&logs) {
                if state.is_empty() {
                    break;
                }
                let before = state.count();
                let d = kernel.step_with_extinction(&mut state, et, &mut rng);
                if d > 0 {
                    log_w += d as f64 * ld;
                }
                if before > d {
                    log_w += (before - d) as f64 * ls;
                }
            }
            if state.is_empty() {
                log_w.exp()
            } else {
                0.0
            }
        })
        .collect()
}

/// Importance-sampling estimate of `P(#Z_{n_gen} = 0)`.
///
/// The extinction phase of generation `t` runs at `schedule[t-1]`; each
/// extinct trajectory is weighted by the product of the likelihood ratios
/// `(e/e_t)^{d_t} ((1−e)/(1−e_t))^{#Z_{t−1}−d_t}`. Trajectory `i` uses the
/// stream `seed.child(i)`.
#[allow(clippy::too_many_arguments)]
pub fn is_extinction(
    graph: &Graph,
    params: &Params,
    z0: &Occupancy,
    n_gen: usize,
    schedule: &TwistSchedule,
    n_traj: usize,
    seed: Seed,
    exec: &Exec,
) -> Result<Estimate> {
    params.validate()?;
    check_start(graph, z0, n_gen)?;
    ensure(params.e > 0.0 && params.e < 1.0, || "importance sampling needs 0 < e < 1".into())?;
    schedule.validate(n_gen)?;
    ensure(n_traj >= 2, || "at least two trajectories are needed".into())?;

    let chunks = n_traj.div_ceil(CHUNK);
    let parts = exec.map(chunks, |ci| {
        run_chunk(graph, params, z0, schedule, ci * CHUNK..((ci + 1) * CHUNK).min(n_traj), seed)
    });
    let weights: Vec<f64> = parts.into_iter().flatten().collect();

    let n = weights.len() as f64;
    let sum: f64 = weights.iter().sum();
    let mean = sum / n;
    let var = weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let hits: Vec<f64> = weights.iter().copied().filter(|&w| w > 0.0).collect();
    let sum_sq: f64 = hits.iter().map(|w| w * w).sum();
    let mut hist = std::collections::BTreeMap::<i32, u64>::new();
    for w in &hits {
        *hist.entry(w.log10().floor() as i32).or_default() += 1;
    }
    let diagnostics = IsDiagnostics {
        hits: hits.len() as u64,
        effective_sample_size: if sum_sq > 0.0 { sum * sum / sum_sq } else { 0.0 },
        min_log10_weight: hits.iter().map(|w| w.log10()).fold(f64::INFINITY, f64::min),
        max_log10_weight: hits.iter().map(|w| w.log10()).fold(f64::NEG_INFINITY, f64::max),
        log10_weight_histogram: hist.into_iter().collect(),
    };
    Ok(Estimate {
        value: mean,
        std_error: (var / n).sqrt(),
        method: Method::Is,
        n_work: n_traj as u64,
        diagnostics: Diagnostics::Is(diagnostics),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules() {
        assert_eq!(TwistSchedule::linear_default(0.1, 3).0.len(), 3);
        let s = TwistSchedule::linear_default(0.1, 5);
        assert!((s.0[0] - 0.1).abs() < 1e-15 && (s.0[4] - 0.3).abs() < 1e-12);
        assert!((TwistSchedule::linear_default(0.5, 2).0[1] - 0.9).abs() < 1e-15);
        assert!(TwistSchedule::constant(0.0, 3).validate(3).is_err());
        assert!(TwistSchedule::constant(0.2, 3).validate(4).is_err());
    }

    #[test]
    fn null_twist_is_crude() {
        let g = Graph::cycle(4);
        let p = Params::new(0.4, 0.2).unwrap();
        let z0 = Occupancy::full(4);
        let est = is_extinction(&g, &p, &z0, 8, &TwistSchedule::constant(0.4, 8), 500, Seed(2), &Exec::sequential()).unwrap();
        let Diagnostics::Is(d) = &est.diagnostics else { panic!() };
        // every weight is exactly one, so the estimate is a hit frequency
        assert_eq!(est.value, d.hits as f64 / 500.0);
        assert_eq!(d.log10_weight_histogram, vec![(0, d.hits)]);
    }

    #[test]
    fn single_patch_unbiased() {
        let g = Graph::path(1);
        let p = Params::new(0.1, 0.5).unwrap();
        let z0 = Occupancy::full(1);
        let est = is_extinction(&g, &p, &z0, 5, &TwistSchedule::constant(0.5, 5), 20_000, Seed(5), &Exec::sequential())
            .unwrap();
        let truth = 1.0 - 0.9f64.powi(5);
        assert!(est.covers(truth, 3.0), "{est:?} vs {truth}");
    }

    #[test]
    fn worker_count_independent() {
        let g = Graph::star(5);
        let p = Params::new(0.2, 0.3).unwrap();
        let z0 = Occupancy::full(5);
        let s = TwistSchedule::linear_default(0.2, 10);
        let a = is_extinction(&g, &p, &z0, 10, &s, 1000, Seed(4), &Exec::sequential()).unwrap();
        let b = is_extinction(&g, &p, &z0, 10, &s, 1000, Seed(4), &Exec::with_workers(3)).unwrap();
        assert_eq!(a, b);
    }
}

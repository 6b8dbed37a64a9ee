use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::csv::CsvWriter;
use crate::dynamics::{check_start, Kernel, Occupancy, Params};
use crate::error::{ensure, Error, Result};
use crate::estimate::{mean_and_se, Diagnostics, Estimate, Method};
use crate::netgen::Graph;
use crate::par::Exec;
use crate::rng::Seed;

pub const DEFAULT_REPLICATIONS: usize = 20;
pub const DEFAULT_WORK_CAP: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingConfig {
    /// Occupancy thresholds `S_1 > S_2 > … > S_p`; the final level
    /// `S_{p+1} = 0` (extinction) is implicit.
    pub thresholds: Vec<usize>,
    /// Successes required at every level.
    pub n_success: usize,
    /// Independent whole-algorithm runs; the standard error is taken across
    /// them.
    pub replications: usize,
    /// Maximum attempts at any single level.
    pub work_cap: u64,
}

impl SplittingConfig {
    pub fn new(thresholds: Vec<usize>, n_success: usize) -> Self {
        SplittingConfig { thresholds, n_success, replications: DEFAULT_REPLICATIONS, work_cap: DEFAULT_WORK_CAP }
    }

    /// Levels in decreasing order, deduplicated, ending with 0.
    pub fn levels(&self) -> Vec<usize> {
        let mut lv: Vec<usize> = self.thresholds.iter().copied().filter(|&s| s > 0).collect();
        lv.sort_unstable_by(|a, b| b.cmp(a));
        lv.dedup();
        lv.push(0);
        lv
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.n_success >= 2, || "splitting needs at least two successes per level".into())?;
        ensure(self.replications >= 1, || "splitting needs at least one replication".into())?;
        ensure(self.work_cap >= self.n_success as u64, || "work cap below the success count".into())
    }
}

/// Thresholds spaced geometrically from `start` down to 1, `levels` of them
/// at most (duplicates after rounding are dropped).
pub fn geometric_thresholds(start: usize, levels: usize) -> Vec<usize> {
    if start == 0 || levels == 0 {
        return Vec::new();
    }
    let ratio = (1.0 / start as f64).powf(1.0 / levels.max(2).saturating_sub(1) as f64);
    let mut out: Vec<usize> =
        (0..levels).map(|m| ((start as f64) * ratio.powi(m as i32)).round().max(1.0) as usize).collect();
    out.dedup();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub threshold: usize,
    /// Attempts `k^m` needed to collect the successes.
    pub attempts: u64,
    /// `(n_success − 1) / (k^m − 1)`, or 1 when every attempt succeeded.
    pub p_hat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingRun {
    pub levels: Vec<LevelStats>,
    /// Product of the level estimates.
    pub estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingDiagnostics {
    pub n_success: usize,
    pub runs: Vec<SplittingRun>,
}

impl SplittingDiagnostics {
    /// CSV with columns `replication,level,threshold,attempts,p_hat`.
    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new(&["replication", "level", "threshold", "attempts", "p_hat"]);
        for (r, run) in self.runs.iter().enumerate() {
            for (m, l) in run.levels.iter().enumerate() {
                w.row([r.to_string(), (m + 1).to_string(), l.threshold.to_string(), l.attempts.to_string(), l.p_hat.to_string()]);
            }
        }
        w.finish()
    }
}

/// An entry point of a level: the first generation at which the previous
/// threshold was crossed and the state at that time.
#[derive(Clone)]
struct Entry {
    time: usize,
    state: Occupancy,
}

fn one_run(
    graph: &Graph,
    params: &Params,
    z0: &Occupancy,
    n_gen: usize,
    cfg: &SplittingConfig,
    levels: &[usize],
    seed: Seed,
) -> Result<SplittingRun> {
    let mut kernel = Kernel::new(graph, *params);
    let mut pool = vec![Entry { time: 0, state: z0.clone() }];
    let mut stats = Vec::with_capacity(levels.len());
    let mut state = z0.clone();
    for (m, &threshold) in levels.iter().enumerate() {
        let level_seed = seed.child(m as u64);
        let mut successes = Vec::with_capacity(cfg.n_success);
        let mut attempts = 0u64;
        while successes.len() < cfg.n_success {
            if attempts == cfg.work_cap {
                return Err(Error::WorkCapExceeded { level: m + 1, cap: cfg.work_cap });
            }
            let mut rng = level_seed.child(attempts).rng();
            attempts += 1;
            let entry = &pool[rng.random_range(0..pool.len())];
            state.clone_from(&entry.state);
            let mut t = entry.time;
            loop {
                if state.count() <= threshold {
                    successes.push(Entry { time: t, state: state.clone() });
                    break;
                }
                if t == n_gen {
                    break;
                }
                kernel.step(&mut state, &mut rng);
                t += 1;
            }
        }
        let r = cfg.n_success as f64;
        let p_hat = if attempts as usize == cfg.n_success { 1.0 } else { (r - 1.0) / (attempts as f64 - 1.0) };
        stats.push(LevelStats { threshold, attempts, p_hat });
        pool = successes;
    }
    let estimate = stats.iter().map(|l| l.p_hat).product();
    Ok(SplittingRun { levels: stats, estimate })
}

/// Fixed-success multilevel splitting estimate of `P(#Z_{n_gen} = 0)`.
///
/// Level `m` restarts from a uniformly chosen success of level `m − 1` (its
/// first-crossing time and state) and simulates to the horizon, stopping at
/// the first generation with `#Z ≤ S_m`; attempts continue until
/// `n_success` crossings. Attempt `j` of level `m` in replication `r` draws
/// from `seed.child(r).child(m).child(j)`, so runs do not depend on
/// scheduling.
pub fn split_extinction(
    graph: &Graph,
    params: &Params,
    z0: &Occupancy,
    n_gen: usize,
    cfg: &SplittingConfig,
    seed: Seed,
    exec: &Exec,
) -> Result<Estimate> {
    params.validate()?;
    check_start(graph, z0, n_gen)?;
    cfg.validate()?;
    let levels = cfg.levels();
    let runs = exec
        .map(cfg.replications, |r| one_run(graph, params, z0, n_gen, cfg, &levels, seed.child(r as u64)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = runs.iter().map(|r| r.estimate).collect();
    let (value, se) = if values.len() >= 2 { mean_and_se(&values) } else { (values[0], f64::NAN) };
    let n_work = runs.iter().flat_map(|r| r.levels.iter().map(|l| l.attempts)).sum();
    Ok(Estimate {
        value,
        std_error: se,
        method: Method::Splitting,
        n_work,
        diagnostics: Diagnostics::Splitting(SplittingDiagnostics { n_success: cfg.n_success, runs }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_are_normalised() {
        let cfg = SplittingConfig::new(vec![3, 7, 0, 5, 7, 1], 10);
        assert_eq!(cfg.levels(), vec![7, 5, 3, 1, 0]);
        assert!(SplittingConfig::new(vec![], 1).validate().is_err());
        assert_eq!(geometric_thresholds(8, 4), vec![8, 4, 2, 1]);
        assert_eq!(geometric_thresholds(3, 5), vec![3, 2, 1]);
    }

    #[test]
    fn single_level_inverse_binomial() {
        let g = Graph::path(1);
        let p = Params::new(0.3, 0.5).unwrap();
        let cfg = SplittingConfig { replications: 40, ..SplittingConfig::new(vec![], 50) };
        let est = split_extinction(&g, &p, &Occupancy::full(1), 5, &cfg, Seed(8), &Exec::sequential()).unwrap();
        let truth = 1.0 - 0.7f64.powi(5);
        assert!(est.covers(truth, 3.0), "{est:?} vs {truth}");
    }

    #[test]
    fn levels_multiply_to_estimate() {
        let g = Graph::cycle(6);
        let p = Params::new(0.3, 0.2).unwrap();
        let cfg = SplittingConfig { replications: 3, ..SplittingConfig::new(vec![4, 2], 20) };
        let est = split_extinction(&g, &p, &Occupancy::full(6), 20, &cfg, Seed(1), &Exec::sequential()).unwrap();
        let Diagnostics::Splitting(d) = &est.diagnostics else { panic!() };
        for run in &d.runs {
            assert_eq!(run.levels.len(), 3);
            assert_eq!(run.levels.iter().map(|l| l.p_hat).product::<f64>(), run.estimate);
        }
        assert_eq!(d.to_csv().lines().count(), 10);
        let b = split_extinction(&g, &p, &Occupancy::full(6), 20, &cfg, Seed(1), &Exec::with_workers(2)).unwrap();
        assert_eq!(est, b);
    }

    #[test]
    fn impossible_event_hits_work_cap() {
        let g = Graph::cycle(5);
        let p = Params::new(0.0, 0.2).unwrap();
        let cfg = SplittingConfig { work_cap: 500, ..SplittingConfig::new(vec![3], 5) };
        let err = split_extinction(&g, &p, &Occupancy::full(5), 10, &cfg, Seed(0), &Exec::sequential()).unwrap_err();
        assert!(matches!(err, Error::WorkCapExceeded { level: 1, cap: 500 }));
    }
}

//! The stochastic extinction–colonisation kernel and crude Monte Carlo.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::csv::CsvWriter;
use crate::error::{ensure, Result};
use crate::estimate::{Estimate, Method};
use crate::netgen::Graph;
use crate::par::Exec;
use crate::rng::{Seed, SimRng};

/// Which occupancy the colonisation phase counts neighbours in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColonisationSource {
    /// Survivors of this generation's extinction phase colonise. This is the
    /// kernel whose transition matrix factors as `M = E * C`.
    #[default]
    PostExtinction,
    /// Occupancy at the start of the generation colonises.
    PreExtinction,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Per-generation extinction probability of an occupied patch.
    pub e: f64,
    /// Per-generation colonisation probability along one edge.
    pub c: f64,
    #[serde(default)]
    pub colonisation_source: ColonisationSource,
}

impl Params {
    pub fn new(e: f64, c: f64) -> Result<Params> {
        let p = Params { e, c, colonisation_source: ColonisationSource::PostExtinction };
        p.validate()?;
        Ok(p)
    }

    pub fn with_source(mut self, source: ColonisationSource) -> Self {
        self.colonisation_source = source;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure((0.0..=1.0).contains(&self.e), || format!("e must lie in [0, 1], got {}", self.e))?;
        ensure((0.0..=1.0).contains(&self.c), || format!("c must lie in [0, 1], got {}", self.c))
    }
}

/// Occupancy vector as a bitset; bit `i` is set when patch `i` is occupied.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Occupancy {
    n: usize,
    words: Vec<u64>,
}

impl Occupancy {
    pub fn empty(n: usize) -> Self {
        Occupancy { n, words: vec![0; n.div_ceil(64)] }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for (w, word) in s.words.iter_mut().enumerate() {
            let bits = (n - 64 * w).min(64);
            *word = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        }
        s
    }

    pub fn from_patches(n: usize, patches: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(n);
        for i in patches {
            s.insert(i);
        }
        s
    }

    /// From an integer bitmask; `n` must be at most 64.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        assert!(n <= 64, "bitmask states need n <= 64");
        assert!(n == 64 || mask >> n == 0, "mask {mask:#x} has bits beyond n = {n}");
        let mut s = Self::empty(n);
        if n > 0 {
            s.words[0] = mask;
        }
        s
    }

    pub fn to_mask(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        assert!(i < self.n, "patch {i} out of range");
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                (bits != 0).then(|| {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    64 * w + b
                })
            })
        })
    }

    /// Lower-case hexadecimal value of the bitmask, without leading zeros.
    pub fn to_hex(&self) -> String {
        let mut out = String::new();
        for &w in self.words.iter().rev() {
            if out.is_empty() {
                if w != 0 {
                    out = format!("{w:x}");
                }
            } else {
                out.push_str(&format!("{w:016x}"));
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

/// The one-generation transition with reusable scratch space.
pub struct Kernel<'g> {
    graph: &'g Graph,
    params: Params,
    /// `(1 - c)^k` for `k` occupied neighbours.
    stay_empty: Vec<f64>,
    counts: Vec<u32>,
    touched: Vec<u32>,
    sources: Vec<u32>,
}

impl<'g> Kernel<'g> {
    pub fn new(graph: &'g Graph, params: Params) -> Self {
        let stay_empty = (0..=graph.max_degree()).map(|k| (1.0 - params.c).powi(k as i32)).collect();
        Kernel {
            graph,
            params,
            stay_empty,
            counts: vec![0; graph.n()],
            touched: Vec::new(),
            sources: Vec::new(),
        }
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Advances `state` by one generation; returns the number of extinctions.
    pub fn step<R: Rng + ?Sized>(&mut self, state: &mut Occupancy, rng: &mut R) -> usize {
        self.step_with_extinction(state, self.params.e, rng)
    }

    /// One generation with the extinction phase run at rate `e` instead of
    /// the model's own; colonisation is unchanged.
    pub fn step_with_extinction<R: Rng + ?Sized>(&mut self, state: &mut Occupancy, e: f64, rng: &mut R) -> usize {
        debug_assert_eq!(state.n, self.graph.n());
        let pre = self.params.colonisation_source == ColonisationSource::PreExtinction;
        self.sources.clear();
        let mut deaths = 0;
        for w in 0..state.words.len() {
            let mut bits = state.words[w];
            while bits != 0 {
                let b = bits.trailing_zeros();
                bits &= bits - 1;
                let i = (64 * w) as u32 + b;
                if pre {
                    self.sources.push(i);
                }
                if rng.random::<f64>() < e {
                    state.words[w] &= !(1u64 << b);
                    deaths += 1;
                } else if !pre {
                    self.sources.push(i);
                }
            }
        }

        for &s in &self.sources {
            for &v in self.graph.neighbors(s as usize) {
                if !state.contains(v as usize) {
                    let k = &mut self.counts[v as usize];
                    if *k == 0 {
                        self.touched.push(v);
                    }
                    *k += 1;
                }
            }
        }
        for &v in &self.touched {
            let k = std::mem::take(&mut self.counts[v as usize]);
            if rng.random::<f64>() < 1.0 - self.stay_empty[k as usize] {
                state.insert(v as usize);
            }
        }
        self.touched.clear();
        deaths
    }

    /// Runs `n_gen` generations from `z0`, writing `#Z_t` for `t = 0..=n_gen`
    /// into `counts`. Stops drawing once the coffin state is reached.
    pub fn run_counts<R: Rng + ?Sized>(
        &mut self,
        z0: &Occupancy,
        n_gen: usize,
        rng: &mut R,
        state: &mut Occupancy,
        counts: &mut Vec<u32>,
    ) {
        state.clone_from(z0);
        counts.clear();
        counts.push(state.count() as u32);
        for _ in 0..n_gen {
            if state.is_empty() {
                counts.push(0);
                continue;
            }
            self.step(state, rng);
            counts.push(state.count() as u32);
        }
    }
}

/// One generation from `state` (allocates scratch; prefer [`Kernel`] in loops).
pub fn step<R: Rng + ?Sized>(graph: &Graph, params: &Params, state: &Occupancy, rng: &mut R) -> Occupancy {
    let mut next = state.clone();
    Kernel::new(graph, *params).step(&mut next, rng);
    next
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Occupancy>,
}

impl Trajectory {
    pub fn counts(&self) -> Vec<usize> {
        self.states.iter().map(Occupancy::count).collect()
    }

    /// First generation `t > 0` with no occupied patch.
    pub fn extinction_time(&self) -> Option<usize> {
        self.states.iter().skip(1).position(Occupancy::is_empty).map(|p| p + 1)
    }

    /// CSV with columns `generation,occupied_count,state_hex`.
    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new(&["generation", "occupied_count", "state_hex"]);
        for (t, s) in self.states.iter().enumerate() {
            w.row([t.to_string(), s.count().to_string(), s.to_hex()]);
        }
        w.finish()
    }
}

pub(crate) fn check_start(graph: &Graph, z0: &Occupancy, n_gen: usize) -> Result<()> {
    ensure(z0.n() == graph.n(), || format!("state has {} patches, graph has {}", z0.n(), graph.n()))?;
    ensure(n_gen >= 1, || "the horizon must be at least one generation".into())
}

pub fn simulate<R: Rng + ?Sized>(
    graph: &Graph,
    params: &Params,
    z0: &Occupancy,
    n_gen: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    params.validate()?;
    check_start(graph, z0, n_gen)?;
    let mut kernel = Kernel::new(graph, *params);
    let mut state = z0.clone();
    let mut states = Vec::with_capacity(n_gen + 1);
    states.push(state.clone());
    for _ in 0..n_gen {
        if !state.is_empty() {
            kernel.step(&mut state, rng);
        }
        states.push(state.clone());
    }
    Ok(Trajectory { states })
}

/// Estimates for one generation `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationEstimate {
    pub t: usize,
    /// `P(#Z_t > 0)`.
    pub persistence: Estimate,
    /// `E(#Z_t)`.
    pub occupancy: Estimate,
    /// `E(#Z_t | #Z_t > 0)`; 0 when no replicate survived.
    pub conditional_occupancy: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    /// One entry per generation `0..=n_gen`.
    pub series: Vec<GenerationEstimate>,
}

impl EstimateReport {
    pub fn at_horizon(&self) -> &GenerationEstimate {
        self.series.last().expect("non-empty series")
    }

    pub fn persistence(&self) -> &Estimate {
        &self.at_horizon().persistence
    }

    pub fn occupancy(&self) -> &Estimate {
        &self.at_horizon().occupancy
    }

    pub fn conditional_occupancy(&self) -> &Estimate {
        &self.at_horizon().conditional_occupancy
    }

    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new(&[
            "t",
            "p_persist",
            "p_persist_se",
            "mean_occ",
            "mean_occ_se",
            "cond_mean_occ",
            "cond_mean_occ_se",
        ]);
        for g in &self.series {
            w.row([
                g.t as f64,
                g.persistence.value,
                g.persistence.std_error,
                g.occupancy.value,
                g.occupancy.std_error,
                g.conditional_occupancy.value,
                g.conditional_occupancy.std_error,
            ]);
        }
        w.finish()
    }
}

/// Integer moment sums of `#Z_t`, exact under any summation order.
#[derive(Clone, Default)]
struct Moments {
    alive: Vec<u64>,
    sum: Vec<u64>,
    sum_sq: Vec<u64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Moments { alive: vec![0; len], sum: vec![0; len], sum_sq: vec![0; len] }
    }

    fn add_counts(&mut self, counts: &[u32]) {
        for (t, &k) in counts.iter().enumerate() {
            let k = k as u64;
            self.alive[t] += (k > 0) as u64;
            self.sum[t] += k;
            self.sum_sq[t] += k * k;
        }
    }

    fn merge(&mut self, other: &Moments) {
        for t in 0..self.alive.len() {
            self.alive[t] += other.alive[t];
            self.sum[t] += other.sum[t];
            self.sum_sq[t] += other.sum_sq[t];
        }
    }
}

fn mean_se(sum: f64, sum_sq: f64, k: f64) -> (f64, f64) {
    if k == 0.0 {
        return (0.0, 0.0);
    }
    let mean = sum / k;
    if k < 2.0 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - sum * mean) / (k - 1.0)).max(0.0);
    (mean, (var / k).sqrt())
}

/// Replicates simulated per parallel work item; fixed so that results do not
/// depend on the worker count.
const CHUNK: usize = 256;

/// Crude Monte Carlo over `n_reps` independent trajectories. Replicate `r`
/// uses the stream `seed.child(r)`.
pub fn estimate_crude(
    graph: &Graph,
    params: &Params,
    z0: &Occupancy,
    n_gen: usize,
    n_reps: usize,
    seed: Seed,
    exec: &Exec,
) -> Result<EstimateReport> {
    params.validate()?;
    check_start(graph, z0, n_gen)?;
    ensure(n_reps >= 2, || "crude Monte Carlo needs at least two replicates".into())?;

    let chunks = n_reps.div_ceil(CHUNK);
    let parts = exec.map(chunks, |ci| {
        let mut kernel = Kernel::new(graph, *params);
        let mut moments = Moments::new(n_gen + 1);
        let mut state = z0.clone();
        let mut counts = Vec::with_capacity(n_gen + 1);
        for r in ci * CHUNK..((ci + 1) * CHUNK).min(n_reps) {
            let mut rng: SimRng = seed.child(r as u64).rng();
            kernel.run_counts(z0, n_gen, &mut rng, &mut state, &mut counts);
            moments.add_counts(&counts);
        }
        moments
    });
    let mut total = Moments::new(n_gen + 1);
    parts.iter().for_each(|m| total.merge(m));

    let n = n_reps as u64;
    let series = (0..=n_gen)
        .map(|t| {
            let (occ, occ_se) = mean_se(total.sum[t] as f64, total.sum_sq[t] as f64, n as f64);
            let (cond, cond_se) = mean_se(total.sum[t] as f64, total.sum_sq[t] as f64, total.alive[t] as f64);
            let est = |value, std_error, n_work| Estimate {
                value,
                std_error,
                method: Method::Crude,
                n_work,
                diagnostics: Default::default(),
            };
            GenerationEstimate {
                t,
                persistence: Estimate::proportion(total.alive[t], n, Method::Crude),
                occupancy: est(occ, occ_se, n),
                conditional_occupancy: est(cond, cond_se, total.alive[t]),
            }
        })
        .collect();
    Ok(EstimateReport { series })
}

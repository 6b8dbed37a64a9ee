//! The four edge-count-constrained topologies.
//!
//! Every generator returns a connected simple graph with exactly the requested
//! number of edges. ER and community graphs are redrawn whole until a
//! connected draw appears; lattice and preferential-attachment graphs are
//! connected by construction.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{is_connected, max_edges, Graph};
use crate::error::{ensure, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Topology {
    /// Uniform over all edge sets of the requested size.
    Er,
    /// Equal-size communities; intra-community pairs are `intra_inter_ratio`
    /// times more likely to be drawn than inter-community pairs.
    Com { n_communities: usize, intra_inter_ratio: f64 },
    /// A ring (or path) topped up under a uniform degree cap.
    Lat,
    /// Sequential growth with attachment probability proportional to
    /// `degree^power`.
    Pa { power: f64 },
}

impl Topology {
    /// Short label used in tables: `ER`, `COM`, `LAT`, `PA1`, `PA3`, ...
    pub fn label(&self) -> String {
        match self {
            Topology::Er => "ER".into(),
            Topology::Com { .. } => "COM".into(),
            Topology::Lat => "LAT".into(),
            Topology::Pa { power } => format!("PA{power}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    #[serde(flatten)]
    pub topology: Topology,
    pub n: usize,
    pub n_edges: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorOptions {
    /// Redraw cap for ER and community graphs.
    pub max_attempts: usize,
    /// Let the lattice generator raise its degree cap by one when it
    /// saturates before placing every edge.
    pub lattice_fallback: bool,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions { max_attempts: 10_000, lattice_fallback: true }
    }
}

impl TopologySpec {
    pub fn new(topology: Topology, n: usize, n_edges: usize) -> Self {
        TopologySpec { topology, n, n_edges }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n, self.n_edges);
        ensure(n >= 1, || "n must be at least 1".into())?;
        ensure(m + 1 >= n, || format!("{m} edges cannot connect {n} nodes (need at least {})", n - 1))?;
        ensure(m <= max_edges(n), || format!("{m} edges exceed the {} possible pairs", max_edges(n)))?;
        match self.topology {
            Topology::Er => Ok(()),
            Topology::Com { n_communities, intra_inter_ratio } => {
                ensure(n_communities >= 1 && n_communities <= n, || {
                    format!("{n_communities} communities do not fit {n} nodes")
                })?;
                ensure(intra_inter_ratio > 1.0 && intra_inter_ratio.is_finite(), || {
                    format!("intra/inter ratio must exceed 1, got {intra_inter_ratio}")
                })
            }
            Topology::Lat => ensure(m + 1 == n || m >= n, || {
                format!("lattice needs a path ({} edges) or at least a cycle ({n} edges)", n - 1)
            }),
            Topology::Pa { power } => {
                ensure(power > 0.0 && power.is_finite(), || format!("power must be positive, got {power}"))
            }
        }
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Graph> {
        self.generate_with(rng, GeneratorOptions::default())
    }

    pub fn generate_with<R: Rng + ?Sized>(&self, rng: &mut R, opts: GeneratorOptions) -> Result<Graph> {
        self.validate()?;
        let (n, m) = (self.n, self.n_edges);
        match self.topology {
            Topology::Er => erdos_renyi(n, m, rng, opts),
            Topology::Com { n_communities, intra_inter_ratio } => {
                community(n, m, n_communities, intra_inter_ratio, rng, opts)
            }
            Topology::Lat => lattice(n, m, rng, opts),
            Topology::Pa { power } => pref_attach(n, m, power, rng),
        }
    }
}

/// Converts a density to an edge count, rounding `d * n(n-1)/2` half up.
/// Products such as `0.7 * 45` land just below the half in binary, so a
/// tolerance of 1e-9 is allowed before rounding.
pub fn edges_for_density(n: usize, density: f64) -> usize {
    (density * max_edges(n) as f64 + 0.5 + 1e-9).floor() as usize
}

fn all_pairs(n: usize) -> Vec<(u32, u32)> {
    let mut pairs = Vec::with_capacity(max_edges(n));
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            pairs.push((u, v));
        }
    }
    pairs
}

fn redraw_until_connected<R: Rng + ?Sized>(
    n: usize,
    opts: GeneratorOptions,
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> Vec<(u32, u32)>,
) -> Result<Graph> {
    for _ in 0..opts.max_attempts.max(1) {
        let edges = draw(rng);
        if is_connected(n, &edges) {
            return Graph::new(n, edges.into_iter().map(|(u, v)| (u as usize, v as usize)));
        }
    }
    Err(Error::RejectionCapExceeded { attempts: opts.max_attempts })
}

pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, n_edges: usize, rng: &mut R, opts: GeneratorOptions) -> Result<Graph> {
    TopologySpec::new(Topology::Er, n, n_edges).validate()?;
    let pairs = all_pairs(n);
    redraw_until_connected(n, opts, rng, |rng| {
        index::sample(rng, pairs.len(), n_edges).into_iter().map(|i| pairs[i]).collect()
    })
}

/// Community of node `u` when `n` nodes are split into `k` blocks whose sizes
/// differ by at most one (the larger blocks come first).
pub fn community_of(u: usize, n: usize, k: usize) -> usize {
    let (q, r) = (n / k, n % k);
    let big = r * (q + 1);
    if u < big {
        u / (q + 1)
    } else {
        r + (u - big) / q
    }
}

pub fn community<R: Rng + ?Sized>(
    n: usize,
    n_edges: usize,
    n_communities: usize,
    ratio: f64,
    rng: &mut R,
    opts: GeneratorOptions,
) -> Result<Graph> {
    TopologySpec::new(Topology::Com { n_communities, intra_inter_ratio: ratio }, n, n_edges).validate()?;
    let pairs = all_pairs(n);
    let block: Vec<usize> = (0..n).map(|u| community_of(u, n, n_communities)).collect();
    let weights: Vec<f64> = pairs
        .iter()
        .map(|&(u, v)| if block[u as usize] == block[v as usize] { ratio } else { 1.0 })
        .collect();
    redraw_until_connected(n, opts, rng, |rng| {
        index::sample_weighted(rng, pairs.len(), |i| weights[i], n_edges)
            .expect("positive weights")
            .into_iter()
            .map(|i| pairs[i])
            .collect()
    })
}

/// Degree cap for the lattice: the smallest uniform bound able to hold
/// `n_edges` edges.
pub fn lattice_cap(n: usize, n_edges: usize) -> usize {
    (2 * n_edges).div_ceil(n)
}

struct BitMatrix {
    n: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> Self {
        BitMatrix { n, words: vec![0; (n * n).div_ceil(64)] }
    }
    fn get(&self, u: usize, v: usize) -> bool {
        let i = u * self.n + v;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }
    fn set(&mut self, u: usize, v: usize) {
        for i in [u * self.n + v, v * self.n + u] {
            self.words[i / 64] |= 1 << (i % 64);
        }
    }
    fn clear(&mut self, u: usize, v: usize) {
        for i in [u * self.n + v, v * self.n + u] {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }
}

pub fn lattice<R: Rng + ?Sized>(n: usize, n_edges: usize, rng: &mut R, opts: GeneratorOptions) -> Result<Graph> {
    TopologySpec::new(Topology::Lat, n, n_edges).validate()?;
    let mut adj = BitMatrix::new(n);
    let mut degree = vec![0usize; n];
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(n_edges);
    let mut add = |u: usize, v: usize, adj: &mut BitMatrix, degree: &mut [usize]| {
        adj.set(u, v);
        degree[u] += 1;
        degree[v] += 1;
        edges.push((u as u32, v as u32));
    };

    let ring = if n_edges + 1 == n { n - 1 } else { n };
    for u in 0..ring {
        add(u, (u + 1) % n, &mut adj, &mut degree);
    }

    let mut cap = lattice_cap(n, n_edges);
    let mut fallback_used = false;
    let mut placed = ring;
    while placed < n_edges {
        let open: Vec<usize> = (0..n).filter(|&u| degree[u] < cap).collect();
        match pick_open_pair(&open, &adj, rng) {
            Some((u, v)) => {
                add(u, v, &mut adj, &mut degree);
                placed += 1;
            }
            None if opts.lattice_fallback && !fallback_used => {
                fallback_used = true;
                cap += 1;
            }
            None => return Err(Error::LatticeSaturated { remaining: n_edges - placed }),
        }
    }
    balance_degrees(&mut edges, ring, &mut adj, &mut degree, rng);
    Graph::new(n, edges.into_iter().map(|(u, v)| (u as usize, v as usize)))
}

/// Uniform filling can strand a few nodes well below the cap. Rewire added
/// (non-ring) edges `(b, x)` to `(a, x)`, with `a` of minimum and `b` of
/// maximum degree, drawing uniformly among legal moves. While the spread
/// exceeds 2 a legal move always exists; at spread 2 balancing continues
/// while one does. Each move lowers Σ degree², so this terminates; the ring
/// keeps the graph connected and the maximum degree never grows.
fn balance_degrees<R: Rng + ?Sized>(
    edges: &mut [(u32, u32)],
    ring: usize,
    adj: &mut BitMatrix,
    degree: &mut [usize],
    rng: &mut R,
) {
    loop {
        let lo = *degree.iter().min().unwrap();
        let hi = *degree.iter().max().unwrap();
        if hi - lo <= 1 {
            return;
        }
        let low: Vec<usize> = (0..degree.len()).filter(|&u| degree[u] == lo).collect();
        let mut moves = Vec::new();
        for (i, &(u, v)) in edges.iter().enumerate().skip(ring) {
            for (b, x) in [(u as usize, v as usize), (v as usize, u as usize)] {
                if degree[b] == hi {
                    moves.extend(low.iter().filter(|&&a| a != x && !adj.get(a, x)).map(|&a| (i, a, b, x)));
                }
            }
        }
        if moves.is_empty() {
            debug_assert!(hi - lo <= 2);
            return;
        }
        let (i, a, b, x) = moves[rng.random_range(0..moves.len())];
        adj.clear(b, x);
        adj.set(a, x);
        degree[b] -= 1;
        degree[a] += 1;
        edges[i] = (a.min(x) as u32, a.max(x) as u32);
    }
}

/// Uniform draw among non-adjacent pairs of `open` nodes.
fn pick_open_pair<R: Rng + ?Sized>(open: &[usize], adj: &BitMatrix, rng: &mut R) -> Option<(usize, usize)> {
    if open.len() < 2 {
        return None;
    }
    for _ in 0..64 {
        let a = rng.random_range(0..open.len());
        let mut b = rng.random_range(0..open.len() - 1);
        if b >= a {
            b += 1;
        }
        let (u, v) = (open[a], open[b]);
        if !adj.get(u, v) {
            return Some((u.min(v), u.max(v)));
        }
    }
    let eligible: Vec<(usize, usize)> = open
        .iter()
        .enumerate()
        .flat_map(|(i, &u)| open[i + 1..].iter().map(move |&v| (u, v)))
        .filter(|&(u, v)| !adj.get(u, v))
        .collect();
    if eligible.is_empty() {
        None
    } else {
        Some(eligible[rng.random_range(0..eligible.len())])
    }
}

/// Number of edges each arriving node brings: node `k` (with `k` nodes
/// already present) gets `m_k` in `1..=k`, drawn uniformly over the range that
/// keeps the remaining total reachable.
pub fn attachment_counts<R: Rng + ?Sized>(n: usize, n_edges: usize, rng: &mut R) -> Vec<usize> {
    let mut remaining = n_edges;
    let mut counts = Vec::with_capacity(n.saturating_sub(1));
    for k in 1..n {
        let later_nodes = n - 1 - k;
        let later_max = (n - 1) * n / 2 - k * (k + 1) / 2;
        let lo = remaining.saturating_sub(later_max).max(1);
        let hi = k.min(remaining - later_nodes);
        debug_assert!(lo <= hi, "infeasible attachment range at node {k}");
        let m = rng.random_range(lo..=hi);
        remaining -= m;
        counts.push(m);
    }
    debug_assert_eq!(remaining, 0);
    counts
}

pub fn pref_attach<R: Rng + ?Sized>(n: usize, n_edges: usize, power: f64, rng: &mut R) -> Result<Graph> {
    TopologySpec::new(Topology::Pa { power }, n, n_edges).validate()?;
    let counts = attachment_counts(n, n_edges, rng);
    let mut degree = vec![0usize; n];
    let mut edges = Vec::with_capacity(n_edges);
    for (k, &m) in (1..n).zip(&counts) {
        let targets: Vec<usize> = if degree[..k].iter().all(|&d| d == 0) {
            index::sample(rng, k, m).into_vec()
        } else {
            index::sample_weighted(rng, k, |j| (degree[j] as f64).powf(power), m)
                .expect("attachment weights")
                .into_vec()
        };
        for t in targets {
            degree[t] += 1;
            degree[k] += 1;
            edges.push((t, k));
        }
    }
    Graph::new(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;

    #[test]
    fn spec_validation() {
        assert!(TopologySpec::new(Topology::Lat, 5, 3).validate().is_err());
        assert!(TopologySpec::new(Topology::Er, 4, 7).validate().is_err());
        assert!(TopologySpec::new(Topology::Com { n_communities: 2, intra_inter_ratio: 1.0 }, 4, 4)
            .validate()
            .is_err());
        assert!(TopologySpec::new(Topology::Com { n_communities: 5, intra_inter_ratio: 2.0 }, 4, 4)
            .validate()
            .is_err());
        assert!(TopologySpec::new(Topology::Pa { power: 0.0 }, 4, 4).validate().is_err());
        assert!(TopologySpec::new(Topology::Pa { power: 1.0 }, 1, 0).validate().is_ok());
    }

    #[test]
    fn density_rounding() {
        assert_eq!(edges_for_density(10, 0.3), 14);
        assert_eq!(edges_for_density(10, 0.5), 23);
        assert_eq!(edges_for_density(10, 0.7), 32);
        assert_eq!(edges_for_density(500, 2682.0 / 124750.0), 2682);
        assert_eq!(edges_for_density(100, 0.3), 1485);
    }

    #[test]
    fn community_blocks_are_balanced() {
        let sizes = |n, k| {
            let mut s = vec![0; k];
            (0..n).for_each(|u| s[community_of(u, n, k)] += 1);
            s
        };
        assert_eq!(sizes(10, 2), vec![5, 5]);
        assert_eq!(sizes(11, 3), vec![4, 4, 3]);
        assert_eq!(sizes(500, 10), vec![50; 10]);
    }

    #[test]
    fn forced_shapes() {
        let mut rng = Seed(1).rng();
        let k3 = erdos_renyi(3, 3, &mut rng, Default::default()).unwrap();
        assert_eq!(k3, Graph::complete(3));
        assert_eq!(erdos_renyi(10, 45, &mut rng, Default::default()).unwrap(), Graph::complete(10));
        assert_eq!(community(4, 6, 2, 5.0, &mut rng, Default::default()).unwrap(), Graph::complete(4));
        assert_eq!(lattice(10, 10, &mut rng, Default::default()).unwrap(), Graph::cycle(10));
        assert_eq!(lattice(6, 5, &mut rng, Default::default()).unwrap(), Graph::path(6));
        let tree = pref_attach(5, 4, 1.0, &mut rng).unwrap();
        assert_eq!(tree.n_edges(), 4);
    }

    #[test]
    fn attachment_counts_are_feasible() {
        let mut rng = Seed(9).rng();
        for (n, m) in [(2, 1), (5, 4), (5, 10), (50, 263), (100, 495), (500, 2682)] {
            let c = attachment_counts(n, m, &mut rng);
            assert_eq!(c.iter().sum::<usize>(), m);
            assert!(c.iter().enumerate().all(|(i, &x)| x >= 1 && x <= i + 1));
        }
    }

    #[test]
    fn lattice_cap_arithmetic() {
        assert_eq!(lattice_cap(6, 9), 3);
        assert_eq!(lattice_cap(100, 1485), 30);
        let g = lattice(6, 9, &mut Seed(3).rng(), Default::default()).unwrap();
        assert!(g.max_degree() <= 3);
    }

    #[test]
    fn er_edges_are_exchangeable() {
        // connectivity is permutation invariant, so each pair keeps 13/45
        let (n, m, draws) = (10, 13, 1000);
        let mut freq = vec![0usize; max_edges(n)];
        let index = |u: usize, v: usize| u * n - u * (u + 1) / 2 + (v - u - 1);
        let mut rng = Seed(13).rng();
        for _ in 0..draws {
            let g = erdos_renyi(n, m, &mut rng, Default::default()).unwrap();
            for &(u, v) in g.edges() {
                freq[index(u as usize, v as usize)] += 1;
            }
        }
        let p = m as f64 / max_edges(n) as f64;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        for (k, &f) in freq.iter().enumerate() {
            let hat = f as f64 / draws as f64;
            assert!((hat - p).abs() <= 3.0 * sigma, "pair {k}: {hat} vs {p}");
        }
    }

    #[test]
    fn lattice_degrees_are_balanced() {
        for (n, m) in [(100, 495), (50, 263), (30, 60)] {
            for s in 0..100 {
                let d = lattice(n, m, &mut Seed(s).rng(), Default::default()).unwrap().degrees();
                let (lo, hi) = (*d.iter().min().unwrap(), *d.iter().max().unwrap());
                // cap + 1 only when the fallback fires
                assert!(hi - lo <= 2 && hi <= lattice_cap(n, m) + 1, "n={n} seed {s}: {lo}..{hi}");
            }
        }
        let d = lattice(100, 1485, &mut Seed(1).rng(), Default::default()).unwrap().degrees();
        assert!(d.iter().all(|&k| k == 29 || k == 30));
        let mean = 29.7;
        assert!(d.iter().map(|&k| (k as f64 - mean).powi(2)).sum::<f64>() / 100.0 <= 0.5);
    }

    #[test]
    fn saturation_without_fallback_is_an_error() {
        // a 3-regular completion of the 6-cycle: some chord choices strand
        // two adjacent open nodes
        let opts = GeneratorOptions { lattice_fallback: false, ..Default::default() };
        let mut failures = 0;
        for s in 0..200 {
            match lattice(6, 9, &mut Seed(s).rng(), opts) {
                Ok(g) => assert!(g.max_degree() <= 3),
                Err(Error::LatticeSaturated { .. }) => failures += 1,
                Err(e) => panic!("{e}"),
            }
        }
        assert!(failures > 0);
        for s in 0..200 {
            let g = lattice(6, 9, &mut Seed(s).rng(), Default::default()).unwrap();
            assert!(g.max_degree() <= 4);
        }
    }

    #[test]
    fn rejection_cap_reports_failure() {
        let opts = GeneratorOptions { max_attempts: 3, ..Default::default() };
        // 60 edges on 60 nodes are almost never connected by chance
        let r = erdos_renyi(60, 60, &mut Seed(0).rng(), opts);
        assert!(matches!(r, Err(Error::RejectionCapExceeded { attempts: 3 })));
    }
}

use serde::{Deserialize, Serialize};

use crate::dynamics::Occupancy;
use crate::error::{ensure, Error, Result};
use crate::exact::DEFAULT_EXACT_CAP;
use crate::netgen::{edges_for_density, max_edges, Topology, TopologySpec};
use crate::rng::Seed;

/// The colonisation factor, either as rates or as ratios `e / c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CFactor {
    Values(Vec<f64>),
    /// `c = e / ratio` for each ratio.
    Ratio(Vec<f64>),
}

impl CFactor {
    pub fn len(&self) -> usize {
        match self {
            CFactor::Values(v) | CFactor::Ratio(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn resolve(&self, e: f64, j: usize) -> f64 {
        match self {
            CFactor::Values(v) => v[j],
            CFactor::Ratio(r) => e / r[j],
        }
    }
}

/// The density factor, as fractions of all pairs or as edge counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityFactor {
    Fractions(Vec<f64>),
    Edges(Vec<usize>),
}

impl DensityFactor {
    pub fn edge_counts(&self, n: usize) -> Vec<usize> {
        match self {
            DensityFactor::Fractions(d) => d.iter().map(|&d| edges_for_density(n, d)).collect(),
            DensityFactor::Edges(m) => m.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            DensityFactor::Fractions(v) => v.len(),
            DensityFactor::Edges(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    #[default]
    AllOccupied,
    Patches(Vec<usize>),
}

impl InitialState {
    pub fn state(&self, n: usize) -> Occupancy {
        match self {
            InitialState::AllOccupied => Occupancy::full(n),
            InitialState::Patches(p) => Occupancy::from_patches(n, p.iter().copied()),
        }
    }
}

fn default_exact_cap() -> usize {
    DEFAULT_EXACT_CAP
}
fn default_n_reps() -> usize {
    10_000
}
fn default_escalation() -> u64 {
    10
}
fn yes() -> bool {
    true
}

/// How each (cell, replicate) is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Graphs with at most this many patches are solved exactly.
    #[serde(default = "default_exact_cap")]
    pub exact_cap: usize,
    /// Crude Monte Carlo replicates (and the budget of any rare-event rerun).
    #[serde(default = "default_n_reps")]
    pub n_reps: usize,
    /// Rerun with a rare-event method when fewer than this many survivals
    /// (or extinctions) are observed.
    #[serde(default = "default_escalation")]
    pub escalation_events: u64,
    #[serde(default = "yes")]
    pub escalate: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            exact_cap: DEFAULT_EXACT_CAP,
            n_reps: default_n_reps(),
            escalation_events: default_escalation(),
            escalate: true,
        }
    }
}

/// A full factorial design over topology × density × e × c.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Design {
    #[serde(default)]
    pub name: String,
    pub n: usize,
    pub n_gen: usize,
    pub topologies: Vec<Topology>,
    pub density: DensityFactor,
    pub e: Vec<f64>,
    pub c: CFactor,
    /// Replicate networks per (topology, density).
    pub replicates: usize,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub seed: Seed,
}

/// One point of the factorial grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub topology_index: usize,
    pub density_index: usize,
    pub e_index: usize,
    pub c_index: usize,
    pub topology: Topology,
    pub n_edges: usize,
    pub e: f64,
    pub c: f64,
}

impl Design {
    pub fn from_json(text: &str) -> Result<Design> {
        let d: Design = serde_json::from_str(text)?;
        d.validate()?;
        Ok(d)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serialisable design")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        ensure(self.n >= 1, || "a design needs at least one patch".into())?;
        ensure(self.n_gen >= 1, || "the horizon must be at least one generation".into())?;
        ensure(self.replicates >= 1, || "at least one replicate network per cell is needed".into())?;
        ensure(!self.topologies.is_empty() && !self.density.is_empty() && !self.e.is_empty() && !self.c.is_empty(), || {
            "every factor needs at least one level".into()
        })?;
        ensure(self.estimator.n_reps >= 2, || "at least two replicates per estimate are needed".into())?;
        for &e in &self.e {
            if !(0.0..=1.0).contains(&e) {
                return bad(format!("extinction rate {e} outside [0, 1]"));
            }
            for j in 0..self.c.len() {
                let c = self.c.resolve(e, j);
                if !(0.0..=1.0).contains(&c) {
                    return bad(format!("colonisation rate {c} (e = {e}) outside [0, 1]"));
                }
            }
        }
        for m in self.density.edge_counts(self.n) {
            if m + 1 < self.n || m > max_edges(self.n) {
                return bad(format!("{m} edges cannot form a connected simple graph on {} patches", self.n));
            }
            for t in &self.topologies {
                TopologySpec::new(t.clone(), self.n, m).validate()?;
            }
        }
        if let InitialState::Patches(p) = &self.initial {
            ensure(p.iter().all(|&i| i < self.n), || "initial patch out of range".into())?;
        }
        Ok(())
    }

    /// Cells in canonical order: topology, then density, then `e`, then `c`.
    pub fn cells(&self) -> Vec<Cell> {
        let edges = self.density.edge_counts(self.n);
        let mut out = Vec::new();
        for (ti, t) in self.topologies.iter().enumerate() {
            for (di, &m) in edges.iter().enumerate() {
                for (ei, &e) in self.e.iter().enumerate() {
                    for ci in 0..self.c.len() {
                        out.push(Cell {
                            index: out.len(),
                            topology_index: ti,
                            density_index: di,
                            e_index: ei,
                            c_index: ci,
                            topology: t.clone(),
                            n_edges: m,
                            e,
                            c: self.c.resolve(e, ci),
                        });
                    }
                }
            }
        }
        out
    }

    pub fn n_rows(&self) -> usize {
        self.topologies.len() * self.density.len() * self.e.len() * self.c.len() * self.replicates
    }
}

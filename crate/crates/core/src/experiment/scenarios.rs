use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::design::{CFactor, DensityFactor, Design, EstimatorConfig};
use super::run::ResultRow;
use crate::csv::CsvWriter;
use crate::netgen::Topology;
use crate::rng::Seed;

const SCENARIO_E: [f64; 3] = [0.1, 0.5, 0.8];
const SCENARIO_HORIZON: usize = 30;
const SCENARIO_REPLICATES: usize = 10;

fn community_500() -> Topology {
    Topology::Com { n_communities: 10, intra_inter_ratio: 10.0 }
}

fn scenario(name: &str, n: usize, n_edges: usize, topology: Topology, ratio: f64) -> Design {
    Design {
        name: name.into(),
        n,
        n_gen: SCENARIO_HORIZON,
        topologies: vec![topology],
        density: DensityFactor::Edges(vec![n_edges]),
        e: SCENARIO_E.to_vec(),
        c: CFactor::Ratio(vec![ratio]),
        replicates: SCENARIO_REPLICATES,
        estimator: EstimatorConfig::default(),
        initial: Default::default(),
        seed: Seed(0),
    }
}

/// The ten seed-exchange scenarios 1a–5b: 50 patches with 263 edges (ER,
/// PA) or 500 patches with 2682 edges (COM, ER, PA), `e ∈ {0.1, 0.5, 0.8}`,
/// `e/c` of 1 (suffix a) or 5 (suffix b), 30 generations from full
/// occupancy. Preferential attachment uses power 1.
pub fn scenario_presets() -> Vec<Design> {
    let pa = Topology::Pa { power: 1.0 };
    let rows: [(&str, usize, usize, Topology); 5] = [
        ("1", 50, 263, Topology::Er),
        ("2", 50, 263, pa.clone()),
        ("3", 500, 2682, community_500()),
        ("4", 500, 2682, Topology::Er),
        ("5", 500, 2682, pa),
    ];
    rows.iter()
        .flat_map(|(id, n, m, t)| {
            [("a", 1.0), ("b", 5.0)].map(|(suffix, ratio)| scenario(&format!("{id}{suffix}"), *n, *m, t.clone(), ratio))
        })
        .collect()
}

fn five_topologies(n_communities: usize) -> Vec<Topology> {
    vec![
        Topology::Er,
        Topology::Com { n_communities, intra_inter_ratio: 100.0 },
        Topology::Lat,
        Topology::Pa { power: 1.0 },
        Topology::Pa { power: 3.0 },
    ]
}

pub const PRESET_NAMES: [&str; 6] = ["table1-n10", "table1-n100", "fig3", "table3", "table4", "scenario-<1a..5b>"];

/// Named designs: the two sensitivity grids, the single-cell topology
/// comparison at 100 patches, the small- and large-network scenario
/// comparisons, and each scenario on its own (`scenario-2b`, ...).
pub fn preset(name: &str) -> Option<Design> {
    let d = match name {
        "table1-n10" => Design {
            name: name.into(),
            n: 10,
            n_gen: 100,
            topologies: five_topologies(2),
            density: DensityFactor::Fractions(vec![0.3, 0.5, 0.7]),
            e: vec![0.05, 0.10, 0.15],
            c: CFactor::Values(vec![0.01, 0.05, 0.10]),
            replicates: 10,
            estimator: EstimatorConfig::default(),
            initial: Default::default(),
            seed: Seed(0),
        },
        "table1-n100" => Design {
            name: name.into(),
            n: 100,
            n_gen: 100,
            topologies: five_topologies(5),
            density: DensityFactor::Fractions(vec![0.05, 0.10, 0.30]),
            e: vec![0.10, 0.20, 0.25],
            c: CFactor::Values(vec![0.001, 0.005, 0.010]),
            replicates: 10,
            estimator: EstimatorConfig::default(),
            initial: Default::default(),
            seed: Seed(0),
        },
        "fig3" => Design {
            name: name.into(),
            n: 100,
            n_gen: 100,
            topologies: five_topologies(5),
            density: DensityFactor::Fractions(vec![0.30]),
            e: vec![0.25],
            c: CFactor::Values(vec![0.01]),
            replicates: 20,
            estimator: EstimatorConfig::default(),
            initial: Default::default(),
            seed: Seed(0),
        },
        "table3" => Design {
            topologies: vec![Topology::Er, Topology::Pa { power: 1.0 }],
            c: CFactor::Ratio(vec![1.0, 5.0]),
            ..scenario(name, 50, 263, Topology::Er, 1.0)
        },
        "table4" => Design {
            topologies: vec![community_500(), Topology::Er, Topology::Pa { power: 1.0 }],
            c: CFactor::Ratio(vec![1.0, 5.0]),
            ..scenario(name, 500, 2682, Topology::Er, 1.0)
        },
        other => {
            let id = other.strip_prefix("scenario-")?;
            return scenario_presets().into_iter().find(|d| d.name == id).map(|mut d| {
                d.name = other.into();
                d
            });
        }
    };
    Some(d)
}

/// Relation between two non-negative summaries, from their difference
/// relative to the larger: `∼` under 2%, `≳` 2–10%, `>` 10–50%, `≫` above.
pub fn relation_symbol(larger: f64, smaller: f64) -> &'static str {
    if larger <= 0.0 {
        return "∼";
    }
    let rel = (larger - smaller) / larger;
    if rel < 0.02 {
        "∼"
    } else if rel < 0.10 {
        "≳"
    } else if rel <= 0.50 {
        ">"
    } else {
        "≫"
    }
}

/// Orders `(label, value)` pairs from largest to smallest and chains them
/// with relation symbols, e.g. `PA1=0.8 ≫ ER=0.3`.
pub fn ordering_summary(values: &[(String, f64)], digits: usize) -> String {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
    let mut out = String::new();
    for (i, (label, value)) in v.iter().enumerate() {
        if i > 0 {
            out.push_str(&format!(" {} ", relation_symbol(v[i - 1].1, *value)));
        }
        out.push_str(&format!("{label}={value:.digits$}"));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// One comparison per `(n, e, e/c)`.
    ERatio,
    /// One comparison per `(n, density, e, c)`.
    Cell,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub n: usize,
    pub n_edges: Option<usize>,
    pub e: f64,
    pub c: Option<f64>,
    pub e_over_c: Option<f64>,
    /// `(topology, mean persistence)`, in first-seen order.
    pub persistence: Vec<(String, f64)>,
    pub occupancy: Vec<(String, f64)>,
    pub persistence_summary: String,
    pub occupancy_summary: String,
}

/// Mean persistence and occupancy per topology within each group, with the
/// ordering written out using relation symbols.
pub fn scenario_compare(rows: &[ResultRow], grouping: Grouping) -> Vec<Comparison> {
    // keyed on the bit patterns so floats group exactly
    type Key = (usize, u64, u64, u64);
    let mut groups: BTreeMap<Key, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.error.is_none()) {
        let key = match grouping {
            Grouping::ERatio => (r.n, 0, r.e.to_bits(), (r.e / r.c).to_bits()),
            Grouping::Cell => (r.n, r.n_edges as u64, r.e.to_bits(), r.c.to_bits()),
        };
        groups.entry(key).or_default().push(r);
    }
    groups
        .into_values()
        .map(|g| {
            let mut labels: Vec<String> = Vec::new();
            let mut sums: BTreeMap<String, (f64, f64, usize)> = BTreeMap::new();
            for r in &g {
                if !labels.contains(&r.topology) {
                    labels.push(r.topology.clone());
                }
                let s = sums.entry(r.topology.clone()).or_default();
                s.0 += r.persistence;
                s.1 += r.occupancy;
                s.2 += 1;
            }
            let mean = |f: fn(&(f64, f64, usize)) -> f64| -> Vec<(String, f64)> {
                labels.iter().map(|l| (l.clone(), f(&sums[l]))).collect()
            };
            let persistence = mean(|s| s.0 / s.2 as f64);
            let occupancy = mean(|s| s.1 / s.2 as f64);
            let first = g[0];
            Comparison {
                n: first.n,
                n_edges: (grouping == Grouping::Cell).then_some(first.n_edges),
                e: first.e,
                c: (grouping == Grouping::Cell).then_some(first.c),
                e_over_c: (grouping == Grouping::ERatio).then_some(first.e / first.c),
                persistence_summary: ordering_summary(&persistence, 2),
                occupancy_summary: ordering_summary(&occupancy, 1),
                persistence,
                occupancy,
            }
        })
        .collect()
}

/// CSV with columns `n,e,e_over_c,persistence,occupancy`; the last two hold
/// the ordering summaries.
pub fn comparisons_to_csv(rows: &[Comparison]) -> String {
    let mut w = CsvWriter::new(&["n", "n_edges", "e", "c", "e_over_c", "persistence", "occupancy"]);
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for c in rows {
        w.row([
            c.n.to_string(),
            c.n_edges.map(|m| m.to_string()).unwrap_or_default(),
            c.e.to_string(),
            opt(c.c),
            opt(c.e_over_c),
            c.persistence_summary.clone(),
            c.occupancy_summary.clone(),
        ]);
    }
    w.finish()
}

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::run::ResultRow;
use crate::csv::CsvWriter;
use crate::error::{Error, Result};

pub const LOGIT_CLAMP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    /// `logit(p)` with `p` clamped to `[1e-6, 1 − 1e-6]`.
    LogitPersistence,
    Occupancy,
}

impl Response {
    pub fn of(self, row: &ResultRow) -> f64 {
        match self {
            Response::LogitPersistence => {
                let p = row.persistence.clamp(LOGIT_CLAMP, 1.0 - LOGIT_CLAMP);
                (p / (1.0 - p)).ln()
            }
            Response::Occupancy => row.occupancy,
        }
    }
}

pub const FACTOR_NAMES: [&str; 4] = ["topology", "density", "e", "c"];

fn factor_levels(row: &ResultRow) -> [String; 4] {
    [row.topology.clone(), row.n_edges.to_string(), row.e.to_string(), row.c.to_string()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    /// Factor names joined by `:`.
    pub name: String,
    pub sum_sq: f64,
    pub share: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceTable {
    pub response: Response,
    pub terms: Vec<Term>,
    pub residual_sum_sq: f64,
    pub residual_share: f64,
    pub total_sum_sq: f64,
    /// `None` when the response is constant.
    pub r_squared: Option<f64>,
    pub degenerate: bool,
}

impl VarianceTable {
    /// CSV with columns `term,ss,share`, the residual last.
    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new(&["term", "ss", "share"]);
        for t in &self.terms {
            w.row([t.name.clone(), t.sum_sq.to_string(), t.share.to_string()]);
        }
        w.row(["residual".to_string(), self.residual_sum_sq.to_string(), self.residual_share.to_string()]);
        w.finish()
    }

    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }
}

/// Classical sums of squares for a balanced factorial over topology,
/// density, `e` and `c`, with interactions up to `max_order` factors.
///
/// For a subset `S` of factors let `Q(S)` be the between-cell sum of squares
/// of the `S`-marginal means; the sum of squares of term `T` is the Möbius
/// inversion `Σ_{U ⊆ T} (−1)^{|T|−|U|} Q(U)`. Whatever the included terms do
/// not explain — replicate variation and omitted interactions — is residual.
/// Factors with a single level carry no variance and are skipped.
pub fn variance_decomposition(rows: &[ResultRow], response: Response, max_order: usize) -> Result<VarianceTable> {
    if rows.is_empty() {
        return Err(Error::Unbalanced("no rows".into()));
    }
    if let Some(r) = rows.iter().find(|r| r.error.is_some()) {
        return Err(Error::Unbalanced(format!("row for cell {} replicate {} failed", r.cell, r.replicate)));
    }
    let levels: Vec<[String; 4]> = rows.iter().map(factor_levels).collect();
    let y: Vec<f64> = rows.iter().map(|r| response.of(r)).collect();
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::Unbalanced(format!("non-finite response in row {i}")));
    }

    let active: Vec<usize> = (0..4)
        .filter(|&f| levels.iter().map(|l| &l[f]).collect::<BTreeSet<_>>().len() > 1)
        .collect();
    // balance: every combination of active levels holds the same row count
    let mut full: BTreeMap<Vec<&str>, usize> = BTreeMap::new();
    for l in &levels {
        *full.entry(active.iter().map(|&f| l[f].as_str()).collect()).or_default() += 1;
    }
    let n_combos: usize = active
        .iter()
        .map(|&f| levels.iter().map(|l| &l[f]).collect::<BTreeSet<_>>().len())
        .product();
    let per_cell = *full.values().next().unwrap();
    if full.len() != n_combos || full.values().any(|&k| k != per_cell) {
        return Err(Error::Unbalanced("rows do not form a balanced full factorial".into()));
    }

    let n = y.len() as f64;
    let grand = y.iter().sum::<f64>() / n;
    let total: f64 = y.iter().map(|v| (v - grand).powi(2)).sum();

    let k = active.len();
    let mut q = vec![0.0; 1 << k];
    for (mask, slot) in q.iter_mut().enumerate().skip(1) {
        let mut groups: BTreeMap<Vec<&str>, (f64, usize)> = BTreeMap::new();
        for (l, v) in levels.iter().zip(&y) {
            let key = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| l[active[b]].as_str()).collect();
            let g = groups.entry(key).or_default();
            g.0 += v;
            g.1 += 1;
        }
        *slot = groups.values().map(|&(s, c)| c as f64 * (s / c as f64 - grand).powi(2)).sum();
    }

    let mut terms = Vec::new();
    let mut explained = 0.0;
    let mut masks: Vec<usize> = (1..1usize << k).filter(|m| (m.count_ones() as usize) <= max_order).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    for mask in masks {
        let mut ss = 0.0;
        // iterate over all submasks of `mask`, including 0
        let mut sub = mask;
        loop {
            let sign = if (mask.count_ones() - sub.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
            ss += sign * q[sub];
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & mask;
        }
        let ss = ss.max(0.0);
        explained += ss;
        let name = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| FACTOR_NAMES[active[b]]).collect::<Vec<_>>().join(":");
        terms.push(Term { name, sum_sq: ss, share: 0.0 });
    }

    let residual = (total - explained).max(0.0);
    let degenerate = total <= 0.0;
    for t in &mut terms {
        t.share = if degenerate { f64::NAN } else { t.sum_sq / total };
    }
    Ok(VarianceTable {
        response,
        terms,
        residual_sum_sq: if degenerate { 0.0 } else { residual },
        residual_share: if degenerate { f64::NAN } else { residual / total },
        total_sum_sq: total,
        r_squared: if degenerate { None } else { Some(1.0 - residual / total) },
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(topology: &str, e: f64, c: f64, rep: usize, occupancy: f64) -> ResultRow {
        ResultRow {
            cell: 0,
            topology: topology.into(),
            n: 10,
            n_edges: 13,
            density: 0.3,
            e,
            c,
            replicate: rep,
            method: None,
            persistence: 0.5,
            persistence_se: 0.0,
            occupancy,
            occupancy_se: 0.0,
            cond_occupancy: 0.0,
            lambda_a1: 0.0,
            fingerprint: String::new(),
            n_work: 0,
            error: None,
            runtime_ms: 0.0,
        }
    }

    fn grid(f: impl Fn(&str, f64, f64, usize) -> f64) -> Vec<ResultRow> {
        let mut rows = Vec::new();
        for t in ["ER", "PA1", "LAT"] {
            for e in [0.1, 0.2] {
                for c in [0.01, 0.05, 0.1] {
                    for r in 0..3 {
                        rows.push(row(t, e, c, r, f(t, e, c, r)));
                    }
                }
            }
        }
        rows
    }

    #[test]
    fn constant_response_is_degenerate() {
        let t = variance_decomposition(&grid(|_, _, _, _| 4.0), Response::Occupancy, 2).unwrap();
        assert!(t.degenerate);
        assert!(t.r_squared.is_none());
        assert!(t.terms.iter().all(|t| t.sum_sq.abs() < 1e-12));
    }

    #[test]
    fn single_factor_response() {
        let t = variance_decomposition(&grid(|_, e, _, _| 100.0 * e * e), Response::Occupancy, 3).unwrap();
        let e = t.term("e").unwrap();
        assert!((e.share - (1.0 - t.residual_share)).abs() < 1e-9);
        assert!((e.share - 1.0).abs() < 1e-9);
        for other in t.terms.iter().filter(|t| t.name != "e") {
            assert!(other.share.abs() < 1e-9, "{other:?}");
        }
    }

    #[test]
    fn additive_response_with_noise() {
        // y = a(topology) + b(c) + ε(replicate), ε centred within each cell
        let a = |t: &str| match t {
            "ER" => 1.0,
            "PA1" => 3.0,
            _ => -1.0,
        };
        let rows = grid(|t, _, c, r| a(t) + 20.0 * c + [0.5, -0.5, 0.0][r]);
        let tab = variance_decomposition(&rows, Response::Occupancy, 2).unwrap();
        let n = rows.len() as f64;
        let ss_a = n * (8.0f64 / 3.0) / 1.0; // mean of a is 1; deviations 0,2,-2
        assert!((tab.term("topology").unwrap().sum_sq - ss_a).abs() < 1e-9);
        assert!((tab.residual_sum_sq - 18.0 * 0.5).abs() < 1e-9);
        let shares: f64 = tab.terms.iter().map(|t| t.share).sum::<f64>() + tab.residual_share;
        assert!((shares - 1.0).abs() < 1e-9);
        assert!(tab.term("topology:e").unwrap().sum_sq < 1e-9);
        assert!(tab.to_csv().ends_with(&format!("residual,{},{}\n", tab.residual_sum_sq, tab.residual_share)));
    }

    #[test]
    fn unbalanced_rows_rejected() {
        let mut rows = grid(|_, e, _, _| e);
        rows.pop();
        assert!(matches!(variance_decomposition(&rows, Response::Occupancy, 2), Err(Error::Unbalanced(_))));
    }

    #[test]
    fn logit_clamp() {
        let mut r = row("ER", 0.1, 0.1, 0, 0.0);
        r.persistence = 1.0;
        assert!((Response::LogitPersistence.of(&r) - ((1.0 - 1e-6) / 1e-6f64).ln()).abs() < 1e-9);
    }
}

use serde::{Deserialize, Serialize};

use super::matrices::{colonisation_row, extinction_left_in_place, TransitionMatrices, MATRIX_FREE_CAP};
use crate::csv::CsvWriter;
use crate::dynamics::{ColonisationSource, Params};
use crate::error::{ensure, Error, Result};
use crate::netgen::Graph;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonRow {
    pub t: usize,
    /// `P(#Z_t = 0)`, the mass on the coffin state.
    pub p_extinct: f64,
    /// `P(#Z_t > 0)`, summed over transient states directly so that it stays
    /// accurate when tiny.
    pub p_persist: f64,
    pub mean_occ: f64,
    /// `E(#Z_t | #Z_t > 0)`; 0 once extinction is certain.
    pub cond_mean_occ: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonTable {
    pub rows: Vec<HorizonRow>,
    /// Law of `Z_{n_gen}` over all `2^n` states.
    pub final_distribution: Vec<f64>,
}

impl HorizonTable {
    pub fn at(&self, t: usize) -> &HorizonRow {
        &self.rows[t]
    }

    pub fn last(&self) -> &HorizonRow {
        self.rows.last().expect("non-empty table")
    }

    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new(&["t", "p_extinct", "p_persist", "mean_occ", "cond_mean_occ"]);
        for r in &self.rows {
            w.row([r.t as f64, r.p_extinct, r.p_persist, r.mean_occ, r.cond_mean_occ]);
        }
        w.finish()
    }
}

pub(crate) fn summarise(t: usize, dist: &[f64]) -> HorizonRow {
    let mut p_persist = 0.0;
    let mut mean_occ = 0.0;
    for (z, &p) in dist.iter().enumerate().skip(1) {
        p_persist += p;
        mean_occ += p * z.count_ones() as f64;
    }
    HorizonRow {
        t,
        p_extinct: dist[0],
        p_persist,
        mean_occ,
        cond_mean_occ: if p_persist > 0.0 { mean_occ / p_persist } else { 0.0 },
    }
}

fn start_distribution(n: usize, z0: u64) -> Result<Vec<f64>> {
    ensure(n == 64 || z0 >> n == 0, || format!("initial state {z0:#x} does not fit {n} patches"))?;
    let mut v = vec![0.0; 1 << n];
    v[z0 as usize] = 1.0;
    Ok(v)
}

/// Propagates `δ_{z0} M^t` for `t = 0..=n_gen` by repeated vector–matrix
/// products.
pub fn finite_horizon(tm: &TransitionMatrices, z0: u64, n_gen: usize) -> Result<HorizonTable> {
    let mut v = start_distribution(tm.n(), z0)?;
    let mut next = vec![0.0; v.len()];
    let mut rows = Vec::with_capacity(n_gen + 1);
    rows.push(summarise(0, &v));
    for t in 1..=n_gen {
        tm.propagate(&mut v, &mut next);
        std::mem::swap(&mut v, &mut next);
        rows.push(summarise(t, &v));
    }
    Ok(HorizonTable { rows, final_distribution: v })
}

/// Same as [`finite_horizon`] without storing any matrix: colonisation rows
/// are regenerated from the graph every generation. Works up to 20 patches.
pub fn finite_horizon_matrix_free(graph: &Graph, params: &Params, z0: u64, n_gen: usize) -> Result<HorizonTable> {
    params.validate()?;
    let n = graph.n();
    if n > MATRIX_FREE_CAP {
        return Err(Error::ExactCapExceeded { patches: n, cap: MATRIX_FREE_CAP });
    }
    ensure(params.colonisation_source == ColonisationSource::PostExtinction, || {
        "exact propagation needs the post-extinction colonisation source".into()
    })?;
    let masks = graph.neighbor_masks();
    let mut v = start_distribution(n, z0)?;
    let mut next = vec![0.0; v.len()];
    let mut row = Vec::new();
    let mut rows = Vec::with_capacity(n_gen + 1);
    rows.push(summarise(0, &v));
    for t in 1..=n_gen {
        extinction_left_in_place(&mut v, n, params.e);
        next.iter_mut().for_each(|x| *x = 0.0);
        for (z, &p) in v.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            row.clear();
            colonisation_row(z as u64, n, &masks, params.c, &mut row);
            for &(w, q) in &row {
                next[w as usize] += p * q;
            }
        }
        std::mem::swap(&mut v, &mut next);
        rows.push(summarise(t, &v));
    }
    Ok(HorizonTable { rows, final_distribution: v })
}

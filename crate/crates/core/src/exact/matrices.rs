use std::sync::OnceLock;

use crate::dynamics::{ColonisationSource, Params};
use crate::error::{ensure, Error, Result};
use crate::netgen::Graph;

/// Default largest patch count for dense exact analysis (4096 states).
pub const DEFAULT_EXACT_CAP: usize = 12;
/// Largest cap that may be configured; the dense `M` alone takes 2 GiB here.
pub const MAX_EXACT_CAP: usize = 14;
/// Largest patch count for matrix-free distribution propagation.
pub const MATRIX_FREE_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactConfig {
    pub max_patches: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig { max_patches: DEFAULT_EXACT_CAP }
    }
}

impl ExactConfig {
    /// Whether the configured cap implies a dense `M` above 128 MiB.
    pub fn memory_warning(&self) -> bool {
        self.max_patches > DEFAULT_EXACT_CAP
    }
}

/// Row-compressed sparse matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    fn from_rows(dim: usize, mut row: impl FnMut(usize, &mut Vec<(u32, f64)>)) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        let mut buf = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            buf.clear();
            row(i, &mut buf);
            buf.sort_unstable_by_key(|&(c, _)| c);
            for &(c, v) in &buf {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().zip(&self.vals[r]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// `out = x * A` (row vector on the left).
    pub fn left_mul_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (c, v) in self.row(i) {
                out[c] += xi * v;
            }
        }
    }

    /// `out = A * x` (column vector on the right).
    pub fn right_mul_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for (c, v) in self.row(i) {
                d.data[i * self.dim + c] = v;
            }
        }
        d
    }
}

/// Square row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.row(i).iter().sum()).collect()
    }

    /// The submatrix without row and column `0`.
    pub fn without_first(&self) -> DenseMatrix {
        let d = self.dim - 1;
        let mut out = DenseMatrix::zeros(d);
        for i in 0..d {
            out.data[i * d..(i + 1) * d].copy_from_slice(&self.row(i + 1)[1..]);
        }
        out
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }
}

/// Subsets `z' ⊆ z` with probability `e^{|z|-|z'|} (1-e)^{|z'|}`.
pub(crate) fn extinction_row(z: u64, e: f64, out: &mut Vec<(u32, f64)>) {
    let k = z.count_ones() as i32;
    let mut sub = z;
    loop {
        let kept = sub.count_ones() as i32;
        let w = e.powi(k - kept) * (1.0 - e).powi(kept);
        if w != 0.0 {
            out.push((sub as u32, w));
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & z;
    }
}

/// Supersets of `z` reachable by one colonisation phase from survivors `z`.
pub(crate) fn colonisation_row(z: u64, n: usize, masks: &[u64], c: f64, out: &mut Vec<(u32, f64)>) {
    out.push((z as u32, 1.0));
    for (i, &mask) in masks.iter().enumerate().take(n) {
        let bit = 1u64 << i;
        if z & bit != 0 {
            continue;
        }
        let o = (mask & z).count_ones() as i32;
        let q = 1.0 - (1.0 - c).powi(o);
        if q == 0.0 {
            continue;
        }
        if q == 1.0 {
            out.iter_mut().for_each(|(w, _)| *w |= bit as u32);
            continue;
        }
        let len = out.len();
        for j in 0..len {
            let (w, p) = out[j];
            out.push((w | bit as u32, p * q));
            out[j].1 = p * (1.0 - q);
        }
    }
}

/// Exact transition structure over the `2^n` occupancy states, indexed by
/// bitmask; state 0 is the coffin.
#[derive(Debug)]
pub struct TransitionMatrices {
    n: usize,
    params: Params,
    e: SparseMatrix,
    c: SparseMatrix,
    m: OnceLock<DenseMatrix>,
}

pub fn build_transition(graph: &Graph, params: &Params) -> Result<TransitionMatrices> {
    build_transition_with(graph, params, ExactConfig::default())
}

pub fn build_transition_with(graph: &Graph, params: &Params, cfg: ExactConfig) -> Result<TransitionMatrices> {
    params.validate()?;
    ensure(cfg.max_patches <= MAX_EXACT_CAP, || {
        format!("exact cap {} exceeds the supported maximum {MAX_EXACT_CAP}", cfg.max_patches)
    })?;
    if graph.n() > cfg.max_patches {
        return Err(Error::ExactCapExceeded { patches: graph.n(), cap: cfg.max_patches });
    }
    ensure(params.colonisation_source == ColonisationSource::PostExtinction, || {
        "exact matrices factor as M = E*C, which needs the post-extinction colonisation source".into()
    })?;
    let n = graph.n();
    let dim = 1usize << n;
    let masks = graph.neighbor_masks();
    let e = SparseMatrix::from_rows(dim, |z, out| extinction_row(z as u64, params.e, out));
    let c = SparseMatrix::from_rows(dim, |z, out| colonisation_row(z as u64, n, &masks, params.c, out));
    Ok(TransitionMatrices { n, params: *params, e, c, m: OnceLock::new() })
}

impl TransitionMatrices {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> usize {
        1 << self.n
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn extinction(&self) -> &SparseMatrix {
        &self.e
    }

    pub fn colonisation(&self) -> &SparseMatrix {
        &self.c
    }

    /// The full transition matrix `M = E * C`, built on first use.
    pub fn full(&self) -> &DenseMatrix {
        self.m.get_or_init(|| {
            let dim = self.states();
            let mut m = DenseMatrix::zeros(dim);
            for z in 0..dim {
                let row = &mut m.data[z * dim..(z + 1) * dim];
                for (mid, pe) in self.e.row(z) {
                    for (w, pc) in self.c.row(mid) {
                        row[w] += pe * pc;
                    }
                }
            }
            m
        })
    }

    /// Transient block `R`: `M` without the coffin row and column.
    pub fn transient(&self) -> DenseMatrix {
        self.full().without_first()
    }

    /// In place `v <- v * E`, using the per-patch product structure of `E`.
    pub fn extinction_left_in_place(&self, v: &mut [f64]) {
        extinction_left_in_place(v, self.n, self.params.e);
    }

    /// In place `x <- E * x`.
    pub fn extinction_right_in_place(&self, x: &mut [f64]) {
        let e = self.params.e;
        for i in 0..self.n {
            let bit = 1usize << i;
            for z in 0..x.len() {
                if z & bit != 0 {
                    x[z] = (1.0 - e) * x[z] + e * x[z ^ bit];
                }
            }
        }
    }

    /// `out = v * M`; `v` is overwritten with `v * E`.
    pub fn propagate(&self, v: &mut [f64], out: &mut [f64]) {
        self.extinction_left_in_place(v);
        self.c.left_mul_into(v, out);
    }

    /// `out = M * x`.
    pub fn apply_right(&self, x: &[f64], out: &mut [f64]) {
        self.c.right_mul_into(x, out);
        self.extinction_right_in_place(out);
    }
}

pub(crate) fn extinction_left_in_place(v: &mut [f64], n: usize, e: f64) {
    for i in 0..n {
        let bit = 1usize << i;
        for z in 0..v.len() {
            if z & bit != 0 {
                let w = v[z];
                if w != 0.0 {
                    v[z ^ bit] += e * w;
                    v[z] = (1.0 - e) * w;
                }
            }
        }
    }
}

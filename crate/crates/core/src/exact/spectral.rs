//! Spectral analysis of the transient block `R` of the transition matrix.
//!
//! All iterations apply `R` through the factorisation `M = E * C` restricted
//! to non-coffin states, so no dense matrix is formed except for the linear
//! solve behind [`mean_extinction_times`].

use serde::{Deserialize, Serialize};

use super::horizon::HorizonTable;
use super::matrices::TransitionMatrices;
use crate::csv::CsvWriter;
use crate::error::{ensure, Error, Result};

pub const DEFAULT_QSD_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;
const SECOND_EIGEN_ITERATIONS: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QsdResult {
    /// Leading eigenvalue of `R` (equal to the second eigenvalue of `M`).
    pub lambda_r1: f64,
    /// Quasi-stationary distribution: the left Perron vector of `R`,
    /// normalised to sum to one. Entry `z - 1` belongs to state `z`.
    pub alpha: Vec<f64>,
    /// Right Perron vector of `R`, scaled so that `alpha · h = 1`. Entry
    /// `z - 1` is proportional to the long-run survival capacity of `z`.
    pub right_vector: Vec<f64>,
    /// Modulus of the second eigenvalue of `R`.
    pub lambda_r2_modulus: f64,
    pub lambda_r2_converged: bool,
    /// `max |α R − λ α|`.
    pub residual: f64,
    pub iterations: usize,
}

impl QsdResult {
    /// Probability of state `z` under the quasi-stationary distribution.
    pub fn alpha_of(&self, z: usize) -> f64 {
        if z == 0 {
            0.0
        } else {
            self.alpha[z - 1]
        }
    }

    /// `|λ_{R,2}| / λ_{R,1}`, the geometric rate of convergence to `α`.
    pub fn mixing_ratio(&self) -> f64 {
        self.lambda_r2_modulus / self.lambda_r1
    }

    /// CSV with columns `state_hex,alpha`.
    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new(&["state_hex", "alpha"]);
        for (i, a) in self.alpha.iter().enumerate() {
            w.row([format!("{:x}", i + 1), a.to_string()]);
        }
        w.finish()
    }
}

/// Full-length work vectors; index 0 (the coffin) is kept at zero.
struct TransientOps<'a> {
    tm: &'a TransitionMatrices,
    scratch: Vec<f64>,
}

impl<'a> TransientOps<'a> {
    fn new(tm: &'a TransitionMatrices) -> Self {
        TransientOps { tm, scratch: vec![0.0; tm.states()] }
    }

    /// `out = x R`.
    fn left(&mut self, x: &[f64], out: &mut [f64]) {
        self.scratch.copy_from_slice(x);
        self.scratch[0] = 0.0;
        self.tm.propagate(&mut self.scratch, out);
        out[0] = 0.0;
    }

    /// `out = R x`.
    fn right(&mut self, x: &[f64], out: &mut [f64]) {
        self.scratch.copy_from_slice(x);
        self.scratch[0] = 0.0;
        self.tm.apply_right(&self.scratch, out);
        out[0] = 0.0;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Normalised power iteration; `apply` must preserve non-negativity.
fn perron_vector(
    dim: usize,
    tol: f64,
    max_iter: usize,
    norm: impl Fn(&[f64]) -> f64,
    mut apply: impl FnMut(&[f64], &mut [f64]),
) -> Result<(Vec<f64>, usize)> {
    let mut x = vec![1.0; dim];
    x[0] = 0.0;
    let s = norm(&x);
    x.iter_mut().for_each(|v| *v /= s);
    let mut y = vec![0.0; dim];
    for it in 1..=max_iter {
        apply(&x, &mut y);
        let s = norm(&y);
        if s == 0.0 {
            return Err(Error::Singular("transient block annihilates the iterate".into()));
        }
        y.iter_mut().for_each(|v| *v /= s);
        let diff = max_abs_diff(&x, &y);
        std::mem::swap(&mut x, &mut y);
        if diff < tol {
            return Ok((x, it));
        }
    }
    Err(Error::NoConvergence { what: "quasi-stationary power iteration", iterations: max_iter })
}

/// Quasi-stationary distribution and the two leading eigenvalues of `R`.
pub fn qsd(tm: &TransitionMatrices, tol: f64) -> Result<QsdResult> {
    qsd_with(tm, tol, DEFAULT_MAX_ITERATIONS)
}

pub fn qsd_with(tm: &TransitionMatrices, tol: f64, max_iter: usize) -> Result<QsdResult> {
    let p = tm.params();
    ensure(p.e > 0.0 && p.e < 1.0, || format!("the quasi-stationary distribution needs 0 < e < 1, got {}", p.e))?;
    ensure(p.c > 0.0 || tm.n() == 1, || "the quasi-stationary distribution needs c > 0".into())?;
    let dim = tm.states();
    let mut ops = TransientOps::new(tm);

    let l1 = |v: &[f64]| v.iter().sum::<f64>();
    let (alpha, it_left) = perron_vector(dim, tol, max_iter, l1, |x, y| ops.left(x, y))?;
    let mut ops = TransientOps::new(tm);
    let (mut h, it_right) = perron_vector(dim, tol, max_iter, l1, |x, y| ops.right(x, y))?;

    let mut alpha_r = vec![0.0; dim];
    ops.left(&alpha, &mut alpha_r);
    let scale = dot(&alpha, &h);
    h.iter_mut().for_each(|v| *v /= scale);
    // two-sided Rayleigh quotient: second-order accurate in the vector errors
    let lambda_r1 = dot(&alpha_r, &h);
    let residual = alpha_r.iter().zip(&alpha).map(|(a, b)| (a - lambda_r1 * b).abs()).fold(0.0, f64::max);

    let (lambda_r2_modulus, lambda_r2_converged) = second_modulus(&mut ops, &alpha, &h, lambda_r1, tol);

    Ok(QsdResult {
        lambda_r1,
        alpha: alpha[1..].to_vec(),
        right_vector: h[1..].to_vec(),
        lambda_r2_modulus,
        lambda_r2_converged,
        residual,
        iterations: it_left.max(it_right),
    })
}

/// Power iteration on `x ↦ x R − λ (x·h) α`, which removes the Perron pair.
/// Complex pairs make the one-step norm ratio oscillate, so the modulus is
/// read off the average log growth over the second half of the run.
fn second_modulus(ops: &mut TransientOps<'_>, alpha: &[f64], h: &[f64], lambda: f64, tol: f64) -> (f64, bool) {
    let dim = alpha.len();
    if dim <= 2 {
        return (0.0, true);
    }
    let mut x: Vec<f64> = (0..dim).map(|i| if i == 0 { 0.0 } else { (i as f64 * 0.618_034).fract() - 0.5 }).collect();
    let mut y = vec![0.0; dim];
    let mut log_norms = Vec::with_capacity(SECOND_EIGEN_ITERATIONS + 1);
    let mut acc = 0.0;
    log_norms.push(acc);
    let mut previous = f64::NAN;
    for it in 1..=SECOND_EIGEN_ITERATIONS {
        ops.left(&x, &mut y);
        let proj = dot(&x, h);
        y.iter_mut().zip(alpha).for_each(|(v, a)| *v -= lambda * proj * a);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return (0.0, true);
        }
        acc += norm.ln();
        log_norms.push(acc);
        y.iter_mut().for_each(|v| *v /= norm);
        std::mem::swap(&mut x, &mut y);
        if it % 100 == 0 {
            let half = it / 2;
            let estimate = ((log_norms[it] - log_norms[half]) / (it - half) as f64).exp();
            if (estimate - previous).abs() < tol.max(1e-12) * 10.0 {
                return (estimate, true);
            }
            previous = estimate;
        }
    }
    (previous, false)
}

/// Mean absorption times `m` solving `(I − R) m = 1`, indexed by state (the
/// coffin entry is 0).
pub fn mean_extinction_times(tm: &TransitionMatrices) -> Result<Vec<f64>> {
    if tm.params().e == 0.0 {
        return Err(Error::Singular("extinction never happens when e = 0".into()));
    }
    let r = tm.transient().to_nalgebra();
    let d = r.nrows();
    let a = nalgebra::DMatrix::<f64>::identity(d, d) - r;
    let ones = nalgebra::DVector::<f64>::from_element(d, 1.0);
    let m = a.lu().solve(&ones).ok_or_else(|| Error::Singular("I − R is not invertible".into()))?;
    let mut out = Vec::with_capacity(d + 1);
    out.push(0.0);
    out.extend(m.iter().copied());
    Ok(out)
}

/// Mean number of generations until extinction starting from `z0`.
pub fn mean_extinction_time(tm: &TransitionMatrices, z0: u64) -> Result<f64> {
    ensure((z0 as usize) < tm.states(), || format!("state {z0:#x} out of range"))?;
    Ok(mean_extinction_times(tm)?[z0 as usize])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// `P(#Z_{t+1} > 0) / P(#Z_t > 0)` over the last ten generations.
    pub tail_ratios: Vec<f64>,
    /// `|last tail ratio − λ_{R,1}|`.
    pub ratio_deviation: f64,
    /// Total variation between the law of `Z_{n_gen}` given survival and `α`.
    pub tv_to_qsd: f64,
    /// `|λ_{R,2}| / λ_{R,1}`.
    pub mixing_ratio: f64,
    /// `mixing_ratio / λ_{R,1}` below the threshold: conditioned trajectories
    /// settle into `α` well before they are absorbed.
    pub quasi_stationary: bool,
}

pub const MIN_DIAGNOSTIC_HORIZON: usize = 50;
pub const DEFAULT_QSD_REGIME_THRESHOLD: f64 = 0.5;

/// Total variation between the surviving part of `dist` (renormalised) and
/// `alpha`.
pub fn tv_to_qsd(qsd: &QsdResult, dist: &[f64]) -> f64 {
    let surv: f64 = dist[1..].iter().sum();
    if surv <= 0.0 {
        return f64::NAN;
    }
    0.5 * dist[1..].iter().zip(&qsd.alpha).map(|(p, a)| (p / surv - a).abs()).sum::<f64>()
}

pub fn convergence_diagnostics(qsd: &QsdResult, horizon: &HorizonTable, threshold: f64) -> Result<ConvergenceReport> {
    let rows = &horizon.rows;
    ensure(rows.len() > MIN_DIAGNOSTIC_HORIZON, || {
        format!("diagnostics need at least {MIN_DIAGNOSTIC_HORIZON} generations, got {}", rows.len() - 1)
    })?;
    let tail_ratios: Vec<f64> = rows[rows.len() - 11..]
        .windows(2)
        .map(|w| if w[0].p_persist > 0.0 { w[1].p_persist / w[0].p_persist } else { f64::NAN })
        .collect();
    let last = *tail_ratios.last().unwrap();
    let mixing_ratio = qsd.mixing_ratio();
    Ok(ConvergenceReport {
        ratio_deviation: (last - qsd.lambda_r1).abs(),
        tail_ratios,
        tv_to_qsd: tv_to_qsd(qsd, &horizon.final_distribution),
        mixing_ratio,
        quasi_stationary: mixing_ratio / qsd.lambda_r1 < threshold,
    })
}

/// Total variation to `α` of the conditioned law at every `t = 0..=n_gen`.
pub fn tv_series(tm: &TransitionMatrices, qsd: &QsdResult, z0: u64, n_gen: usize) -> Result<Vec<f64>> {
    ensure((z0 as usize) < tm.states(), || format!("state {z0:#x} out of range"))?;
    let mut v = vec![0.0; tm.states()];
    v[z0 as usize] = 1.0;
    let mut next = vec![0.0; v.len()];
    let mut out = Vec::with_capacity(n_gen + 1);
    out.push(tv_to_qsd(qsd, &v));
    for _ in 0..n_gen {
        tm.propagate(&mut v, &mut next);
        std::mem::swap(&mut v, &mut next);
        out.push(tv_to_qsd(qsd, &v));
    }
    Ok(out)
}

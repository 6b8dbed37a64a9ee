//! Independence (mean-field) approximation of the chain.
//!
//! Each patch is summarised by its occupancy probability `p_i`; patches are
//! treated as independent, giving
//! `p_{i,t+1} = 1 − ζ_{i,t+1} (1 − (1 − e) p_{i,t})`.

use serde::{Deserialize, Serialize};

use crate::csv::CsvWriter;
use crate::dynamics::Params;
use crate::error::{ensure, Error, Result};
use crate::netgen::{leading_adjacency_eigenvalue, Graph, DEFAULT_EIGEN_TOL};

/// How the non-colonisation probability `ζ` is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanFieldVariant {
    /// `ζ_i = ∏_{j∼i} (1 − c (1 − e) p_j)`: only neighbours that survived
    /// the extinction phase colonise, as in the stochastic kernel. Its
    /// linearisation is `(1 − e)(I + cA)`, whence the decay rate
    /// `1 − e + c (1 − e) λ_{A,1}`.
    #[default]
    Survivor,
    /// `ζ_i = ∏_{j∼i} (1 − c p_j)`, neighbours counted before extinction.
    Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldTrajectory {
    /// `p[t][i]` for `t = 0..=n_gen`.
    pub p: Vec<Vec<f64>>,
    /// `zeta[t][i]`; row 0 is all ones.
    pub zeta: Vec<Vec<f64>>,
}

impl MeanFieldTrajectory {
    pub fn max_at(&self, t: usize) -> f64 {
        self.p[t].iter().copied().fold(0.0, f64::max)
    }

    /// Euclidean norm of `p_t`.
    /// Euclidean norm, scaled by the largest entry so that squares of
    /// probabilities below ~1e-154 do not underflow.
    pub fn norm_at(&self, t: usize) -> f64 {
        let peak = self.p[t].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            return 0.0;
        }
        peak * self.p[t].iter().map(|v| (v / peak).powi(2)).sum::<f64>().sqrt()
    }

    /// `‖p_{t+1}‖ / ‖p_t‖` in the Euclidean norm, for every `t` with a
    /// positive denominator.
    ///
    /// The Survivor recurrence lies below its linearisation
    /// `(1 − e)(I + cA)` componentwise, and that symmetric matrix has
    /// Euclidean operator norm `1 − e + c (1 − e) λ_{A,1}`, so these ratios
    /// respect the decay bound at every generation. Ratios of the maxima
    /// only do so asymptotically.
    pub fn tail_ratios(&self) -> Vec<f64> {
        (0..self.p.len() - 1)
            .map(|t| {
                let d = self.norm_at(t);
                if d > 0.0 {
                    self.norm_at(t + 1) / d
                } else {
                    f64::NAN
                }
            })
            .collect()
    }

    /// CSV with columns `t,i,p`.
    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new(&["t", "i", "p"]);
        for (t, row) in self.p.iter().enumerate() {
            for (i, p) in row.iter().enumerate() {
                w.row([t.to_string(), i.to_string(), p.to_string()]);
            }
        }
        w.finish()
    }
}

struct Recurrence<'g> {
    graph: &'g Graph,
    e: f64,
    /// Effective colonisation weight of one neighbour's occupancy.
    weight: f64,
}

impl<'g> Recurrence<'g> {
    fn new(graph: &'g Graph, params: &Params, variant: MeanFieldVariant) -> Self {
        let weight = match variant {
            MeanFieldVariant::Survivor => params.c * (1.0 - params.e),
            MeanFieldVariant::Literal => params.c,
        };
        Recurrence { graph, e: params.e, weight }
    }

    /// Small results are evaluated as `(1 − ζ) + ζ (1 − e) p` with `1 − ζ`
    /// from `expm1`, which keeps full relative precision while the
    /// probabilities decay to zero; the direct form is used near one.
    fn step(&self, p: &[f64], zeta: &mut [f64], next: &mut [f64]) {
        for i in 0..p.len() {
            let log_z: f64 = self.graph.neighbors(i).iter().map(|&j| (-self.weight * p[j as usize]).ln_1p()).sum();
            let z = log_z.exp();
            zeta[i] = z;
            let direct = 1.0 - z * (1.0 - (1.0 - self.e) * p[i]);
            next[i] = if direct > 0.5 { direct } else { -log_z.exp_m1() + z * (1.0 - self.e) * p[i] };
        }
    }
}

pub fn mf_iterate(graph: &Graph, params: &Params, p0: &[f64], n_gen: usize) -> Result<MeanFieldTrajectory> {
    mf_iterate_with(graph, params, p0, n_gen, MeanFieldVariant::default())
}

pub fn mf_iterate_with(
    graph: &Graph,
    params: &Params,
    p0: &[f64],
    n_gen: usize,
    variant: MeanFieldVariant,
) -> Result<MeanFieldTrajectory> {
    params.validate()?;
    ensure(p0.len() == graph.n(), || format!("p0 has {} entries, graph has {} patches", p0.len(), graph.n()))?;
    ensure(p0.iter().all(|p| (0.0..=1.0).contains(p)), || "p0 entries must lie in [0, 1]".into())?;
    let rec = Recurrence::new(graph, params, variant);
    let n = graph.n();
    let mut p = vec![p0.to_vec()];
    let mut zeta = vec![vec![1.0; n]];
    for t in 0..n_gen {
        let mut z = vec![0.0; n];
        let mut next = vec![0.0; n];
        rec.step(&p[t], &mut z, &mut next);
        p.push(next);
        zeta.push(z);
    }
    Ok(MeanFieldTrajectory { p, zeta })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `e / c > λ_{A,1}`.
    Subcritical,
    Critical,
    /// `e / c < λ_{A,1}`.
    Supercritical,
}

pub const CRITICAL_BAND: f64 = 1e-9;
pub const DEFAULT_FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_MAX_ITERATIONS: usize = 1_000_000;
/// Generations run when checking the decay bound.
pub const DECAY_CHECK_HORIZON: usize = 200;
/// First generation included in the decay check.
pub const DECAY_CHECK_START: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub lambda_a1: f64,
    /// `e / c` (infinite when `c = 0`).
    pub e_over_c: f64,
    /// `e / (c (1 − e))`.
    pub effective_ratio: f64,
    pub regime: Regime,
    pub variant: MeanFieldVariant,
    /// `1 − e + c (1 − e) λ_{A,1}`, present when `e / (c (1 − e)) > λ_{A,1}`.
    pub decay_bound: Option<f64>,
    /// Largest tail ratio `‖p_{t+1}‖ / ‖p_t‖` over `t = 50..200` from
    /// `p0 = 1`; present with the decay bound.
    pub max_tail_ratio: Option<f64>,
    pub decay_bound_holds: Option<bool>,
    /// Non-trivial fixed point reached from `p0 = 1` (supercritical only).
    pub fixed_point: Option<Vec<f64>>,
    pub fixed_point_iterations: Option<usize>,
}

impl ThresholdReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serialisable report")
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        f64::NAN
    }
}

/// Iterates from `p0 = 1` until successive iterates differ by less than
/// `tol` in max norm.
pub fn mf_fixed_point(graph: &Graph, params: &Params, variant: MeanFieldVariant, tol: f64) -> Result<(Vec<f64>, usize)> {
    let rec = Recurrence::new(graph, params, variant);
    let n = graph.n();
    let mut p = vec![1.0; n];
    let mut next = vec![0.0; n];
    let mut zeta = vec![0.0; n];
    for it in 1..=FIXED_POINT_MAX_ITERATIONS {
        rec.step(&p, &mut zeta, &mut next);
        let diff = p.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut p, &mut next);
        if diff < tol {
            return Ok((p, it));
        }
    }
    Err(Error::NoConvergence { what: "mean-field fixed point", iterations: FIXED_POINT_MAX_ITERATIONS })
}

pub fn mf_threshold(graph: &Graph, params: &Params, tol: f64) -> Result<ThresholdReport> {
    mf_threshold_with(graph, params, tol, MeanFieldVariant::default())
}

pub fn mf_threshold_with(graph: &Graph, params: &Params, tol: f64, variant: MeanFieldVariant) -> Result<ThresholdReport> {
    params.validate()?;
    ensure(graph.component_count() == 1, || "the threshold needs a connected graph".into())?;
    let lambda = leading_adjacency_eigenvalue(graph, DEFAULT_EIGEN_TOL)?;
    let (e, c) = (params.e, params.c);
    let e_over_c = ratio(e, c);
    let effective_ratio = ratio(e, c * (1.0 - e));
    let regime = if (e_over_c - lambda).abs() < CRITICAL_BAND {
        Regime::Critical
    } else if e_over_c > lambda {
        Regime::Subcritical
    } else {
        Regime::Supercritical
    };

    let mut report = ThresholdReport {
        lambda_a1: lambda,
        e_over_c,
        effective_ratio,
        regime,
        variant,
        decay_bound: None,
        max_tail_ratio: None,
        decay_bound_holds: None,
        fixed_point: None,
        fixed_point_iterations: None,
    };

    if effective_ratio > lambda {
        let bound = 1.0 - e + c * (1.0 - e) * lambda;
        let traj = mf_iterate_with(graph, params, &vec![1.0; graph.n()], DECAY_CHECK_HORIZON, variant)?;
        let worst = max_tail_ratio(&traj, DECAY_CHECK_START);
        report.decay_bound = Some(bound);
        report.max_tail_ratio = Some(worst);
        report.decay_bound_holds = Some(!(worst > bound + 1e-9));
    }

    if regime == Regime::Supercritical {
        let (fp, it) = mf_fixed_point(graph, params, variant, tol)?;
        // near the threshold the Survivor variant can collapse onto the
        // trivial fixed point even though e / c < λ
        if fp.iter().all(|&v| v > 1e-9) {
            report.fixed_point = Some(fp);
        }
        report.fixed_point_iterations = Some(it);
    }
    Ok(report)
}

/// Largest tail ratio from generation `start` on, ignoring generations whose
/// norm has underflowed towards the subnormal range.
pub fn max_tail_ratio(traj: &MeanFieldTrajectory, start: usize) -> f64 {
    traj.tail_ratios()
        .iter()
        .enumerate()
        .skip(start)
        .filter(|&(t, _)| traj.norm_at(t) > 1e-250)
        .map(|(_, &r)| r)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(e: f64, c: f64) -> Params {
        Params::new(e, c).unwrap()
    }

    #[test]
    fn no_colonisation_is_geometric() {
        let g = Graph::star(5);
        let p0 = [1.0, 0.5, 0.2, 0.0, 0.9];
        for variant in [MeanFieldVariant::Survivor, MeanFieldVariant::Literal] {
            let tr = mf_iterate_with(&g, &params(0.3, 0.0), &p0, 20, variant).unwrap();
            for (t, row) in tr.p.iter().enumerate() {
                for (i, &p) in row.iter().enumerate() {
                    assert!((p - p0[i] * 0.7f64.powi(t as i32)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn full_occupancy_is_fixed_without_extinction() {
        let tr = mf_iterate(&Graph::cycle(10), &params(0.0, 0.1), &[1.0; 10], 10).unwrap();
        assert!(tr.p.iter().flatten().all(|&p| p == 1.0));
    }

    #[test]
    fn subcritical_cycle_dies_out() {
        let tr = mf_iterate(&Graph::cycle(10), &params(0.3, 0.1), &[1.0; 10], 200).unwrap();
        assert!(tr.max_at(200) < 1e-6);
        let tr = mf_iterate_with(&Graph::cycle(10), &params(0.3, 0.1), &[1.0; 10], 200, MeanFieldVariant::Literal).unwrap();
        assert!(tr.max_at(200) < 1e-6);
    }

    #[test]
    fn zeta_matches_product() {
        let g = Graph::path(3);
        let tr = mf_iterate_with(&g, &params(0.2, 0.4), &[0.5, 0.25, 1.0], 1, MeanFieldVariant::Literal).unwrap();
        assert_eq!(tr.zeta[0], vec![1.0; 3]);
        assert!((tr.zeta[1][1] - (1.0 - 0.4 * 0.5) * (1.0 - 0.4)).abs() < 1e-15);
        let expect = 1.0 - tr.zeta[1][1] * 0.25 * 0.2 - tr.zeta[1][1] * 0.75;
        assert!((tr.p[1][1] - expect).abs() < 1e-15);
    }

    #[test]
    fn complete_graph_fixed_point_is_symmetric() {
        let r = mf_threshold(&Graph::complete(10), &params(0.1, 0.1), DEFAULT_FIXED_POINT_TOL).unwrap();
        assert_eq!(r.regime, Regime::Supercritical);
        let fp = r.fixed_point.unwrap();
        assert!(fp.iter().all(|&v| (v - fp[0]).abs() < 1e-12 && v > 0.0 && v <= 1.0));
    }

    #[test]
    fn certain_extinction_is_subcritical() {
        let r = mf_threshold(&Graph::cycle(6), &params(1.0, 0.3), DEFAULT_FIXED_POINT_TOL).unwrap();
        assert_eq!(r.regime, Regime::Subcritical);
        assert!(r.decay_bound.is_some());
        let r = mf_threshold(&Graph::cycle(6), &params(0.2, 0.0), DEFAULT_FIXED_POINT_TOL).unwrap();
        assert_eq!(r.regime, Regime::Subcritical);
        assert_eq!(r.decay_bound_holds, Some(true));
    }

    #[test]
    fn norms_survive_tiny_probabilities() {
        // 0.1^180 is far below the point where squaring underflows
        let traj = mf_iterate(&Graph::cycle(5), &params(0.9, 0.0), &[1.0; 5], 180).unwrap();
        let expected = 0.1f64.powi(180) * 5f64.sqrt();
        assert!((traj.norm_at(180) / expected - 1.0).abs() < 1e-9);
        assert!(traj.tail_ratios().iter().all(|r| (r - 0.1).abs() < 1e-12));
    }

    #[test]
    fn decay_bound_on_star() {
        // λ = 3 on a 10-star; e/(c(1−e)) = 0.4/(0.1·0.6) ≈ 6.7
        let r = mf_threshold(&Graph::star(10), &params(0.4, 0.1), DEFAULT_FIXED_POINT_TOL).unwrap();
        assert_eq!(r.decay_bound_holds, Some(true));
        assert!(r.max_tail_ratio.unwrap() <= r.decay_bound.unwrap() + 1e-9);
        assert!(r.to_json().contains("\"regime\": \"subcritical\""));
    }

    #[test]
    fn csv_layout() {
        let csv = mf_iterate(&Graph::path(2), &params(0.5, 0.5), &[1.0, 0.0], 1).unwrap().to_csv();
        assert!(csv.starts_with("t,i,p\n0,0,1\n0,1,0\n1,0,"));
    }
}

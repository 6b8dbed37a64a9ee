use std::path::{Path, PathBuf};

use secnet::dynamics::{estimate_crude, simulate};
use secnet::exact::{
    build_transition, contour_extinction, extinction_heatmap, finite_horizon, finite_horizon_matrix_free,
    mean_extinction_time, qsd, HeatmapOptions, DEFAULT_EXACT_CAP, DEFAULT_QSD_TOL, MATRIX_FREE_CAP,
};
use secnet::experiment::{
    comparisons_to_csv, preset, rows_to_csv, run_factorial, scenario_compare, variance_decomposition, Design, Grouping,
    Response, PRESET_NAMES,
};
use secnet::meanfield::{mf_iterate_with, mf_threshold_with, MeanFieldVariant};
use secnet::netgen::{edges_for_density, graph_metrics, Topology, TopologySpec};
use secnet::rareevent::{
    geometric_thresholds, ips_persistence, is_extinction, split_extinction, IpsConfig, SplittingConfig, TwistSchedule,
};
use secnet::{ColonisationSource, Exec, Graph, Occupancy, Params, Seed};
use serde_json::json;

use crate::args::*;
use crate::error::CliError;

/// Files produced by a command, written under `--out` by the caller.
pub type Outputs = Vec<(String, String)>;

pub struct Ctx {
    pub seed: Seed,
    pub exec: Exec,
    pub verbose: bool,
}

impl Ctx {
    pub fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("secnet: {}", msg.as_ref());
        }
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Input { path: path.to_owned(), source: source.into() })
}

/// Loads the graph and pins the path (made absolute, for replays from
/// elsewhere) and its fingerprint into the arguments.
fn load_graph(path: &mut PathBuf, fingerprint: &mut Option<String>) -> Result<Graph, CliError> {
    let text = read_input(path)?;
    if let Ok(abs) = std::fs::canonicalize(&*path) {
        *path = abs;
    }
    let path: &Path = path;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        Graph::from_json(&text)
    } else {
        Graph::from_edge_list(&text, None)
    };
    let graph = parsed.map_err(|source| CliError::Input { path: path.to_owned(), source })?;
    let fp = graph.fingerprint();
    match fingerprint {
        Some(expected) if *expected != fp => {
            return Err(CliError::Invalid(format!(
                "{} has changed since the manifest was written (fingerprint {fp}, expected {expected})",
                path.display()
            )))
        }
        _ => *fingerprint = Some(fp),
    }
    Ok(graph)
}

fn json_pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serialisable output") + "\n"
}

struct Model {
    graph: Graph,
    params: Params,
    z0: Occupancy,
}

fn model(m: &mut ModelArgs) -> Result<Model, CliError> {
    let graph = load_graph(&mut m.graph, &mut m.graph_fingerprint)?;
    let mut params = Params::new(m.e, m.c)?;
    if m.pre_extinction {
        params = params.with_source(ColonisationSource::PreExtinction);
    }
    let z0 = match &m.start {
        None => Occupancy::full(graph.n()),
        Some(p) => {
            if let Some(&bad) = p.iter().find(|&&i| i >= graph.n()) {
                return Err(CliError::Invalid(format!("start patch {bad} outside a {}-patch graph", graph.n())));
            }
            Occupancy::from_patches(graph.n(), p.iter().copied())
        }
    };
    Ok(Model { graph, params, z0 })
}

pub fn generate(a: &GenerateArgs, ctx: &Ctx) -> Result<Outputs, CliError> {
    let n_edges = match (a.edges, a.density) {
        (Some(m), _) => m,
        (None, Some(d)) if (0.0..=1.0).contains(&d) => edges_for_density(a.n, d),
        (None, Some(d)) => return Err(CliError::Invalid(format!("density {d} outside [0, 1]"))),
        (None, None) => unreachable!("clap requires --edges or --density"),
    };
    let topology = match a.kind {
        Kind::Er => Topology::Er,
        Kind::Com => Topology::Com { n_communities: a.communities, intra_inter_ratio: a.ratio },
        Kind::Lat => Topology::Lat,
        Kind::Pa => Topology::Pa { power: a.power },
    };
    let graph = TopologySpec::new(topology, a.n, n_edges).generate(&mut ctx.seed.rng())?;
    ctx.log(format!("drew {} with {} edges", graph.fingerprint(), graph.n_edges()));
    let file = match a.format {
        GraphFormat::Json => ("graph.json".into(), graph.to_json() + "\n"),
        GraphFormat::Edgelist => ("graph.txt".into(), graph.to_edge_list()),
    };
    Ok(vec![file, ("metrics.json".into(), json_pretty(&graph_metrics(&graph)))])
}

pub fn exact(a: &mut ExactArgs, _ctx: &Ctx) -> Result<Outputs, CliError> {
    let Model { graph, params, z0 } = model(&mut a.model)?;
    let n = graph.n();
    let mask = z0.to_mask().ok_or_else(|| CliError::Invalid(format!("{n} patches exceed {MATRIX_FREE_CAP}")))?;
    let mut out = Outputs::new();
    let mut summary = json!({ "n": n, "e": params.e, "c": params.c, "gens": a.model.gens });
    if n <= DEFAULT_EXACT_CAP {
        let tm = build_transition(&graph, &params)?;
        let table = finite_horizon(&tm, mask, a.model.gens)?;
        summary["p_persist"] = json!(table.last().p_persist);
        summary["mean_occ"] = json!(table.last().mean_occ);
        out.push(("horizon.csv".into(), table.to_csv()));
        if a.qsd {
            let q = qsd(&tm, DEFAULT_QSD_TOL)?;
            summary["lambda_r1"] = json!(q.lambda_r1);
            summary["lambda_r2_modulus"] = json!(q.lambda_r2_modulus);
            summary["qsd_residual"] = json!(q.residual);
            if params.e > 0.0 {
                summary["mean_extinction_time"] = json!(mean_extinction_time(&tm, mask)?);
            }
            out.push(("qsd.csv".into(), q.to_csv()));
        }
    } else {
        if a.qsd {
            return Err(CliError::Invalid(format!(
                "quasi-stationary analysis needs at most {DEFAULT_EXACT_CAP} patches, got {n}"
            )));
        }
        let table = finite_horizon_matrix_free(&graph, &params, mask, a.model.gens)?;
        summary["p_persist"] = json!(table.last().p_persist);
        summary["mean_occ"] = json!(table.last().mean_occ);
        out.push(("horizon.csv".into(), table.to_csv()));
    }
    out.push(("summary.json".into(), json_pretty(&summary)));
    Ok(out)
}

pub fn simulate_cmd(a: &mut SimulateArgs, ctx: &Ctx) -> Result<Outputs, CliError> {
    let Model { graph, params, z0 } = model(&mut a.model)?;
    let report = estimate_crude(&graph, &params, &z0, a.model.gens, a.reps, ctx.seed.child(0), &ctx.exec)?;
    let h = report.at_horizon();
    let summary = json!({
        "persistence": h.persistence,
        "occupancy": h.occupancy,
        "conditional_occupancy": h.conditional_occupancy,
    });
    let mut out = vec![("estimate.csv".into(), report.to_csv()), ("summary.json".into(), json_pretty(&summary))];
    if a.trajectory {
        let traj = simulate(&graph, &params, &z0, a.model.gens, &mut ctx.seed.child(1).rng())?;
        out.push(("trajectory.csv".into(), traj.to_csv()));
    }
    Ok(out)
}

pub fn rare(a: &mut RareArgs, ctx: &Ctx) -> Result<Outputs, CliError> {
    let Model { graph, params, z0 } = model(&mut a.model)?;
    let gens = a.model.gens;
    let est = match a.method {
        RareMethod::Ips => {
            let cfg = IpsConfig { n_particles: a.particles, n_batches: a.batches, literal_product: a.literal_product };
            ips_persistence(&graph, &params, &z0, gens, &cfg, ctx.seed, &ctx.exec)?
        }
        RareMethod::Is => {
            let schedule = match a.twist_end {
                Some(end) => TwistSchedule::linear(params.e, end, gens),
                None => TwistSchedule::linear_default(params.e, gens),
            };
            is_extinction(&graph, &params, &z0, gens, &schedule, a.trajectories, ctx.seed, &ctx.exec)?
        }
        RareMethod::Split => {
            let thresholds = a.thresholds.clone().unwrap_or_else(|| geometric_thresholds((graph.n() / 2).max(1), 4));
            let cfg = SplittingConfig {
                replications: a.replications,
                work_cap: a.work_cap,
                ..SplittingConfig::new(thresholds, a.successes)
            };
            split_extinction(&graph, &params, &z0, gens, &cfg, ctx.seed, &ctx.exec)?
        }
    };
    ctx.log(format!("{} estimate {:e} ± {:e}", est.method, est.value, est.std_error));
    let diag = match &est.diagnostics {
        secnet::estimate::Diagnostics::Ips(d) => Some(d.to_csv()),
        secnet::estimate::Diagnostics::Is(d) => Some(d.to_csv()),
        secnet::estimate::Diagnostics::Splitting(d) => Some(d.to_csv()),
        secnet::estimate::Diagnostics::None => None,
    };
    let mut out = vec![("estimate.json".into(), json_pretty(&est))];
    out.extend(diag.map(|d| ("diagnostics.csv".into(), d)));
    Ok(out)
}

pub fn meanfield(a: &mut MeanfieldArgs, _ctx: &Ctx) -> Result<Outputs, CliError> {
    let Model { graph, params, z0 } = model(&mut a.model)?;
    let variant = match a.variant {
        Variant::Survivor => MeanFieldVariant::Survivor,
        Variant::Literal => MeanFieldVariant::Literal,
    };
    let p0: Vec<f64> = (0..graph.n()).map(|i| if z0.contains(i) { 1.0 } else { 0.0 }).collect();
    let traj = mf_iterate_with(&graph, &params, &p0, a.model.gens, variant)?;
    let report = mf_threshold_with(&graph, &params, a.tol, variant)?;
    Ok(vec![("meanfield.csv".into(), traj.to_csv()), ("threshold.json".into(), report.to_json() + "\n")])
}

fn resolve_design(a: &ExperimentArgs, seed: Seed) -> Result<Design, CliError> {
    if let Some(d) = &a.resolved {
        return Ok(d.clone());
    }
    let mut d = match (&a.preset, &a.design) {
        (Some(name), _) => preset(name).ok_or_else(|| {
            CliError::Invalid(format!("unknown preset `{name}`; known: {}", PRESET_NAMES.join(", ")))
        })?,
        (None, Some(path)) => {
            let text = read_input(path)?;
            Design::from_json(&text).map_err(|source| CliError::Input { path: path.clone(), source })?
        }
        (None, None) => unreachable!("clap requires --preset or --design"),
    };
    d.seed = seed;
    if let Some(r) = a.reps {
        d.estimator.n_reps = r;
    }
    if let Some(r) = a.replicates {
        d.replicates = r;
    }
    d.validate()?;
    Ok(d)
}

pub fn experiment(a: &mut ExperimentArgs, ctx: &Ctx) -> Result<Outputs, CliError> {
    let design = resolve_design(a, ctx.seed)?;
    ctx.log(format!("running {} rows of `{}`", design.n_rows(), design.name));
    let rows = run_factorial(&design, &ctx.exec)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        ctx.log(format!("{failed} rows failed; see the error column"));
    }
    let mut out = vec![
        ("results.csv".into(), rows_to_csv(&rows)),
        ("summary.csv".into(), comparisons_to_csv(&scenario_compare(&rows, Grouping::Cell))),
        ("design.json".into(), design.to_json() + "\n"),
    ];
    if a.anova {
        for (resp, file) in [(Response::LogitPersistence, "anova_persistence.csv"), (Response::Occupancy, "anova_occupancy.csv")] {
            out.push((file.into(), variance_decomposition(&rows, resp, a.anova_order)?.to_csv()));
        }
    }
    a.resolved = Some(design);
    Ok(out)
}

pub fn heatmap(a: &mut HeatmapArgs, ctx: &Ctx) -> Result<Outputs, CliError> {
    let graph = load_graph(&mut a.graph, &mut a.graph_fingerprint)?;
    let z0 = Occupancy::full(graph.n());
    let opts = HeatmapOptions { exact_cap: DEFAULT_EXACT_CAP, n_reps: a.reps, seed: ctx.seed };
    let map = extinction_heatmap(&graph, &a.e_grid, &a.c_grid, a.gens, &z0, &opts, &ctx.exec)?;
    let mut out = vec![("heatmap.csv".into(), map.to_csv()), ("frontier.csv".into(), map.contour_csv())];
    if let Some(es) = &a.contour {
        let pts = contour_extinction(&graph, es, a.gens, &z0, &opts, &ctx.exec)?;
        let mut w = secnet::csv::CsvWriter::new(&["e", "c", "p_extinct"]);
        for (e, c, p) in pts {
            w.row([e, c, p]);
        }
        out.push(("contour.csv".into(), w.finish()));
    }
    Ok(out)
}

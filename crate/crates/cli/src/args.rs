use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use secnet::experiment::Design;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "secnet", version, about = "Extinction–colonisation dynamics on networks")]
pub struct Cli {
    /// Master seed; drawn from OS entropy (and recorded) when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; 0 uses every core. Outputs do not depend on it.
    #[arg(long, global = true, env = "SECNET_WORKERS")]
    pub workers: Option<usize>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Progress messages on stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

/// Everything except `replay` round-trips through the manifest.
#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Draw a network with an exact edge count.
    Generate(GenerateArgs),
    /// Exact finite-horizon analysis on a small graph.
    Exact(ExactArgs),
    /// Crude Monte Carlo estimates over the horizon.
    Simulate(SimulateArgs),
    /// Rare-event estimation (IPS, importance sampling or splitting).
    Rare(RareArgs),
    /// Mean-field iteration and threshold report.
    Meanfield(MeanfieldArgs),
    /// Factorial design over topology, density, e and c.
    Experiment(ExperimentArgs),
    /// Extinction probability over an (e, c) grid.
    Heatmap(HeatmapArgs),
    /// Rerun the command recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Exact(_) => "exact",
            Command::Simulate(_) => "simulate",
            Command::Rare(_) => "rare",
            Command::Meanfield(_) => "meanfield",
            Command::Experiment(_) => "experiment",
            Command::Heatmap(_) => "heatmap",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Er,
    Com,
    Lat,
    Pa,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphFormat {
    Json,
    Edgelist,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub n: usize,
    /// Exact edge count.
    #[arg(long, conflicts_with = "density", required_unless_present = "density")]
    pub edges: Option<usize>,
    /// Fraction of all pairs, rounded half up to an edge count.
    #[arg(long)]
    pub density: Option<f64>,
    /// Community count (COM).
    #[arg(long, default_value_t = 2)]
    pub communities: usize,
    /// Intra- to inter-community pair weight (COM).
    #[arg(long, default_value_t = 100.0)]
    pub ratio: f64,
    /// Attachment power (PA).
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    #[arg(long, value_enum, default_value_t = GraphFormat::Json)]
    pub format: GraphFormat,
}

/// Graph input shared by the analysis commands.
#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// Graph file: `.json`, or an edge list otherwise.
    #[arg(long)]
    pub graph: PathBuf,
    /// Extinction probability per occupied patch and generation.
    #[arg(long)]
    pub e: f64,
    /// Colonisation probability per occupied neighbour and generation.
    #[arg(long)]
    pub c: f64,
    /// Horizon in generations.
    #[arg(long, default_value_t = 100)]
    pub gens: usize,
    /// Initially occupied patches, comma-separated; all when absent.
    #[arg(long, value_delimiter = ',')]
    pub start: Option<Vec<usize>>,
    /// Colonisers counted before the extinction phase instead of after.
    #[arg(long)]
    pub pre_extinction: bool,
    /// Fingerprint of the graph, filled in when the manifest is written and
    /// checked on replay.
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_fingerprint: Option<String>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ExactArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Also compute the quasi-stationary distribution and mean extinction
    /// time.
    #[arg(long)]
    pub qsd: bool,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    /// Also write one sample trajectory.
    #[arg(long)]
    pub trajectory: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RareMethod {
    Ips,
    Is,
    Split,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct RareArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub method: RareMethod,
    /// IPS: particles per batch.
    #[arg(long, default_value_t = 1000)]
    pub particles: usize,
    /// IPS: independent batches.
    #[arg(long, default_value_t = 20)]
    pub batches: usize,
    /// IPS: report the product of death fractions instead.
    #[arg(long)]
    pub literal_product: bool,
    /// IS: trajectories.
    #[arg(long, default_value_t = 10_000)]
    pub trajectories: usize,
    /// IS: twisted extinction rate at the last generation; the schedule
    /// ramps linearly from e. Defaults to min(3e, 0.9).
    #[arg(long)]
    pub twist_end: Option<f64>,
    /// Splitting: occupancy thresholds; geometric from n/2 when absent.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<usize>>,
    /// Splitting: successes per level.
    #[arg(long, default_value_t = 100)]
    pub successes: usize,
    /// Splitting: independent replications.
    #[arg(long, default_value_t = 20)]
    pub replications: usize,
    /// Splitting: attempt cap per level.
    #[arg(long, default_value_t = 1_000_000)]
    pub work_cap: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Survivor,
    Literal,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct MeanfieldArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Variant::Survivor)]
    pub variant: Variant,
    /// Fixed-point tolerance.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ExperimentArgs {
    /// Named design: table1-n10, table1-n100, fig3, table3, table4,
    /// scenario-1a .. scenario-5b.
    #[arg(long, conflicts_with = "design", required_unless_present = "design")]
    pub preset: Option<String>,
    /// Design JSON file.
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// Override the Monte Carlo replicates per estimate.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Override the replicate networks per cell.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Also write the variance decomposition of both responses.
    #[arg(long)]
    pub anova: bool,
    /// Interaction order of the decomposition.
    #[arg(long, default_value_t = 2)]
    pub anova_order: usize,
    /// The design as run, seed included; replay uses it verbatim.
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved: Option<Design>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Extinction rates, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub e_grid: Vec<f64>,
    /// Colonisation rates, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub c_grid: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub gens: usize,
    /// Replicates per grid point for graphs too large for exact analysis.
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    /// Also evaluate along e / c = λ_{A,1} at these e values.
    #[arg(long, value_delimiter = ',')]
    pub contour: Option<Vec<f64>>,
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_fingerprint: Option<String>,
}

#[derive(Clone, Debug, Args)]
pub struct ReplayArgs {
    /// manifest.json of an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
}

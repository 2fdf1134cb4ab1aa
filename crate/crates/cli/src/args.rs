use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfcpd::evaluation::{Aggregation, Matching};
use mfcpd::two_sample::{DEFAULT_BANDWIDTH, DEFAULT_PROJECTIONS};
use mfcpd::TestKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "mfcpd", version, about = "Matched-filtered sliding-window change point detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// A complete, replayable run record.
#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Detect change points in a CSV time series.
    Detect(DetectArgs),
    /// Generate a simulated sequence and its labels.
    Simulate(SimulateArgs),
    /// Export matched-filter taps and, optionally, an empirical response curve.
    FilterShape(FilterShapeArgs),
    /// Score detections against labels, or run an end-to-end experiment sweep.
    Evaluate(EvaluateArgs),
    /// Re-run a saved run record.
    #[serde(skip)]
    Replay {
        record: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestName {
    Ks,
    W1dt,
    Wqt,
    Swqt,
    Mmd2,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TestArgs {
    #[arg(long, value_enum, default_value = "wqt")]
    pub test: TestName,
    /// Number of random directions for the sliced WQT.
    #[arg(long, default_value_t = DEFAULT_PROJECTIONS)]
    pub projections: usize,
    /// Gaussian kernel bandwidth for MMD².
    #[arg(long, default_value_t = DEFAULT_BANDWIDTH)]
    pub bandwidth: f64,
}

impl TestArgs {
    pub fn kind(&self, seed: u64) -> CliResult<TestKind> {
        Ok(match self.test {
            TestName::Ks => TestKind::Ks,
            TestName::W1dt => TestKind::W1dt,
            TestName::Wqt => TestKind::Wqt,
            TestName::Swqt => TestKind::swqt(self.projections, seed)?,
            TestName::Mmd2 => TestKind::mmd2(self.bandwidth)?,
        })
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DetectArgs {
    /// Headerless CSV, one row per time step.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub test: TestArgs,
    /// Window size n.
    #[arg(long)]
    pub window: usize,
    /// Detection threshold; every peak is reported when absent.
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// Apply the matched filter (the default).
    #[arg(long, conflicts_with = "unfiltered")]
    pub filtered: bool,
    /// Skip the filter and dedupe peaks within --delta instead.
    #[arg(long)]
    pub unfiltered: bool,
    /// Dedupe distance for unfiltered detection; defaults to the window size.
    #[arg(long)]
    pub delta: Option<usize>,
    /// Replaces the Q-Q null offset removed before filtering.
    #[arg(long, allow_negative_numbers = true)]
    pub bias: Option<f64>,
    /// Seed for the sliced WQT projections.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON result path (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write `t,raw,processed` rows here.
    #[arg(long)]
    pub series_output: Option<PathBuf>,
    /// Save this invocation as a replayable record.
    #[arg(long)]
    #[serde(skip)]
    pub save_config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    SingleCp1d,
    SingleCp2d,
    ScaleDoubling,
    Alternating,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub generator: Generator,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cube every sample (scale-doubling only).
    #[arg(long)]
    pub cubic: bool,
    /// Segment length (alternating only).
    #[arg(long, default_value_t = 400)]
    pub segment_len: usize,
    /// Number of segments (alternating only).
    #[arg(long, default_value_t = 4)]
    pub segments: usize,
    /// Data CSV path.
    #[arg(long)]
    pub output: PathBuf,
    /// Labels path; defaults to the data path with extension `labels`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub save_config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FilterShapeArgs {
    #[command(flatten)]
    pub test: TestArgs,
    #[arg(long)]
    pub window: usize,
    /// Taps CSV path (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also simulate the mixture response of N(0,1) against N(shift,1).
    #[arg(long)]
    pub empirical: bool,
    /// Where to write the empirical curve; required with --empirical.
    #[arg(long, requires = "empirical")]
    pub curve_output: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Spacing of the mixture-weight grid.
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
    pub shift: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub save_config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Single change, scalar data: KS, W1-DT, WQT, MMD².
    Table2,
    /// Single change, bivariate data: SWQT, MMD².
    Table3,
    /// Four scale-doubling segments, F-WQT against F-W1DT.
    ScaleDoubling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationArg {
    Dataset,
    PerSequence,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Dataset => Aggregation::Dataset,
            AggregationArg::PerSequence => Aggregation::PerSequence,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    /// Detections (a `detect` JSON result, or `t[,score]` lines). Repeat to
    /// pool several sequences; pairs with --labels in order.
    #[arg(long)]
    pub predictions: Vec<PathBuf>,
    #[arg(long)]
    pub labels: Vec<PathBuf>,
    /// Match tolerance in samples; defaults to the window size in experiments.
    #[arg(long)]
    pub epsilon: Option<usize>,
    /// Pair each truth with at most one detection.
    #[arg(long)]
    pub one_to_one: bool,
    #[arg(long, value_enum, default_value = "dataset")]
    pub aggregation: AggregationArg,
    /// Run an end-to-end simulated sweep instead of reading predictions.
    #[arg(long, value_enum, conflicts_with_all = ["predictions", "labels"])]
    pub experiment: Option<Experiment>,
    /// Window sizes for experiments.
    #[arg(long, value_delimiter = ',')]
    pub window: Vec<usize>,
    /// Sequences per experiment (40 for the tables, 10 for scale doubling).
    #[arg(long)]
    pub sequences: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_PROJECTIONS)]
    pub projections: usize,
    #[arg(long, default_value_t = DEFAULT_BANDWIDTH)]
    pub bandwidth: f64,
    /// JSON summary path (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// PR curve CSV path (prediction mode).
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub save_config: Option<PathBuf>,
}

impl EvaluateArgs {
    pub fn matching(&self) -> Matching {
        if self.one_to_one {
            Matching::OneToOne
        } else {
            Matching::Literal
        }
    }
}

impl Command {
    pub fn save_path(&self) -> Option<&PathBuf> {
        match self {
            Command::Detect(a) => a.save_config.as_ref(),
            Command::Simulate(a) => a.save_config.as_ref(),
            Command::FilterShape(a) => a.save_config.as_ref(),
            Command::Evaluate(a) => a.save_config.as_ref(),
            Command::Replay { .. } => None,
        }
    }
}

pub fn require(cond: bool, msg: &str) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Usage(msg.to_string()))
    }
}

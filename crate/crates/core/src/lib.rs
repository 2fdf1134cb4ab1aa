//! Sliding-window two-sample change point detection with matched filtering.
//!
//! A statistic series compares the `n` samples before and after each time
//! step; filtering it with the statistic's expected signature sharpens peaks
//! at change points before thresholding.

pub mod asymptote;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod experiments;
pub mod matched_filter;
pub mod order_stats;
pub mod series;
pub mod simulation;
pub mod two_sample;

pub use asymptote::asymptote;
pub use detector::{
    dedupe_peaks, detect_peaks, run_pipeline, statistic_series, ChangePoint, ChangePointSet, DetectionConfig,
    PipelineResult, StatisticSeries,
};
pub use error::{Error, Result};
pub use evaluation::{
    confusion, confusion_with, pr_metrics, sweep, Aggregation, ConfusionCounts, EvalConfig, Matching, PrCurve,
    PrPoint, SequenceCandidates, SweepConfig, SweepReport,
};
pub use matched_filter::{apply_filter, build_filter, MatchedFilter, BROWNIAN_BRIDGE_SQ_MEAN};
pub use order_stats::{qq_knots, SampleSet};
pub use series::TimeSeries;
pub use simulation::{mixture_response, DistributionSpec, MixtureResponseCurve};
pub use two_sample::{evaluate, ProjectionSet, TestKind, WindowPair};

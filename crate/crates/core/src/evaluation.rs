//! Tolerance-based confusion counting and threshold sweeps.
//!
//! A detection at `t` counts as a true positive when some true change point
//! lies within `epsilon` samples; a true change point with no detection
//! within `epsilon` is a false negative. Under the default literal rule two
//! detections near one truth are both true positives. [`Matching::OneToOne`]
//! instead pairs each truth with at most one detection.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::detector::{dedupe_peaks, ChangePointSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Matching {
    #[default]
    Literal,
    OneToOne,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Pool confusion counts over all sequences at each threshold.
    #[default]
    Dataset,
    /// Sweep each sequence separately and average its scores.
    PerSequence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub epsilon: usize,
    #[serde(default)]
    pub matching: Matching,
}

impl EvalConfig {
    pub fn new(epsilon: usize) -> Self {
        Self {
            epsilon,
            matching: Matching::Literal,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl ConfusionCounts {
    pub fn metrics(&self) -> (f64, f64, f64) {
        pr_metrics(self)
    }
}

fn near(a: usize, b: usize, epsilon: usize) -> bool {
    a.abs_diff(b) <= epsilon
}

/// Confusion counts under the literal rule.
pub fn confusion(pred: &ChangePointSet, truth: &[usize], epsilon: usize) -> ConfusionCounts {
    confusion_with(pred, truth, &EvalConfig::new(epsilon))
}

pub fn confusion_with(pred: &ChangePointSet, truth: &[usize], cfg: &EvalConfig) -> ConfusionCounts {
    let eps = cfg.epsilon;
    match cfg.matching {
        Matching::Literal => {
            let tp = pred
                .points()
                .iter()
                .filter(|p| truth.iter().any(|&t| near(p.t, t, eps)))
                .count();
            let fn_ = truth
                .iter()
                .filter(|&&t| !pred.points().iter().any(|p| near(p.t, t, eps)))
                .count();
            ConfusionCounts {
                tp,
                fp: pred.len() - tp,
                fn_,
            }
        }
        Matching::OneToOne => {
            // Highest-scoring detections claim the nearest free truth first.
            let mut order: Vec<_> = pred.points().iter().collect();
            order.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.t.cmp(&b.t)));
            let mut used = vec![false; truth.len()];
            let mut tp = 0;
            for p in order {
                let best = truth
                    .iter()
                    .enumerate()
                    .filter(|&(i, &t)| !used[i] && near(p.t, t, eps))
                    .min_by_key(|&(i, &t)| (p.t.abs_diff(t), i));
                if let Some((i, _)) = best {
                    used[i] = true;
                    tp += 1;
                }
            }
            ConfusionCounts {
                tp,
                fp: pred.len() - tp,
                fn_: truth.len() - tp,
            }
        }
    }
}

/// `(precision, recall, f1)`. Precision is 1 with no detections, recall is
/// 1 with no truths, and F1 is 0 when both vanish.
pub fn pr_metrics(c: &ConfusionCounts) -> (f64, f64, f64) {
    let precision = if c.tp + c.fp == 0 {
        1.0
    } else {
        c.tp as f64 / (c.tp + c.fp) as f64
    };
    let recall = if c.tp + c.fn_ == 0 {
        1.0
    } else {
        c.tp as f64 / (c.tp + c.fn_) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    /// Detections with score `>= threshold` are kept.
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
}

impl PrPoint {
    fn new(threshold: f64, counts: ConfusionCounts) -> Self {
        let (precision, recall, f1) = pr_metrics(&counts);
        Self {
            threshold,
            precision,
            recall,
            f1,
            counts,
        }
    }
}

/// Operating points ordered by decreasing threshold, starting from a
/// sentinel above every score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub au_prc: f64,
    pub best_f1: f64,
}

impl PrCurve {
    pub fn from_points(points: Vec<PrPoint>) -> Self {
        let au_prc = au_prc(&points);
        let best_f1 = points.iter().map(|p| p.f1).fold(0.0, f64::max);
        Self {
            points,
            au_prc,
            best_f1,
        }
    }

    /// The first point reaching `best_f1`.
    pub fn best_point(&self) -> Option<&PrPoint> {
        self.points.iter().find(|p| p.f1 == self.best_f1)
    }

    /// Writes `threshold,precision,recall,f1,tp,fp,fn` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "threshold,precision,recall,f1,tp,fp,fn")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                p.threshold, p.precision, p.recall, p.f1, p.counts.tp, p.counts.fp, p.counts.fn_
            )?;
        }
        Ok(())
    }

    pub fn summary(&self) -> EvalSummary {
        let best = self.best_point().copied();
        EvalSummary {
            au_prc: self.au_prc,
            best_f1: self.best_f1,
            best_threshold: best.map(|p| p.threshold),
            best_counts: best.map(|p| p.counts),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub au_prc: f64,
    pub best_f1: f64,
    pub best_threshold: Option<f64>,
    pub best_counts: Option<ConfusionCounts>,
}

/// Trapezoidal area under precision over recall.
///
/// Points are taken in decreasing-threshold order and stably sorted by
/// recall; the curve is anchored at recall 0 with the precision of the
/// highest-threshold point.
pub fn au_prc(points: &[PrPoint]) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    let mut path: Vec<(f64, f64)> = points.iter().map(|p| (p.recall, p.precision)).collect();
    path.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut prev = (0.0, first.precision);
    let mut area = 0.0;
    for (r, p) in path {
        area += (r - prev.0) * 0.5 * (p + prev.1);
        prev = (r, p);
    }
    area
}

/// Candidate peaks of one sequence and its true change points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceCandidates {
    pub candidates: ChangePointSet,
    pub truth: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub eval: EvalConfig,
    /// Unfiltered mode: dedupe distance applied after each threshold.
    pub dedupe: Option<usize>,
    pub aggregation: Aggregation,
}

impl SweepConfig {
    pub fn filtered(epsilon: usize) -> Self {
        Self {
            eval: EvalConfig::new(epsilon),
            dedupe: None,
            aggregation: Aggregation::Dataset,
        }
    }

    pub fn unfiltered(epsilon: usize, delta: usize) -> Self {
        Self {
            dedupe: Some(delta),
            ..Self::filtered(epsilon)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// Dataset-level curve (pooled counts), always computed.
    pub curve: PrCurve,
    pub aggregation: Aggregation,
    /// Reported AU-PRC under the configured aggregation.
    pub au_prc: f64,
    pub best_f1: f64,
    /// Per-sequence curves when averaging per sequence.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub per_sequence: Vec<PrCurve>,
}

/// Detections surviving threshold `level` (and dedupe, if configured).
fn detections_at(seq: &SequenceCandidates, level: f64, dedupe: Option<usize>) -> ChangePointSet {
    let kept = seq.candidates.at_least(level);
    match dedupe {
        Some(delta) => dedupe_peaks(&kept, delta),
        None => kept,
    }
}

/// Swept thresholds: every distinct score, descending, after a `+inf` sentinel.
fn levels(seqs: &[SequenceCandidates]) -> Vec<f64> {
    let mut v: Vec<f64> = seqs
        .iter()
        .flat_map(|s| s.candidates.points().iter().map(|p| p.score))
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v.dedup();
    std::iter::once(f64::INFINITY).chain(v).collect()
}

fn pooled_curve(seqs: &[SequenceCandidates], cfg: &SweepConfig) -> PrCurve {
    let levels = levels(seqs);
    let points = match cfg.eval.matching {
        Matching::Literal => literal_points(seqs, cfg, &levels),
        Matching::OneToOne => levels
            .iter()
            .map(|&level| {
                let counts = seqs
                    .iter()
                    .map(|s| confusion_with(&detections_at(s, level, cfg.dedupe), &s.truth, &cfg.eval))
                    .fold(ConfusionCounts::default(), |a, b| a + b);
                PrPoint::new(level, counts)
            })
            .collect(),
    };
    PrCurve::from_points(points)
}

/// Literal counting at every level in one pass.
///
/// Greedy dedupe visits peaks in descending score, so peaks below a level
/// never suppress peaks above it: deduping once and then thresholding gives
/// the same detections as thresholding first.
fn literal_points(seqs: &[SequenceCandidates], cfg: &SweepConfig, levels: &[f64]) -> Vec<PrPoint> {
    let eps = cfg.eval.epsilon;
    let mut hits = Vec::new();
    let mut misses = Vec::new();
    let mut cover = Vec::new();
    for s in seqs {
        let kept = detections_at(s, f64::NEG_INFINITY, cfg.dedupe);
        for p in kept.points() {
            if s.truth.iter().any(|&t| near(p.t, t, eps)) {
                hits.push(p.score);
            } else {
                misses.push(p.score);
            }
        }
        for &t in &s.truth {
            let best = kept
                .points()
                .iter()
                .filter(|p| near(p.t, t, eps))
                .map(|p| p.score)
                .fold(f64::NEG_INFINITY, f64::max);
            cover.push(best);
        }
    }
    for v in [&mut hits, &mut misses, &mut cover] {
        v.sort_by(|a, b| b.total_cmp(a));
    }
    let at_least = |v: &[f64], level: f64| v.partition_point(|&s| s >= level);
    levels
        .iter()
        .map(|&level| {
            let counts = ConfusionCounts {
                tp: at_least(&hits, level),
                fp: at_least(&misses, level),
                fn_: cover.len() - at_least(&cover, level),
            };
            PrPoint::new(level, counts)
        })
        .collect()
}

/// Threshold sweep over a dataset of candidate peaks.
///
/// Results do not depend on the order of `seqs`.
pub fn sweep(seqs: &[SequenceCandidates], cfg: &SweepConfig) -> Result<SweepReport> {
    if seqs.iter().all(|s| s.truth.is_empty()) {
        return Err(Error::DegenerateEval);
    }
    let mut sorted: Vec<SequenceCandidates> = seqs.to_vec();
    for s in &mut sorted {
        s.truth.sort_unstable();
        s.truth.dedup();
    }
    let curve = pooled_curve(&sorted, cfg);
    match cfg.aggregation {
        Aggregation::Dataset => Ok(SweepReport {
            au_prc: curve.au_prc,
            best_f1: curve.best_f1,
            curve,
            aggregation: Aggregation::Dataset,
            per_sequence: Vec::new(),
        }),
        Aggregation::PerSequence => {
            let per_sequence: Vec<PrCurve> = sorted
                .iter()
                .filter(|s| !s.truth.is_empty())
                .map(|s| pooled_curve(std::slice::from_ref(s), cfg))
                .collect();
            let k = per_sequence.len() as f64;
            Ok(SweepReport {
                au_prc: per_sequence.iter().map(|c| c.au_prc).sum::<f64>() / k,
                best_f1: per_sequence.iter().map(|c| c.best_f1).sum::<f64>() / k,
                curve,
                aggregation: Aggregation::PerSequence,
                per_sequence,
            })
        }
    }
}

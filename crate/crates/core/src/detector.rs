//! Sliding-window statistic series, matched filtering and peak picking.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matched_filter::MatchedFilter;
use crate::order_stats::sort_values;
use crate::series::TimeSeries;
use crate::two_sample::{
    gaussian_kernel, mmd2_accumulate, wqt_sorted, ProjectionSet, ScalarStat, TestKind,
};

/// Statistic values at window positions `t = n ..= T - n`.
///
/// Position `i` of `values` corresponds to time `n + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticSeries {
    values: Vec<f64>,
    window_size: usize,
    test: TestKind,
    filtered: bool,
    series_length: usize,
}

impl StatisticSeries {
    pub fn new(values: Vec<f64>, window_size: usize, test: TestKind, series_length: usize) -> Self {
        Self {
            values,
            window_size,
            test,
            filtered: false,
            series_length,
        }
    }

    pub(crate) fn with_values(&self, values: Vec<f64>, filtered: bool) -> Self {
        Self {
            values,
            filtered,
            ..self.clone()
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn test(&self) -> TestKind {
        self.test
    }

    pub fn is_filtered(&self) -> bool {
        self.filtered
    }

    pub fn series_length(&self) -> usize {
        self.series_length
    }

    /// Time index of `values[0]`.
    pub fn offset(&self) -> usize {
        self.window_size
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at time `t`, if `t` is a valid window position.
    pub fn at(&self, t: usize) -> Option<f64> {
        t.checked_sub(self.offset())
            .and_then(|i| self.values.get(i).copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangePoint {
    pub t: usize,
    pub score: f64,
}

/// Detected change points sorted by time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChangePointSet {
    points: Vec<ChangePoint>,
}

impl ChangePointSet {
    pub fn new(mut points: Vec<ChangePoint>) -> Self {
        points.sort_by_key(|p| p.t);
        points.dedup_by_key(|p| p.t);
        Self { points }
    }

    pub fn points(&self) -> &[ChangePoint] {
        &self.points
    }

    pub fn times(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points whose score is at least `level`.
    pub fn at_least(&self, level: f64) -> Self {
        Self {
            points: self
                .points
                .iter()
                .copied()
                .filter(|p| p.score >= level)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub window: usize,
    pub threshold: f64,
    pub use_filter: bool,
    /// Minimum spacing enforced among unfiltered detections.
    pub dedupe_distance: usize,
    /// Replaces the default Q-Q null offset removed before filtering.
    pub bias_override: Option<f64>,
}

impl DetectionConfig {
    pub fn filtered(window: usize, threshold: f64) -> Self {
        Self {
            window,
            threshold,
            use_filter: true,
            dedupe_distance: 0,
            bias_override: None,
        }
    }

    pub fn unfiltered(window: usize, threshold: f64, dedupe_distance: usize) -> Self {
        Self {
            window,
            threshold,
            use_filter: false,
            dedupe_distance,
            bias_override: None,
        }
    }

    pub fn build_filter(&self, test: TestKind) -> Result<MatchedFilter> {
        let filter = MatchedFilter::new(test, self.window)?;
        Ok(match self.bias_override {
            Some(b) => filter.with_bias(b),
            None => filter,
        })
    }
}

/// A sorted buffer kept sorted under single-element replacement.
struct SortedWindow {
    buf: Vec<f64>,
}

impl SortedWindow {
    fn new(values: &[f64]) -> Self {
        let mut buf = values.to_vec();
        sort_values(&mut buf);
        Self { buf }
    }

    fn replace(&mut self, old: f64, new: f64) {
        let at = self
            .buf
            .partition_point(|v| v.total_cmp(&old) == Ordering::Less);
        debug_assert_eq!(self.buf[at].to_bits(), old.to_bits());
        self.buf.remove(at);
        let to = self
            .buf
            .partition_point(|v| v.total_cmp(&new) != Ordering::Greater);
        self.buf.insert(to, new);
    }
}

/// Slides two adjacent sorted windows of size `n` across `xs`.
fn sliding_scalar(xs: &[f64], n: usize, stat: impl Fn(&[f64], &[f64]) -> f64) -> Vec<f64> {
    let positions = xs.len() + 1 - 2 * n;
    let mut left = SortedWindow::new(&xs[0..n]);
    let mut right = SortedWindow::new(&xs[n..2 * n]);
    let mut out = Vec::with_capacity(positions);
    for i in 0..positions {
        if i > 0 {
            let t = n + i;
            left.replace(xs[t - n - 1], xs[t - 1]);
            right.replace(xs[t - 1], xs[t + n - 1]);
        }
        out.push(stat(&left.buf, &right.buf));
    }
    out
}

fn mmd2_series(x: &TimeSeries, n: usize, bandwidth: f64) -> Vec<f64> {
    let len = x.len();
    let width = 2 * n;
    // band[a * width + lag] = k(x_a, x_{a + lag}) for lag < 2n.
    let mut band = vec![0.0; len * width];
    for a in 0..len {
        for lag in 0..width.min(len - a) {
            band[a * width + lag] = gaussian_kernel(x.row(a), x.row(a + lag), bandwidth);
        }
    }
    let k = |a: usize, b: usize| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        band[lo * width + hi - lo]
    };
    (n..=len - n)
        .map(|t| {
            let l = t - n;
            mmd2_accumulate(n, |i, j| k(l + i, l + j), |i, j| k(t + i, t + j), |i, j| {
                k(l + i, t + j)
            })
        })
        .collect()
}

/// Computes `D[t]` between `x[t-n..t]` and `x[t..t+n]` for `t = n ..= T - n`.
pub fn statistic_series(x: &TimeSeries, n: usize, test: &TestKind) -> Result<StatisticSeries> {
    if n == 0 {
        return Err(Error::Domain {
            name: "n",
            value: 0.0,
            allowed: "n >= 1",
        });
    }
    let len = x.len();
    if len < 2 * n {
        return Err(Error::SequenceTooShort {
            len,
            window: n,
            needed: 2 * n,
        });
    }
    let positions = len + 1 - 2 * n;
    let dim = x.dim();
    let values = match *test {
        TestKind::Ks | TestKind::W1dt | TestKind::Wqt => {
            let stat: ScalarStat = test.scalar().expect("scalar test");
            if dim == 1 {
                sliding_scalar(x.as_slice(), n, |f, g| stat.eval_sorted(f, g))
            } else {
                let mut totals = vec![0.0; positions];
                for j in 0..dim {
                    let col = x.column(j);
                    let per_dim = sliding_scalar(&col, n, |f, g| stat.eval_sorted(f, g));
                    for (acc, v) in totals.iter_mut().zip(per_dim) {
                        *acc += v;
                    }
                }
                totals.into_iter().map(|v| v / dim as f64).collect()
            }
        }
        TestKind::Swqt { .. } => {
            let projections = ProjectionSet::for_test(test, dim)?;
            let mut totals = vec![0.0; positions];
            for (theta, mult) in projections.directions() {
                let projected = ProjectionSet::project(theta, x.as_slice());
                let per_dir = sliding_scalar(&projected, n, wqt_sorted);
                for (acc, v) in totals.iter_mut().zip(per_dir) {
                    *acc += *mult as f64 * v;
                }
            }
            totals
                .into_iter()
                .map(|v| v / projections.count() as f64)
                .collect()
        }
        TestKind::Mmd2 { kernel_bandwidth } => {
            TestKind::mmd2(kernel_bandwidth)?;
            if n < 2 {
                return Err(Error::Domain {
                    name: "n",
                    value: n as f64,
                    allowed: "n >= 2 for the unbiased MMD² estimator",
                });
            }
            mmd2_series(x, n, kernel_bandwidth)
        }
    };
    Ok(StatisticSeries::new(values, n, *test, len))
}

/// Strict local maxima above `threshold`. Neighbours beyond either end of
/// the series count as negative infinity.
pub fn detect_peaks(series: &StatisticSeries, threshold: f64) -> ChangePointSet {
    let v = series.values();
    let points = (0..v.len())
        .filter(|&i| {
            let before = if i > 0 { v[i - 1] } else { f64::NEG_INFINITY };
            let after = v.get(i + 1).copied().unwrap_or(f64::NEG_INFINITY);
            v[i] > threshold && v[i] > before && v[i] > after
        })
        .map(|i| ChangePoint {
            t: series.offset() + i,
            score: v[i],
        })
        .collect();
    ChangePointSet { points }
}

/// Keeps the highest peak among any group closer than `delta + 1` samples.
///
/// Greedy by descending score, earlier time first on ties: a peak is accepted
/// iff no accepted peak lies within `delta` samples of it.
pub fn dedupe_peaks(cps: &ChangePointSet, delta: usize) -> ChangePointSet {
    let mut order: Vec<&ChangePoint> = cps.points.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.t.cmp(&b.t)));
    let mut taken = BTreeSet::new();
    let mut kept = Vec::new();
    for p in order {
        let lo = p.t.saturating_sub(delta);
        if taken.range(lo..=p.t + delta).next().is_none() {
            taken.insert(p.t);
            kept.push(*p);
        }
    }
    ChangePointSet::new(kept)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub raw: StatisticSeries,
    /// The filtered series, or a copy of `raw` when filtering is off.
    pub processed: StatisticSeries,
    pub change_points: ChangePointSet,
    pub filter: Option<MatchedFilter>,
}

impl PipelineResult {
    /// Every candidate peak before thresholding (and before dedupe).
    pub fn candidates(&self) -> ChangePointSet {
        detect_peaks(&self.processed, f64::NEG_INFINITY)
    }
}

pub fn run_pipeline(x: &TimeSeries, cfg: &DetectionConfig, test: &TestKind) -> Result<PipelineResult> {
    let raw = statistic_series(x, cfg.window, test)?;
    if cfg.use_filter {
        let filter = cfg.build_filter(*test)?;
        let processed = filter.apply(&raw)?;
        let change_points = detect_peaks(&processed, cfg.threshold);
        Ok(PipelineResult {
            raw,
            processed,
            change_points,
            filter: Some(filter),
        })
    } else {
        let change_points = dedupe_peaks(&detect_peaks(&raw, cfg.threshold), cfg.dedupe_distance);
        Ok(PipelineResult {
            processed: raw.clone(),
            raw,
            change_points,
            filter: None,
        })
    }
}

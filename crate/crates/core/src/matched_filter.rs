//! Peak-preserving matched filters for the sliding-window statistics.
//!
//! The taps are the expected signature of each statistic around a change:
//! triangular for the KS and W1-DT, squared-triangular for the Q-Q tests and
//! MMD². Scaling by `alpha = 1 / sum(h^2)` makes the filtered value at the
//! change equal the unfiltered expected peak.

use std::io::{self, Write};

use crate::detector::StatisticSeries;
use crate::error::{Error, Result};
use crate::two_sample::TestKind;

/// Expected integral of a squared Brownian bridge over `[0, 1]`, the null
/// offset of the WQT and SWQT.
pub const BROWNIAN_BRIDGE_SQ_MEAN: f64 = 0.166;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedFilter {
    taps: Vec<f64>,
    alpha: f64,
    bias: f64,
    n: usize,
    test: TestKind,
}

impl MatchedFilter {
    /// Builds the filter for `test` at window size `n`.
    ///
    /// Depends only on the test kind and `n`, never on data.
    pub fn new(test: TestKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain {
                name: "n",
                value: 0.0,
                allowed: "n >= 1",
            });
        }
        let taps: Vec<f64> = (-(n as i64)..=n as i64)
            .map(|t| {
                let linear = (n as i64 - t.abs()) as f64 / n as f64;
                if test.is_quadratic() {
                    linear * linear
                } else {
                    linear
                }
            })
            .collect();
        let energy: f64 = taps.iter().map(|h| h * h).sum();
        let bias = if test.is_quantile_quantile() {
            BROWNIAN_BRIDGE_SQ_MEAN
        } else {
            0.0
        };
        Ok(Self {
            taps,
            alpha: 1.0 / energy,
            bias,
            n,
            test,
        })
    }

    /// Overrides the additive offset removed before convolution.
    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn test(&self) -> TestKind {
        self.test
    }

    /// Taps `h[-n..=n]`.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// `h[t]`, zero outside `[-n, n]`.
    pub fn tap(&self, t: i64) -> f64 {
        if t.unsigned_abs() as usize > self.n {
            0.0
        } else {
            self.taps[(t + self.n as i64) as usize]
        }
    }

    /// Bias-subtracts `input` and convolves it with `alpha * h`, treating
    /// samples outside the series as zero.
    pub fn convolve(&self, input: &[f64]) -> Vec<f64> {
        let centred: Vec<f64> = input.iter().map(|v| v - self.bias).collect();
        let n = self.n as i64;
        let len = centred.len() as i64;
        (0..len)
            .map(|t| {
                let lo = (t - n).max(0);
                let hi = (t + n).min(len - 1);
                let acc: f64 = (lo..=hi)
                    .map(|s| self.taps[(s - t + n) as usize] * centred[s as usize])
                    .sum();
                self.alpha * acc
            })
            .collect()
    }

    /// Filters a raw statistic series computed at the same window size.
    pub fn apply(&self, series: &StatisticSeries) -> Result<StatisticSeries> {
        if series.window_size() != self.n {
            return Err(Error::SizeMismatch {
                left: series.window_size(),
                right: self.n,
            });
        }
        Ok(series.with_values(self.convolve(series.values()), true))
    }

    /// Writes `(t, h[t])` rows with a header.
    pub fn write_taps_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,h")?;
        for (offset, h) in self.taps.iter().enumerate() {
            writeln!(out, "{},{}", offset as i64 - self.n as i64, h)?;
        }
        Ok(())
    }
}

pub fn build_filter(test: TestKind, n: usize) -> Result<MatchedFilter> {
    MatchedFilter::new(test, n)
}

pub fn apply_filter(series: &StatisticSeries, filter: &MatchedFilter) -> Result<StatisticSeries> {
    filter.apply(series)
}

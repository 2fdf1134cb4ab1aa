//! Empirical distribution, quantile and quantile-quantile primitives.
//!
//! Every statistic in this crate reduces to order statistics of the two
//! windows, so a [`SampleSet`] sorts its values once on construction and the
//! slice-level helpers below operate on already-sorted data.

use crate::error::{Error, Result};

/// A finite one-dimensional multiset with a cached sorted view.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl SampleSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        let mut sorted = values.clone();
        sort_values(&mut sorted);
        Ok(Self { values, sorted })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values in their original order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values in non-decreasing order.
    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Applies `f` elementwise and re-sorts.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }

    /// Empirical distribution function: the fraction of samples `<= x`.
    pub fn edf(&self, x: f64) -> f64 {
        count_le(&self.sorted, x) as f64 / self.len() as f64
    }

    /// Generalized inverse of the EDF, `inf { y : edf(y) >= u }`.
    ///
    /// For `u = 0` the sample minimum is returned.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain {
                name: "u",
                value: u,
                allowed: "[0, 1]",
            });
        }
        let n = self.len();
        let rank = ((n as f64) * u).ceil() as usize;
        Ok(self.sorted[rank.clamp(1, n) - 1])
    }
}

pub(crate) fn sort_values(values: &mut [f64]) {
    values.sort_unstable_by(f64::total_cmp);
}

/// Number of elements of a sorted slice that are `<= x`.
pub(crate) fn count_le(sorted: &[f64], x: f64) -> usize {
    sorted.partition_point(|&v| v <= x)
}

/// For each order statistic `g_(k)`, the number of `f` samples `<= g_(k)`.
///
/// Both slices must be sorted. The result is non-decreasing and bounded by
/// `f.len()`.
pub(crate) fn qq_counts<'a>(f: &'a [f64], g: &'a [f64]) -> impl Iterator<Item = usize> + 'a {
    let mut i = 0;
    g.iter().map(move |&gk| {
        while i < f.len() && f[i] <= gk {
            i += 1;
        }
        i
    })
}

/// Knots of the Q-Q function `F_n(G_n^{-1}(x))`.
///
/// On the segment `((k-1)/n, k/n]` the Q-Q function equals the `k`-th entry.
pub fn qq_knots(f: &SampleSet, g: &SampleSet) -> Result<Vec<f64>> {
    if f.len() != g.len() {
        return Err(Error::SizeMismatch {
            left: f.len(),
            right: g.len(),
        });
    }
    let n = f.len() as f64;
    Ok(qq_counts(f.sorted(), g.sorted())
        .map(|c| c as f64 / n)
        .collect())
}

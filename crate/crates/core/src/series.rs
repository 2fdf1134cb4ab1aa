use crate::error::{Error, Result};

/// A `T x d` observation matrix stored row-major, with optional change point labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::SizeMismatch {
                left: values.len(),
                right: dim,
            });
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        Ok(Self {
            values,
            dim,
            labels: Vec::new(),
        })
    }

    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::new(values, 1)
    }

    /// Attaches ground-truth change points. Labels are sorted and deduplicated.
    pub fn with_labels(mut self, mut labels: Vec<usize>) -> Self {
        labels.sort_unstable();
        labels.dedup();
        self.labels = labels;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Row-major backing storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    /// Contiguous block of rows `[start, end)`, row-major.
    pub fn rows(&self, start: usize, end: usize) -> &[f64] {
        &self.values[start * self.dim..end * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().skip(j).step_by(self.dim).copied().collect()
    }

    /// Applies `f` to every observation, keeping labels.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mapped = Self::new(self.values.iter().map(|&v| f(v)).collect(), self.dim)?;
        Ok(mapped.with_labels(self.labels.clone()))
    }
}

//! Two-sample statistics between equal-size windows.
//!
//! The scalar statistics (KS, W1-DT, WQT) have slice-level kernels that take
//! pre-sorted windows; the sliding-window detector keeps its windows sorted
//! incrementally and calls those kernels directly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order_stats::{qq_counts, sort_values, SampleSet};

pub const DEFAULT_PROJECTIONS: usize = 128;
pub const DEFAULT_BANDWIDTH: f64 = 1.0;

/// Which two-sample statistic to compute, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TestKind {
    Ks,
    W1dt,
    Wqt,
    Swqt {
        num_projections: usize,
        projection_seed: u64,
    },
    Mmd2 {
        kernel_bandwidth: f64,
    },
}

impl TestKind {
    pub fn swqt(num_projections: usize, projection_seed: u64) -> Result<Self> {
        if num_projections == 0 {
            return Err(Error::InvalidParameter(
                "num_projections must be at least 1".into(),
            ));
        }
        Ok(TestKind::Swqt {
            num_projections,
            projection_seed,
        })
    }

    pub fn mmd2(kernel_bandwidth: f64) -> Result<Self> {
        if !(kernel_bandwidth > 0.0 && kernel_bandwidth.is_finite()) {
            return Err(Error::Domain {
                name: "kernel_bandwidth",
                value: kernel_bandwidth,
                allowed: "(0, inf)",
            });
        }
        Ok(TestKind::Mmd2 { kernel_bandwidth })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestKind::Ks => "ks",
            TestKind::W1dt => "w1dt",
            TestKind::Wqt => "wqt",
            TestKind::Swqt { .. } => "swqt",
            TestKind::Mmd2 { .. } => "mmd2",
        }
    }

    /// Parses a test name, filling in default parameters.
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "ks" => Some(TestKind::Ks),
            "w1dt" | "w1-dt" | "wdt" => Some(TestKind::W1dt),
            "wqt" => Some(TestKind::Wqt),
            "swqt" => Some(TestKind::Swqt {
                num_projections: DEFAULT_PROJECTIONS,
                projection_seed: 0,
            }),
            "mmd2" | "mmd" => Some(TestKind::Mmd2 {
                kernel_bandwidth: DEFAULT_BANDWIDTH,
            }),
            _ => None,
        }
    }

    /// The scalar statistic this test averages over coordinates, if any.
    pub fn scalar(&self) -> Option<ScalarStat> {
        match self {
            TestKind::Ks => Some(ScalarStat::Ks),
            TestKind::W1dt => Some(ScalarStat::W1dt),
            TestKind::Wqt => Some(ScalarStat::Wqt),
            _ => None,
        }
    }

    /// Whether the expected signature is quadratic in the mixture weight.
    pub fn is_quadratic(&self) -> bool {
        !matches!(self, TestKind::Ks | TestKind::W1dt)
    }

    /// Q-Q tests carry the Brownian-bridge null offset.
    pub fn is_quantile_quantile(&self) -> bool {
        matches!(self, TestKind::Wqt | TestKind::Swqt { .. })
    }

    fn validate(&self) -> Result<()> {
        match *self {
            TestKind::Swqt {
                num_projections, ..
            } => TestKind::swqt(num_projections, 0).map(|_| ()),
            TestKind::Mmd2 { kernel_bandwidth } => TestKind::mmd2(kernel_bandwidth).map(|_| ()),
            _ => Ok(()),
        }
    }
}

/// One of the one-dimensional statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarStat {
    Ks,
    W1dt,
    Wqt,
}

impl ScalarStat {
    /// Evaluates the statistic on two sorted windows of equal length.
    pub(crate) fn eval_sorted(self, f: &[f64], g: &[f64]) -> f64 {
        match self {
            ScalarStat::Ks => ks_sorted(f, g),
            ScalarStat::W1dt => w1dt_sorted(f, g),
            ScalarStat::Wqt => wqt_sorted(f, g),
        }
    }

    pub fn eval(self, f: &SampleSet, g: &SampleSet) -> Result<f64> {
        check_equal(f.len(), g.len())?;
        Ok(self.eval_sorted(f.sorted(), g.sorted()))
    }
}

fn check_equal(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::SizeMismatch { left, right });
    }
    Ok(())
}

pub(crate) fn ks_sorted(f: &[f64], g: &[f64]) -> f64 {
    let n = f.len();
    let (mut i, mut j) = (0, 0);
    let mut widest = 0usize;
    while i < n || j < n {
        let x = match (f.get(i), g.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while i < n && f[i] <= x {
            i += 1;
        }
        while j < n && g[j] <= x {
            j += 1;
        }
        widest = widest.max(i.abs_diff(j));
    }
    widest as f64 / n as f64
}

pub(crate) fn w1dt_sorted(f: &[f64], g: &[f64]) -> f64 {
    let total: f64 = f.iter().zip(g).map(|(a, b)| (a - b).abs()).sum();
    total / f.len() as f64
}

/// `(n/2) * integral_0^1 (F_n(G_n^{-1}(x)) - x)^2 dx`, integrated exactly.
///
/// On `((k-1)/n, k/n]` the Q-Q function is `c_k/n`, and with `j = c_k - k` the
/// segment integral is `((j+1)^3 - j^3) / (3 n^3)`. The sum is accumulated in
/// integers so the result depends on the joint ranks alone.
pub(crate) fn wqt_sorted(f: &[f64], g: &[f64]) -> f64 {
    let n = f.len() as i128;
    let cubes: i128 = qq_counts(f, g)
        .zip(1..)
        .map(|(c, k): (usize, i128)| {
            let j = c as i128 - k;
            3 * j * j + 3 * j + 1
        })
        .sum();
    cubes as f64 / (6 * n * n) as f64
}

pub fn ks(f: &SampleSet, g: &SampleSet) -> Result<f64> {
    ScalarStat::Ks.eval(f, g)
}

pub fn w1dt(f: &SampleSet, g: &SampleSet) -> Result<f64> {
    ScalarStat::W1dt.eval(f, g)
}

pub fn wqt(f: &SampleSet, g: &SampleSet) -> Result<f64> {
    ScalarStat::Wqt.eval(f, g)
}

/// Two adjacent blocks of `n` points in `R^d`, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPair<'a> {
    left: &'a [f64],
    right: &'a [f64],
    dim: usize,
}

impl<'a> WindowPair<'a> {
    pub fn new(left: &'a [f64], right: &'a [f64], dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        check_equal(left.len(), right.len())?;
        if left.is_empty() {
            return Err(Error::EmptySample);
        }
        if !left.len().is_multiple_of(dim) {
            return Err(Error::SizeMismatch {
                left: left.len(),
                right: dim,
            });
        }
        if let Some(&bad) = left.iter().chain(right).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        Ok(Self { left, right, dim })
    }

    pub fn n(&self) -> usize {
        self.left.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn left_point(&self, i: usize) -> &[f64] {
        &self.left[i * self.dim..(i + 1) * self.dim]
    }

    pub fn right_point(&self, i: usize) -> &[f64] {
        &self.right[i * self.dim..(i + 1) * self.dim]
    }

    fn left_column(&self, j: usize) -> Vec<f64> {
        self.left.iter().skip(j).step_by(self.dim).copied().collect()
    }

    fn right_column(&self, j: usize) -> Vec<f64> {
        self.right.iter().skip(j).step_by(self.dim).copied().collect()
    }
}

/// Mean of a scalar statistic applied to each coordinate independently.
pub fn avg_over_dims(stat: ScalarStat, w: &WindowPair<'_>) -> f64 {
    let total: f64 = (0..w.dim)
        .map(|j| {
            let mut f = w.left_column(j);
            let mut g = w.right_column(j);
            sort_values(&mut f);
            sort_values(&mut g);
            stat.eval_sorted(&f, &g)
        })
        .sum();
    total / w.dim as f64
}

/// A fixed set of unit directions on `S^{d-1}` drawn from a seeded generator.
///
/// Identical directions are merged and carry a multiplicity, so that in one
/// dimension (where every draw is `+1` or `-1`) only two projections are
/// evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSet {
    dim: usize,
    count: usize,
    directions: Vec<(Vec<f64>, usize)>,
}

impl ProjectionSet {
    pub fn new(dim: usize, count: usize, seed: u64) -> Result<Self> {
        if dim == 0 || count == 0 {
            return Err(Error::InvalidParameter(
                "projection set needs dim >= 1 and count >= 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut directions: Vec<(Vec<f64>, usize)> = Vec::new();
        for _ in 0..count {
            let theta = loop {
                let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    break v.into_iter().map(|x| x / norm).collect::<Vec<_>>();
                }
            };
            match directions.iter_mut().find(|(d, _)| *d == theta) {
                Some((_, mult)) => *mult += 1,
                None => directions.push((theta, 1)),
            }
        }
        Ok(Self {
            dim,
            count,
            directions,
        })
    }

    /// Builds the set a `TestKind::Swqt` describes for data of dimension `dim`.
    pub fn for_test(test: &TestKind, dim: usize) -> Result<Self> {
        match *test {
            TestKind::Swqt {
                num_projections,
                projection_seed,
            } => Self::new(dim, num_projections, projection_seed),
            other => Err(Error::InvalidParameter(format!(
                "{} does not use projections",
                other.name()
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total number of draws, counting multiplicity.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Distinct directions with their multiplicities.
    pub fn directions(&self) -> &[(Vec<f64>, usize)] {
        &self.directions
    }

    pub(crate) fn project(theta: &[f64], points: &[f64]) -> Vec<f64> {
        points
            .chunks_exact(theta.len())
            .map(|p| p.iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Weighted mean over draws of per-direction values.
    pub(crate) fn average(&self, per_direction: impl Iterator<Item = f64>) -> f64 {
        let total: f64 = self
            .directions
            .iter()
            .zip(per_direction)
            .map(|((_, mult), v)| *mult as f64 * v)
            .sum();
        total / self.count as f64
    }
}

/// Sliced WQT: the WQT averaged over the projection set.
pub fn swqt_with(w: &WindowPair<'_>, projections: &ProjectionSet) -> Result<f64> {
    check_equal(w.dim, projections.dim)?;
    let values = projections.directions.iter().map(|(theta, _)| {
        let mut f = ProjectionSet::project(theta, w.left);
        let mut g = ProjectionSet::project(theta, w.right);
        sort_values(&mut f);
        sort_values(&mut g);
        wqt_sorted(&f, &g)
    });
    Ok(projections.average(values))
}

pub fn swqt(w: &WindowPair<'_>, test: &TestKind) -> Result<f64> {
    swqt_with(w, &ProjectionSet::for_test(test, w.dim)?)
}

pub(crate) fn gaussian_kernel(x: &[f64], y: &[f64], bandwidth: f64) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-sq / (2.0 * bandwidth * bandwidth)).exp()
}

/// Unbiased MMD² accumulation over `i != j`, with kernels supplied by index.
///
/// `kff(i, j)`, `kgg(i, j)` and `kfg(i, j)` return `k(f_i, f_j)`,
/// `k(g_i, g_j)` and `k(f_i, g_j)`. Summation order is fixed so every caller
/// producing identical kernel values gets a bit-identical result.
pub(crate) fn mmd2_accumulate(
    n: usize,
    kff: impl Fn(usize, usize) -> f64,
    kgg: impl Fn(usize, usize) -> f64,
    kfg: impl Fn(usize, usize) -> f64,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += (kff(i, j) + kgg(i, j)) - (kfg(i, j) + kfg(j, i));
            }
        }
    }
    acc / (n * n - n) as f64
}

/// Unbiased MMD² estimate with a Gaussian kernel of the given bandwidth.
pub fn mmd2_with(w: &WindowPair<'_>, bandwidth: f64) -> Result<f64> {
    TestKind::mmd2(bandwidth)?;
    let n = w.n();
    if n < 2 {
        return Err(Error::Domain {
            name: "n",
            value: n as f64,
            allowed: "n >= 2 for the unbiased MMD² estimator",
        });
    }
    // Cache the kernel matrix of the 2n stacked points.
    let points: Vec<&[f64]> = (0..n)
        .map(|i| w.left_point(i))
        .chain((0..n).map(|i| w.right_point(i)))
        .collect();
    let m = 2 * n;
    let mut gram = vec![0.0; m * m];
    for a in 0..m {
        for b in a..m {
            let k = gaussian_kernel(points[a], points[b], bandwidth);
            gram[a * m + b] = k;
            gram[b * m + a] = k;
        }
    }
    Ok(mmd2_accumulate(
        n,
        |i, j| gram[i * m + j],
        |i, j| gram[(n + i) * m + n + j],
        |i, j| gram[i * m + n + j],
    ))
}

pub fn mmd2(w: &WindowPair<'_>, test: &TestKind) -> Result<f64> {
    match *test {
        TestKind::Mmd2 { kernel_bandwidth } => mmd2_with(w, kernel_bandwidth),
        other => Err(Error::InvalidParameter(format!(
            "mmd2 called with {}",
            other.name()
        ))),
    }
}

/// Evaluates `test` on a window pair, averaging scalar tests over coordinates.
pub fn evaluate(test: &TestKind, w: &WindowPair<'_>) -> Result<f64> {
    test.validate()?;
    match test {
        TestKind::Ks | TestKind::W1dt | TestKind::Wqt => {
            Ok(avg_over_dims(test.scalar().expect("scalar test"), w))
        }
        TestKind::Swqt { .. } => swqt(w, test),
        TestKind::Mmd2 { .. } => mmd2(w, test),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::order_stats::qq_knots;
    use rand::Rng;

    fn set(v: &[f64]) -> SampleSet {
        SampleSet::new(v.to_vec()).unwrap()
    }

    fn pair<'a>(l: &'a [f64], r: &'a [f64], d: usize) -> WindowPair<'a> {
        WindowPair::new(l, r, d).unwrap()
    }

    // sup over a dense grid spanning the data plus every sample point.
    fn ks_oracle(f: &[f64], g: &[f64]) -> f64 {
        let (fs, gs) = (set(f), set(g));
        let lo = f.iter().chain(g).copied().fold(f64::INFINITY, f64::min) - 1.0;
        let hi = f.iter().chain(g).copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
        let grid = (0..=20_000).map(|i| lo + (hi - lo) * i as f64 / 20_000.0);
        grid.chain(f.iter().chain(g).copied())
            .map(|x| (fs.edf(x) - gs.edf(x)).abs())
            .fold(0.0, f64::max)
    }

    // Minimum mean cost over all n! couplings.
    fn w1_oracle(f: &[f64], g: &[f64]) -> f64 {
        fn permute(k: usize, perm: &mut Vec<usize>, f: &[f64], g: &[f64], best: &mut f64) {
            if k == perm.len() {
                let cost: f64 = perm.iter().enumerate().map(|(i, &j)| (f[i] - g[j]).abs()).sum();
                *best = best.min(cost);
                return;
            }
            for i in k..perm.len() {
                perm.swap(k, i);
                permute(k + 1, perm, f, g, best);
                perm.swap(k, i);
            }
        }
        let mut perm: Vec<usize> = (0..f.len()).collect();
        let mut best = f64::INFINITY;
        permute(0, &mut perm, f, g, &mut best);
        best / f.len() as f64
    }

    // Composite Simpson on each staircase segment of the QQ integrand.
    fn wqt_oracle(f: &[f64], g: &[f64]) -> f64 {
        let knots = qq_knots(&set(f), &set(g)).unwrap();
        let n = knots.len() as f64;
        let mut total = 0.0;
        for (k, v) in knots.iter().enumerate() {
            let (a, b) = (k as f64 / n, (k + 1) as f64 / n);
            let steps = 64;
            let h = (b - a) / steps as f64;
            let integrand = |x: f64| (v - x) * (v - x);
            let mut s = integrand(a) + integrand(b);
            for i in 1..steps {
                let x = a + i as f64 * h;
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * integrand(x);
            }
            total += s * h / 3.0;
        }
        n / 2.0 * total
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks(&set(&[1.0, 2.0, 3.0]), &set(&[1.0, 2.0, 3.0])).unwrap(), 0.0);
        assert_eq!(ks(&set(&[1.0, 2.0]), &set(&[3.0, 4.0])).unwrap(), 1.0);
        assert_eq!(ks(&set(&[1.0, 3.0]), &set(&[2.0, 4.0])).unwrap(), 0.5);
        assert_eq!(ks_oracle(&[1.0, 3.0], &[2.0, 4.0]), 0.5);
    }

    #[test]
    fn w1dt_examples() {
        assert_eq!(w1dt(&set(&[0.0]), &set(&[1.0])).unwrap(), 1.0);
        assert_eq!(w1dt(&set(&[0.3, 0.1]), &set(&[0.1, 0.3])).unwrap(), 0.0);
        assert_eq!(w1dt(&set(&[0.0, 1.0]), &set(&[2.0, 3.0])).unwrap(), 2.0);
        assert_eq!(w1_oracle(&[0.0, 1.0], &[2.0, 3.0]), 2.0);
    }

    #[test]
    fn wqt_examples() {
        let disjoint = wqt(&set(&[1.0, 2.0]), &set(&[3.0, 4.0])).unwrap();
        assert!((disjoint - 1.0 / 3.0).abs() < 1e-15);
        let same = wqt(&set(&[1.0, 2.0]), &set(&[1.0, 2.0])).unwrap();
        assert!((same - 1.0 / 12.0).abs() < 1e-15);
        assert!((wqt_oracle(&[1.0, 2.0], &[1.0, 2.0]) - 1.0 / 12.0).abs() < 1e-12);
        assert_eq!(
            wqt(&set(&[1.0, 3.0]), &set(&[2.0, 4.0])).unwrap(),
            wqt(&set(&[1.0, 27.0]), &set(&[8.0, 64.0])).unwrap()
        );
    }

    #[test]
    fn size_mismatch_is_contract_error() {
        assert!(matches!(
            ks(&set(&[1.0]), &set(&[1.0, 2.0])),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(WindowPair::new(&[1.0], &[1.0, 2.0], 1).is_err());
    }

    #[test]
    fn oracles_agree_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.random_range(1..=7);
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let (fs, gs) = (set(&f), set(&g));
            assert!((w1dt(&fs, &gs).unwrap() - w1_oracle(&f, &g)).abs() < 1e-12);
            assert!((ks(&fs, &gs).unwrap() - ks_oracle(&f, &g)).abs() < 1e-15);
            assert!((wqt(&fs, &gs).unwrap() - wqt_oracle(&f, &g)).abs() < 1e-9);
        }
    }

    #[test]
    fn swqt_in_one_dimension_matches_wqt() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..20 {
            let f: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g: Vec<f64> = (0..25).map(|_| rng.random_range(-0.5..1.5)).collect();
            let test = TestKind::swqt(16, seed).unwrap();
            let sliced = swqt(&pair(&f, &g, 1), &test).unwrap();
            let plain = wqt(&set(&f), &set(&g)).unwrap();
            assert!((sliced - plain).abs() <= 1e-12 * plain.max(1.0));
        }
    }

    #[test]
    fn swqt_identical_blocks_give_staircase_value() {
        let block = [0.1, -0.4, 2.0, 0.7];
        let value = swqt(&pair(&block, &block, 2), &TestKind::swqt(32, 3).unwrap()).unwrap();
        assert!((value - 1.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn swqt_along_dominating_shift_saturates() {
        let left = [0.0, 0.0, 0.5, 0.4, 0.2, 0.9];
        let right: Vec<f64> = left.iter().map(|v| v + 10.0).collect();
        let theta = std::f64::consts::FRAC_1_SQRT_2;
        let projections = ProjectionSet {
            dim: 2,
            count: 1,
            directions: vec![(vec![theta, theta], 1)],
        };
        let value = swqt_with(&pair(&left, &right, 2), &projections).unwrap();
        assert!((value - 3.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn projection_set_is_deterministic_unit_norm() {
        let a = ProjectionSet::new(3, 50, 9).unwrap();
        assert_eq!(a, ProjectionSet::new(3, 50, 9).unwrap());
        assert_ne!(a, ProjectionSet::new(3, 50, 10).unwrap());
        for (theta, _) in a.directions() {
            let norm: f64 = theta.iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        let one_d = ProjectionSet::new(1, 128, 0).unwrap();
        assert!(one_d.directions().len() <= 2);
        assert_eq!(one_d.directions().iter().map(|d| d.1).sum::<usize>(), 128);
    }

    #[test]
    fn mmd2_examples() {
        let block = [0.2, 1.0, -0.3, 0.0];
        assert_eq!(mmd2_with(&pair(&block, &block, 2), 1.0).unwrap(), 0.0);
        assert_eq!(mmd2_with(&pair(&[0.0, 0.0], &[0.0, 0.0], 1), 1.0).unwrap(), 0.0);
        assert!(matches!(
            mmd2_with(&pair(&[0.0], &[1.0], 1), 1.0),
            Err(Error::Domain { .. })
        ));
        assert!(TestKind::mmd2(0.0).is_err());
    }

    #[test]
    fn mmd2_matches_naive_double_loop_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let n = rng.random_range(2..12);
            let d = rng.random_range(1..4);
            let f: Vec<f64> = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g: Vec<f64> = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let k = |a: &[f64], b: &[f64]| {
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-sq / 2.0).exp()
            };
            let pt = |v: &[f64], i: usize| v[i * d..(i + 1) * d].to_vec();
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        acc += (k(&pt(&f, i), &pt(&f, j)) + k(&pt(&g, i), &pt(&g, j)))
                            - (k(&pt(&f, i), &pt(&g, j)) + k(&pt(&g, i), &pt(&f, j)));
                    }
                }
            }
            let naive = acc / (n * n - n) as f64;
            assert_eq!(mmd2_with(&pair(&f, &g, d), 1.0).unwrap(), naive);
            assert_eq!(
                mmd2_with(&pair(&f, &g, d), 1.0).unwrap(),
                mmd2_with(&pair(&g, &f, d), 1.0).unwrap()
            );
        }
    }

    #[test]
    fn avg_over_dims_examples() {
        // Rows are (dim0, dim1): dim0 disjoint, dim1 identical.
        let left = [0.0, 5.0, 1.0, 6.0];
        let right = [2.0, 5.0, 3.0, 6.0];
        let w = pair(&left, &right, 2);
        assert_eq!(avg_over_dims(ScalarStat::Ks, &w), 0.5);
        let one = pair(&[1.0, 3.0], &[2.0, 4.0], 1);
        assert_eq!(avg_over_dims(ScalarStat::Ks, &one), 0.5);
        let twin = pair(&[1.0, 1.0, 3.0, 3.0], &[2.0, 2.0, 4.0, 4.0], 2);
        assert_eq!(avg_over_dims(ScalarStat::Wqt, &twin), avg_over_dims(ScalarStat::Wqt, &one));
    }

    #[test]
    fn wqt_reaches_maximum_on_disjoint_supports() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let n = rng.random_range(1..=500);
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let g: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..2.0)).collect();
            let target = n as f64 / 6.0;
            for (a, b) in [(&f, &g), (&g, &f)] {
                let v = wqt(&set(a), &set(b)).unwrap();
                assert!(((v - target) / target).abs() <= 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn bounds_and_symmetry(
            f in prop::collection::vec(-5.0f64..5.0, 1..40),
            g_seed in prop::collection::vec(-5.0f64..5.0, 40),
        ) {
            let g = g_seed[..f.len()].to_vec();
            let (fs, gs) = (set(&f), set(&g));
            let n = f.len() as f64;
            let k = ks(&fs, &gs).unwrap();
            prop_assert!((0.0..=1.0).contains(&k));
            prop_assert_eq!(k, ks(&gs, &fs).unwrap());
            let w = w1dt(&fs, &gs).unwrap();
            prop_assert!(w >= 0.0);
            prop_assert_eq!(w, w1dt(&gs, &fs).unwrap());
            let q = wqt(&fs, &gs).unwrap();
            prop_assert!(q >= 0.0 && q <= n / 6.0 * (1.0 + 1e-12));
        }

        #[test]
        fn rank_invariance_is_bitwise(
            f in prop::collection::vec(-2.0f64..2.0, 1..40),
            g_seed in prop::collection::vec(-2.0f64..2.0, 40),
        ) {
            let g = g_seed[..f.len()].to_vec();
            let (fs, gs) = (set(&f), set(&g));
            let m = |x: f64| x.powi(3) + x.exp();
            let (mf, mg) = (fs.map(m).unwrap(), gs.map(m).unwrap());
            prop_assert_eq!(wqt(&fs, &gs).unwrap(), wqt(&mf, &mg).unwrap());
            prop_assert_eq!(ks(&fs, &gs).unwrap(), ks(&mf, &mg).unwrap());
        }

        #[test]
        fn w1dt_translation(f in prop::collection::vec(-5.0f64..5.0, 1..30), c in -3.0f64..3.0) {
            let shifted: Vec<f64> = f.iter().map(|v| v + c).collect();
            let value = w1dt(&set(&f), &set(&shifted)).unwrap();
            prop_assert!((value - c.abs()).abs() < 1e-12);
        }
    }
}

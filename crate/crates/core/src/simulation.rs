//! Seeded generators for the simulated experiments and the mixture-response
//! Monte Carlo that traces each statistic's expected signature.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::matched_filter::BROWNIAN_BRIDGE_SQ_MEAN;
use crate::series::TimeSeries;
use crate::two_sample::{evaluate, TestKind, WindowPair};

/// Generator for replicate `index` of an experiment seeded with `master`.
///
/// Each replicate reads its own ChaCha stream, so results do not depend on
/// how replicates are scheduled.
pub fn replicate_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionSpec {
    Gaussian1D {
        mean: f64,
        variance: f64,
    },
    GaussianND {
        mean: Vec<f64>,
        /// Row-major `d x d` covariance.
        covariance: Vec<f64>,
    },
    Uniform1D {
        a: f64,
        b: f64,
    },
    /// `weight * first + (1 - weight) * second`.
    Mixture {
        weight: f64,
        first: Box<DistributionSpec>,
        second: Box<DistributionSpec>,
    },
}

impl DistributionSpec {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        let spec = DistributionSpec::Gaussian1D { mean, variance };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian_nd(mean: Vec<f64>, covariance: Vec<f64>) -> Result<Self> {
        let spec = DistributionSpec::GaussianND { mean, covariance };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let spec = DistributionSpec::Uniform1D { a, b };
        spec.validate()?;
        Ok(spec)
    }

    pub fn mixture(weight: f64, first: Self, second: Self) -> Result<Self> {
        let spec = DistributionSpec::Mixture {
            weight,
            first: Box::new(first),
            second: Box::new(second),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DistributionSpec::Gaussian1D { mean, variance } => {
                if !(mean.is_finite() && *variance > 0.0 && variance.is_finite()) {
                    return Err(Error::Domain {
                        name: "variance",
                        value: *variance,
                        allowed: "(0, inf) with a finite mean",
                    });
                }
            }
            DistributionSpec::GaussianND { mean, covariance } => {
                let d = mean.len();
                if d == 0 || covariance.len() != d * d {
                    return Err(Error::SizeMismatch {
                        left: covariance.len(),
                        right: d * d,
                    });
                }
                let m = DMatrix::from_row_slice(d, d, covariance);
                if (&m - m.transpose()).abs().max() > 1e-12 || m.clone().cholesky().is_none() {
                    return Err(Error::InvalidParameter(
                        "covariance must be symmetric positive definite".into(),
                    ));
                }
            }
            DistributionSpec::Uniform1D { a, b } => {
                if !(a < b && a.is_finite() && b.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "uniform bounds need a < b, got [{a}, {b}]"
                    )));
                }
            }
            DistributionSpec::Mixture {
                weight,
                first,
                second,
            } => {
                if !(0.0..=1.0).contains(weight) {
                    return Err(Error::Domain {
                        name: "weight",
                        value: *weight,
                        allowed: "[0, 1]",
                    });
                }
                first.validate()?;
                second.validate()?;
                if first.dim() != second.dim() {
                    return Err(Error::SizeMismatch {
                        left: first.dim(),
                        right: second.dim(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            DistributionSpec::GaussianND { mean, .. } => mean.len(),
            DistributionSpec::Mixture { first, .. } => first.dim(),
            _ => 1,
        }
    }

    /// Appends one draw (of `dim()` coordinates) to `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        match self {
            DistributionSpec::Gaussian1D { mean, variance } => {
                let z: f64 = StandardNormal.sample(rng);
                out.push(mean + variance.sqrt() * z);
            }
            DistributionSpec::GaussianND { mean, covariance } => {
                let d = mean.len();
                let chol = DMatrix::from_row_slice(d, d, covariance)
                    .cholesky()
                    .expect("validated covariance");
                let z = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)));
                let x = chol.l() * z;
                out.extend(mean.iter().zip(x.iter()).map(|(m, v)| m + v));
            }
            DistributionSpec::Uniform1D { a, b } => out.push(rng.random_range(*a..*b)),
            DistributionSpec::Mixture {
                weight,
                first,
                second,
            } => {
                if rng.random::<f64>() < *weight {
                    first.sample_into(rng, out)
                } else {
                    second.sample_into(rng, out)
                }
            }
        }
    }

    /// `count` draws, row-major.
    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count * self.dim());
        match self {
            // Factor the covariance once for the whole block.
            DistributionSpec::GaussianND { mean, covariance } => {
                let d = mean.len();
                let l = DMatrix::from_row_slice(d, d, covariance)
                    .cholesky()
                    .expect("validated covariance")
                    .l();
                for _ in 0..count {
                    let z = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)));
                    let x = &l * z;
                    out.extend(mean.iter().zip(x.iter()).map(|(m, v)| m + v));
                }
            }
            _ => {
                for _ in 0..count {
                    self.sample_into(rng, &mut out);
                }
            }
        }
        out
    }

    fn require_1d(&self) -> Result<()> {
        if self.dim() != 1 {
            return Err(Error::Unsupported(format!(
                "operation needs a one-dimensional spec, got dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Distribution function of a one-dimensional spec.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.require_1d()?;
        Ok(self.cdf_unchecked(x))
    }

    pub(crate) fn cdf_unchecked(&self, x: f64) -> f64 {
        match self {
            DistributionSpec::Gaussian1D { mean, variance } => normal(*mean, *variance).cdf(x),
            DistributionSpec::Uniform1D { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            DistributionSpec::Mixture {
                weight,
                first,
                second,
            } => weight * first.cdf_unchecked(x) + (1.0 - weight) * second.cdf_unchecked(x),
            DistributionSpec::GaussianND { .. } => unreachable!("checked one-dimensional"),
        }
    }

    /// Quantile function of a one-dimensional spec, `inf { x : cdf(x) >= u }`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        self.require_1d()?;
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain {
                name: "u",
                value: u,
                allowed: "[0, 1]",
            });
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        match self {
            DistributionSpec::Gaussian1D { mean, variance } => {
                normal(*mean, *variance).inverse_cdf(u)
            }
            DistributionSpec::Uniform1D { a, b } => a + u * (b - a),
            DistributionSpec::Mixture { .. } => {
                let (mut lo, mut hi) = self.effective_support();
                if u <= 0.0 {
                    return lo;
                }
                if u >= 1.0 {
                    return hi;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf_unchecked(mid) >= u {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
            DistributionSpec::GaussianND { .. } => unreachable!("checked one-dimensional"),
        }
    }

    /// An interval outside which a one-dimensional spec has negligible mass.
    pub(crate) fn effective_support(&self) -> (f64, f64) {
        match self {
            DistributionSpec::Gaussian1D { mean, variance } => {
                let s = variance.sqrt();
                (mean - 40.0 * s, mean + 40.0 * s)
            }
            DistributionSpec::Uniform1D { a, b } => (*a, *b),
            DistributionSpec::Mixture { first, second, .. } => {
                let (a, b) = first.effective_support();
                let (c, d) = second.effective_support();
                (a.min(c), b.max(d))
            }
            DistributionSpec::GaussianND { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Points where a one-dimensional cdf is not smooth.
    pub(crate) fn kinks(&self) -> Vec<f64> {
        match self {
            DistributionSpec::Uniform1D { a, b } => vec![*a, *b],
            DistributionSpec::Mixture { first, second, .. } => {
                let mut k = first.kinks();
                k.extend(second.kinks());
                k
            }
            _ => Vec::new(),
        }
    }

    /// Law of `theta . X`. One-dimensional specs accept `theta = [+-1]`.
    pub fn project(&self, theta: &[f64]) -> Result<Self> {
        if theta.len() != self.dim() {
            return Err(Error::SizeMismatch {
                left: theta.len(),
                right: self.dim(),
            });
        }
        Ok(match self {
            DistributionSpec::GaussianND { mean, covariance } => {
                let d = mean.len();
                let t = DVector::from_column_slice(theta);
                let cov = DMatrix::from_row_slice(d, d, covariance);
                DistributionSpec::Gaussian1D {
                    mean: t.dot(&DVector::from_column_slice(mean)),
                    variance: (t.transpose() * cov * &t)[(0, 0)],
                }
            }
            DistributionSpec::Mixture {
                weight,
                first,
                second,
            } => DistributionSpec::Mixture {
                weight: *weight,
                first: Box::new(first.project(theta)?),
                second: Box::new(second.project(theta)?),
            },
            one_d => one_d.scaled(theta[0]),
        })
    }

    /// Law of `c * X` for a one-dimensional spec and nonzero `c`.
    fn scaled(&self, c: f64) -> Self {
        match self {
            DistributionSpec::Gaussian1D { mean, variance } => DistributionSpec::Gaussian1D {
                mean: c * mean,
                variance: c * c * variance,
            },
            DistributionSpec::Uniform1D { a, b } => {
                let (x, y) = (c * a, c * b);
                DistributionSpec::Uniform1D {
                    a: x.min(y),
                    b: x.max(y),
                }
            }
            DistributionSpec::Mixture {
                weight,
                first,
                second,
            } => DistributionSpec::Mixture {
                weight: *weight,
                first: Box::new(first.scaled(c)),
                second: Box::new(second.scaled(c)),
            },
            DistributionSpec::GaussianND { .. } => unreachable!("one-dimensional only"),
        }
    }
}

fn normal(mean: f64, variance: f64) -> Normal {
    Normal::new(mean, variance.sqrt()).expect("validated gaussian")
}

/// Concatenates IID segments drawn from `specs`, each of the given length.
fn segments<R: Rng>(rng: &mut R, specs: &[(&DistributionSpec, usize)]) -> Result<TimeSeries> {
    let dim = specs.first().map_or(1, |(s, _)| s.dim());
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut at = 0;
    for (i, (spec, len)) in specs.iter().enumerate() {
        if i > 0 {
            labels.push(at);
        }
        values.extend(spec.sample_n(rng, *len));
        at += len;
    }
    Ok(TimeSeries::new(values, dim)?.with_labels(labels))
}

pub const SINGLE_CP_LENGTH: usize = 800;

/// Length-800 scalar sequence, N(0,1) then N(0.25,1), change uniform on 300..=500.
pub fn gen_single_cp_1d(seed: u64) -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = rng.random_range(300..=500);
    let p = DistributionSpec::gaussian(0.0, 1.0).expect("valid");
    let q = DistributionSpec::gaussian(0.25, 1.0).expect("valid");
    segments(&mut rng, &[(&p, tau), (&q, SINGLE_CP_LENGTH - tau)]).expect("valid series")
}

/// The bivariate analogue: correlated Gaussians whose mean flips sign.
pub fn gen_single_cp_2d(seed: u64) -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = rng.random_range(300..=500);
    let (p, q) = single_cp_2d_specs();
    segments(&mut rng, &[(&p, tau), (&q, SINGLE_CP_LENGTH - tau)]).expect("valid series")
}

pub fn single_cp_2d_specs() -> (DistributionSpec, DistributionSpec) {
    let cov = vec![1.0, 0.9, 0.9, 1.0];
    (
        DistributionSpec::gaussian_nd(vec![-0.12, 0.12], cov.clone()).expect("valid"),
        DistributionSpec::gaussian_nd(vec![0.12, -0.12], cov).expect("valid"),
    )
}

pub const SCALE_SEGMENT_LENGTH: usize = 500;

/// Four 500-sample segments, each the previous segment's variable doubled:
/// `N(0.1 * 2^k, 0.1 * 4^k)` for `k = 0..4`. Optionally cubes every sample.
pub fn gen_scale_doubling(seed: u64, apply_cubic: bool) -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(4 * SCALE_SEGMENT_LENGTH);
    for k in 0..4 {
        let scale = (1u32 << k) as f64;
        for _ in 0..SCALE_SEGMENT_LENGTH {
            let z: f64 = StandardNormal.sample(&mut rng);
            let x = scale * (0.1 + 0.1f64.sqrt() * z);
            values.push(if apply_cubic { x * x * x } else { x });
        }
    }
    TimeSeries::univariate(values)
        .expect("finite")
        .with_labels(vec![500, 1000, 1500])
}

/// Segments alternating between N(0,1) and N(0.25,1).
pub fn gen_alternating(seed: u64, segment_len: usize, num_segments: usize) -> Result<TimeSeries> {
    if segment_len == 0 {
        return Err(Error::InvalidParameter("segment_len must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = DistributionSpec::gaussian(0.0, 1.0)?;
    let q = DistributionSpec::gaussian(0.25, 1.0)?;
    let plan: Vec<(&DistributionSpec, usize)> = (0..num_segments)
        .map(|k| (if k % 2 == 0 { &p } else { &q }, segment_len))
        .collect();
    segments(&mut rng, &plan)
}

/// `(U[0,1], U[d,d+1])`.
pub fn gen_uniform_shift_pair(d: f64) -> Result<(DistributionSpec, DistributionSpec)> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::Domain {
            name: "d",
            value: d,
            allowed: "[0, inf)",
        });
    }
    Ok((DistributionSpec::uniform(0.0, 1.0)?, DistributionSpec::uniform(d, d + 1.0)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureResponseCurve {
    pub pi_grid: Vec<f64>,
    /// Monte-Carlo mean per grid point. Q-Q tests are bias-removed and scaled
    /// by `1/n`.
    pub mean_stat: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n: usize,
    pub reps: usize,
    pub asymptote: f64,
    pub test: TestKind,
}

impl MixtureResponseCurve {
    /// Expected asymptotic shape `h(pi)` for the curve's test.
    pub fn shape(&self, pi: f64) -> f64 {
        if self.test.is_quadratic() {
            pi * pi
        } else {
            pi
        }
    }

    /// `max |mean / asymptote - h(pi)|` over the grid.
    pub fn max_shape_deviation(&self) -> f64 {
        self.pi_grid
            .iter()
            .zip(&self.mean_stat)
            .map(|(&pi, &m)| (m / self.asymptote - self.shape(pi)).abs())
            .fold(0.0, f64::max)
    }

    /// Writes `pi,mean,std_error,expected` rows with a header.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "pi,mean,std_error,expected")?;
        for ((&pi, m), se) in self.pi_grid.iter().zip(&self.mean_stat).zip(&self.std_error) {
            writeln!(out, "{pi},{m},{se},{}", self.asymptote * self.shape(pi))?;
        }
        Ok(())
    }
}

/// The grid `0, step, 2 step, ..., 1`.
pub fn pi_grid(step: f64) -> Vec<f64> {
    let count = (1.0 / step).round() as usize;
    (0..=count).map(|i| i as f64 / count as f64).collect()
}

/// Mean statistic when the left window mixes `round(pi n)` draws from `p`
/// with the rest from `q`, against a right window drawn wholly from `q`.
pub fn mixture_response(
    test: &TestKind,
    p: &DistributionSpec,
    q: &DistributionSpec,
    n: usize,
    reps: usize,
    pi_grid: &[f64],
    seed: u64,
) -> Result<MixtureResponseCurve> {
    if reps == 0 || n == 0 {
        return Err(Error::InvalidParameter("reps and n must be at least 1".into()));
    }
    if let Some(&bad) = pi_grid.iter().find(|pi| !(0.0..=1.0).contains(*pi)) {
        return Err(Error::Domain {
            name: "pi",
            value: bad,
            allowed: "[0, 1]",
        });
    }
    if p.dim() != q.dim() {
        return Err(Error::SizeMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    let asymptote = crate::asymptote::asymptote(test, p, q)?;
    let dim = p.dim();
    let qq = test.is_quantile_quantile();
    let mut mean_stat = Vec::with_capacity(pi_grid.len());
    let mut std_error = Vec::with_capacity(pi_grid.len());
    for (g, &pi) in pi_grid.iter().enumerate() {
        let from_p = (pi * n as f64 + 0.5).floor() as usize;
        let draws: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = replicate_rng(seed, (g * reps + r) as u64);
                let mut left = p.sample_n(&mut rng, from_p);
                left.extend(q.sample_n(&mut rng, n - from_p));
                let right = q.sample_n(&mut rng, n);
                let w = WindowPair::new(&left, &right, dim)?;
                let v = evaluate(test, &w)?;
                Ok(if qq {
                    (v - BROWNIAN_BRIDGE_SQ_MEAN) / n as f64
                } else {
                    v
                })
            })
            .collect::<Result<_>>()?;
        let (m, se) = mean_and_se(&draws);
        mean_stat.push(m);
        std_error.push(se);
    }
    Ok(MixtureResponseCurve {
        pi_grid: pi_grid.to_vec(),
        mean_stat,
        std_error,
        n,
        reps,
        asymptote,
        test: *test,
    })
}

/// Sample mean and its standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

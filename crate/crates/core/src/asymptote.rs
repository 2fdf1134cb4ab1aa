//! Population constants `d_*(P, Q)` that each statistic converges to.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::simulation::DistributionSpec;
use crate::two_sample::{ProjectionSet, TestKind};

const NODES: usize = 24;
const PANELS: usize = 64;
const CIRCLE_ANGLES: usize = 720;
const SPHERE_DIRECTIONS: usize = 4096;

/// `d_*(P, Q)` for the given test.
///
/// Multivariate KS, W1-DT and WQT average the marginal constants, matching
/// the per-coordinate averaging of the sample statistics.
pub fn asymptote(test: &TestKind, p: &DistributionSpec, q: &DistributionSpec) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    if p.dim() != q.dim() {
        return Err(Error::SizeMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    let dim = p.dim();
    match test {
        TestKind::Ks => marginal_mean(p, q, d_ks),
        TestKind::W1dt => marginal_mean(p, q, d_w1),
        TestKind::Wqt => marginal_mean(p, q, d_wqt),
        TestKind::Swqt { .. } => d_swqt(p, q, dim),
        TestKind::Mmd2 { kernel_bandwidth } => d_mmd2(p, q, *kernel_bandwidth),
    }
}

fn marginal_mean(
    p: &DistributionSpec,
    q: &DistributionSpec,
    f: fn(&DistributionSpec, &DistributionSpec) -> f64,
) -> Result<f64> {
    let dim = p.dim();
    if dim == 1 {
        return Ok(f(p, q));
    }
    let mut total = 0.0;
    for j in 0..dim {
        let mut e = vec![0.0; dim];
        e[j] = 1.0;
        total += f(&p.project(&e)?, &q.project(&e)?);
    }
    Ok(total / dim as f64)
}

fn rule() -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(NODES).expect("nonzero"))
}

/// Integrates `f` over `[a, b]` with a composite rule whose panel edges
/// include every point of `breaks` inside the interval.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> f64 {
    let mut edges: Vec<f64> = (0..=PANELS)
        .map(|i| a + (b - a) * i as f64 / PANELS as f64)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let gl = rule();
    edges
        .windows(2)
        .map(|w| gl.integrate(w[0], w[1], &f))
        .sum()
}

fn joint_range(p: &DistributionSpec, q: &DistributionSpec) -> (f64, f64) {
    let (a, b) = p.effective_support();
    let (c, d) = q.effective_support();
    (a.min(c), b.max(d))
}

/// `sup_x |P(x) - Q(x)|`: a dense scan refined by golden-section search.
fn d_ks(p: &DistributionSpec, q: &DistributionSpec) -> f64 {
    let gap = |x: f64| (p.cdf_unchecked(x) - q.cdf_unchecked(x)).abs();
    let (lo, hi) = joint_range(p, q);
    let steps = 20_000;
    let h = (hi - lo) / steps as f64;
    let mut best = (lo, gap(lo));
    for i in 1..=steps {
        let x = lo + h * i as f64;
        let v = gap(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    for k in p.kinks().into_iter().chain(q.kinks()) {
        let v = gap(k);
        if v > best.1 {
            best = (k, v);
        }
    }
    let (mut a, mut b) = (best.0 - h, best.0 + h);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let x1 = b - ratio * (b - a);
        let x2 = a + ratio * (b - a);
        if gap(x1) < gap(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    best.1.max(gap(0.5 * (a + b)))
}

/// `integral |P(x) - Q(x)| dx`.
fn d_w1(p: &DistributionSpec, q: &DistributionSpec) -> f64 {
    let (lo, hi) = joint_range(p, q);
    let mut breaks = p.kinks();
    breaks.extend(q.kinks());
    integrate(
        |x| (p.cdf_unchecked(x) - q.cdf_unchecked(x)).abs(),
        lo,
        hi,
        &breaks,
    )
}

/// `1/2 integral_0^1 (P(Q^{-1}(x)) - x)^2 dx`.
fn d_wqt(p: &DistributionSpec, q: &DistributionSpec) -> f64 {
    let (p_lo, p_hi) = p.effective_support();
    let (q_lo, q_hi) = q.effective_support();
    // Disjoint supports: the Q-Q function is identically 0 or 1.
    if p_hi <= q_lo || q_hi <= p_lo {
        return 1.0 / 6.0;
    }
    let breaks: Vec<f64> = p
        .kinks()
        .into_iter()
        .chain(q.kinks())
        .map(|k| q.cdf_unchecked(k))
        .collect();
    let qq = |x: f64| {
        let r = p.cdf_unchecked(q.quantile_unchecked(x)) - x;
        r * r
    };
    0.5 * integrate(qq, 0.0, 1.0, &breaks)
}

fn d_swqt(p: &DistributionSpec, q: &DistributionSpec, dim: usize) -> Result<f64> {
    let along = |theta: &[f64]| -> Result<f64> { Ok(d_wqt(&p.project(theta)?, &q.project(theta)?)) };
    match dim {
        1 => Ok(0.5 * (along(&[1.0])? + along(&[-1.0])?)),
        2 => {
            let mut total = 0.0;
            for k in 0..CIRCLE_ANGLES {
                let phi = std::f64::consts::TAU * k as f64 / CIRCLE_ANGLES as f64;
                total += along(&[phi.cos(), phi.sin()])?;
            }
            Ok(total / CIRCLE_ANGLES as f64)
        }
        _ => {
            let set = ProjectionSet::new(dim, SPHERE_DIRECTIONS, 0)?;
            let mut total = 0.0;
            for (theta, mult) in set.directions() {
                total += *mult as f64 * along(theta)?;
            }
            Ok(total / set.count() as f64)
        }
    }
}

/// `E k(X, X') + E k(Y, Y') - 2 E k(X, Y)` for the Gaussian kernel.
fn d_mmd2(p: &DistributionSpec, q: &DistributionSpec, sigma: f64) -> Result<f64> {
    Ok(kernel_mean(p, p, sigma)? + kernel_mean(q, q, sigma)? - 2.0 * kernel_mean(p, q, sigma)?)
}

/// `E exp(-|X - Y|^2 / (2 sigma^2))` for independent `X ~ a`, `Y ~ b`.
pub(crate) fn kernel_mean(a: &DistributionSpec, b: &DistributionSpec, sigma: f64) -> Result<f64> {
    use DistributionSpec as D;
    let s2 = sigma * sigma;
    Ok(match (a, b) {
        (
            D::Mixture {
                weight,
                first,
                second,
            },
            other,
        )
        | (
            other,
            D::Mixture {
                weight,
                first,
                second,
            },
        ) => weight * kernel_mean(first, other, sigma)? + (1.0 - weight) * kernel_mean(second, other, sigma)?,
        (D::Gaussian1D { .. } | D::GaussianND { .. }, D::Gaussian1D { .. } | D::GaussianND { .. }) => {
            let (m1, c1) = moments(a);
            let (m2, c2) = moments(b);
            let d = m1.len();
            let s = c1 + c2;
            let delta = m1 - m2;
            let shifted = &s + DMatrix::identity(d, d) * s2;
            let det = (DMatrix::identity(d, d) + &s / s2).determinant();
            let solved = shifted
                .cholesky()
                .expect("positive definite")
                .solve(&delta);
            det.powf(-0.5) * (-0.5 * delta.dot(&solved)).exp()
        }
        (D::Uniform1D { a: lo, b: hi }, D::Gaussian1D { mean, variance })
        | (D::Gaussian1D { mean, variance }, D::Uniform1D { a: lo, b: hi }) => {
            let s = (s2 + variance).sqrt();
            let z = Normal::new(0.0, 1.0).expect("standard normal");
            sigma * std::f64::consts::TAU.sqrt() / (hi - lo)
                * (z.cdf((hi - mean) / s) - z.cdf((lo - mean) / s))
        }
        (D::Uniform1D { a: a0, b: a1 }, D::Uniform1D { a: b0, b: b1 }) => {
            let z = Normal::new(0.0, 1.0).expect("standard normal");
            let inner = |x: f64| {
                sigma * std::f64::consts::TAU.sqrt() * (z.cdf((b1 - x) / sigma) - z.cdf((b0 - x) / sigma))
            };
            integrate(inner, *a0, *a1, &[*b0, *b1]) / ((a1 - a0) * (b1 - b0))
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "no MMD kernel mean for {a:?} against {b:?}"
            )))
        }
    })
}

fn moments(spec: &DistributionSpec) -> (DVector<f64>, DMatrix<f64>) {
    match spec {
        DistributionSpec::Gaussian1D { mean, variance } => {
            (DVector::from_element(1, *mean), DMatrix::from_element(1, 1, *variance))
        }
        DistributionSpec::GaussianND { mean, covariance } => (
            DVector::from_column_slice(mean),
            DMatrix::from_row_slice(mean.len(), mean.len(), covariance),
        ),
        _ => unreachable!("gaussian only"),
    }
}

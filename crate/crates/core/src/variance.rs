//! Asymptotic variances of the debiased statistic.
//!
//! Under calibration the statistic, scaled by `n√w`, is asymptotically
//! normal with variance `σ₀² = 2∫_Δ (‖z‖₂² − 2‖z‖₃³ + ‖z‖₂⁴) dz` — a pure
//! geometry constant of (K, k). Under miscalibration the `√n` rate applies
//! with a variance `σ₁²` estimated by the plug-in [`sigma1_hat_sq`] built
//! from per-bin means and covariances.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimator::{BinStats, Kahan};

/// How to evaluate the σ₀² integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sigma0Method {
    /// Antiderivative, available only for depth 1 (and full depth K = 2,
    /// which reduces to it).
    ClosedFormK1,
    /// Midpoint rule on a grid of side `1/(resolution·K)`, cells kept when
    /// their centers satisfy the chamber constraints.
    Quadrature,
    /// Rejection sampling, `resolution` draws; deterministic internal seed.
    MonteCarlo,
}

/// `‖z‖₂² − 2‖z‖₃³ + ‖z‖₂⁴` with `‖z‖₂⁴ = (Σ z_j²)²`.
fn integrand(z: &[f64]) -> f64 {
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    for &v in z {
        s2 += v * v;
        s3 += v * v * v;
    }
    s2 - 2.0 * s3 + s2 * s2
}

/// Antiderivative of the depth-1 integrand `z² − 2z³ + z⁴ = z²(1−z)²`.
fn antiderivative_k1(z: f64) -> f64 {
    z.powi(3) / 3.0 - z.powi(4) / 2.0 + z.powi(5) / 5.0
}

fn closed_form_k1(num_classes: usize) -> f64 {
    2.0 * (antiderivative_k1(1.0) - antiderivative_k1(1.0 / num_classes as f64))
}

/// Recursive midpoint sweep over non-increasing cell centers. Returns the
/// integrand sum over admissible cells and how many were admitted.
fn quad_recurse(
    depth_left: usize,
    max_index: usize,
    centers: &mut Vec<f64>,
    partial_sum: f64,
    side: f64,
    lower_sum: f64,
    acc: &mut Kahan,
    admitted: &mut usize,
) {
    if depth_left == 0 {
        if partial_sum >= lower_sum && partial_sum <= 1.0 {
            acc.add(integrand(centers));
            *admitted += 1;
        }
        return;
    }
    for i in 0..=max_index {
        let c = (i as f64 + 0.5) * side;
        let new_sum = partial_sum + c;
        // Remaining coordinates only grow the sum; prune past the ceiling.
        if new_sum > 1.0 {
            break;
        }
        centers.push(c);
        quad_recurse(
            depth_left - 1,
            i,
            centers,
            new_sum,
            side,
            lower_sum,
            acc,
            admitted,
        );
        centers.pop();
    }
}

fn quadrature(num_classes: usize, depth: usize, resolution: usize) -> Result<f64> {
    if resolution == 0 {
        return Err(Error::ResolutionTooCoarse {
            resolution,
            num_classes,
            k: depth,
        });
    }
    let cells = resolution * num_classes;
    let side = 1.0 / cells as f64;
    let lower_sum = depth as f64 / num_classes as f64;
    let mut acc = Kahan::default();
    let mut admitted = 0usize;
    let mut centers = Vec::with_capacity(depth);
    quad_recurse(
        depth,
        cells - 1,
        &mut centers,
        0.0,
        side,
        lower_sum,
        &mut acc,
        &mut admitted,
    );
    if admitted == 0 {
        return Err(Error::ResolutionTooCoarse {
            resolution,
            num_classes,
            k: depth,
        });
    }
    Ok(2.0 * acc.value() * side.powi(depth as i32))
}

fn monte_carlo(num_classes: usize, depth: usize, samples: usize) -> Result<f64> {
    if samples == 0 {
        return Err(Error::ResolutionTooCoarse {
            resolution: samples,
            num_classes,
            k: depth,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ec7_0a2d_9b1f_c4e3);
    let lower_sum = depth as f64 / num_classes as f64;
    let mut acc = Kahan::default();
    let mut z = vec![0.0_f64; depth];
    for _ in 0..samples {
        let mut sum = 0.0;
        for v in z.iter_mut() {
            *v = rng.random::<f64>();
            sum += *v;
        }
        if sum < lower_sum || sum > 1.0 {
            continue;
        }
        z.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
        acc.add(integrand(&z));
    }
    // Draws sorted descending are uniform on the monotone cone of volume
    // 1/k!; rejection keeps the chamber slice, so Σf/N estimates
    // ∫_Δ f · k!, hence the 1/k! correction.
    let factorial: f64 = (1..=depth).map(|i| i as f64).product();
    Ok(2.0 * acc.value() / (samples as f64 * factorial))
}

/// Variance of the null limit: `σ₀²(K, k)`. Full depth `k = K = 2` reduces
/// to the top coordinate: residuals satisfy `U₂ = −U₁` there, doubling each
/// cross product and quadrupling the variance of the depth-1 problem.
pub fn sigma0_sq(
    num_classes: usize,
    depth: usize,
    method: Sigma0Method,
    resolution: usize,
) -> Result<f64> {
    if num_classes < 2 {
        return Err(Error::TooFewClasses { num_classes });
    }
    if depth == 0 || depth > num_classes {
        return Err(Error::DepthOutOfRange {
            k: depth,
            num_classes,
        });
    }
    if depth == num_classes {
        if num_classes > 2 {
            return Err(Error::UnsupportedPartition { num_classes });
        }
        return Ok(4.0 * sigma0_sq(2, 1, method, resolution)?);
    }
    match method {
        Sigma0Method::ClosedFormK1 => {
            if depth != 1 {
                return Err(Error::DepthOutOfRange {
                    k: depth,
                    num_classes,
                });
            }
            Ok(closed_form_k1(num_classes))
        }
        Sigma0Method::Quadrature => quadrature(num_classes, depth, resolution),
        Sigma0Method::MonteCarlo => monte_carlo(num_classes, depth, resolution),
    }
}

/// Default resolution for the midpoint rule (cells per axis = 400·K).
pub const DEFAULT_QUADRATURE_RESOLUTION: usize = 400;
/// Default rejection-sampling size for the Monte-Carlo cross-check.
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

/// σ₀² with the preferred method per depth: closed form when the depth-1
/// antiderivative applies, midpoint quadrature otherwise.
pub fn sigma0_sq_default(num_classes: usize, depth: usize) -> Result<f64> {
    if depth == 1 || (depth == 2 && num_classes == 2) {
        sigma0_sq(num_classes, depth, Sigma0Method::ClosedFormK1, 0).or_else(|_| {
            sigma0_sq(
                num_classes,
                depth,
                Sigma0Method::Quadrature,
                DEFAULT_QUADRATURE_RESOLUTION,
            )
        })
    } else {
        sigma0_sq(
            num_classes,
            depth,
            Sigma0Method::Quadrature,
            DEFAULT_QUADRATURE_RESOLUTION,
        )
    }
}

/// Plug-in variance for the miscalibrated regime, over all non-empty bins:
/// `σ̂₁² = Σ (N/n)‖ū‖⁴ − (Σ (N/n)‖ū‖²)² + 4 Σ (N/n) ūᵀ Ĉ ū`.
pub fn sigma1_hat_sq(stats: &[BinStats], n: usize) -> Result<f64> {
    let total: usize = stats.iter().map(|s| s.count).sum();
    if total != n {
        return Err(Error::CountMismatch {
            expected: n,
            got: total,
        });
    }
    let nf = n as f64;
    let mut fourth = Kahan::default();
    let mut second = Kahan::default();
    let mut quad_form = Kahan::default();
    for b in stats {
        let weight = b.count as f64 / nf;
        let k = b.mean_u.len();
        let mean_sq: f64 = b.mean_u.iter().map(|m| m * m).sum();
        fourth.add(weight * mean_sq * mean_sq);
        second.add(weight * mean_sq);
        let mut q = 0.0;
        for r in 0..k {
            for c in 0..k {
                q += b.mean_u[r] * b.cov_u[r * k + c] * b.mean_u[c];
            }
        }
        quad_form.add(weight * q);
    }
    Ok(fourth.value() - second.value() * second.value() + 4.0 * quad_form.value())
}

/// The two variance figures used by the interval construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimates {
    /// Calibrated-regime constant σ₀² for the partition's (K, k).
    pub sigma0_sq: f64,
    /// Plug-in σ̂₁²; can dip slightly below 0 in finite samples.
    pub sigma1_hat_sq: f64,
    /// `sqrt(max(σ̂₁², 0))`.
    pub sigma1_hat: f64,
}

impl VarianceEstimates {
    pub fn new(sigma0_sq: f64, sigma1_hat_sq: f64) -> VarianceEstimates {
        VarianceEstimates {
            sigma0_sq,
            sigma1_hat_sq,
            sigma1_hat: sigma1_hat_sq.max(0.0).sqrt(),
        }
    }
}

//! Adjusted confidence intervals and the calibration hypothesis test.
//!
//! The squared-error estimate obeys two asymptotic regimes: `√n`-normal
//! around a positive target when the model is miscalibrated, and a faster
//! `1/(n√w)` null scale when it is calibrated. The adjusted interval picks
//! its shape from the estimate itself (three branches around the positive
//! part `t⁺`), then applies a zero-inclusion rule at the null scale so the
//! set stays honest in both regimes.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::erf::{erf_inv, erfc};

use crate::binning::{group_by_bin, PartitionSpec};
use crate::domain::TopKView;
use crate::error::{Error, Result};
use crate::estimator::EstimateValue;
use crate::util::{derive_seed, quantile_sorted};
use crate::variance::VarianceEstimates;

/// Standard normal CDF, accurate in both tails via `erfc`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal inverse CDF, |error| ≤ 1e−9: rational approximation
/// seed refined by two Newton steps against [`normal_cdf`].
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidLevel(p));
    }
    let mut x = std::f64::consts::SQRT_2 * erf_inv(2.0 * p - 1.0);
    if !x.is_finite() {
        return Ok(x);
    }
    let norm = 1.0 / std::f64::consts::TAU.sqrt();
    for _ in 0..2 {
        let pdf = norm * (-0.5 * x * x).exp();
        if pdf <= f64::MIN_POSITIVE {
            break;
        }
        x -= (normal_cdf(x) - p) / pdf;
    }
    Ok(x)
}

/// Which branch of the three-case interval construction fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    /// `t⁺` far from zero: symmetric two-sided interval.
    Wide,
    /// `t⁺` near zero: one-sided-width interval, punctured at 0 when it
    /// reaches down that far.
    Punctured,
    /// Intermediate: lower endpoint pinned at `t⁺/2`.
    HalfWidth,
}

/// The adjusted confidence set for the squared error. Not always a plain
/// interval: it may exclude the single point 0 (punctured) or be unioned
/// with {0} (zero rule), so membership goes through [`contains`].
///
/// [`contains`]: AdjustedInterval::contains
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedInterval {
    /// Left endpoint, ≥ 0.
    pub lower: f64,
    /// Right endpoint, ≥ lower.
    pub upper: f64,
    /// Set is `[lower, upper] \ {0}` with `lower = 0`.
    pub excludes_zero_point: bool,
    /// Zero-inclusion rule fired; the set is unioned with {0}.
    pub includes_zero: bool,
    /// Branch that produced the endpoints.
    pub case_tag: CaseTag,
    /// Nominal miscoverage level.
    pub alpha: f64,
    /// The dispersion estimate was exactly 0, so the base interval
    /// degenerated to the single point `t⁺`.
    pub degenerate_variance: bool,
}

impl AdjustedInterval {
    /// Exact membership, honoring the puncture and the zero rule.
    pub fn contains(&self, x: f64) -> bool {
        if x == 0.0 {
            return self.includes_zero || (self.lower == 0.0 && !self.excludes_zero_point);
        }
        self.lower <= x && x <= self.upper
    }

    /// Width of the bracketing interval.
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Builds the adjusted confidence set around the positive-part estimate.
///
/// With `h₂ = z_{α/2}·σ̂₁/√n` and `h₁ = z_α·σ̂₁/√n`, the first branch whose
/// condition holds wins: (i) `t⁺/2 ≤ t⁺−h₂` → `[t⁺−h₂, t⁺+h₂]`;
/// (ii) `t⁺−h₁ < t⁺/2` → `[max(0, t⁺−h₁), t⁺+h₂] \ {0}`;
/// (iii) otherwise `[t⁺/2, t⁺+h₂]`. Afterwards 0 joins the set whenever
/// `t⁺ < z_α·σ₀/(n√w)`, the detection threshold of the calibrated regime.
pub fn adjusted_ci(
    t_plus: f64,
    sigma1_hat: f64,
    sigma0: f64,
    n: usize,
    w: f64,
    alpha: f64,
) -> Result<AdjustedInterval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidLevel(alpha));
    }
    debug_assert!(t_plus >= 0.0 && sigma1_hat >= 0.0 && sigma0 > 0.0 && n >= 2);
    let sqrt_n = (n as f64).sqrt();
    let h2 = normal_quantile(1.0 - alpha / 2.0)? * sigma1_hat / sqrt_n;
    let h1 = normal_quantile(1.0 - alpha)? * sigma1_hat / sqrt_n;

    let (lower, upper, case_tag, mut excludes_zero_point) = if t_plus / 2.0 <= t_plus - h2 {
        (t_plus - h2, t_plus + h2, CaseTag::Wide, false)
    } else if t_plus - h1 < t_plus / 2.0 {
        let lo = (t_plus - h1).max(0.0);
        (lo, t_plus + h2, CaseTag::Punctured, lo == 0.0)
    } else {
        (t_plus / 2.0, t_plus + h2, CaseTag::HalfWidth, false)
    };

    let includes_zero = t_plus < normal_quantile(1.0 - alpha)? * sigma0 / (n as f64 * w.sqrt());
    if includes_zero {
        excludes_zero_point = false;
    }
    Ok(AdjustedInterval {
        lower,
        upper,
        excludes_zero_point,
        includes_zero,
        case_tag,
        alpha,
        degenerate_variance: sigma1_hat == 0.0,
    })
}

/// One-sided test of the calibrated null: `p = 1 − Φ(n√w·t/σ₀)`, rejecting
/// when `p < α`.
pub fn calibration_test(t: f64, sigma0: f64, n: usize, w: f64, alpha: f64) -> Result<(f64, bool)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidLevel(alpha));
    }
    debug_assert!(sigma0 > 0.0);
    let statistic = n as f64 * w.sqrt() * t / sigma0;
    let p = 1.0 - normal_cdf(statistic);
    Ok((p, p < alpha))
}

/// Everything the pipeline reports for one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub estimate: EstimateValue,
    pub variances: VarianceEstimates,
    /// Confidence set for the squared error.
    pub ci_squared: AdjustedInterval,
    /// Square roots of `ci_squared`'s endpoints (error scale).
    pub ci_root: (f64, f64),
    /// One-sided p-value of the calibrated null.
    pub p_value_calibrated: f64,
    /// CI-inversion rejection: 0 outside `ci_squared`.
    pub reject_at_alpha: bool,
}

/// Runs estimate → variances → interval → test on finished bin statistics.
pub fn estimate_report(
    estimate: EstimateValue,
    variances: VarianceEstimates,
    alpha: f64,
) -> Result<EstimateReport> {
    let spec = estimate.spec;
    // The null-regime normalization uses the chamber's effective dimension,
    // which differs from the cell volume only at full depth k = K.
    let w = spec.scaling_volume();
    let ci_squared = adjusted_ci(
        estimate.t_plus,
        variances.sigma1_hat,
        variances.sigma0_sq.sqrt(),
        estimate.n,
        w,
        alpha,
    )?;
    let (p_value_calibrated, _) =
        calibration_test(estimate.t, variances.sigma0_sq.sqrt(), estimate.n, w, alpha)?;
    let reject_at_alpha = !ci_squared.contains(0.0);
    Ok(EstimateReport {
        ci_root: (ci_squared.lower.sqrt(), ci_squared.upper.sqrt()),
        p_value_calibrated,
        reject_at_alpha,
        estimate,
        variances,
        ci_squared,
    })
}

/// Per-example pieces needed to resample labels from the prediction itself:
/// the bin's member list plus each member's top-k probabilities and their
/// running sums.
struct ResamplePlan {
    /// (start, len) into `z_rows`/`cum_rows` per bin.
    bins: Vec<(usize, usize)>,
    z_rows: Vec<f64>,
    cum_rows: Vec<f64>,
    k: usize,
    n: usize,
}

impl ResamplePlan {
    fn build(view: &TopKView, spec: &PartitionSpec) -> Result<ResamplePlan> {
        let groups = group_by_bin(view, spec)?;
        let k = view.k();
        let n = view.len();
        let mut bins = Vec::with_capacity(groups.len());
        let mut z_rows = Vec::with_capacity(n * k);
        let mut cum_rows = Vec::with_capacity(n * k);
        for indices in groups.values() {
            bins.push((z_rows.len() / k, indices.len()));
            for &i in indices {
                let row = view.z_row(i);
                let mut cum = 0.0;
                for &z in row {
                    z_rows.push(z);
                    cum += z;
                    cum_rows.push(cum);
                }
            }
        }
        Ok(ResamplePlan {
            bins,
            z_rows,
            cum_rows,
            k,
            n,
        })
    }

    /// One synthetic-label replication of the 1/N-weighted statistic: labels
    /// drawn from each row's own predicted distribution (rank j with
    /// probability z_j, anything outside the top k with the remainder).
    fn replicate(&self, rng: &mut ChaCha8Rng, sum_u: &mut [f64]) -> f64 {
        let k = self.k;
        let mut total = 0.0;
        for &(start, len) in &self.bins {
            sum_u.fill(0.0);
            let mut sum_usq = 0.0;
            for r in 0..len {
                let off = (start + r) * k;
                let z = &self.z_rows[off..off + k];
                let cum = &self.cum_rows[off..off + k];
                let v: f64 = rng.random();
                let mut hit = usize::MAX;
                for j in 0..k {
                    if v < cum[j] {
                        hit = j;
                        break;
                    }
                }
                let mut usq = 0.0;
                for j in 0..k {
                    let u = if j == hit { 1.0 - z[j] } else { -z[j] };
                    sum_u[j] += u;
                    usq += u * u;
                }
                sum_usq += usq;
            }
            let norm_sq: f64 = sum_u.iter().map(|s| s * s).sum();
            total += (norm_sq - sum_usq) / len as f64;
        }
        total / self.n as f64
    }
}

/// Monte-Carlo rejection threshold for the 1/N-weighted statistic under the
/// consistency-resampling null: the empirical `1−α` quantile of `reps`
/// replications, each with labels redrawn from the predictions themselves.
/// Deterministic given `seed` and independent of thread count.
pub fn tcal_threshold(
    view: &TopKView,
    spec: &PartitionSpec,
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidLevel(alpha));
    }
    let plan = ResamplePlan::build(view, spec)?;
    let mut stats: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x7ca1, rep as u64]));
            let mut sum_u = vec![0.0; plan.k];
            plan.replicate(&mut rng, &mut sum_u)
        })
        .collect();
    stats.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(quantile_sorted(&stats, 1.0 - alpha))
}

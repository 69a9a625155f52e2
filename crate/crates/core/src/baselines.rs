//! Resampling comparison methods: percentile bootstrap, subsampling with a
//! known convergence rate, and convex-hull fold intervals.
//!
//! These exist to benchmark the adjusted interval, not to be used as
//! primary inference: near calibration the statistic sits at a boundary of
//! its parameter space where the bootstrap is inconsistent, subsampling
//! pays a rate penalty, and fold intervals inflate. Every method recomputes
//! the debiased statistic on resampled rows through a per-dataset cache of
//! (bin id, residual row) pairs, so a replicate costs O(n·k).

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::binning::{group_by_bin, PartitionSpec};
use crate::domain::{topk_project, Dataset};
use crate::error::{Error, Result};
use crate::util::{derive_seed, quantile_sorted};

/// Plain closed interval, the output shape of every resampling method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Which resampling scheme to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleMethod {
    Bootstrap,
    Subsampling,
    Hulc,
}

/// Knobs shared by the resampling baselines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleConfig {
    pub method: ResampleMethod,
    /// Number of resamples B.
    pub replications: usize,
    /// Subsample size b; `None` means ⌊√n⌋ (subsampling only).
    pub subsample_size: Option<usize>,
    /// Convergence-rate exponent γ in τ_n = n^γ (subsampling only); the
    /// miscalibrated-regime rate γ = 1/2 by default.
    pub rate_exponent: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl ResampleConfig {
    pub fn new(method: ResampleMethod, alpha: f64, seed: u64) -> ResampleConfig {
        ResampleConfig {
            method,
            replications: 1000,
            subsample_size: None,
            rate_exponent: 0.5,
            alpha,
            seed,
        }
    }
}

/// Per-example bin assignment and residuals, fixed across replicates.
struct RowCache {
    bin_ids: Vec<u32>,
    u: Vec<f64>,
    k: usize,
    n: usize,
    num_bins: usize,
}

impl RowCache {
    fn build(d: &Dataset, k: usize, spec: &PartitionSpec) -> Result<RowCache> {
        let view = topk_project(d, k)?;
        let groups = group_by_bin(&view, spec)?;
        let n = view.len();
        let mut bin_ids = vec![0u32; n];
        for (dense, indices) in groups.values().enumerate() {
            for &i in indices {
                bin_ids[i] = dense as u32;
            }
        }
        let mut u = Vec::with_capacity(n * k);
        for i in 0..n {
            u.extend_from_slice(view.u_row(i));
        }
        Ok(RowCache {
            bin_ids,
            u,
            k,
            n,
            num_bins: groups.len(),
        })
    }

    /// Debiased statistic over a multiset of row indices.
    fn statistic(&self, indices: &[usize]) -> f64 {
        let k = self.k;
        let mut counts = vec![0u32; self.num_bins];
        let mut sum_u = vec![0.0f64; self.num_bins * k];
        let mut sum_usq = vec![0.0f64; self.num_bins];
        for &i in indices {
            let b = self.bin_ids[i] as usize;
            counts[b] += 1;
            let row = &self.u[i * k..(i + 1) * k];
            let dst = &mut sum_u[b * k..(b + 1) * k];
            let mut usq = 0.0;
            for j in 0..k {
                dst[j] += row[j];
                usq += row[j] * row[j];
            }
            sum_usq[b] += usq;
        }
        let mut total = 0.0;
        for b in 0..self.num_bins {
            if counts[b] >= 2 {
                let norm_sq: f64 = sum_u[b * k..(b + 1) * k].iter().map(|s| s * s).sum();
                total += (norm_sq - sum_usq[b]) / (counts[b] - 1) as f64;
            }
        }
        total / indices.len() as f64
    }

    fn full_sample_statistic(&self) -> f64 {
        let all: Vec<usize> = (0..self.n).collect();
        self.statistic(&all)
    }
}

fn sorted_replicates(
    cache: &RowCache,
    replications: usize,
    seed: u64,
    tag: u64,
    one: impl Fn(&mut ChaCha8Rng) -> Vec<usize> + Sync + Send,
) -> Vec<f64> {
    let mut stats: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[tag, rep as u64]));
            let indices = one(&mut rng);
            cache.statistic(&indices)
        })
        .collect();
    stats.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    stats
}

/// Percentile bootstrap: B resamples of size n with replacement, interval
/// `[q_{α/2}, q_{1−α/2}]` of the replicate statistics.
pub fn bootstrap_ci(d: &Dataset, k: usize, spec: &PartitionSpec, cfg: &ResampleConfig) -> Result<Interval> {
    let cache = RowCache::build(d, k, spec)?;
    let n = cache.n;
    let stats = sorted_replicates(&cache, cfg.replications, cfg.seed, 0xb007, move |rng| {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    });
    Ok(Interval {
        lower: quantile_sorted(&stats, cfg.alpha / 2.0),
        upper: quantile_sorted(&stats, 1.0 - cfg.alpha / 2.0),
    })
}

/// Subsampling: B draws of size b without replacement; the replicate
/// quantiles are recentered at the full-sample statistic and shrunk by
/// `τ_b/τ_n`, the ratio of assumed convergence rates.
pub fn subsampling_ci(
    d: &Dataset,
    k: usize,
    spec: &PartitionSpec,
    cfg: &ResampleConfig,
) -> Result<Interval> {
    let cache = RowCache::build(d, k, spec)?;
    let n = cache.n;
    let b = cfg
        .subsample_size
        .unwrap_or_else(|| (n as f64).sqrt().floor() as usize);
    if b < 2 || b > n {
        return Err(Error::SubsampleTooSmall { b, n });
    }
    let t_full = cache.full_sample_statistic();
    let stats = sorted_replicates(&cache, cfg.replications, cfg.seed, 0x50b5, move |rng| {
        let mut pool: Vec<usize> = (0..n).collect();
        let (chosen, _) = pool.partial_shuffle(rng, b);
        chosen.to_vec()
    });
    let rate = (b as f64 / n as f64).powf(cfg.rate_exponent);
    let q_hi = quantile_sorted(&stats, 1.0 - cfg.alpha / 2.0);
    let q_lo = quantile_sorted(&stats, cfg.alpha / 2.0);
    Ok(Interval {
        lower: t_full - rate * (q_hi - t_full),
        upper: t_full - rate * (q_lo - t_full),
    })
}

/// Fold count for the convex-hull interval: smallest B with
/// `(1/2+Δ)^B + (1/2−Δ)^B ≤ α`.
pub fn hulc_splits(alpha: f64, delta: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidLevel(alpha));
    }
    let mut b = 1usize;
    loop {
        let miss = (0.5 + delta).powi(b as i32) + (0.5 - delta).powi(b as i32);
        if miss <= alpha {
            return Ok(b);
        }
        b += 1;
        if b > 64 {
            return Err(Error::InvalidLevel(alpha));
        }
    }
}

/// Convex-hull interval: split the data into `hulc_splits` random folds of
/// near-equal size, compute the statistic per fold, take [min, max]. The
/// `delta` median-bias parameter defaults to 0; the adaptive estimation of
/// delta from data is out of scope and flagged by callers in reports.
pub fn hulc_ci(
    d: &Dataset,
    k: usize,
    spec: &PartitionSpec,
    alpha: f64,
    seed: u64,
    delta: f64,
) -> Result<Interval> {
    let splits = hulc_splits(alpha, delta)?;
    let cache = RowCache::build(d, k, spec)?;
    let n = cache.n;
    if n < splits {
        return Err(Error::TooFewExamples { n, splits });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x41c, 0]));
    order.shuffle(&mut rng);
    let base = n / splits;
    let remainder = n % splits;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut start = 0;
    for fold in 0..splits {
        let len = base + usize::from(fold < remainder);
        let t = cache.statistic(&order[start..start + len]);
        lo = lo.min(t);
        hi = hi.max(t);
        start += len;
    }
    Ok(Interval {
        lower: lo,
        upper: hi,
    })
}

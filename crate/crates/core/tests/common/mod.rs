//! Shared oracle implementations for integration tests: deliberately naive
//! O(n²) routes that must agree with the production code.
#![allow(dead_code)]

use ece_ci::{group_by_bin, Dataset, PartitionSpec, TopKView};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Debiased statistic via the literal ordered-pair double loop.
pub fn brute_force_debiased(view: &TopKView, spec: &PartitionSpec) -> f64 {
    let groups = group_by_bin(view, spec).unwrap();
    let n = view.len();
    let mut total = 0.0;
    for indices in groups.values() {
        let count = indices.len();
        if count < 2 {
            continue;
        }
        let mut pair_sum = 0.0;
        for &a in indices {
            for &b in indices {
                if a != b {
                    let dot: f64 = view
                        .u_row(a)
                        .iter()
                        .zip(view.u_row(b))
                        .map(|(x, y)| x * y)
                        .sum();
                    pair_sum += dot;
                }
            }
        }
        total += pair_sum / (count - 1) as f64;
    }
    total / n as f64
}

/// 1/N-weighted statistic via the same double loop.
pub fn brute_force_tcal(view: &TopKView, spec: &PartitionSpec) -> f64 {
    let groups = group_by_bin(view, spec).unwrap();
    let n = view.len();
    let mut total = 0.0;
    for indices in groups.values() {
        let count = indices.len();
        let mut pair_sum = 0.0;
        for &a in indices {
            for &b in indices {
                if a != b {
                    let dot: f64 = view
                        .u_row(a)
                        .iter()
                        .zip(view.u_row(b))
                        .map(|(x, y)| x * y)
                        .sum();
                    pair_sum += dot;
                }
            }
        }
        total += pair_sum / count as f64;
    }
    total / n as f64
}

/// Plug-in variance evaluated directly from its definition, with per-bin
/// means and centered covariances recomputed in two passes (an independent
/// route from the production accumulator).
pub fn sigma1_direct(view: &TopKView, spec: &PartitionSpec) -> f64 {
    let groups = group_by_bin(view, spec).unwrap();
    let n = view.len() as f64;
    let k = view.k();
    let mut fourth = 0.0;
    let mut second = 0.0;
    let mut quad = 0.0;
    for indices in groups.values() {
        let count = indices.len() as f64;
        let weight = count / n;
        let mut mean = vec![0.0; k];
        for &i in indices {
            for (m, &u) in mean.iter_mut().zip(view.u_row(i)) {
                *m += u;
            }
        }
        for m in mean.iter_mut() {
            *m /= count;
        }
        let mut cov = vec![0.0; k * k];
        for &i in indices {
            let u = view.u_row(i);
            for r in 0..k {
                for c in 0..k {
                    cov[r * k + c] += (u[r] - mean[r]) * (u[c] - mean[c]);
                }
            }
        }
        for v in cov.iter_mut() {
            *v /= count;
        }
        let mean_sq: f64 = mean.iter().map(|m| m * m).sum();
        fourth += weight * mean_sq * mean_sq;
        second += weight * mean_sq;
        let mut q = 0.0;
        for r in 0..k {
            for c in 0..k {
                q += mean[r] * cov[r * k + c] * mean[c];
            }
        }
        quad += weight * q;
    }
    fourth - second * second + 4.0 * quad
}

/// Random small fixture: uniform-simplex prediction rows, labels drawn
/// either from the prediction or uniformly, random geometry.
pub fn random_fixture(seed: u64) -> (Dataset, usize, PartitionSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=50);
    let num_classes = rng.random_range(2..=5);
    let k = if num_classes == 2 {
        rng.random_range(1..=2) // k = K = 2 is a supported corner
    } else {
        rng.random_range(1..=2.min(num_classes - 1))
    };
    let cells = rng.random_range(num_classes..=num_classes + 10);
    let calibrated = rng.random::<f64>() < 0.5;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row: Vec<f64> = (0..num_classes)
            .map(|_| -rng.random::<f64>().max(1e-12).ln())
            .collect();
        let sum: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= sum;
        }
        let label = if calibrated {
            let v: f64 = rng.random();
            let mut cum = 0.0;
            let mut chosen = num_classes - 1;
            for (c, &p) in row.iter().enumerate() {
                cum += p;
                if v < cum {
                    chosen = c;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..num_classes)
        };
        rows.push(row);
        labels.push(label);
    }
    let dataset = Dataset::from_rows(&rows, &labels).unwrap();
    let spec = PartitionSpec::new(num_classes, k, cells).unwrap();
    (dataset, k, spec)
}

/// Kolmogorov–Smirnov distance between a sample and the standard normal.
pub fn ks_distance_normal(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = ece_ci::normal_cdf(x);
        let hi = (i + 1) as f64 / n - cdf;
        let lo = cdf - i as f64 / n;
        d = d.max(hi.max(lo));
    }
    d
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

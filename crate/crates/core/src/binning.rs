//! Cubic partition of the truncated Weyl chamber.
//!
//! Sorted top-k probability vectors live in
//! `Δ(K,k) = {z : z_1 ≥ … ≥ z_k ≥ 0, k/K ≤ Σ z_j ≤ 1}`. The partition cuts
//! `[0,1]^k` into hypercubes of side `1/(mK)` and assigns each point the
//! floor index of its coordinates. Cells are never enumerated: only
//! non-empty ones materialize, keyed by [`BinKey`].

use std::collections::BTreeMap;

use crate::domain::TopKView;
use crate::error::{Error, Result};

/// Slack allowed when checking that a point lies in the chamber.
pub const CHAMBER_TOLERANCE: f64 = 1e-9;

/// Geometry of the cubic partition: class count `K`, depth `k`, and the
/// number of cells per axis (`mK` in resolution-parameter form).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionSpec {
    num_classes: usize,
    depth: usize,
    cells_per_axis: usize,
}

impl PartitionSpec {
    /// Builds a partition with an explicit cell count per axis. The count
    /// need not be a multiple of `K`, so side lengths like 1/50 stay exact
    /// regardless of the class count.
    pub fn new(num_classes: usize, depth: usize, cells_per_axis: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::TooFewClasses { num_classes });
        }
        if depth == 0 || depth > num_classes {
            return Err(Error::DepthOutOfRange {
                k: depth,
                num_classes,
            });
        }
        if depth == num_classes && num_classes > 2 {
            // Full-depth partitions collapse onto the probability simplex,
            // which the cubic grid does not cover sensibly beyond K = 2.
            return Err(Error::UnsupportedPartition { num_classes });
        }
        if cells_per_axis < num_classes {
            // Fewer than K cells per axis cannot separate the chamber from
            // its lower boundary z_1 ≥ 1/K.
            return Err(Error::ResolutionTooCoarse {
                resolution: cells_per_axis,
                num_classes,
                k: depth,
            });
        }
        Ok(PartitionSpec {
            num_classes,
            depth,
            cells_per_axis,
        })
    }

    /// Builds from the resolution parameter `m`, giving `mK` cells per axis.
    pub fn from_resolution(num_classes: usize, depth: usize, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::ResolutionTooCoarse {
                resolution: 0,
                num_classes,
                k: depth,
            });
        }
        Self::new(num_classes, depth, m * num_classes)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    /// Resolution parameter `m` when the cell count is a multiple of `K`.
    pub fn resolution(&self) -> Option<usize> {
        (self.cells_per_axis % self.num_classes == 0)
            .then(|| self.cells_per_axis / self.num_classes)
    }

    /// Cell side length `1/(mK)`.
    pub fn side(&self) -> f64 {
        1.0 / self.cells_per_axis as f64
    }

    /// Cell volume `w = side^k`.
    pub fn cell_volume(&self) -> f64 {
        self.side().powi(self.depth as i32)
    }

    /// Volume entering the `n√w` normalization of the null distribution:
    /// `side^min(k, K−1)`. Equal to [`cell_volume`](Self::cell_volume)
    /// except at full depth `k = K = 2`, where the chamber is a line segment
    /// and each occupied cell meets it in a piece of length `side`, not
    /// area `side²`.
    pub fn scaling_volume(&self) -> f64 {
        let dim = self.depth.min(self.num_classes - 1);
        self.side().powi(dim as i32)
    }
}

/// Hypercube index of one cell, ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinKey(pub Vec<u32>);

/// Maps a sorted top-k row to its cell: `i_j = floor(z_j · mK)`, with the
/// closed upper boundary 1 clamped into the last cell.
pub fn assign_bin(z_row: &[f64], spec: &PartitionSpec) -> Result<BinKey> {
    let k = spec.depth();
    if z_row.len() != k {
        return Err(Error::CountMismatch {
            expected: k,
            got: z_row.len(),
        });
    }
    let mut sum = 0.0;
    for (axis, &z) in z_row.iter().enumerate() {
        let prev = if axis == 0 { 1.0 } else { z_row[axis - 1] };
        if !z.is_finite() || z < -CHAMBER_TOLERANCE || z > prev + CHAMBER_TOLERANCE {
            return Err(Error::PointOutsideChamber { axis, coord: z });
        }
        sum += z;
    }
    let lower = k as f64 / spec.num_classes() as f64;
    if sum < lower - CHAMBER_TOLERANCE || sum > 1.0 + CHAMBER_TOLERANCE {
        // Report the violation on the sum pseudo-axis one past the last coordinate.
        return Err(Error::PointOutsideChamber {
            axis: k,
            coord: sum,
        });
    }
    let cells = spec.cells_per_axis();
    let mut cell = Vec::with_capacity(k);
    for &z in z_row {
        let idx = (z * cells as f64).floor();
        let idx = (idx.max(0.0) as usize).min(cells - 1);
        cell.push(idx as u32);
    }
    Ok(BinKey(cell))
}

/// Groups example indices by cell, ordered lexicographically by [`BinKey`];
/// each index list stays in ascending example order.
pub fn group_by_bin(view: &TopKView, spec: &PartitionSpec) -> Result<BTreeMap<BinKey, Vec<usize>>> {
    if view.k() != spec.depth() {
        return Err(Error::CountMismatch {
            expected: spec.depth(),
            got: view.k(),
        });
    }
    let mut groups: BTreeMap<BinKey, Vec<usize>> = BTreeMap::new();
    for i in 0..view.len() {
        let key = assign_bin(view.z_row(i), spec)?;
        groups.entry(key).or_default().push(i);
    }
    Ok(groups)
}

/// Rate-optimal resolution rule `m = max(1, round(c · n^{2/(4s + min(k, K−1))}))`.
pub fn choose_m(n: usize, k: usize, num_classes: usize, s: f64, c: f64) -> usize {
    let dim = k.min(num_classes.saturating_sub(1)) as f64;
    let exponent = 2.0 / (4.0 * s + dim);
    let m = (c * (n as f64).powf(exponent)).round();
    (m.max(1.0)) as usize
}

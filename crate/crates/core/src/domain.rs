//! Validated prediction/label pairs and the top-k projection.
//!
//! A [`Dataset`] holds one row of predicted class probabilities per example
//! together with the observed class index. [`TopKView`] is the sorted top-k
//! slice of each row with the reordered label indicators and the residuals
//! `u = y_top - z_top` that every estimator downstream consumes.

use crate::error::{Error, Result};

/// How far a row sum may drift from 1 before the row is rejected.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Validated predictions: `n` rows over `num_classes` classes, each row a
/// probability vector, plus 0-based class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    num_classes: usize,
    probs: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    /// Validates and ingests raw rows. Rows whose sum is within `1e-6` of 1
    /// are renormalized; anything further off is rejected.
    pub fn from_rows(rows: &[Vec<f64>], labels: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let num_classes = rows[0].len();
        if num_classes < 2 {
            return Err(Error::TooFewClasses { num_classes });
        }
        let mut probs = Vec::with_capacity(rows.len() * num_classes);
        for (row_idx, row) in rows.iter().enumerate() {
            if row.len() != num_classes {
                return Err(Error::CountMismatch {
                    expected: num_classes,
                    got: row.len(),
                });
            }
            let mut sum = 0.0;
            for (col, &p) in row.iter().enumerate() {
                if !p.is_finite() {
                    return Err(Error::NonFiniteEntry { row: row_idx, col });
                }
                if p < 0.0 {
                    return Err(Error::NegativeProbability {
                        row: row_idx,
                        col,
                        value: p,
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::RowSumOutOfTolerance { row: row_idx, sum });
            }
            probs.extend(row.iter().map(|&p| p / sum));
        }
        if labels.len() != rows.len() {
            return Err(Error::CountMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        for (row_idx, &label) in labels.iter().enumerate() {
            if label >= num_classes {
                return Err(Error::LabelOutOfRange {
                    row: row_idx,
                    label,
                    num_classes,
                });
            }
        }
        Ok(Dataset {
            num_classes,
            probs,
            labels: labels.to_vec(),
        })
    }

    /// Ingests a flat row-major probability matrix.
    pub fn from_flat(num_classes: usize, probs: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if num_classes == 0 || probs.len() % num_classes != 0 {
            return Err(Error::TooFewClasses { num_classes });
        }
        let rows: Vec<Vec<f64>> = probs.chunks(num_classes).map(|c| c.to_vec()).collect();
        Self::from_rows(&rows, &labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn prob_row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.num_classes..(i + 1) * self.num_classes]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Dataset restricted to the given example indices (duplicates allowed,
    /// as produced by bootstrap resampling). Skips re-validation.
    pub fn gather(&self, indices: &[usize]) -> Dataset {
        let mut probs = Vec::with_capacity(indices.len() * self.num_classes);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            probs.extend_from_slice(self.prob_row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            num_classes: self.num_classes,
            probs,
            labels,
        }
    }
}

/// Per-example sorted top-k probabilities, reordered label indicators, and
/// residuals. Rows of `z_top` are non-increasing and live in the truncated
/// Weyl chamber; each row of `y_top` has at most one 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TopKView {
    k: usize,
    num_classes: usize,
    z_top: Vec<f64>,
    y_top: Vec<u8>,
    u: Vec<f64>,
}

impl TopKView {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.z_top.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.z_top.is_empty()
    }

    pub fn z_row(&self, i: usize) -> &[f64] {
        &self.z_top[i * self.k..(i + 1) * self.k]
    }

    pub fn y_row(&self, i: usize) -> &[u8] {
        &self.y_top[i * self.k..(i + 1) * self.k]
    }

    pub fn u_row(&self, i: usize) -> &[f64] {
        &self.u[i * self.k..(i + 1) * self.k]
    }
}

/// Sorts each row's probabilities in non-increasing order, keeping the top
/// `k`, with ties broken by ascending class index so the projection is
/// deterministic. `y_top[i][j] = 1` iff the label of row `i` is the class
/// placed at rank `j`.
pub fn topk_project(dataset: &Dataset, k: usize) -> Result<TopKView> {
    let num_classes = dataset.num_classes();
    if k == 0 || k > num_classes {
        return Err(Error::DepthOutOfRange { k, num_classes });
    }
    let n = dataset.len();
    let mut z_top = Vec::with_capacity(n * k);
    let mut y_top = Vec::with_capacity(n * k);
    let mut u = Vec::with_capacity(n * k);
    let mut order: Vec<usize> = Vec::with_capacity(num_classes);
    for i in 0..n {
        let row = dataset.prob_row(i);
        order.clear();
        order.extend(0..num_classes);
        // Descending probability; equal probabilities keep ascending class index.
        order.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
        let label = dataset.label(i);
        for &class in order.iter().take(k) {
            let z = row[class];
            let y = u8::from(class == label);
            z_top.push(z);
            y_top.push(y);
            u.push(f64::from(y) - z);
        }
    }
    Ok(TopKView {
        k,
        num_classes,
        z_top,
        y_top,
        u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed_input() {
        let d = Dataset::from_rows(&[vec![0.7, 0.3]], &[0]).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.num_classes(), 2);
    }

    #[test]
    fn row_sum_out_of_tolerance() {
        let err = Dataset::from_rows(&[vec![0.7, 0.4]], &[0]).unwrap_err();
        assert!(matches!(err, Error::RowSumOutOfTolerance { row: 0, .. }));
    }

    #[test]
    fn label_out_of_range() {
        let err = Dataset::from_rows(&[vec![0.5, 0.5]], &[2]).unwrap_err();
        assert!(matches!(
            err,
            Error::LabelOutOfRange {
                row: 0,
                label: 2,
                num_classes: 2
            }
        ));
    }

    #[test]
    fn empty_dataset_rejected() {
        assert_eq!(
            Dataset::from_rows(&[], &[]).unwrap_err(),
            Error::EmptyDataset
        );
    }

    #[test]
    fn non_finite_and_negative_rejected() {
        assert!(matches!(
            Dataset::from_rows(&[vec![f64::NAN, 1.0]], &[0]).unwrap_err(),
            Error::NonFiniteEntry { row: 0, col: 0 }
        ));
        assert!(matches!(
            Dataset::from_rows(&[vec![-0.1, 1.1]], &[0]).unwrap_err(),
            Error::NegativeProbability { row: 0, col: 0, .. }
        ));
    }

    #[test]
    fn near_one_rows_renormalized() {
        let d = Dataset::from_rows(&[vec![0.7000004, 0.3]], &[1]).unwrap();
        let sum: f64 = d.prob_row(0).iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn binary_top1() {
        let d = Dataset::from_rows(&[vec![0.7, 0.3]], &[0]).unwrap();
        let v = topk_project(&d, 1).unwrap();
        assert_eq!(v.z_row(0), &[0.7]);
        assert_eq!(v.y_row(0), &[1]);
        assert!((v.u_row(0)[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn tie_breaks_to_lowest_class_index() {
        let d = Dataset::from_rows(&[vec![0.5, 0.5]], &[1]).unwrap();
        let v = topk_project(&d, 1).unwrap();
        // Rank-1 class is 0, which is not the label.
        assert_eq!(v.y_row(0), &[0]);
        assert!((v.u_row(0)[0] - (-0.5)).abs() < 1e-15);
    }

    #[test]
    fn four_class_top2_with_tie() {
        let d = Dataset::from_rows(&[vec![0.1, 0.4, 0.4, 0.1]], &[2]).unwrap();
        let v = topk_project(&d, 2).unwrap();
        assert_eq!(v.z_row(0), &[0.4, 0.4]);
        assert_eq!(v.y_row(0), &[0, 1]);
        assert!((v.u_row(0)[0] - (-0.4)).abs() < 1e-15);
        assert!((v.u_row(0)[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn depth_out_of_range() {
        let d = Dataset::from_rows(&[vec![0.5, 0.5]], &[0]).unwrap();
        assert!(matches!(
            topk_project(&d, 3).unwrap_err(),
            Error::DepthOutOfRange {
                k: 3,
                num_classes: 2
            }
        ));
        assert!(matches!(
            topk_project(&d, 0).unwrap_err(),
            Error::DepthOutOfRange { .. }
        ));
    }

    #[test]
    fn full_depth_residuals_cancel() {
        let d = Dataset::from_rows(&[vec![0.2, 0.5, 0.3]], &[1]).unwrap();
        let v = topk_project(&d, 3).unwrap();
        let z_sum: f64 = v.z_row(0).iter().sum();
        let u_sum: f64 = v.u_row(0).iter().sum();
        assert!((z_sum - 1.0).abs() < 1e-9);
        assert_eq!(v.y_row(0).iter().map(|&y| y as u32).sum::<u32>(), 1);
        assert!(u_sum.abs() < 1e-12);
    }
}

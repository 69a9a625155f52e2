use thiserror::Error;

/// Errors surfaced by the estimation pipeline.
///
/// Variants split into two families: input/usage problems (bad data, bad
/// parameters) and numerical failures (quadrature that did not settle).
/// [`Error::is_numerical`] distinguishes them for exit-code mapping.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite probability at row {row}, column {col}")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("negative probability {value} at row {row}, column {col}")]
    NegativeProbability { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, outside tolerance 1e-6 of 1")]
    RowSumOutOfTolerance { row: usize, sum: f64 },
    #[error("label {label} at row {row} out of range for {num_classes} classes")]
    LabelOutOfRange {
        row: usize,
        label: usize,
        num_classes: usize,
    },
    #[error("dataset has no examples")]
    EmptyDataset,
    #[error("need at least 2 classes, got {num_classes}")]
    TooFewClasses { num_classes: usize },
    #[error("depth k={k} out of range for {num_classes} classes")]
    DepthOutOfRange { k: usize, num_classes: usize },
    #[error("point {coord} at coordinate {axis} lies outside the truncated Weyl chamber")]
    PointOutsideChamber { axis: usize, coord: f64 },
    #[error("cubic partition unsupported for k = K = {num_classes} > 2")]
    UnsupportedPartition { num_classes: usize },
    #[error("bin counts sum to {got}, expected n = {expected}")]
    CountMismatch { expected: usize, got: usize },
    #[error("level {0} must lie strictly inside (0, 1)")]
    InvalidLevel(f64),
    #[error("subsample size {b} invalid for n = {n} (need 2 <= b <= n)")]
    SubsampleTooSmall { b: usize, n: usize },
    #[error("n = {n} examples cannot fill {splits} splits")]
    TooFewExamples { n: usize, splits: usize },
    #[error("invalid counts: {successes} successes out of {trials} trials")]
    InvalidCounts { successes: u64, trials: u64 },
    #[error("quadrature resolution {resolution} too coarse for K={num_classes}, k={k}")]
    ResolutionTooCoarse {
        resolution: usize,
        num_classes: usize,
        k: usize,
    },
    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),
}

impl Error {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNotConverged(_) | Error::ResolutionTooCoarse { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

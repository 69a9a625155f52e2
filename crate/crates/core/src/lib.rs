//! Debiased ℓ₂ expected-calibration-error estimation with honest uncertainty.
//!
//! The library takes predicted class probabilities with observed labels and
//! produces (i) a debiased estimate of the squared top-1-to-k ℓ₂ calibration
//! error, (ii) an adjusted confidence interval that stays valid whether or
//! not the model is calibrated, and (iii) a calibration hypothesis test.
//! Resampling baselines (percentile bootstrap, subsampling, convex-hull
//! split intervals) and synthetic-data experiment runners are included for
//! benchmarking coverage, interval length, and power.
//!
//! Pipeline: [`domain::Dataset`] → [`domain::topk_project`] →
//! [`estimator::bin_stats`] → [`estimator::debiased_ece`] →
//! [`variance`] → [`inference::adjusted_ci`].

pub mod baselines;
pub mod binning;
pub mod domain;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod simulate;
mod util;
pub mod variance;

pub use baselines::{
    bootstrap_ci, hulc_ci, hulc_splits, subsampling_ci, Interval, ResampleConfig, ResampleMethod,
};
pub use binning::{assign_bin, choose_m, group_by_bin, BinKey, PartitionSpec};
pub use domain::{topk_project, Dataset, TopKView};
pub use error::{Error, Result};
pub use estimator::{bin_stats, debiased_ece, tcal_statistic, BinStats, EstimateValue};
pub use inference::{
    adjusted_ci, calibration_test, estimate_report, normal_cdf, normal_quantile, tcal_threshold,
    AdjustedInterval, CaseTag, EstimateReport,
};
pub use simulate::{
    clopper_pearson, default_beta_grid, generate, rows_to_csv, rows_to_json, run_coverage,
    run_experiment, run_power, setting3_sigma1_sq, tempered_link, true_ece_sq, ExperimentRow,
    MethodChoice, RunOptions, Scenario, SettingConfig,
};
pub use variance::{sigma0_sq, sigma0_sq_default, sigma1_hat_sq, Sigma0Method, VarianceEstimates};

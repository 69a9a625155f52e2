//! The JSON report emitted by `compute`.
//!
//! One self-contained document per run: tool version, a content digest of
//! the ingested file, the fully resolved configuration, the estimate with
//! whatever interval/test the chosen method produces, and any warnings.
//! Every numeric field is either finite or serialized as `null`, and the
//! document round-trips losslessly through its JSON form.

use ece_ci::{CaseTag, EstimateReport, Interval, VarianceEstimates};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Non-finite values become `null` rather than JSON-invalid tokens.
fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool_version: String,
    /// SHA-256 of the raw input file bytes, lowercase hex.
    pub input_digest: String,
    pub config: ConfigEcho,
    pub results: Results,
    pub warnings: Vec<String>,
}

/// The resolved configuration the run actually used, defaults included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub input: String,
    pub n: usize,
    pub num_classes: usize,
    pub k: usize,
    /// Per-axis resolution m; null when mK is not a multiple of K.
    pub m: Option<usize>,
    /// Total cells per axis mK.
    pub cells_per_axis: usize,
    pub alpha: f64,
    pub seed: u64,
    pub method: String,
    /// The only bootstrap flavor implemented.
    pub bootstrap_variant: String,
    /// Resamples behind bootstrap/subsampling intervals and the
    /// consistency-resampling threshold.
    pub resample_reps: usize,
    /// Subsample size b; null means ⌊√n⌋ was used.
    pub subsample_size: Option<usize>,
    /// Subsampling rate exponent γ in τ_n = n^γ.
    pub subsample_rate: f64,
    /// Median-bias parameter of the fold interval (always the δ = 0 stand-in).
    pub hulc_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results {
    /// Debiased estimate of the squared error; may be negative.
    pub t: Option<f64>,
    pub t_plus: Option<f64>,
    /// Calibrated-regime variance constant for this (K, k), computed at
    /// startup.
    pub sigma0_sq: Option<f64>,
    pub sigma1_hat_sq: Option<f64>,
    pub sigma1_hat: Option<f64>,
    /// Confidence set endpoints on the squared-error scale.
    pub ci_squared: Option<IntervalEcho>,
    /// The same endpoints mapped to the error scale.
    pub ci_root: Option<IntervalEcho>,
    /// Present for the adjusted method only.
    pub adjusted: Option<AdjustedDetail>,
    /// Present for the consistency-resampling test only.
    pub tcal: Option<TcalDetail>,
    /// CI methods: 0 outside the confidence set; tcal: statistic > threshold.
    pub reject_at_alpha: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEcho {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustedDetail {
    /// Zero-inclusion rule fired; the set is unioned with {0}.
    pub includes_zero: bool,
    /// The set is `[lower, upper] \ {0}`.
    pub excludes_zero_point: bool,
    /// Which of the three endpoint branches produced the interval.
    pub case_tag: String,
    pub degenerate_variance: bool,
    pub p_value_calibrated: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcalDetail {
    pub statistic: Option<f64>,
    pub threshold: Option<f64>,
}

fn case_name(tag: CaseTag) -> &'static str {
    match tag {
        CaseTag::Wide => "wide",
        CaseTag::Punctured => "punctured",
        CaseTag::HalfWidth => "half_width",
    }
}

impl Results {
    /// Estimate-only skeleton; method-specific sections start empty.
    pub fn from_estimate(t: f64, t_plus: f64, variances: &VarianceEstimates) -> Results {
        Results {
            t: finite(t),
            t_plus: finite(t_plus),
            sigma0_sq: finite(variances.sigma0_sq),
            sigma1_hat_sq: finite(variances.sigma1_hat_sq),
            sigma1_hat: finite(variances.sigma1_hat),
            ci_squared: None,
            ci_root: None,
            adjusted: None,
            tcal: None,
            reject_at_alpha: false,
        }
    }

    /// Fills the adjusted-method sections from a finished report.
    pub fn set_adjusted(&mut self, report: &EstimateReport) {
        self.ci_squared = Some(IntervalEcho {
            lower: finite(report.ci_squared.lower),
            upper: finite(report.ci_squared.upper),
        });
        self.ci_root = Some(IntervalEcho {
            lower: finite(report.ci_root.0),
            upper: finite(report.ci_root.1),
        });
        self.adjusted = Some(AdjustedDetail {
            includes_zero: report.ci_squared.includes_zero,
            excludes_zero_point: report.ci_squared.excludes_zero_point,
            case_tag: case_name(report.ci_squared.case_tag).to_string(),
            degenerate_variance: report.ci_squared.degenerate_variance,
            p_value_calibrated: finite(report.p_value_calibrated),
        });
        self.reject_at_alpha = report.reject_at_alpha;
    }

    /// Fills the interval sections from a resampling baseline. The squared
    /// scale keeps the raw endpoints (the lower one may be negative); the
    /// root scale clamps at zero first.
    pub fn set_baseline(&mut self, interval: &Interval) {
        self.ci_squared = Some(IntervalEcho {
            lower: finite(interval.lower),
            upper: finite(interval.upper),
        });
        self.ci_root = Some(IntervalEcho {
            lower: finite(interval.lower.max(0.0).sqrt()),
            upper: finite(interval.upper.max(0.0).sqrt()),
        });
        self.reject_at_alpha = !interval.contains(0.0);
    }

    pub fn set_tcal(&mut self, statistic: f64, threshold: f64) {
        self.tcal = Some(TcalDetail {
            statistic: finite(statistic),
            threshold: finite(threshold),
        });
        self.reject_at_alpha = statistic > threshold;
    }
}

impl ReportDocument {
    pub fn new(input_digest: String, config: ConfigEcho, results: Results) -> ReportDocument {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digest,
            config,
            results,
            warnings: Vec::new(),
        }
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("report has no non-serializable values");
        text.push('\n');
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ReportDocument {
        let variances = VarianceEstimates::new(1.0 / 30.0, 2.5e-4);
        let mut results = Results::from_estimate(1.2e-3, 1.2e-3, &variances);
        results.ci_squared = Some(IntervalEcho {
            lower: Some(0.0),
            upper: Some(3.4e-3),
        });
        results.ci_root = Some(IntervalEcho {
            lower: Some(0.0),
            upper: Some(0.0583),
        });
        results.adjusted = Some(AdjustedDetail {
            includes_zero: true,
            excludes_zero_point: false,
            case_tag: "punctured".to_string(),
            degenerate_variance: false,
            p_value_calibrated: Some(0.42),
        });
        let config = ConfigEcho {
            input: "preds.csv".to_string(),
            n: 1000,
            num_classes: 2,
            k: 1,
            m: Some(25),
            cells_per_axis: 50,
            alpha: 0.1,
            seed: 7,
            method: "adjusted".to_string(),
            bootstrap_variant: "percentile".to_string(),
            resample_reps: 1000,
            subsample_size: None,
            subsample_rate: 0.5,
            hulc_delta: 0.0,
        };
        let mut doc = ReportDocument::new("00".repeat(32), config, results);
        doc.warn("example warning");
        doc
    }

    #[test]
    fn document_round_trips_losslessly() {
        let doc = sample();
        let json = doc.to_json();
        let back: ReportDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn non_finite_numerics_serialize_as_null() {
        let variances = VarianceEstimates::new(f64::NAN, -1.0);
        let results = Results::from_estimate(f64::INFINITY, 0.0, &variances);
        assert_eq!(results.sigma0_sq, None);
        assert_eq!(results.t, None);
        let value = serde_json::to_value(&results).unwrap();
        assert!(value["t"].is_null());
        assert!(value["sigma0_sq"].is_null());
        assert_eq!(value["sigma1_hat_sq"], serde_json::json!(-1.0));
    }
}

//! Synthetic-data scenarios with known ground truth, and the Monte-Carlo
//! experiment engine that measures coverage, interval length, and power.
//!
//! Three generators are built in:
//! 1. binary predictions with uniform confidence and a tempered link
//!    between confidence and label frequency (β = 1 is calibrated);
//! 2. the same link with Beta(5, 0.5)-distributed confidence;
//! 3. ten-class predictions uniform on the simplex, labels drawn after
//!    shifting β of probability mass from the top-ranked class to the
//!    runner-up (β = 0 is calibrated), evaluated at depth k = 2.
//!
//! Each generator comes with an analytic or quadrature ground truth for the
//! squared calibration error, so empirical coverage can be scored exactly.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta as BetaDist, Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::baselines::{bootstrap_ci, hulc_ci, subsampling_ci, ResampleConfig, ResampleMethod};
use crate::binning::PartitionSpec;
use crate::domain::{topk_project, Dataset};
use crate::error::{Error, Result};
use crate::estimator::{bin_stats, debiased_ece, tcal_statistic};
use crate::inference::{adjusted_ci, tcal_threshold};
use crate::util::{derive_seed, quantile_sorted};
use crate::variance::{sigma0_sq_default, sigma1_hat_sq};

/// Built-in data-generating scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Binary, confidence uniform on (0,1), tempered link; calibrated at β = 1.
    BinaryUniform,
    /// Binary, confidence ~ Beta(5, 0.5), tempered link; calibrated at β = 1.
    BinaryBeta,
    /// 10 classes uniform on the simplex, β mass moved from the top class
    /// to the runner-up; depth-2 evaluation; calibrated at β = 0.
    SimplexShift,
}

impl Scenario {
    /// Stable 1-based index used in config files and result rows.
    pub fn index(self) -> u8 {
        match self {
            Scenario::BinaryUniform => 1,
            Scenario::BinaryBeta => 2,
            Scenario::SimplexShift => 3,
        }
    }

    pub fn from_index(idx: u8) -> Option<Scenario> {
        match idx {
            1 => Some(Scenario::BinaryUniform),
            2 => Some(Scenario::BinaryBeta),
            3 => Some(Scenario::SimplexShift),
            _ => None,
        }
    }
}

/// One grid point of an experiment: a scenario with its miscalibration
/// level and evaluation geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingConfig {
    pub setting: Scenario,
    /// Miscalibration level; range [0,1] for the binary scenarios and
    /// [0, 0.1] for the simplex one.
    pub beta: f64,
    pub n: usize,
    /// Cells per axis (`mK`).
    pub cells_per_axis: usize,
    /// Evaluation depth.
    pub k: usize,
    pub num_classes: usize,
}

impl SettingConfig {
    /// Scenario defaults: n = 1000; (k, K, mK) = (1, 2, 50) for the binary
    /// scenarios and (2, 10, 20) for the simplex one.
    pub fn new(setting: Scenario, beta: f64) -> Result<SettingConfig> {
        let (k, num_classes, cells_per_axis) = match setting {
            Scenario::BinaryUniform | Scenario::BinaryBeta => (1, 2, 50),
            Scenario::SimplexShift => (2, 10, 20),
        };
        let cfg = SettingConfig {
            setting,
            beta,
            n: 1000,
            cells_per_axis,
            k,
            num_classes,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let max_beta = match self.setting {
            Scenario::BinaryUniform | Scenario::BinaryBeta => 1.0,
            // The top simplex coordinate is at least 1/K = 0.1, so shifts up
            // to 0.1 keep every label probability in [0, 1] with no clamping.
            Scenario::SimplexShift => 0.1,
        };
        if !(0.0..=max_beta).contains(&self.beta) || !self.beta.is_finite() {
            return Err(Error::InvalidLevel(self.beta));
        }
        if self.n < 2 {
            return Err(Error::EmptyDataset);
        }
        Ok(())
    }

    pub fn partition_spec(&self) -> Result<PartitionSpec> {
        PartitionSpec::new(self.num_classes, self.k, self.cells_per_axis)
    }
}

/// Default miscalibration grid, 21 points per scenario.
pub fn default_beta_grid(setting: Scenario) -> Vec<f64> {
    let step = match setting {
        Scenario::BinaryUniform | Scenario::BinaryBeta => 0.05,
        Scenario::SimplexShift => 0.005,
    };
    (0..=20).map(|i| i as f64 * step).collect()
}

/// Tempered link `h_β(z) = z^β / (z^β + (1−z)^β)`: the label frequency a
/// model reporting confidence `z` actually attains. Identity at β = 1,
/// constant 1/2 at β = 0.
pub fn tempered_link(z: f64, beta: f64) -> f64 {
    let a = z.powf(beta);
    let b = (1.0 - z).powf(beta);
    a / (a + b)
}

fn gen_binary(n: usize, beta: f64, rng: &mut ChaCha8Rng, mut draw_z: impl FnMut(&mut ChaCha8Rng) -> f64) -> Dataset {
    let mut probs = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let z1 = draw_z(rng);
        probs.push(z1);
        probs.push(1.0 - z1);
        let label = usize::from(rng.random::<f64>() >= tempered_link(z1, beta));
        labels.push(label);
    }
    Dataset::from_flat(2, probs, labels).expect("binary generator emits valid rows")
}

/// Binary scenario with uniform confidence.
pub fn gen_setting1(n: usize, beta: f64, rng: &mut ChaCha8Rng) -> Dataset {
    gen_binary(n, beta, rng, |r| r.random::<f64>())
}

/// Binary scenario with Beta(5, 0.5) confidence.
pub fn gen_setting2(n: usize, beta: f64, rng: &mut ChaCha8Rng) -> Dataset {
    let dist = BetaDist::new(5.0, 0.5).expect("fixed valid parameters");
    gen_binary(n, beta, rng, move |r| dist.sample(r))
}

/// Ten-class scenario: predictions uniform on the simplex (normalized
/// unit exponentials), labels drawn after moving β mass from the
/// top-ranked class to the runner-up. Rank ties break by class index,
/// matching the projection used at evaluation time.
pub fn gen_setting3(n: usize, beta: f64, rng: &mut ChaCha8Rng) -> Dataset {
    const K: usize = 10;
    let mut probs = Vec::with_capacity(n * K);
    let mut labels = Vec::with_capacity(n);
    let mut row = [0.0f64; K];
    let mut order = [0usize; K];
    for _ in 0..n {
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = Exp1.sample(rng);
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
        for (i, o) in order.iter_mut().enumerate() {
            *o = i;
        }
        order.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap().then(a.cmp(&b)));
        // Label distribution over ranks: top gets z−β, runner-up z+β,
        // the rest keep their probability.
        let v: f64 = rng.random();
        let mut cum = 0.0;
        let mut label = order[K - 1];
        for (rank, &class) in order.iter().enumerate() {
            let p = match rank {
                0 => row[class] - beta,
                1 => row[class] + beta,
                _ => row[class],
            };
            cum += p;
            if v < cum {
                label = class;
                break;
            }
        }
        probs.extend_from_slice(&row);
        labels.push(label);
    }
    Dataset::from_flat(K, probs, labels).expect("simplex generator emits valid rows")
}

/// Draws one dataset for a grid point.
pub fn generate(cfg: &SettingConfig, rng: &mut ChaCha8Rng) -> Dataset {
    match cfg.setting {
        Scenario::BinaryUniform => gen_setting1(cfg.n, cfg.beta, rng),
        Scenario::BinaryBeta => gen_setting2(cfg.n, cfg.beta, rng),
        Scenario::SimplexShift => gen_setting3(cfg.n, cfg.beta, rng),
    }
}

/// Adaptive Simpson quadrature with the usual 15× Richardson acceptance.
fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let h = b - a;
    let left = h / 12.0 * (fa + 4.0 * flm + fm);
    let right = h / 12.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureNotConverged(format!(
            "subdivision limit reached on [{a}, {b}]"
        )));
    }
    Ok(
        adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
            + adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?,
    )
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Ground-truth squared calibration error of a scenario.
///
/// Binary scenarios integrate `(h_β(z) − z)²` against the confidence
/// density (the Beta case is substituted with `u = √(1−z)` to remove the
/// endpoint singularity of its density); the simplex scenario is `2β²`
/// exactly, because the conditional residual mean is the constant (−β, β).
pub fn true_ece_sq(setting: Scenario, beta: f64, tol: f64) -> Result<f64> {
    match setting {
        Scenario::BinaryUniform => {
            integrate(|z| (tempered_link(z, beta) - z).powi(2), 0.0, 1.0, tol)
        }
        Scenario::BinaryBeta => {
            // Beta(5, 0.5) density z⁴(1−z)^{−1/2}/B(5, 0.5); B(5, 0.5) = 256/315.
            let norm = 2.0 / (256.0 / 315.0);
            let g = move |u: f64| {
                let z = 1.0 - u * u;
                (tempered_link(z, beta) - z).powi(2) * z.powi(4)
            };
            Ok(norm * integrate(g, 0.0, 1.0, tol)?)
        }
        Scenario::SimplexShift => Ok(2.0 * beta * beta),
    }
}

/// Analytic miscalibrated-regime variance for the simplex scenario. With
/// the conditional residual mean pinned at (−β, β), only the covariance
/// quadratic form survives:
/// `σ₁²(β) = 4β²[(2H_K − 1)/K − 2/(K(K+1)) + 4β/K − 4β²]`, K = 10,
/// using E[z₍₁₎ − z₍₂₎] = 1/K and E[(z₍₁₎ − z₍₂₎)²] = 2/(K(K+1)) for the
/// top gap of a uniform simplex point.
pub fn setting3_sigma1_sq(beta: f64) -> f64 {
    const K: f64 = 10.0;
    let harmonic: f64 = (1..=10).map(|i| 1.0 / i as f64).sum();
    let bracket = (2.0 * harmonic - 1.0) / K - 2.0 / (K * (K + 1.0)) + 4.0 * beta / K
        - 4.0 * beta * beta;
    4.0 * beta * beta * bracket
}

/// Exact binomial confidence bounds via Beta quantiles.
pub fn clopper_pearson(successes: u64, trials: u64, conf: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(Error::InvalidCounts { successes, trials });
    }
    if !(conf > 0.0 && conf < 1.0) {
        return Err(Error::InvalidLevel(conf));
    }
    let s = successes as f64;
    let t = trials as f64;
    let tail = (1.0 - conf) / 2.0;
    let lower = if successes == 0 {
        0.0
    } else {
        Beta::new(s, t - s + 1.0)
            .expect("positive parameters")
            .inverse_cdf(tail)
    };
    let upper = if successes == trials {
        1.0
    } else {
        Beta::new(s + 1.0, t - s)
            .expect("positive parameters")
            .inverse_cdf(1.0 - tail)
    };
    Ok((lower, upper))
}

/// Interval method evaluated by the experiment engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Adjusted,
    Bootstrap,
    Subsampling,
    Hulc,
    Tcal,
}

impl MethodChoice {
    pub const ALL: [MethodChoice; 5] = [
        MethodChoice::Adjusted,
        MethodChoice::Bootstrap,
        MethodChoice::Subsampling,
        MethodChoice::Hulc,
        MethodChoice::Tcal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodChoice::Adjusted => "adjusted",
            MethodChoice::Bootstrap => "bootstrap",
            MethodChoice::Subsampling => "subsampling",
            MethodChoice::Hulc => "hulc",
            MethodChoice::Tcal => "tcal",
        }
    }

    /// Stable id folded into replication seeds, independent of the order
    /// methods are requested in.
    fn seed_tag(self) -> u64 {
        match self {
            MethodChoice::Adjusted => 1,
            MethodChoice::Bootstrap => 2,
            MethodChoice::Subsampling => 3,
            MethodChoice::Hulc => 4,
            MethodChoice::Tcal => 5,
        }
    }
}

impl fmt::Display for MethodChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<MethodChoice, String> {
        match s {
            "adjusted" => Ok(MethodChoice::Adjusted),
            "bootstrap" => Ok(MethodChoice::Bootstrap),
            "subsampling" => Ok(MethodChoice::Subsampling),
            "hulc" => Ok(MethodChoice::Hulc),
            "tcal" => Ok(MethodChoice::Tcal),
            other => Err(format!(
                "unknown method `{other}` (expected adjusted|bootstrap|subsampling|hulc|tcal)"
            )),
        }
    }
}

/// Tuning knobs of the experiment engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Bootstrap/subsampling resamples per dataset.
    pub resample_reps: usize,
    /// Monte-Carlo replications behind the consistency-resampling threshold.
    pub tcal_reps: usize,
    /// Subsample size; `None` = ⌊√n⌋.
    pub subsample_size: Option<usize>,
    /// Subsampling rate exponent γ (τ_n = n^γ).
    pub rate_exponent: f64,
    /// Median-bias parameter of the fold interval.
    pub hulc_delta: f64,
    /// Quadrature tolerance for ground-truth values.
    pub quad_tol: f64,
}

impl Default for RunOptions {
    fn default() -> RunOptions {
        RunOptions {
            resample_reps: 1000,
            tcal_reps: 1000,
            subsample_size: None,
            rate_exponent: 0.5,
            hulc_delta: 0.0,
            quad_tol: 1e-10,
        }
    }
}

/// Aggregated outcome of one (grid point, method) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    /// Scenario index (1, 2, or 3).
    pub setting: u8,
    pub beta: f64,
    pub n: usize,
    pub method: MethodChoice,
    pub true_ece_sq: f64,
    pub replications: usize,
    /// Fraction of intervals containing the truth; absent for the
    /// threshold-test method, which produces no interval.
    pub coverage: Option<f64>,
    pub coverage_cp_lower: Option<f64>,
    pub coverage_cp_upper: Option<f64>,
    pub mean_width: Option<f64>,
    pub width_p5: Option<f64>,
    pub width_p95: Option<f64>,
    /// Fraction of datasets on which the method rejected calibration.
    pub power: f64,
    pub power_cp_lower: f64,
    pub power_cp_upper: f64,
    /// Wall-clock seconds for this row; reported on stderr by the CLI but
    /// excluded from serialized results so re-runs are byte-identical.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Clone, Copy)]
struct MethodOutcome {
    covered: Option<bool>,
    width: Option<f64>,
    reject: bool,
}

fn run_grid_point(
    cfg: &SettingConfig,
    grid_idx: usize,
    methods: &[MethodChoice],
    reps: usize,
    alpha: f64,
    seed: u64,
    opts: &RunOptions,
    sigma0_cache: &mut HashMap<(usize, usize), f64>,
) -> Result<Vec<ExperimentRow>> {
    let started = Instant::now();
    cfg.validate()?;
    let spec = cfg.partition_spec()?;
    let sigma0_sq = match sigma0_cache.entry((cfg.num_classes, cfg.k)) {
        std::collections::hash_map::Entry::Occupied(e) => *e.get(),
        std::collections::hash_map::Entry::Vacant(e) => {
            *e.insert(sigma0_sq_default(cfg.num_classes, cfg.k)?)
        }
    };
    let truth = true_ece_sq(cfg.setting, cfg.beta, opts.quad_tol)?;
    let scenario_tag = cfg.setting.index() as u64;
    let g = grid_idx as u64;

    let outcomes: Vec<Vec<MethodOutcome>> = (0..reps)
        .into_par_iter()
        .map(|rep| -> Result<Vec<MethodOutcome>> {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(seed, &[scenario_tag, g, rep as u64, 0]));
            let data = generate(cfg, &mut rng);
            let view = topk_project(&data, cfg.k)?;
            let stats = bin_stats(&view, &spec)?;
            let est = debiased_ece(&stats, cfg.n, spec)?;
            let mut per_method = Vec::with_capacity(methods.len());
            for &method in methods {
                let mseed = derive_seed(seed, &[scenario_tag, g, rep as u64, method.seed_tag()]);
                let outcome = match method {
                    MethodChoice::Adjusted => {
                        let s1 = sigma1_hat_sq(&stats, cfg.n)?;
                        let ci = adjusted_ci(
                            est.t_plus,
                            s1.max(0.0).sqrt(),
                            sigma0_sq.sqrt(),
                            cfg.n,
                            spec.scaling_volume(),
                            alpha,
                        )?;
                        MethodOutcome {
                            covered: Some(ci.contains(truth)),
                            width: Some(ci.width()),
                            reject: !ci.contains(0.0),
                        }
                    }
                    MethodChoice::Bootstrap => {
                        let rcfg = ResampleConfig {
                            replications: opts.resample_reps,
                            seed: mseed,
                            ..ResampleConfig::new(ResampleMethod::Bootstrap, alpha, mseed)
                        };
                        let ci = bootstrap_ci(&data, cfg.k, &spec, &rcfg)?;
                        MethodOutcome {
                            covered: Some(ci.contains(truth)),
                            width: Some(ci.width()),
                            reject: !ci.contains(0.0),
                        }
                    }
                    MethodChoice::Subsampling => {
                        let rcfg = ResampleConfig {
                            replications: opts.resample_reps,
                            subsample_size: opts.subsample_size,
                            rate_exponent: opts.rate_exponent,
                            seed: mseed,
                            ..ResampleConfig::new(ResampleMethod::Subsampling, alpha, mseed)
                        };
                        let ci = subsampling_ci(&data, cfg.k, &spec, &rcfg)?;
                        MethodOutcome {
                            covered: Some(ci.contains(truth)),
                            width: Some(ci.width()),
                            reject: !ci.contains(0.0),
                        }
                    }
                    MethodChoice::Hulc => {
                        let ci = hulc_ci(&data, cfg.k, &spec, alpha, mseed, opts.hulc_delta)?;
                        MethodOutcome {
                            covered: Some(ci.contains(truth)),
                            width: Some(ci.width()),
                            reject: !ci.contains(0.0),
                        }
                    }
                    MethodChoice::Tcal => {
                        let threshold =
                            tcal_threshold(&view, &spec, alpha, opts.tcal_reps, mseed)?;
                        let stat = tcal_statistic(&stats, cfg.n)?;
                        MethodOutcome {
                            covered: None,
                            width: None,
                            reject: stat > threshold,
                        }
                    }
                };
                per_method.push(outcome);
            }
            Ok(per_method)
        })
        .collect::<Result<_>>()?;

    let seconds = started.elapsed().as_secs_f64();
    let mut rows = Vec::with_capacity(methods.len());
    for (mi, &method) in methods.iter().enumerate() {
        let rejects = outcomes.iter().filter(|o| o[mi].reject).count() as u64;
        let power = rejects as f64 / reps as f64;
        let (p_lo, p_hi) = clopper_pearson(rejects, reps as u64, 0.95)?;
        let (coverage, cp_lo, cp_hi, mean_width, width_p5, width_p95) = if method
            == MethodChoice::Tcal
        {
            (None, None, None, None, None, None)
        } else {
            let covered = outcomes
                .iter()
                .filter(|o| o[mi].covered.expect("interval methods score coverage"))
                .count() as u64;
            let (lo, hi) = clopper_pearson(covered, reps as u64, 0.95)?;
            let mut widths: Vec<f64> = outcomes
                .iter()
                .map(|o| o[mi].width.expect("interval methods have widths"))
                .collect();
            widths.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            let mean = widths.iter().sum::<f64>() / reps as f64;
            (
                Some(covered as f64 / reps as f64),
                Some(lo),
                Some(hi),
                Some(mean),
                Some(quantile_sorted(&widths, 0.05)),
                Some(quantile_sorted(&widths, 0.95)),
            )
        };
        rows.push(ExperimentRow {
            setting: cfg.setting.index(),
            beta: cfg.beta,
            n: cfg.n,
            method,
            true_ece_sq: truth,
            replications: reps,
            coverage,
            coverage_cp_lower: cp_lo,
            coverage_cp_upper: cp_hi,
            mean_width,
            width_p5,
            width_p95,
            power,
            power_cp_lower: p_lo,
            power_cp_upper: p_hi,
            seconds,
        });
    }
    Ok(rows)
}

/// Runs every (grid point × method) cell: `reps` datasets per grid point,
/// one interval/test per method per dataset, aggregated with exact binomial
/// error bars. Deterministic given `seed` and independent of thread count
/// (every replication owns a seed derived from its coordinates, and
/// aggregation order is fixed).
pub fn run_experiment(
    grid: &[SettingConfig],
    methods: &[MethodChoice],
    reps: usize,
    alpha: f64,
    seed: u64,
    opts: &RunOptions,
) -> Result<Vec<ExperimentRow>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidLevel(alpha));
    }
    let mut sigma0_cache = HashMap::new();
    let mut rows = Vec::with_capacity(grid.len() * methods.len());
    for (g, cfg) in grid.iter().enumerate() {
        rows.extend(run_grid_point(
            cfg,
            g,
            methods,
            reps,
            alpha,
            seed,
            opts,
            &mut sigma0_cache,
        )?);
    }
    Ok(rows)
}

fn push_opt(line: &mut String, v: Option<f64>) {
    if let Some(x) = v {
        line.push_str(&format!("{x}"));
    }
    line.push(',');
}

/// Serializes rows as CSV, one line per (method, β). Shortest round-trip
/// float formatting keeps re-runs byte-identical; threshold-test rows leave
/// the interval columns empty.
pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(
        "setting,beta,n,method,true_ece_sq,replications,coverage,coverage_cp_lower,\
         coverage_cp_upper,mean_width,width_p5,width_p95,power,power_cp_lower,power_cp_upper\n",
    );
    for r in rows {
        let mut line = format!(
            "{},{},{},{},{},{},",
            r.setting, r.beta, r.n, r.method, r.true_ece_sq, r.replications
        );
        push_opt(&mut line, r.coverage);
        push_opt(&mut line, r.coverage_cp_lower);
        push_opt(&mut line, r.coverage_cp_upper);
        push_opt(&mut line, r.mean_width);
        push_opt(&mut line, r.width_p5);
        push_opt(&mut line, r.width_p95);
        line.push_str(&format!(
            "{},{},{}\n",
            r.power, r.power_cp_lower, r.power_cp_upper
        ));
        out.push_str(&line);
    }
    out
}

/// Serializes rows as pretty-printed JSON (timing excluded, see
/// [`ExperimentRow::seconds`]).
pub fn rows_to_json(rows: &[ExperimentRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows contain no non-serializable values")
}

/// Coverage/length study: see [`run_experiment`]; rows carry coverage with
/// Clopper–Pearson bounds plus width summaries for every interval method.
pub fn run_coverage(
    grid: &[SettingConfig],
    methods: &[MethodChoice],
    reps: usize,
    alpha: f64,
    seed: u64,
    opts: &RunOptions,
) -> Result<Vec<ExperimentRow>> {
    run_experiment(grid, methods, reps, alpha, seed, opts)
}

/// Power study: see [`run_experiment`]; the rejection fraction per row is
/// the share of datasets whose interval excluded zero (or whose test
/// statistic cleared its Monte-Carlo threshold).
pub fn run_power(
    grid: &[SettingConfig],
    methods: &[MethodChoice],
    reps: usize,
    alpha: f64,
    seed: u64,
    opts: &RunOptions,
) -> Result<Vec<ExperimentRow>> {
    run_experiment(grid, methods, reps, alpha, seed, opts)
}

//! Experiment orchestration: seeded trial batteries, medians with bootstrap
//! confidence intervals, n-sweeps and ratio/trend fits, emitting plot-ready
//! CSV plus a JSON manifest that pins the full sweep configuration.
//!
//! Trials fan out to a worker pool but are reduced in (n, policy, trial)
//! order, and every random stream is derived from the sweep seed, so a sweep
//! is reproducible byte for byte regardless of thread count.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costmodel::{
    detailed_total_time, simple_total_time, transmission_time, CostBreakdown, PacketShape,
};
use crate::domain::{PolicySpec, RunStats, TimingParams};
use crate::engine::{run_trial, run_trial_stats, EngineError, TrialConfig};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),
    #[error("too few points for a trend fit (need at least 4)")]
    TooFewPoints,
    #[error("need at least 2 samples for a confidence interval")]
    InsufficientSamples,
    #[error("zero baseline")]
    ZeroBaseline,
    #[error("trial failed (n={n}, policy={policy}, trial={trial}): {source}")]
    Trial {
        n: usize,
        policy: String,
        trial: usize,
        source: EngineError,
    },
}

/// Per-trial quantity aggregated by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    CwSlots,
    Collisions,
    MaxAckTimeouts,
    HalfDoneSlot,
    EstimationSlots,
    SimpleTotalUs,
    DetailedTotalUs,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::CwSlots,
        Metric::Collisions,
        Metric::MaxAckTimeouts,
        Metric::HalfDoneSlot,
        Metric::EstimationSlots,
        Metric::SimpleTotalUs,
        Metric::DetailedTotalUs,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::CwSlots => "cw_slots",
            Metric::Collisions => "collisions",
            Metric::MaxAckTimeouts => "max_ack_timeouts",
            Metric::HalfDoneSlot => "half_done_slot",
            Metric::EstimationSlots => "estimation_slots",
            Metric::SimpleTotalUs => "simple_total_us",
            Metric::DetailedTotalUs => "detailed_total_us",
        }
    }

    /// Whether computing this metric requires the full slot trace rather
    /// than the per-trial statistics alone.
    pub fn needs_trace(&self) -> bool {
        matches!(self, Metric::DetailedTotalUs)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| HarnessError::InvalidSpec(format!("unknown metric {s:?}")))
    }
}

/// A battery of trials: which batch sizes, which policies, how many seeded
/// trials per point, and which metrics to aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n_values: Vec<usize>,
    pub policies: Vec<PolicySpec>,
    pub trials: usize,
    #[serde(default)]
    pub shape: PacketShape,
    #[serde(default)]
    pub params: TimingParams,
    #[serde(default)]
    pub seed: u64,
    pub metrics: Vec<Metric>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials < 1 {
            return Err(HarnessError::InvalidSpec("trials must be >= 1".into()));
        }
        if self.n_values.is_empty() {
            return Err(HarnessError::InvalidSpec("n_values must be nonempty".into()));
        }
        if !self.n_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(HarnessError::InvalidSpec(
                "n_values must be strictly increasing".into(),
            ));
        }
        if self.n_values[0] < 1 {
            return Err(HarnessError::InvalidSpec("n must be >= 1".into()));
        }
        if self.policies.is_empty() {
            return Err(HarnessError::InvalidSpec("policies must be nonempty".into()));
        }
        if self.metrics.is_empty() {
            return Err(HarnessError::InvalidSpec("metrics must be nonempty".into()));
        }
        for p in &self.policies {
            p.validate()
                .map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
        }
        self.params
            .validate()
            .map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
        self.shape
            .validate()
            .map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
        Ok(())
    }
}

/// One aggregated cell of a sweep: a (n, policy, metric) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub policy: String,
    pub metric: Metric,
    pub median: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: usize,
    pub outliers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, n: usize, policy: &str, metric: Metric) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.policy == policy && r.metric == metric)
    }

    pub fn median(&self, n: usize, policy: &str, metric: Metric) -> Option<f64> {
        self.row(n, policy, metric).map(|r| r.median)
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn hash_str(s: &str) -> u64 {
    // FNV-1a
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in s.bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Root seed for one trial, derived from the sweep seed and the trial's
/// coordinates. Stable across sweep composition: the same (seed, n, policy,
/// trial) always replays the same trial.
pub fn trial_seed(root: u64, n: usize, policy: &PolicySpec, trial: usize) -> u64 {
    let mut h = splitmix64(root);
    for v in [n as u64, hash_str(&policy.seed_key()), trial as u64] {
        h = splitmix64(h ^ splitmix64(v));
    }
    h
}

fn ci_rng(root: u64, n: usize, policy: &PolicySpec, metric: Metric) -> ChaCha12Rng {
    let mut h = splitmix64(root ^ 0xC1C1_C1C1_C1C1_C1C1);
    for v in [n as u64, hash_str(&policy.seed_key()), hash_str(metric.as_str())] {
        h = splitmix64(h ^ splitmix64(v));
    }
    ChaCha12Rng::seed_from_u64(h)
}

/// Interpolated quantile (linear between order statistics).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let idx = (sorted.len() - 1) as f64 * p;
    let lo = idx.floor() as usize;
    let hi = idx.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = idx - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile(&sorted, 0.5)
}

/// Discards points farther than 1.5 * (Q3 - Q1) from the median; returns the
/// kept values and the number discarded.
pub fn outlier_filter(values: &[f64]) -> (Vec<f64>, usize) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let med = quantile(&sorted, 0.5);
    let delta = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let kept: Vec<f64> = values
        .iter()
        .copied()
        .filter(|v| (v - med).abs() <= 1.5 * delta)
        .collect();
    let discarded = values.len() - kept.len();
    (kept, discarded)
}

/// Bootstrap percentile interval for the median: 2,000 seeded resamples,
/// 2.5th and 97.5th percentiles of the resampled medians.
pub fn ci_95<R: Rng>(samples: &[f64], rng: &mut R) -> Result<(f64, f64), HarnessError> {
    const RESAMPLES: usize = 2_000;
    let m = samples.len();
    if m < 2 {
        return Err(HarnessError::InsufficientSamples);
    }
    let mut medians = Vec::with_capacity(RESAMPLES);
    let mut scratch = vec![0.0f64; m];
    for _ in 0..RESAMPLES {
        for slot in scratch.iter_mut() {
            *slot = samples[rng.random_range(0..m)];
        }
        scratch.sort_by(f64::total_cmp);
        medians.push(quantile(&scratch, 0.5));
    }
    medians.sort_by(f64::total_cmp);
    let last = (RESAMPLES - 1) as f64;
    let lo = medians[(last * 0.025).floor() as usize];
    let hi = medians[(last * 0.975).ceil() as usize];
    Ok((lo, hi))
}

/// 100 * (a - b) / b, with b the baseline.
pub fn percent_delta(a: f64, b: f64) -> Result<f64, HarnessError> {
    if b <= 0.0 {
        return Err(HarnessError::ZeroBaseline);
    }
    Ok(100.0 * (a - b) / b)
}

/// Least-squares line through a ratio series, plus the first point where the
/// series crosses 1 (found by linear interpolation between bracketing
/// points; absent when the series never brackets 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendFit {
    pub name: String,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub points: usize,
    pub crossing: Option<f64>,
}

/// Two-tailed 95% Student-t critical values for df = 1..=30; the normal
/// value is used beyond that.
const T_CRIT_95: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160,
    2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056,
    2.052, 2.048, 2.045, 2.042,
];

fn t_crit_95(df: usize) -> f64 {
    if df == 0 {
        f64::INFINITY
    } else if df <= 30 {
        T_CRIT_95[df - 1]
    } else {
        1.96
    }
}

impl TrendFit {
    /// True when the fitted slope is statistically indistinguishable from 0
    /// at the 95% level.
    pub fn slope_zero_at_95(&self) -> bool {
        let df = self.points.saturating_sub(2);
        self.slope.abs() <= t_crit_95(df) * self.slope_stderr
    }
}

pub fn fit_trend(name: &str, xs: &[f64], ys: &[f64]) -> Result<TrendFit, HarnessError> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(HarnessError::TooFewPoints);
    }
    let k = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / k;
    let mean_y = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let df = xs.len() - 2;
    let slope_stderr = (ssr / df as f64 / sxx).sqrt();

    let mut crossing = None;
    for i in 0..xs.len() - 1 {
        let a = ys[i] - 1.0;
        let b = ys[i + 1] - 1.0;
        if a == 0.0 {
            crossing = Some(xs[i]);
            break;
        }
        if a * b < 0.0 {
            crossing = Some(xs[i] + (1.0 - ys[i]) * (xs[i + 1] - xs[i]) / (ys[i + 1] - ys[i]));
            break;
        }
    }
    if crossing.is_none() && ys.last().map(|&y| y == 1.0).unwrap_or(false) {
        crossing = Some(*xs.last().unwrap());
    }

    Ok(TrendFit {
        name: name.to_string(),
        slope,
        intercept,
        slope_stderr,
        points: xs.len(),
        crossing,
    })
}

struct TrialMeasure {
    stats: RunStats,
    detailed: Option<CostBreakdown>,
}

fn measure_trial(cfg: &TrialConfig, spec: &SweepSpec, needs_trace: bool) -> Result<TrialMeasure, EngineError> {
    if needs_trace {
        let trace = run_trial(cfg)?;
        let detailed = detailed_total_time(&trace.records, spec.shape, &spec.params);
        Ok(TrialMeasure {
            stats: trace.stats,
            detailed: Some(detailed),
        })
    } else {
        Ok(TrialMeasure {
            stats: run_trial_stats(cfg)?,
            detailed: None,
        })
    }
}

fn metric_value(measure: &TrialMeasure, metric: Metric, spec: &SweepSpec) -> f64 {
    let stats = &measure.stats;
    match metric {
        Metric::CwSlots => stats.cw_slots as f64,
        Metric::Collisions => stats.disjoint_collisions as f64,
        Metric::MaxAckTimeouts => stats.max_ack_timeouts() as f64,
        Metric::HalfDoneSlot => stats.half_done_slot as f64,
        Metric::EstimationSlots => stats.estimation_slots as f64,
        Metric::SimpleTotalUs => {
            let p = transmission_time(spec.shape, &spec.params);
            simple_total_time(
                stats.disjoint_collisions as f64,
                stats.cw_slots as f64,
                p,
                &spec.params,
            )
            .expect("counts are nonnegative")
        }
        Metric::DetailedTotalUs => measure.detailed.expect("trace collected").total_us,
    }
}

/// Runs the full battery: for each (n, policy) runs `trials` independent
/// seeded trials, applies the outlier rule per metric, and reports the
/// median with a bootstrap 95% interval. Deterministic given the spec.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, HarnessError> {
    spec.validate()?;
    let needs_trace = spec.metrics.iter().any(Metric::needs_trace);
    let mut rows = Vec::new();
    for &n in &spec.n_values {
        for policy in &spec.policies {
            let measures: Result<Vec<TrialMeasure>, HarnessError> = (0..spec.trials)
                .into_par_iter()
                .map(|trial| {
                    let cfg =
                        TrialConfig::new(n, *policy, trial_seed(spec.seed, n, policy, trial));
                    measure_trial(&cfg, spec, needs_trace).map_err(|source| {
                        HarnessError::Trial {
                            n,
                            policy: policy.to_string(),
                            trial,
                            source,
                        }
                    })
                })
                .collect();
            let measures = measures?;
            for &metric in &spec.metrics {
                let values: Vec<f64> = measures
                    .iter()
                    .map(|m| metric_value(m, metric, spec))
                    .collect();
                let (kept, outliers) = outlier_filter(&values);
                let med = median(&kept);
                let (ci_lo, ci_hi) = if kept.len() >= 2 {
                    ci_95(&kept, &mut ci_rng(spec.seed, n, policy, metric))?
                } else {
                    (med, med)
                };
                rows.push(SweepRow {
                    n,
                    policy: policy.to_string(),
                    metric,
                    median: med,
                    ci_lo,
                    ci_hi,
                    trials: spec.trials,
                    outliers,
                });
            }
        }
    }
    Ok(SweepResult { rows })
}

/// Long-format CSV, one row per (n, policy, metric).
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from("n,policy,metric,median,ci_lo,ci_hi,trials,outliers\n");
    for r in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n, r.policy, r.metric, r.median, r.ci_lo, r.ci_hi, r.trials, r.outliers
        ));
    }
    out
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    spec: &'a SweepSpec,
    code_version: &'static str,
    root_seed: u64,
}

/// JSON manifest pinning the sweep configuration and code version.
pub fn sweep_manifest(spec: &SweepSpec) -> String {
    let manifest = Manifest {
        spec,
        code_version: env!("CARGO_PKG_VERSION"),
        root_seed: spec.seed,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    text
}

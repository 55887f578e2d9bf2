//! Named verification checks and the suites that group them.
//!
//! Each check runs a seeded battery against a pinned expectation (a
//! magnitude, an ordering, a ratio band or a closed-form identity) and
//! reports pass/fail with the measured values. The `verify` subcommand and
//! the acceptance test suite both dispatch here, so a criterion is pinned in
//! exactly one place.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::costmodel::{
    detailed_total_time, simple_total_time, transmission_time, PacketShape,
};
use crate::domain::{Algorithm, PolicySpec, SlotRecord, TimingParams};
use crate::engine::{run_trial, run_trial_stats, TrialConfig};
use crate::harness::{
    fit_trend, median, percent_delta, run_sweep, sweep_csv, sweep_manifest, trial_seed,
    HarnessError, Metric, SweepResult, SweepSpec,
};
use crate::tracefmt;

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

impl CheckResult {
    fn pass(name: &'static str, details: String) -> Self {
        CheckResult {
            name,
            passed: true,
            details,
        }
    }

    fn fail(name: &'static str, details: String) -> Self {
        CheckResult {
            name,
            passed: false,
            details,
        }
    }

    fn from(name: &'static str, passed: bool, details: String) -> Self {
        CheckResult {
            name,
            passed,
            details,
        }
    }

    /// One printable pass/fail line.
    pub fn line(&self) -> String {
        format!(
            "[{}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.details
        )
    }
}

pub const SUITE_NAMES: [&str; 4] = ["claims", "figures-small", "figures-large", "bestofk"];

/// Runs one named suite; `None` for an unknown suite name.
pub fn run_suite(name: &str, seed: u64) -> Option<Vec<CheckResult>> {
    let checks: Vec<CheckResult> = match name {
        "claims" => vec![
            beb_collisions_linear(seed),
            stb_collision_factor(seed),
            collision_ratio_crossovers(seed),
        ],
        "figures-small" => vec![
            cw_magnitude(seed),
            small_n_cw_ordering(seed),
            total_time_reversal(seed),
            back_of_envelope(seed),
            transmission_time_op(seed),
        ],
        "figures-large" => vec![large_n_cw_ordering(seed)],
        "bestofk" => vec![best_of_k(seed)],
        _ => return None,
    };
    Some(checks)
}

/// Every acceptance criterion, in order.
pub fn all_criteria(seed: u64) -> Vec<CheckResult> {
    vec![
        cw_magnitude(seed),
        small_n_cw_ordering(seed),
        large_n_cw_ordering(seed),
        beb_collisions_linear(seed),
        stb_collision_factor(seed),
        collision_ratio_crossovers(seed),
        total_time_reversal(seed),
        back_of_envelope(seed),
        transmission_time_op(seed),
        best_of_k(seed),
        oracle_equivalence(seed),
        determinism(seed),
    ]
}

const LARGE_GRID: [usize; 5] = [1_000, 3_000, 10_000, 30_000, 100_000];
const LARGE_TRIALS: usize = 200;
const SMALL_TRIALS: usize = 200;

fn spec_of(s: &str) -> PolicySpec {
    s.parse().expect("valid policy string")
}

type SweepCache = Mutex<HashMap<(u64, &'static str), Arc<SweepResult>>>;

fn sweep_cache() -> &'static SweepCache {
    static CACHE: OnceLock<SweepCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn cached_sweep<F>(label: &'static str, seed: u64, build: F) -> Result<Arc<SweepResult>, String>
where
    F: FnOnce() -> Result<SweepResult, HarnessError>,
{
    let mut cache = sweep_cache().lock().unwrap();
    if let Some(hit) = cache.get(&(seed, label)) {
        return Ok(hit.clone());
    }
    let result = Arc::new(build().map_err(|e| e.to_string())?);
    cache.insert((seed, label), result.clone());
    Ok(result)
}

/// Collision and CW-slot medians for the large batch sizes; shared by the
/// large-n ordering and every collision-trend check.
fn large_sweep(seed: u64) -> Result<Arc<SweepResult>, String> {
    cached_sweep("large", seed, || {
        run_sweep(&SweepSpec {
            n_values: LARGE_GRID.to_vec(),
            policies: vec![spec_of("beb"), spec_of("lb"), spec_of("llb"), spec_of("stb")],
            trials: LARGE_TRIALS,
            shape: PacketShape::default(),
            params: TimingParams::default(),
            seed,
            metrics: vec![Metric::CwSlots, Metric::Collisions],
        })
    })
}

fn small150_sweep(seed: u64) -> Result<Arc<SweepResult>, String> {
    cached_sweep("small150", seed, || {
        run_sweep(&SweepSpec {
            n_values: vec![150],
            policies: vec![spec_of("beb"), spec_of("lb"), spec_of("llb"), spec_of("stb")],
            trials: SMALL_TRIALS,
            shape: PacketShape::default(),
            params: TimingParams::default(),
            seed,
            metrics: vec![Metric::CwSlots],
        })
    })
}

/// Median abstract-engine CW slots for BEB at n = 150 land within 30% of
/// the reference count of 886.
pub fn cw_magnitude(seed: u64) -> CheckResult {
    const NAME: &str = "01 beb cw-slot magnitude at n=150";
    let sweep = match small150_sweep(seed) {
        Ok(s) => s,
        Err(e) => return CheckResult::fail(NAME, e),
    };
    let med = sweep.median(150, "beb", Metric::CwSlots).unwrap_or(f64::NAN);
    let (lo, hi) = (886.0 * 0.7, 886.0 * 1.3);
    CheckResult::from(
        NAME,
        med >= lo && med <= hi,
        format!("median cw_slots {med:.1}, reference band [{lo:.1}, {hi:.1}] (886 +/- 30%)"),
    )
}

/// At n = 150 the medians order stb < lb < llb < beb with separated 95%
/// intervals.
pub fn small_n_cw_ordering(seed: u64) -> CheckResult {
    const NAME: &str = "02 small-n cw ordering stb < lb < llb < beb";
    let sweep = match small150_sweep(seed) {
        Ok(s) => s,
        Err(e) => return CheckResult::fail(NAME, e),
    };
    let order = ["stb", "lb", "llb", "beb"];
    let rows: Vec<_> = order
        .iter()
        .map(|p| sweep.row(150, p, Metric::CwSlots).unwrap())
        .collect();
    let mut ok = true;
    for pair in rows.windows(2) {
        if !(pair[0].median < pair[1].median && pair[0].ci_hi < pair[1].ci_lo) {
            ok = false;
        }
    }
    let shown: Vec<String> = rows
        .iter()
        .map(|r| format!("{} {:.1} [{:.1},{:.1}]", r.policy, r.median, r.ci_lo, r.ci_hi))
        .collect();
    CheckResult::from(NAME, ok, shown.join(", "))
}

/// At n = 100,000 the medians order stb < llb < lb < beb.
pub fn large_n_cw_ordering(seed: u64) -> CheckResult {
    const NAME: &str = "03 large-n cw ordering stb < llb < lb < beb";
    let sweep = match large_sweep(seed) {
        Ok(s) => s,
        Err(e) => return CheckResult::fail(NAME, e),
    };
    let n = 100_000;
    let meds: Vec<(String, f64)> = ["stb", "llb", "lb", "beb"]
        .iter()
        .map(|p| (p.to_string(), sweep.median(n, p, Metric::CwSlots).unwrap()))
        .collect();
    let ok = meds.windows(2).all(|w| w[0].1 < w[1].1);
    let shown: Vec<String> = meds.iter().map(|(p, m)| format!("{p} {m:.0}")).collect();
    CheckResult::from(NAME, ok, shown.join(" < "))
}

fn ratio_series(sweep: &SweepResult, num: &str, den: &str) -> Vec<f64> {
    LARGE_GRID
        .iter()
        .map(|&n| {
            sweep.median(n, num, Metric::Collisions).unwrap()
                / sweep.median(n, den, Metric::Collisions).unwrap()
        })
        .collect()
}

fn per_n_series(sweep: &SweepResult, policy: &str) -> Vec<f64> {
    LARGE_GRID
        .iter()
        .map(|&n| sweep.median(n, policy, Metric::Collisions).unwrap() / n as f64)
        .collect()
}

fn bounded_flat(name: &str, xs: &[f64], ys: &[f64]) -> (bool, String) {
    let fit = fit_trend(name, xs, ys).expect("five points");
    let max = ys.iter().copied().fold(f64::MIN, f64::max);
    let min = ys.iter().copied().fold(f64::MAX, f64::min);
    let spread = max / min;
    let ok = fit.slope_zero_at_95() && spread <= 1.5;
    let details = format!(
        "{name} = {:?}, slope {:.3e} (se {:.3e}), max/min {spread:.3}",
        ys.iter().map(|y| (y * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
        fit.slope,
        fit.slope_stderr,
    );
    (ok, details)
}

/// The per-packet collision count of BEB stays flat across three decades of
/// n: fitted slope indistinguishable from 0 and max/min at most 1.5.
pub fn beb_collisions_linear(seed: u64) -> CheckResult {
    const NAME: &str = "04 beb collisions scale linearly in n";
    let sweep = match large_sweep(seed) {
        Ok(s) => s,
        Err(e) => return CheckResult::fail(NAME, e),
    };
    let xs: Vec<f64> = LARGE_GRID.iter().map(|&n| n as f64).collect();
    let ys = per_n_series(&sweep, "beb");
    let (ok, details) = bounded_flat("C_beb/n", &xs, &ys);
    CheckResult::from(NAME, ok, details)
}

/// STB suffers a bounded constant factor more collisions than BEB
/// (within [1.4, 2.8] at every sweep point) and stays linear in n itself.
pub fn stb_collision_factor(seed: u64) -> CheckResult {
    const NAME: &str = "05 stb/beb collision factor and stb linearity";
    let sweep = match large_sweep(seed) {
        Ok(s) => s,
        Err(e) => return CheckResult::fail(NAME, e),
    };
    let ratios = ratio_series(&sweep, "stb", "beb");
    let factor_ok = ratios.iter().all(|&r| (1.4..=2.8).contains(&r));
    let xs: Vec<f64> = LARGE_GRID.iter().map(|&n| n as f64).collect();
    let ys = per_n_series(&sweep, "stb");
    let (flat_ok, flat_details) = bounded_flat("C_stb/n", &xs, &ys);
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    CheckResult::from(
        NAME,
        factor_ok && flat_ok,
        format!("C_stb/C_beb = [{}] (band [1.4, 2.8]); {flat_details}", shown.join(", ")),
    )
}

/// LB exceeds STB in collisions everywhere and increasingly so; LLB crosses
/// parity with STB somewhere between n = 10^4 and n = 10^5.
pub fn collision_ratio_crossovers(seed: u64) -> CheckResult {
    const NAME: &str = "06 collision-ratio crossovers vs stb";
    let sweep = match large_sweep(seed) {
        Ok(s) => s,
        Err(e) => return CheckResult::fail(NAME, e),
    };
    let xs: Vec<f64> = LARGE_GRID.iter().map(|&n| n as f64).collect();
    let lb = ratio_series(&sweep, "lb", "stb");
    let lb_ok = lb.iter().all(|&r| r > 1.0) && lb.windows(2).all(|w| w[0] < w[1]);
    let llb = ratio_series(&sweep, "llb", "stb");
    let fit = fit_trend("C_llb/C_stb", &xs, &llb).expect("five points");
    let crossing_ok = fit
        .crossing
        .is_some_and(|x| (10_000.0..=100_000.0).contains(&x));
    let lb_shown: Vec<String> = lb.iter().map(|r| format!("{r:.3}")).collect();
    let llb_shown: Vec<String> = llb.iter().map(|r| format!("{r:.3}")).collect();
    let crossing = fit
        .crossing
        .map_or("none".to_string(), |x| format!("{x:.0}"));
    CheckResult::from(
        NAME,
        lb_ok && crossing_ok,
        format!(
            "C_lb/C_stb = [{}] (all > 1, increasing: {lb_ok}); C_llb/C_stb = [{}], parity crossing at n = {crossing} (window [10^4, 10^5])",
            lb_shown.join(", "),
            llb_shown.join(", ")
        ),
    )
}

fn detailed150_sweep(seed: u64, payload: u32) -> Result<SweepResult, HarnessError> {
    run_sweep(&SweepSpec {
        n_values: vec![150],
        policies: vec![
            PolicySpec::with_cap(Algorithm::Beb, 1024),
            PolicySpec::with_cap(Algorithm::LlbMonotone, 1024),
            PolicySpec::with_cap(Algorithm::Lb, 1024),
            PolicySpec::with_cap(Algorithm::Stb, 1024),
        ],
        trials: 30,
        shape: PacketShape::with_payload(payload).expect("valid payload"),
        params: TimingParams::default(),
        seed,
        metrics: vec![Metric::DetailedTotalUs],
    })
}

/// Under the detailed cost model the CW-slot advantage reverses: total time
/// orders beb < llb < lb < stb at n = 150, LLB's penalty over BEB stays
/// under 30%, and the larger payload widens the LB and STB penalties.
pub fn total_time_reversal(seed: u64) -> CheckResult {
    const NAME: &str = "07 total-time reversal at n=150";
    let run = |payload| -> Result<Vec<f64>, String> {
        let sweep = detailed150_sweep(seed, payload).map_err(|e| e.to_string())?;
        Ok(["beb", "llb", "lb", "stb"]
            .iter()
            .map(|p| sweep.median(150, p, Metric::DetailedTotalUs).unwrap())
            .collect())
    };
    let t64 = match run(64) {
        Ok(v) => v,
        Err(e) => return CheckResult::fail(NAME, e),
    };
    let t1024 = match run(1024) {
        Ok(v) => v,
        Err(e) => return CheckResult::fail(NAME, e),
    };
    let ordering_ok = t64.windows(2).all(|w| w[0] < w[1]);
    let d = |t: &[f64], i: usize| percent_delta(t[i], t[0]).unwrap();
    let llb64 = d(&t64, 1);
    let llb_ok = llb64 > 0.0 && llb64 < 30.0;
    let widening_ok = d(&t1024, 2) > d(&t64, 2) && d(&t1024, 3) > d(&t64, 3);
    CheckResult::from(
        NAME,
        ordering_ok && llb_ok && widening_ok,
        format!(
            "64B medians beb/llb/lb/stb = {:.0}/{:.0}/{:.0}/{:.0} us (ordering: {ordering_ok}); llb delta {llb64:.1}% (want 0..30); deltas at 1024B lb {:.1}% vs {:.1}%, stb {:.1}% vs {:.1}% (widening: {widening_ok})",
            t64[0], t64[1], t64[2], t64[3],
            d(&t1024, 2), d(&t64, 2), d(&t1024, 3), d(&t64, 3)
        ),
    )
}

/// The closed-form pieces reassemble the reference back-of-the-envelope
/// total: 13,163 us of collision transmissions plus 7,974 us of CW slots
/// plus 1,100 us of ACK timeouts is exactly 22,237 us.
pub fn back_of_envelope(seed: u64) -> CheckResult {
    const NAME: &str = "08 back-of-envelope assembly";
    let _ = seed;
    let params = TimingParams::default();
    let transmissions = simple_total_time(337.5, 0.0, 19.0, &params).unwrap();
    let cw = simple_total_time(0.0, 886.0, 19.0, &params).unwrap();
    let part1 = (transmissions - 13_163.0).abs() <= 1.0;
    let part2 = cw == 7_974.0;
    let total = transmissions.round() + cw + 1_100.0;
    let part3 = total == 22_237.0;
    CheckResult::from(
        NAME,
        part1 && part2 && part3,
        format!("collision transmissions {transmissions:.1} us (want 13,163 +/- 1); cw slots {cw:.0} us (want 7,974); assembled total {total:.0} us (want 22,237)"),
    )
}

/// Frame airtimes match the reference values for 128- and 1,088-byte frames.
pub fn transmission_time_op(seed: u64) -> CheckResult {
    const NAME: &str = "09 transmission-time values";
    let _ = seed;
    let params = TimingParams::default();
    let small = transmission_time(PacketShape::default(), &params);
    let large = transmission_time(PacketShape::with_payload(1024).unwrap(), &params);
    let ok = (small - 18.96).abs() <= 0.01 && (large - 161.2).abs() <= 0.05;
    CheckResult::from(
        NAME,
        ok,
        format!("128B frame {small:.4} us (want 18.96); 1088B frame {large:.4} us (want 161.2)"),
    )
}

/// Best-of-5 estimation: no underestimate below n/lg n, at least 90% of
/// estimates at or above n, estimation at most 5% of total time, and a
/// total-time win of at least 10% over BEB at n = 150.
pub fn best_of_k(seed: u64) -> CheckResult {
    const NAME: &str = "10 best-of-k estimation and total time";
    let policy = spec_of("bestof:5");
    let shape = PacketShape::default();
    let params = TimingParams::default();
    let trials = 20;

    let mut all_floor_ok = true;
    let mut ge_n = 0usize;
    let mut total_estimates = 0usize;
    let mut share_ok = true;
    let mut share_shown = Vec::new();
    let mut bok150 = Vec::new();
    for &n in &[50usize, 100, 150, 200] {
        let floor = n as f64 / (n as f64).log2();
        let mut shares = Vec::with_capacity(trials);
        for t in 0..trials {
            let cfg = TrialConfig::new(n, policy, trial_seed(seed, n, &policy, t));
            let trace = match run_trial(&cfg) {
                Ok(tr) => tr,
                Err(e) => return CheckResult::fail(NAME, e.to_string()),
            };
            let estimates = trace.stats.estimates.as_ref().expect("estimating policy");
            for &w in estimates {
                total_estimates += 1;
                if f64::from(w) < floor {
                    all_floor_ok = false;
                }
                if w as usize >= n {
                    ge_n += 1;
                }
            }
            let cost = detailed_total_time(&trace.records, shape, &params);
            shares.push(cost.estimation_time_us / cost.total_us);
            if n == 150 {
                bok150.push(cost.total_us);
            }
        }
        let share_med = median(&shares);
        if share_med > 0.05 {
            share_ok = false;
        }
        share_shown.push(format!("n={n}: {:.1}%", share_med * 100.0));
    }
    let ge_n_frac = ge_n as f64 / total_estimates as f64;
    let overestimate_ok = ge_n_frac >= 0.9;

    let beb = PolicySpec::with_cap(Algorithm::Beb, 1024);
    let mut beb150 = Vec::with_capacity(trials);
    for t in 0..trials {
        let cfg = TrialConfig::new(150, beb, trial_seed(seed, 150, &beb, t));
        let trace = match run_trial(&cfg) {
            Ok(tr) => tr,
            Err(e) => return CheckResult::fail(NAME, e.to_string()),
        };
        beb150.push(detailed_total_time(&trace.records, shape, &params).total_us);
    }
    let delta = percent_delta(median(&bok150), median(&beb150)).unwrap();
    let win_ok = delta <= -10.0;

    CheckResult::from(
        NAME,
        all_floor_ok && overestimate_ok && share_ok && win_ok,
        format!(
            "estimates >= n/lg n: {all_floor_ok}; {:.1}% of estimates >= n (want >= 90%); estimation share medians [{}] (want <= 5%); total-time delta vs beb at n=150: {delta:.1}% (want <= -10%)",
            ge_n_frac * 100.0,
            share_shown.join(", ")
        ),
    )
}

fn first_window_key(records: &[SlotRecord], w: u32) -> String {
    let mut parts = Vec::with_capacity(w as usize);
    for slot in 0..u64::from(w) {
        let ids = records
            .iter()
            .find(|r| r.slot_index == slot)
            .map(|r| {
                if r.transmitters.is_empty() {
                    "-".to_string()
                } else {
                    r.transmitters
                        .iter()
                        .map(usize::to_string)
                        .collect::<Vec<_>>()
                        .join(",")
                }
            })
            .unwrap_or_else(|| "-".to_string());
        parts.push(ids);
    }
    parts.join("|")
}

/// Empirical first-window outcome distributions match exact enumeration of
/// all W^n slot choices within total-variation distance 0.01.
///
/// Combinations with n >= 2 stations on a one-slot window never terminate
/// (every window is the same guaranteed collision), so those two are
/// excluded; their first window is deterministic anyway.
pub fn oracle_equivalence(seed: u64) -> CheckResult {
    const NAME: &str = "11 first-window oracle equivalence";
    const TRIALS: usize = 100_000;
    let mut worst: f64 = 0.0;
    for n in 1..=3usize {
        for w in 1..=4u32 {
            if n >= 2 && w == 1 {
                continue;
            }
            // exact: every assignment of a slot to each station is equally likely
            let mut exact: HashMap<String, f64> = HashMap::new();
            let assignments = (w as u64).pow(n as u32);
            for code in 0..assignments {
                let mut c = code;
                let mut records: Vec<SlotRecord> = Vec::new();
                let mut slots: Vec<Vec<usize>> = vec![Vec::new(); w as usize];
                for station in 0..n {
                    slots[(c % u64::from(w)) as usize].push(station);
                    c /= u64::from(w);
                }
                for (slot, ids) in slots.into_iter().enumerate() {
                    records.push(SlotRecord::new(
                        slot as u64,
                        ids,
                        crate::domain::Phase::ContentionWindow,
                    ));
                }
                *exact.entry(first_window_key(&records, w)).or_insert(0.0) +=
                    1.0 / assignments as f64;
            }

            let policy = spec_of(&format!("fixed:{w}"));
            let mut observed: HashMap<String, u64> = HashMap::new();
            for t in 0..TRIALS {
                let cfg = TrialConfig::new(n, policy, trial_seed(seed, n, &policy, t));
                let trace = match run_trial(&cfg) {
                    Ok(tr) => tr,
                    Err(e) => return CheckResult::fail(NAME, e.to_string()),
                };
                *observed
                    .entry(first_window_key(&trace.records, w))
                    .or_insert(0) += 1;
            }

            let mut tv = 0.0;
            let mut keys: Vec<&String> = exact.keys().chain(observed.keys()).collect();
            keys.sort();
            keys.dedup();
            for key in keys {
                let p = exact.get(key).copied().unwrap_or(0.0);
                let q = observed.get(key).copied().unwrap_or(0) as f64 / TRIALS as f64;
                tv += (p - q).abs();
            }
            tv /= 2.0;
            worst = worst.max(tv);
            if tv > 0.01 {
                return CheckResult::fail(
                    NAME,
                    format!("n={n} W={w}: total variation {tv:.4} exceeds 0.01"),
                );
            }
        }
    }
    CheckResult::pass(
        NAME,
        format!("worst total-variation distance {worst:.4} over all (n <= 3, W <= 4) with 10^5 trials each"),
    )
}

/// Re-running a sweep or a trial with the same seed reproduces the output
/// byte for byte.
pub fn determinism(seed: u64) -> CheckResult {
    const NAME: &str = "12 seeded reruns are byte-identical";
    let spec = SweepSpec {
        n_values: vec![20, 40],
        policies: vec![spec_of("beb"), spec_of("stb"), spec_of("bestof:5")],
        trials: 10,
        shape: PacketShape::default(),
        params: TimingParams::default(),
        seed,
        metrics: vec![Metric::CwSlots, Metric::Collisions, Metric::DetailedTotalUs],
    };
    let first = match run_sweep(&spec) {
        Ok(r) => r,
        Err(e) => return CheckResult::fail(NAME, e.to_string()),
    };
    let second = match run_sweep(&spec) {
        Ok(r) => r,
        Err(e) => return CheckResult::fail(NAME, e.to_string()),
    };
    let csv_ok = sweep_csv(&first) == sweep_csv(&second);
    let manifest_ok = sweep_manifest(&spec) == sweep_manifest(&spec);

    let cfg = TrialConfig::new(25, spec_of("bestof:5"), seed);
    let t1 = run_trial(&cfg);
    let t2 = run_trial(&cfg);
    let trace_ok = match (t1, t2) {
        (Ok(a), Ok(b)) => {
            let mut buf_a = Vec::new();
            let mut buf_b = Vec::new();
            tracefmt::write_trace(&mut buf_a, &a.records).unwrap();
            tracefmt::write_trace(&mut buf_b, &b.records).unwrap();
            buf_a == buf_b && a.stats == b.stats
        }
        _ => false,
    };
    CheckResult::from(
        NAME,
        csv_ok && manifest_ok && trace_ok,
        format!("sweep csv identical: {csv_ok}; manifest identical: {manifest_ok}; trace identical: {trace_ok}"),
    )
}

/// Sanity check used by tests: verify stats-only runs agree with full runs
/// on the configurations the criteria use.
#[doc(hidden)]
pub fn stats_paths_agree(seed: u64) -> bool {
    for policy in ["beb", "stb", "bestof:5"] {
        let cfg = TrialConfig::new(40, spec_of(policy), seed);
        let full = run_trial(&cfg).map(|t| t.stats);
        let stats = run_trial_stats(&cfg);
        if full != stats {
            return false;
        }
    }
    true
}

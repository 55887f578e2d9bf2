//! The slotted channel.
//!
//! A trial runs a single batch of `n` stations that all begin contending at
//! slot 0. Each slot, every active station is stepped; a lone transmitter
//! succeeds, two or more collide, and every station learns its own outcome
//! (and the channel state) before the next slot. The trace ends at the slot
//! of the final success.
//!
//! Randomness: one root seed per trial; station `s` draws from stream `s` of
//! a ChaCha12 generator seeded with it (`set_stream(s)`), so draws depend
//! only on the station's own decision points. This makes the window-batched
//! fast path bit-identical to naive slot-by-slot stepping, which is kept as
//! a reference implementation and cross-checked in the tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::domain::{
    ChannelState, OwnOutcome, Phase, PolicySpec, RunStats, SlotFeedback, SlotOutcome, SlotRecord,
    StationAction, StationId,
};
use crate::policies::{Station, WindowSchedule};

/// Default safety bound on trial length, in slots per station. Every
/// implemented policy finishes in far fewer slots; the bound only catches
/// bugs and non-terminating configurations such as `fixed:1` with n >= 2.
pub const DEFAULT_MAX_SLOTS_PER_STATION: u64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("invalid trial config: {0}")]
    InvalidConfig(String),
    #[error("runaway trial: no completion within {0} slots")]
    Runaway(u64),
}

/// One simulated trial: a batch size, a policy, a seed and a safety bound.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrialConfig {
    pub n: usize,
    pub policy: PolicySpec,
    pub seed: u64,
    pub max_slots: u64,
}

impl TrialConfig {
    pub fn new(n: usize, policy: PolicySpec, seed: u64) -> Self {
        TrialConfig {
            n,
            policy,
            seed,
            max_slots: (n as u64).saturating_mul(DEFAULT_MAX_SLOTS_PER_STATION),
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.n < 1 {
            return Err(EngineError::InvalidConfig("n must be >= 1".into()));
        }
        if self.max_slots < self.n as u64 {
            return Err(EngineError::InvalidConfig(
                "max_slots must be >= n".into(),
            ));
        }
        self.policy
            .validate()
            .map_err(|e| EngineError::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}

/// A completed trial: the slot records (slot indices contiguous from 0,
/// ending at the final success) plus the statistics computed alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<SlotRecord>,
    pub stats: RunStats,
}

fn station_rng(seed: u64, station: StationId) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(station as u64);
    rng
}

struct TrialOutput {
    records: Option<Vec<SlotRecord>>,
    stats: RunStats,
}

/// Window-batched runner for policies whose stations share deterministic
/// window boundaries (everything except Best-of-k). Per window it draws each
/// active station's slot from that station's own stream and classifies the
/// occupancy, which is observably identical to slot-by-slot stepping.
fn run_windowed_batched(cfg: &TrialConfig, collect: bool) -> Result<TrialOutput, EngineError> {
    let n = cfg.n;
    let mut schedule = WindowSchedule::for_algorithm(cfg.policy.algorithm, cfg.policy.window_cap)
        .expect("windowed algorithm");
    let mut rngs: Vec<ChaCha12Rng> = (0..n).map(|s| station_rng(cfg.seed, s)).collect();

    let mut active: Vec<StationId> = (0..n).collect();
    let mut finished = vec![false; n];
    let mut chosen = vec![0u32; n];
    let mut timeouts = vec![0u64; n];
    let mut completions: Vec<u64> = Vec::with_capacity(n);
    let mut collisions: u64 = 0;
    let mut counts: Vec<u32> = Vec::new();
    let mut records = if collect { Some(Vec::new()) } else { None };
    let mut window_start: u64 = 0;

    loop {
        let w = schedule.next_window_size();
        let wu = w as usize;
        if counts.len() < wu {
            counts.resize(wu, 0);
        }

        for &s in &active {
            let t = rngs[s].random_range(0..w);
            chosen[s] = t;
            counts[t as usize] += 1;
            if counts[t as usize] == 2 {
                collisions += 1;
            }
        }

        let mut window_successes: Vec<(u64, StationId)> = Vec::new();
        for &s in &active {
            if counts[chosen[s] as usize] == 1 {
                window_successes.push((window_start + u64::from(chosen[s]), s));
            } else {
                timeouts[s] += 1;
            }
        }
        window_successes.sort_unstable();
        let all_done = window_successes.len() == active.len();

        if let Some(recs) = records.as_mut() {
            let mut buckets: Vec<Vec<StationId>> = vec![Vec::new(); wu];
            for &s in &active {
                buckets[chosen[s] as usize].push(s);
            }
            let last_emitted = if all_done {
                window_successes.last().expect("n >= 1").0 - window_start
            } else {
                u64::from(w) - 1
            };
            for (offset, bucket) in buckets.into_iter().enumerate() {
                if offset as u64 > last_emitted {
                    break;
                }
                recs.push(SlotRecord::new(
                    window_start + offset as u64,
                    bucket,
                    Phase::ContentionWindow,
                ));
            }
        }

        for &(slot, s) in &window_successes {
            completions.push(slot);
            finished[s] = true;
        }
        for &s in &active {
            counts[chosen[s] as usize] = 0;
        }
        active.retain(|&s| !finished[s]);
        debug_assert_eq!(active.len() + completions.len(), n);

        if active.is_empty() {
            let cw_slots = completions.last().expect("n >= 1") + 1;
            if cw_slots > cfg.max_slots {
                return Err(EngineError::Runaway(cfg.max_slots));
            }
            let half_done_slot = completions[n.div_ceil(2) - 1];
            return Ok(TrialOutput {
                records,
                stats: RunStats {
                    n,
                    cw_slots,
                    disjoint_collisions: collisions,
                    per_station_ack_timeouts: timeouts,
                    completion_slots: completions,
                    half_done_slot,
                    estimation_slots: 0,
                    estimates: None,
                },
            });
        }
        window_start += u64::from(w);
        if window_start >= cfg.max_slots {
            return Err(EngineError::Runaway(cfg.max_slots));
        }
    }
}

/// General slot-by-slot runner. Handles any policy mix; required for
/// Best-of-k, whose stations desynchronize after estimation. A slot is
/// tagged `Estimation` while at least one active station is still
/// estimating; collisions and ACK timeouts are counted over
/// contention-window slots only, since dummy packets carry no
/// acknowledgement semantics.
fn run_slot_stepped(cfg: &TrialConfig, collect: bool) -> Result<TrialOutput, EngineError> {
    let n = cfg.n;
    let mut rngs: Vec<ChaCha12Rng> = (0..n).map(|s| station_rng(cfg.seed, s)).collect();
    let mut stations: Vec<Station> = (0..n)
        .map(|s| Station::build(&cfg.policy, &mut rngs[s]))
        .collect();

    let mut active: Vec<StationId> = (0..n).collect();
    let mut finished = vec![false; n];
    let mut timeouts = vec![0u64; n];
    let mut completions: Vec<u64> = Vec::with_capacity(n);
    let mut collisions: u64 = 0;
    let mut cw_slots: u64 = 0;
    let mut estimation_slots: u64 = 0;
    let mut records = if collect { Some(Vec::new()) } else { None };
    let mut transmitters: Vec<StationId> = Vec::new();

    let mut slot: u64 = 0;
    loop {
        if slot >= cfg.max_slots {
            return Err(EngineError::Runaway(cfg.max_slots));
        }
        let phase = if active.iter().any(|&s| stations[s].is_estimating()) {
            Phase::Estimation
        } else {
            Phase::ContentionWindow
        };

        transmitters.clear();
        for &s in &active {
            if stations[s].step(&mut rngs[s]) == StationAction::Transmit {
                transmitters.push(s);
            }
        }
        let t_count = transmitters.len();
        let channel_state = if t_count > 0 {
            ChannelState::Busy
        } else {
            ChannelState::Clear
        };
        for &s in &active {
            let own_outcome = if transmitters.binary_search(&s).is_err() {
                OwnOutcome::NotSent
            } else if t_count == 1 {
                OwnOutcome::Success
            } else {
                OwnOutcome::Collision
            };
            stations[s].feedback(
                SlotFeedback {
                    own_outcome,
                    channel_state,
                },
                &mut rngs[s],
            );
        }

        match phase {
            Phase::ContentionWindow => {
                cw_slots += 1;
                if t_count >= 2 {
                    collisions += 1;
                    for &s in &transmitters {
                        timeouts[s] += 1;
                    }
                }
            }
            Phase::Estimation => estimation_slots += 1,
        }

        let mut someone_finished = false;
        if t_count == 1 {
            let s = transmitters[0];
            // estimating stations ignore a lone dummy; only a real success
            // marks the station done
            if stations[s].is_done() {
                completions.push(slot);
                finished[s] = true;
                someone_finished = true;
            }
        }
        if let Some(recs) = records.as_mut() {
            recs.push(SlotRecord::new(slot, transmitters.clone(), phase));
        }
        if someone_finished {
            active.retain(|&s| !finished[s]);
            debug_assert_eq!(active.len() + completions.len(), n);
            if active.is_empty() {
                break;
            }
        }
        slot += 1;
    }

    let estimates = match cfg.policy.algorithm {
        crate::domain::Algorithm::BestOfK(_) => Some(
            stations
                .iter()
                .map(|st| st.estimate().expect("finished station has an estimate"))
                .collect(),
        ),
        _ => None,
    };
    let half_done_slot = completions[n.div_ceil(2) - 1];
    Ok(TrialOutput {
        records,
        stats: RunStats {
            n,
            cw_slots,
            disjoint_collisions: collisions,
            per_station_ack_timeouts: timeouts,
            completion_slots: completions,
            half_done_slot,
            estimation_slots,
            estimates,
        },
    })
}

fn run_impl(cfg: &TrialConfig, collect: bool) -> Result<TrialOutput, EngineError> {
    cfg.validate()?;
    match cfg.policy.algorithm {
        crate::domain::Algorithm::BestOfK(_) => run_slot_stepped(cfg, collect),
        _ => run_windowed_batched(cfg, collect),
    }
}

/// Runs one trial and returns the full slot trace with its statistics.
/// Deterministic function of the config (including the seed).
pub fn run_trial(cfg: &TrialConfig) -> Result<Trace, EngineError> {
    let out = run_impl(cfg, true)?;
    Ok(Trace {
        records: out.records.expect("collected"),
        stats: out.stats,
    })
}

/// Runs one trial keeping only the statistics. Identical draws and results
/// to [`run_trial`], without materializing records; use for large sweeps.
pub fn run_trial_stats(cfg: &TrialConfig) -> Result<RunStats, EngineError> {
    Ok(run_impl(cfg, false)?.stats)
}

/// Slot index at which half the batch (ceil(n/2) packets) has completed.
pub fn run_half(cfg: &TrialConfig) -> Result<u64, EngineError> {
    Ok(run_trial_stats(cfg)?.half_done_slot)
}

/// Recomputes the statistics from a slot trace alone.
///
/// A station's completion is its final transmission (a done station never
/// transmits again, and every station ends on a lone success). Collisions
/// and ACK timeouts are counted over contention-window slots; estimation
/// slots carry no acknowledgement semantics. Window estimates are not
/// recoverable from a trace, so `estimates` is `None`.
pub fn count_metrics(records: &[SlotRecord]) -> RunStats {
    let n = records
        .iter()
        .flat_map(|r| r.transmitters.iter())
        .max()
        .map_or(0, |&m| m + 1);
    let mut last_tx = vec![0u64; n];
    let mut timeouts = vec![0u64; n];
    let mut collisions = 0u64;
    let mut cw_slots = 0u64;
    let mut estimation_slots = 0u64;
    for rec in records {
        debug_assert!(rec.is_consistent());
        match rec.phase_tag {
            Phase::ContentionWindow => {
                cw_slots += 1;
                if let SlotOutcome::Collision(_) = rec.outcome {
                    collisions += 1;
                    for &s in &rec.transmitters {
                        timeouts[s] += 1;
                    }
                }
            }
            Phase::Estimation => estimation_slots += 1,
        }
        for &s in &rec.transmitters {
            last_tx[s] = rec.slot_index;
        }
    }
    let mut completions = last_tx;
    completions.sort_unstable();
    let half_done_slot = if n > 0 { completions[n.div_ceil(2) - 1] } else { 0 };
    RunStats {
        n,
        cw_slots,
        disjoint_collisions: collisions,
        per_station_ack_timeouts: timeouts,
        completion_slots: completions,
        half_done_slot,
        estimation_slots,
        estimates: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Algorithm;

    fn spec(s: &str) -> PolicySpec {
        s.parse().unwrap()
    }

    #[test]
    fn single_station_finishes_immediately() {
        for policy in ["beb", "lb", "llb", "llb-rep", "stb", "fixed:4", "bestof:5"] {
            let trace = run_trial(&TrialConfig::new(1, spec(policy), 42)).unwrap();
            assert_eq!(trace.stats.disjoint_collisions, 0, "{policy}");
            assert_eq!(trace.stats.completion_slots.len(), 1, "{policy}");
            let successes = trace
                .records
                .iter()
                .filter(|r| matches!(r.outcome, SlotOutcome::Success(_)))
                .count();
            assert!(successes >= 1, "{policy}");
        }
        // BEB n=1: W = 1, so the success lands in slot 0
        let trace = run_trial(&TrialConfig::new(1, spec("beb"), 7)).unwrap();
        assert_eq!(trace.stats.cw_slots, 1);
        assert_eq!(trace.stats.completion_slots, vec![0]);
    }

    #[test]
    fn two_stations_fixed_two_collide_half_the_time() {
        // exact enumeration of the 4 equally likely slot choices: 2 of 4 collide
        let mut collided = 0u32;
        let trials = 10_000;
        for seed in 0..trials {
            let trace = run_trial(&TrialConfig::new(2, spec("fixed:2"), seed as u64)).unwrap();
            if trace
                .records
                .iter()
                .take_while(|r| r.slot_index < 2)
                .any(|r| matches!(r.outcome, SlotOutcome::Collision(_)))
            {
                collided += 1;
            }
        }
        let frac = f64::from(collided) / f64::from(trials);
        assert!((frac - 0.5).abs() < 0.02, "first-window collision rate {frac}");
    }

    #[test]
    fn count_metrics_direct_example() {
        let records = vec![
            SlotRecord::new(0, vec![0, 1], Phase::ContentionWindow),
            SlotRecord::new(1, vec![], Phase::ContentionWindow),
            SlotRecord::new(2, vec![0], Phase::ContentionWindow),
            SlotRecord::new(3, vec![1], Phase::ContentionWindow),
        ];
        let stats = count_metrics(&records);
        assert_eq!(stats.n, 2);
        assert_eq!(stats.cw_slots, 4);
        assert_eq!(stats.disjoint_collisions, 1);
        assert_eq!(stats.per_station_ack_timeouts, vec![1, 1]);
        assert_eq!(stats.completion_slots, vec![2, 3]);
        assert_eq!(stats.half_done_slot, 2);
    }

    #[test]
    fn trace_invariants_hold() {
        for policy in ["beb", "lb", "llb", "stb", "fixed:16"] {
            let trace = run_trial(&TrialConfig::new(9, spec(policy), 5)).unwrap();
            let n_success = trace
                .records
                .iter()
                .filter(|r| matches!(r.outcome, SlotOutcome::Success(_)))
                .count();
            assert_eq!(n_success, 9, "{policy}");
            for (i, rec) in trace.records.iter().enumerate() {
                assert_eq!(rec.slot_index, i as u64, "{policy}: contiguous slots");
                assert!(rec.is_consistent(), "{policy}");
            }
            assert_eq!(
                trace.records.last().unwrap().slot_index + 1,
                trace.stats.cw_slots,
                "{policy}: trace ends at the final success"
            );
        }
    }

    #[test]
    fn stats_only_run_matches_full_run() {
        for policy in ["beb", "stb", "bestof:5"] {
            let cfg = TrialConfig::new(17, spec(policy), 1234);
            let trace = run_trial(&cfg).unwrap();
            let stats = run_trial_stats(&cfg).unwrap();
            assert_eq!(trace.stats, stats, "{policy}");
        }
    }

    #[test]
    fn count_metrics_agrees_with_engine_stats() {
        for policy in ["beb", "lb", "llb", "llb-rep", "stb", "fixed:8", "bestof:5"] {
            for seed in [0u64, 9, 77] {
                let cfg = TrialConfig::new(13, spec(policy), seed);
                let trace = run_trial(&cfg).unwrap();
                let mut recounted = count_metrics(&trace.records);
                recounted.estimates = trace.stats.estimates.clone();
                assert_eq!(recounted, trace.stats, "{policy} seed {seed}");
            }
        }
    }

    #[test]
    fn batched_and_slot_stepped_paths_are_bit_identical() {
        for policy in ["beb", "lb", "llb", "llb-rep", "stb", "fixed:4"] {
            for seed in [0u64, 1, 42] {
                for n in [1usize, 2, 7, 24] {
                    let cfg = TrialConfig::new(n, spec(policy), seed);
                    let fast = run_windowed_batched(&cfg, true).unwrap();
                    let slow = run_slot_stepped(&cfg, true).unwrap();
                    assert_eq!(fast.stats, slow.stats, "{policy} n={n} seed={seed}");
                    assert_eq!(
                        fast.records.unwrap(),
                        slow.records.unwrap(),
                        "{policy} n={n} seed={seed}"
                    );
                }
            }
        }
    }

    #[test]
    fn identical_seeds_give_identical_traces() {
        for policy in ["beb", "bestof:5"] {
            let cfg = TrialConfig::new(20, spec(policy), 987);
            let a = run_trial(&cfg).unwrap();
            let b = run_trial(&cfg).unwrap();
            assert_eq!(a, b, "{policy}");
        }
    }

    #[test]
    fn runaway_is_reported() {
        // two stations on a one-slot window collide forever
        let mut cfg = TrialConfig::new(2, spec("fixed:1"), 0);
        cfg.max_slots = 500;
        assert_eq!(
            run_trial(&cfg).unwrap_err(),
            EngineError::Runaway(500)
        );
    }

    #[test]
    fn invalid_configs_rejected() {
        let cfg = TrialConfig::new(0, spec("beb"), 0);
        assert!(matches!(cfg.validate(), Err(EngineError::InvalidConfig(_))));
        let mut cfg = TrialConfig::new(5, spec("beb"), 0);
        cfg.max_slots = 2;
        assert!(matches!(cfg.validate(), Err(EngineError::InvalidConfig(_))));
    }

    #[test]
    fn half_done_is_first_success_for_two_stations() {
        let cfg = TrialConfig::new(2, spec("fixed:1024"), 3);
        let stats = run_trial_stats(&cfg).unwrap();
        assert_eq!(stats.half_done_slot, stats.completion_slots[0]);
        assert_eq!(run_half(&cfg).unwrap(), stats.half_done_slot);
    }

    #[test]
    fn four_stations_large_fixed_window_rarely_collide() {
        // pairwise collision bound ~ 4*3/2 / 1024 per window
        let mut no_collision = 0;
        for seed in 0..1000u64 {
            let stats = run_trial_stats(&TrialConfig::new(4, spec("fixed:1024"), seed)).unwrap();
            assert!(stats.half_done_slot < stats.cw_slots);
            if stats.disjoint_collisions == 0 {
                no_collision += 1;
                assert!(stats.cw_slots <= 1024);
            }
        }
        assert!(no_collision >= 950, "collision-free trials: {no_collision}");
    }

    #[test]
    fn beb_150_ack_timeout_and_half_done_medians() {
        let mut max_timeouts = Vec::new();
        let mut half_ratio = Vec::new();
        for seed in 0..30u64 {
            let stats = run_trial_stats(&TrialConfig::new(150, spec("beb"), seed)).unwrap();
            max_timeouts.push(stats.max_ack_timeouts() as f64);
            half_ratio.push(stats.half_done_slot as f64 / stats.cw_slots as f64);
        }
        max_timeouts.sort_by(f64::total_cmp);
        half_ratio.sort_by(f64::total_cmp);
        let median_max = max_timeouts[15];
        assert!((6.0..=13.0).contains(&median_max), "median max timeouts {median_max}");
        // the straggling half dominates the slot count
        assert!(half_ratio[15] < 0.5, "median half/total ratio {}", half_ratio[15]);
    }

    #[test]
    fn beb_windows_share_boundaries() {
        // all stations collide in the size-1 and size-2 windows for n >= 3,
        // so the first three slots are fully determined
        let trace = run_trial(&TrialConfig::new(3, spec("beb"), 11)).unwrap();
        assert_eq!(trace.records[0].outcome, SlotOutcome::Collision(3));
        let w2: Vec<_> = trace.records[1..3]
            .iter()
            .map(|r| r.transmitters.len())
            .collect();
        assert_eq!(w2.iter().sum::<usize>(), 3, "three draws in window [1,3)");
    }

    #[test]
    fn best_of_k_stats_are_coherent() {
        let cfg = TrialConfig::new(30, spec("bestof:5"), 21);
        let trace = run_trial(&cfg).unwrap();
        let stats = &trace.stats;
        assert_eq!(stats.completion_slots.len(), 30);
        assert!(stats.estimation_slots > 0);
        let estimates = stats.estimates.as_ref().unwrap();
        assert_eq!(estimates.len(), 30);
        for &w in estimates {
            assert!(w.is_power_of_two() && (1..=1024).contains(&w));
        }
        // estimation prefix: every estimation-tagged record precedes every
        // contention-window record
        let first_cw = trace
            .records
            .iter()
            .position(|r| r.phase_tag == Phase::ContentionWindow);
        if let Some(first_cw) = first_cw {
            assert!(trace.records[..first_cw]
                .iter()
                .all(|r| r.phase_tag == Phase::Estimation));
        }
        assert_eq!(
            stats.cw_slots + stats.estimation_slots,
            trace.records.len() as u64
        );
    }

    #[test]
    fn window_cap_limits_growth() {
        let capped = PolicySpec::with_cap(Algorithm::Beb, 8);
        let stats = run_trial_stats(&TrialConfig::new(12, capped, 3)).unwrap();
        assert!(stats.completion_slots.len() == 12);
        // with the cap the schedule is 1,2,4,8,8,8,... so boundaries repeat
        let uncapped = run_trial_stats(&TrialConfig::new(12, spec("beb"), 3)).unwrap();
        assert_ne!(stats.cw_slots, uncapped.cw_slots);
    }
}

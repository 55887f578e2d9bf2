//! Per-station backoff state machines.
//!
//! Windowed policies (BEB, LB, LLB in both forms, STB, fixed) pick one
//! uniformly random slot per contention window and grow the window after a
//! failed attempt. Best-of-k starts with a size-estimation automaton and
//! switches to fixed backoff once it has adopted a window size.
//!
//! A policy instance is owned by exactly one station in one trial and is
//! deterministic given its injected random stream.

use rand::Rng;
use thiserror::Error;

use crate::domain::{Algorithm, ChannelState, OwnOutcome, PolicySpec, SlotFeedback, StationAction};

/// Last estimation round index; rounds run 0..=10.
pub const BEST_OF_K_MAX_ROUND: u32 = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("{0} is not a power of two >= {1}")]
    NotPowerOfTwo(u32, u32),
}

/// Window growth rule applied after a failed window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthRule {
    /// r = 1: the window doubles.
    Double,
    /// r = 1/lg W.
    InverseLog,
    /// r = 1/lg lg W.
    InverseLogLog,
}

impl GrowthRule {
    pub fn for_algorithm(alg: Algorithm) -> Option<GrowthRule> {
        match alg {
            Algorithm::Beb => Some(GrowthRule::Double),
            Algorithm::Lb => Some(GrowthRule::InverseLog),
            Algorithm::LlbMonotone => Some(GrowthRule::InverseLogLog),
            _ => None,
        }
    }
}

/// Next contention-window size: ceil((1 + r(W)) * W), clamped to `cap`.
///
/// Where the rule's denominator is not positive (lg W for W = 1, lg lg W for
/// W <= 2) the rule falls back to doubling, which matches BEB at the trivial
/// sizes and keeps the growth strict. Ceiling keeps slot counts integral.
pub fn next_window(rule: GrowthRule, w: u32, cap: Option<u32>) -> u32 {
    debug_assert!(w >= 1);
    let grown = match rule {
        GrowthRule::Double => 2 * u64::from(w),
        GrowthRule::InverseLog => {
            let d = f64::from(w).log2();
            if d <= 0.0 {
                2 * u64::from(w)
            } else {
                ((1.0 + 1.0 / d) * f64::from(w)).ceil() as u64
            }
        }
        GrowthRule::InverseLogLog => {
            if w <= 2 {
                2 * u64::from(w)
            } else {
                let d = f64::from(w).log2().log2();
                if d <= 0.0 {
                    2 * u64::from(w)
                } else {
                    ((1.0 + 1.0 / d) * f64::from(w)).ceil() as u64
                }
            }
        }
    };
    let grown = u32::try_from(grown).unwrap_or(u32::MAX);
    match cap {
        Some(c) => grown.min(c),
        None => grown,
    }
}

fn is_power_of_two(w: u32) -> bool {
    w != 0 && w & (w - 1) == 0
}

/// The sawtooth schedule up to and including the given outer window: for
/// outer W = 2, 4, ..., up_to_outer, the inner "backon" windows W, W/2, ..., 2.
pub fn stb_schedule(up_to_outer: u32) -> Result<Vec<u32>, PolicyError> {
    if !is_power_of_two(up_to_outer) || up_to_outer < 2 {
        return Err(PolicyError::NotPowerOfTwo(up_to_outer, 2));
    }
    let mut windows = Vec::new();
    let mut outer = 2;
    loop {
        let mut inner = outer;
        while inner >= 2 {
            windows.push(inner);
            inner /= 2;
        }
        if outer == up_to_outer {
            return Ok(windows);
        }
        outer *= 2;
    }
}

/// How many consecutive times a window of size `w` is used by the repeated
/// log-log schedule: floor(lg lg w), at least once (sizes below 4 once).
fn llb_repeat_count(w: u32) -> u32 {
    if w < 4 {
        1
    } else {
        (f64::from(w).log2().log2().floor() as u32).max(1)
    }
}

/// The repeated log-log schedule from 4 up to and including `up_to`: each
/// doubling window of size w is emitted floor(lg lg w) times.
pub fn llb_repeated_schedule(up_to: u32) -> Result<Vec<u32>, PolicyError> {
    if !is_power_of_two(up_to) || up_to < 4 {
        return Err(PolicyError::NotPowerOfTwo(up_to, 4));
    }
    let mut windows = Vec::new();
    let mut w = 4;
    loop {
        for _ in 0..llb_repeat_count(w) {
            windows.push(w);
        }
        if w == up_to {
            return Ok(windows);
        }
        w *= 2;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum ScheduleState {
    Monotone { rule: GrowthRule, current: u32 },
    Repeated { w: u32, reps_left: u32 },
    Sawtooth { outer: u32, inner: u32 },
    Fixed { w: u32 },
}

/// Infinite stream of contention-window sizes for one windowed algorithm.
///
/// The stream is deterministic, so every station in a batch consumes an
/// identical copy and their window boundaries coincide.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSchedule {
    cap: Option<u32>,
    state: ScheduleState,
}

impl WindowSchedule {
    /// Schedule for a windowed algorithm; `None` for Best-of-k, whose window
    /// sequence is not known ahead of the estimation phase.
    pub fn for_algorithm(alg: Algorithm, cap: Option<u32>) -> Option<WindowSchedule> {
        let state = match alg {
            Algorithm::Beb | Algorithm::Lb | Algorithm::LlbMonotone => ScheduleState::Monotone {
                rule: GrowthRule::for_algorithm(alg).unwrap(),
                current: 1,
            },
            Algorithm::LlbRepeated => ScheduleState::Repeated { w: 1, reps_left: 1 },
            Algorithm::Stb => ScheduleState::Sawtooth { outer: 2, inner: 2 },
            Algorithm::Fixed(w) => ScheduleState::Fixed { w },
            Algorithm::BestOfK(_) => return None,
        };
        Some(WindowSchedule { cap, state })
    }

    /// Emits the next window size. Never returns 0; never ends.
    pub fn next_window_size(&mut self) -> u32 {
        let cap = self.cap;
        let clamp = |w: u32| match cap {
            Some(c) => w.min(c),
            None => w,
        };
        match &mut self.state {
            ScheduleState::Monotone { rule, current } => {
                let emitted = clamp(*current);
                *current = next_window(*rule, emitted, cap);
                emitted
            }
            ScheduleState::Repeated { w, reps_left } => {
                let emitted = clamp(*w);
                *reps_left -= 1;
                if *reps_left == 0 {
                    if emitted == cap.unwrap_or(u32::MAX) {
                        // capped: keep emitting the cap
                        *reps_left = 1;
                    } else {
                        *w = w.saturating_mul(2);
                        *reps_left = llb_repeat_count(clamp(*w));
                    }
                }
                emitted
            }
            ScheduleState::Sawtooth { outer, inner } => {
                let emitted = clamp(*inner);
                if *inner > 2 {
                    *inner /= 2;
                } else {
                    // outer loop: double, but never past the cap
                    let next_outer = outer.saturating_mul(2);
                    if cap.is_none_or(|c| next_outer <= c) {
                        *outer = next_outer;
                    }
                    *inner = *outer;
                }
                emitted
            }
            ScheduleState::Fixed { w } => clamp(*w),
        }
    }
}

/// State machine for the windowed policies of Figure-2 style backoff: pick a
/// slot uniformly in the current window, transmit there, and on failure wait
/// out the window and grow it.
#[derive(Debug, Clone)]
pub struct WindowedPolicy {
    schedule: WindowSchedule,
    current_window: u32,
    chosen_slot: u32,
    position_in_window: u32,
    done: bool,
}

impl WindowedPolicy {
    pub fn new<R: Rng>(mut schedule: WindowSchedule, rng: &mut R) -> Self {
        let current_window = schedule.next_window_size();
        let chosen_slot = rng.random_range(0..current_window);
        WindowedPolicy {
            schedule,
            current_window,
            chosen_slot,
            position_in_window: 0,
            done: false,
        }
    }

    pub fn current_window(&self) -> u32 {
        self.current_window
    }

    pub fn chosen_slot(&self) -> u32 {
        self.chosen_slot
    }

    pub fn position_in_window(&self) -> u32 {
        self.position_in_window
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Action for the current slot. Stepping a done policy is a contract
    /// violation.
    pub fn step(&self) -> StationAction {
        debug_assert!(!self.done, "stepped a done policy");
        if self.position_in_window == self.chosen_slot {
            StationAction::Transmit
        } else {
            StationAction::Listen
        }
    }

    /// Consumes the feedback for the slot just stepped. A success finishes
    /// the station; anything else advances the position, rolling into the
    /// next (grown) window with a fresh uniform slot at the boundary.
    pub fn feedback<R: Rng>(&mut self, fb: SlotFeedback, rng: &mut R) {
        debug_assert!(!self.done);
        if fb.own_outcome == OwnOutcome::Success {
            self.done = true;
            return;
        }
        self.position_in_window += 1;
        if self.position_in_window == self.current_window {
            self.current_window = self.schedule.next_window_size();
            self.chosen_slot = rng.random_range(0..self.current_window);
            self.position_in_window = 0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationPhase {
    Estimating,
    FixedBackoff,
}

/// Best-of-k: over rounds i = 0..=10 of k slots each, send a dummy packet
/// with probability 2^-i, otherwise sense the channel. At a round boundary
/// with more than k/2 clear slots the station adopts W = 2^i and switches to
/// fixed backoff; exhausting round 10 adopts W = 2^10.
///
/// A slot in which the station sent its own dummy counts as busy for the
/// clear count (a half-duplex radio cannot sense while sending). Dummy
/// packets carry no acknowledgement semantics: own success or collision is
/// ignored while estimating. The adopted window is already bounded by 2^10,
/// so the fixed-backoff phase ignores any window cap.
#[derive(Debug, Clone)]
pub struct BestOfKPolicy {
    k: u32,
    round: u32,
    slot_in_round: u32,
    clear_count: u32,
    phase: EstimationPhase,
    estimate: Option<u32>,
    window: u32,
    chosen_slot: u32,
    position_in_window: u32,
    done: bool,
}

impl BestOfKPolicy {
    pub fn new(k: u32) -> Self {
        assert!(k >= 1, "best-of-k requires k >= 1");
        BestOfKPolicy {
            k,
            round: 0,
            slot_in_round: 0,
            clear_count: 0,
            phase: EstimationPhase::Estimating,
            estimate: None,
            window: 0,
            chosen_slot: 0,
            position_in_window: 0,
            done: false,
        }
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn phase(&self) -> EstimationPhase {
        self.phase
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn clear_count(&self) -> u32 {
        self.clear_count
    }

    /// The adopted fixed window, once estimation has terminated.
    pub fn estimate(&self) -> Option<u32> {
        self.estimate
    }

    pub fn step<R: Rng>(&mut self, rng: &mut R) -> StationAction {
        debug_assert!(!self.done, "stepped a done policy");
        match self.phase {
            EstimationPhase::Estimating => {
                // transmit probability exactly 2^-round
                let p = 1.0 / f64::from(1u32 << self.round.min(31));
                if self.round == 0 || rng.random::<f64>() < p {
                    StationAction::Transmit
                } else {
                    StationAction::Listen
                }
            }
            EstimationPhase::FixedBackoff => {
                if self.position_in_window == self.chosen_slot {
                    StationAction::Transmit
                } else {
                    StationAction::Listen
                }
            }
        }
    }

    pub fn feedback<R: Rng>(&mut self, fb: SlotFeedback, rng: &mut R) {
        debug_assert!(!self.done);
        match self.phase {
            EstimationPhase::Estimating => {
                if fb.own_outcome == OwnOutcome::NotSent
                    && fb.channel_state == ChannelState::Clear
                {
                    self.clear_count += 1;
                }
                self.slot_in_round += 1;
                if self.slot_in_round == self.k {
                    if 2 * self.clear_count > self.k || self.round == BEST_OF_K_MAX_ROUND {
                        let w = 1u32 << self.round;
                        self.estimate = Some(w);
                        self.window = w;
                        self.chosen_slot = rng.random_range(0..w);
                        self.position_in_window = 0;
                        self.phase = EstimationPhase::FixedBackoff;
                    } else {
                        self.round += 1;
                        self.clear_count = 0;
                        self.slot_in_round = 0;
                    }
                }
            }
            EstimationPhase::FixedBackoff => {
                if fb.own_outcome == OwnOutcome::Success {
                    self.done = true;
                    return;
                }
                self.position_in_window += 1;
                if self.position_in_window == self.window {
                    self.chosen_slot = rng.random_range(0..self.window);
                    self.position_in_window = 0;
                }
            }
        }
    }
}

/// One station's policy instance, behind a single stepping interface.
#[derive(Debug, Clone)]
pub enum Station {
    Windowed(WindowedPolicy),
    BestOfK(BestOfKPolicy),
}

impl Station {
    pub fn build<R: Rng>(spec: &PolicySpec, rng: &mut R) -> Station {
        match spec.algorithm {
            Algorithm::BestOfK(k) => Station::BestOfK(BestOfKPolicy::new(k)),
            alg => {
                let schedule = WindowSchedule::for_algorithm(alg, spec.window_cap)
                    .expect("windowed algorithm");
                Station::Windowed(WindowedPolicy::new(schedule, rng))
            }
        }
    }

    pub fn step<R: Rng>(&mut self, rng: &mut R) -> StationAction {
        match self {
            Station::Windowed(p) => p.step(),
            Station::BestOfK(p) => p.step(rng),
        }
    }

    pub fn feedback<R: Rng>(&mut self, fb: SlotFeedback, rng: &mut R) {
        match self {
            Station::Windowed(p) => p.feedback(fb, rng),
            Station::BestOfK(p) => p.feedback(fb, rng),
        }
    }

    pub fn is_done(&self) -> bool {
        match self {
            Station::Windowed(p) => p.is_done(),
            Station::BestOfK(p) => p.is_done(),
        }
    }

    pub fn is_estimating(&self) -> bool {
        match self {
            Station::Windowed(_) => false,
            Station::BestOfK(p) => p.phase() == EstimationPhase::Estimating && !p.is_done(),
        }
    }

    pub fn estimate(&self) -> Option<u32> {
        match self {
            Station::Windowed(_) => None,
            Station::BestOfK(p) => p.estimate(),
        }
    }
}

//! Core vocabulary shared by the policies, engine, cost model and harness:
//! channel timing constants, per-slot actions and feedback, slot records,
//! per-trial aggregates and policy selection.
//!
//! Everything here is immutable after construction and safe to share across
//! concurrent trial workers. All types have a canonical JSON encoding with
//! the field names spelled exactly as in the struct definitions.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Station identifier; stations in a batch are numbered `0..n`.
pub type StationId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("nonpositive duration: {0}")]
    NonpositiveDuration(&'static str),
    #[error("SIFS exceeds DIFS")]
    SifsExceedsDifs,
    #[error("nonpositive data rate")]
    NonpositiveDataRate,
    #[error("max_window must be positive")]
    ZeroMaxWindow,
    #[error("invalid policy spec {0:?}: {1}")]
    BadPolicySpec(String, &'static str),
}

/// Channel timing constants in the style of 802.11g.
///
/// `ack_duration_us` is the on-air time of an acknowledgement frame; it is
/// charged only to successful transmissions by the detailed cost model, so
/// it is exposed as a parameter rather than fixed (default: a 14-byte
/// control frame at 54 Mbit/s plus rounding).
///
/// `max_window` is the DCF contention-window cap. `None` means unbounded,
/// which is the right choice for abstract makespan studies; the cap is
/// rarely reached at moderate batch sizes either way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingParams {
    pub slot_us: f64,
    pub sifs_us: f64,
    pub difs_us: f64,
    pub ack_timeout_us: f64,
    pub preamble_us: f64,
    pub data_rate_mbps: f64,
    pub packet_overhead_bytes: u32,
    pub ack_duration_us: f64,
    pub max_window: Option<u32>,
}

impl Default for TimingParams {
    fn default() -> Self {
        TimingParams {
            slot_us: 9.0,
            sifs_us: 16.0,
            difs_us: 34.0,
            ack_timeout_us: 75.0,
            preamble_us: 20.0,
            data_rate_mbps: 54.0,
            packet_overhead_bytes: 64,
            ack_duration_us: 24.0,
            max_window: Some(1024),
        }
    }
}

impl TimingParams {
    /// Checks every invariant, reporting the first violated one by name.
    pub fn validate(&self) -> Result<(), DomainError> {
        let durations = [
            (self.slot_us, "slot_us"),
            (self.sifs_us, "sifs_us"),
            (self.difs_us, "difs_us"),
            (self.ack_timeout_us, "ack_timeout_us"),
            (self.preamble_us, "preamble_us"),
            (self.ack_duration_us, "ack_duration_us"),
        ];
        for (value, name) in durations {
            if !value.is_finite() || value <= 0.0 {
                return Err(DomainError::NonpositiveDuration(name));
            }
        }
        if self.sifs_us >= self.difs_us {
            return Err(DomainError::SifsExceedsDifs);
        }
        if !self.data_rate_mbps.is_finite() || self.data_rate_mbps <= 0.0 {
            return Err(DomainError::NonpositiveDataRate);
        }
        if self.max_window == Some(0) {
            return Err(DomainError::ZeroMaxWindow);
        }
        Ok(())
    }
}

/// What a station does in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StationAction {
    Transmit,
    Listen,
}

/// Outcome of a station's own transmission attempt in a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OwnOutcome {
    /// The station did not transmit this slot.
    NotSent,
    /// The station transmitted alone.
    Success,
    /// The station transmitted together with at least one other.
    Collision,
}

/// What the channel looked like during a slot, as sensed by a listener.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelState {
    Clear,
    Busy,
}

/// Per-slot feedback delivered to a station after the slot closes.
///
/// `own_outcome` is `Success` or `Collision` only if the station transmitted;
/// `channel_state` is `Busy` iff at least one station transmitted in the slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotFeedback {
    pub own_outcome: OwnOutcome,
    pub channel_state: ChannelState,
}

/// Classification of one channel slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotOutcome {
    Empty,
    /// Exactly one transmitter; carries its station id.
    Success(StationId),
    /// Two or more simultaneous transmitters; carries the participant count.
    Collision(u32),
}

/// Which phase of an algorithm a slot belongs to. Estimation slots exist
/// only for size-estimating policies and are costed differently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    ContentionWindow,
    Estimation,
}

/// Classifies a slot from its transmitter set: empty, a success by the sole
/// transmitter, or one disjoint collision involving all transmitters.
pub fn classify_outcome(transmitters: &[StationId]) -> SlotOutcome {
    match transmitters.len() {
        0 => SlotOutcome::Empty,
        1 => SlotOutcome::Success(transmitters[0]),
        k => SlotOutcome::Collision(k as u32),
    }
}

/// One channel slot's outcome. A `Collision` record is exactly one disjoint
/// collision, regardless of how many stations participated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot_index: u64,
    /// Station ids that transmitted in this slot, sorted ascending.
    pub transmitters: Vec<StationId>,
    pub outcome: SlotOutcome,
    pub phase_tag: Phase,
}

impl SlotRecord {
    /// Builds a record, deriving the outcome from the transmitter set.
    pub fn new(slot_index: u64, mut transmitters: Vec<StationId>, phase_tag: Phase) -> Self {
        transmitters.sort_unstable();
        let outcome = classify_outcome(&transmitters);
        SlotRecord {
            slot_index,
            transmitters,
            outcome,
            phase_tag,
        }
    }

    /// True iff `outcome` is consistent with the transmitter set.
    pub fn is_consistent(&self) -> bool {
        self.outcome == classify_outcome(&self.transmitters)
    }
}

/// Per-trial aggregate counters.
///
/// `completion_slots[k]` is the slot at which the (k+1)-th success occurred,
/// so the vector has exactly `n` nondecreasing entries and `half_done_slot`
/// is the ceil(n/2)-th of them. `cw_slots` counts contention-window-tagged
/// slots up to and including the final success. For size-estimating policies
/// `estimates` holds each station's adopted window size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub n: usize,
    pub cw_slots: u64,
    pub disjoint_collisions: u64,
    pub per_station_ack_timeouts: Vec<u64>,
    pub completion_slots: Vec<u64>,
    pub half_done_slot: u64,
    pub estimation_slots: u64,
    pub estimates: Option<Vec<u32>>,
}

impl RunStats {
    /// Maximum ACK-timeout count over all stations (0 for an empty batch).
    pub fn max_ack_timeouts(&self) -> u64 {
        self.per_station_ack_timeouts.iter().copied().max().unwrap_or(0)
    }
}

/// Backoff algorithm selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Binary exponential backoff: the window doubles after every failure.
    Beb,
    /// Log-backoff: the window grows by a factor 1 + 1/lg W.
    Lb,
    /// Log-log-backoff, monotone form: growth factor 1 + 1/lg lg W.
    LlbMonotone,
    /// Log-log-backoff, repeated form: the window doubles but each size w
    /// is repeated for floor(lg lg w) consecutive windows.
    LlbRepeated,
    /// Sawtooth-backoff: a doubling outer loop, each outer window followed
    /// by halving "backon" windows down to size 2.
    Stb,
    /// Fixed backoff: every contention window has the same size.
    Fixed(u32),
    /// Size estimation over rounds of k slots, then fixed backoff at the
    /// estimated window.
    BestOfK(u32),
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Beb => write!(f, "beb"),
            Algorithm::Lb => write!(f, "lb"),
            Algorithm::LlbMonotone => write!(f, "llb"),
            Algorithm::LlbRepeated => write!(f, "llb-rep"),
            Algorithm::Stb => write!(f, "stb"),
            Algorithm::Fixed(w) => write!(f, "fixed:{w}"),
            Algorithm::BestOfK(k) => write!(f, "bestof:{k}"),
        }
    }
}

impl FromStr for Algorithm {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why| DomainError::BadPolicySpec(s.to_string(), why);
        match s {
            "beb" => Ok(Algorithm::Beb),
            "lb" => Ok(Algorithm::Lb),
            "llb" => Ok(Algorithm::LlbMonotone),
            "llb-rep" => Ok(Algorithm::LlbRepeated),
            "stb" => Ok(Algorithm::Stb),
            _ => {
                if let Some(arg) = s.strip_prefix("fixed:") {
                    let w: u32 = arg.parse().map_err(|_| bad("window is not an integer"))?;
                    if w < 1 {
                        return Err(bad("fixed window must be >= 1"));
                    }
                    Ok(Algorithm::Fixed(w))
                } else if let Some(arg) = s.strip_prefix("bestof:") {
                    let k: u32 = arg.parse().map_err(|_| bad("k is not an integer"))?;
                    if k < 1 {
                        return Err(bad("k must be >= 1"));
                    }
                    Ok(Algorithm::BestOfK(k))
                } else {
                    Err(bad("unknown algorithm"))
                }
            }
        }
    }
}

impl Serialize for Algorithm {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Algorithm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// An algorithm plus an optional contention-window cap.
///
/// The string form accepted on the command line is the bare algorithm name:
/// `beb`, `lb`, `llb`, `llb-rep`, `stb`, `fixed:W`, `bestof:k`; the cap is
/// supplied separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolicySpec {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub window_cap: Option<u32>,
}

impl PolicySpec {
    pub fn new(algorithm: Algorithm) -> Self {
        PolicySpec {
            algorithm,
            window_cap: None,
        }
    }

    pub fn with_cap(algorithm: Algorithm, cap: u32) -> Self {
        PolicySpec {
            algorithm,
            window_cap: Some(cap),
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.window_cap == Some(0) {
            return Err(DomainError::BadPolicySpec(
                self.to_string(),
                "window cap must be >= 1",
            ));
        }
        Ok(())
    }

    /// Stable key used when deriving per-trial random seeds.
    pub fn seed_key(&self) -> String {
        match self.window_cap {
            Some(cap) => format!("{}@{}", self.algorithm, cap),
            None => self.algorithm.to_string(),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.algorithm.fmt(f)
    }
}

impl FromStr for PolicySpec {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(PolicySpec::new(s.parse()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TimingParams::default().validate().unwrap();
    }

    #[test]
    fn zero_slot_rejected() {
        let params = TimingParams {
            slot_us: 0.0,
            ..TimingParams::default()
        };
        assert_eq!(
            params.validate(),
            Err(DomainError::NonpositiveDuration("slot_us"))
        );
    }

    #[test]
    fn sifs_above_difs_rejected() {
        let params = TimingParams {
            sifs_us: 40.0,
            difs_us: 34.0,
            ..TimingParams::default()
        };
        assert_eq!(params.validate(), Err(DomainError::SifsExceedsDifs));
    }

    #[test]
    fn outcome_classification() {
        assert_eq!(classify_outcome(&[]), SlotOutcome::Empty);
        assert_eq!(classify_outcome(&[7]), SlotOutcome::Success(7));
        assert_eq!(classify_outcome(&[1, 2, 3]), SlotOutcome::Collision(3));
    }

    #[test]
    fn policy_spec_string_forms() {
        for s in ["beb", "lb", "llb", "llb-rep", "stb", "fixed:16", "bestof:5"] {
            let spec: PolicySpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("fixed:0".parse::<PolicySpec>().is_err());
        assert!("bestof:0".parse::<PolicySpec>().is_err());
        assert!("fixed:".parse::<PolicySpec>().is_err());
        assert!("quadratic".parse::<PolicySpec>().is_err());
        assert!("fixed:99999999999999999999".parse::<PolicySpec>().is_err());
    }

    #[test]
    fn feedback_json_roundtrip() {
        let fb = SlotFeedback {
            own_outcome: OwnOutcome::Collision,
            channel_state: ChannelState::Busy,
        };
        let text = serde_json::to_string(&fb).unwrap();
        assert!(text.contains("\"own_outcome\""));
        let back: SlotFeedback = serde_json::from_str(&text).unwrap();
        assert_eq!(back, fb);
        for action in [StationAction::Transmit, StationAction::Listen] {
            let text = serde_json::to_string(&action).unwrap();
            let back: StationAction = serde_json::from_str(&text).unwrap();
            assert_eq!(back, action);
        }
    }

    #[test]
    fn timing_params_json_roundtrip() {
        let params = TimingParams::default();
        let text = serde_json::to_string(&params).unwrap();
        assert!(text.contains("\"slot_us\":9.0"));
        assert!(text.contains("\"max_window\":1024"));
        let back: TimingParams = serde_json::from_str(&text).unwrap();
        assert_eq!(params, back);
    }
}

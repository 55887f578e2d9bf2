//! Slotted-channel simulator and timing cost model for single-batch
//! contention resolution.
//!
//! A batch of n stations, one packet each, contends for a shared channel
//! divided into slots: a lone transmitter succeeds, two or more collide.
//! The crate provides the backoff policies (binary exponential, log,
//! log-log in monotone and repeated forms, sawtooth, fixed, and best-of-k
//! size estimation), the slot engine that runs them, a DCF-style cost model
//! that converts slot traces into wall-clock time, and a seeded experiment
//! harness with medians, bootstrap confidence intervals and trend fits.
//!
//! The interesting tension this machinery quantifies: policies that
//! minimize contention-window slots linger at window sizes where collisions
//! are frequent, and once each collision is charged its real cost
//! (transmission time, ACK timeout, interframe spaces) the cheapest policy
//! in slots is no longer the cheapest in time.

pub mod checks;
pub mod cli;
pub mod costmodel;
pub mod domain;
pub mod engine;
pub mod harness;
pub mod policies;
pub mod tracefmt;

pub use domain::{Algorithm, PolicySpec, RunStats, SlotRecord, TimingParams};
pub use engine::{run_trial, run_trial_stats, Trace, TrialConfig};

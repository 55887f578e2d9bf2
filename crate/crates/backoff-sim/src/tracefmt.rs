//! Newline-delimited trace format, for the analyzer and for debugging.
//!
//! One record per line, space-separated:
//!
//! ```text
//! <slot_index> <phase> <outcome> <transmitter ids>
//! ```
//!
//! where `phase` is `cw` or `est`, `outcome` is `empty`, `success` or
//! `collision`, and the transmitter ids are comma-separated in strictly
//! ascending order (`-` when the slot is empty). Records are written in
//! slot order. The outcome token is redundant with the id list and is
//! validated against it on parse.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::domain::{classify_outcome, Phase, SlotOutcome, SlotRecord, StationId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceParseError {
    #[error("line {0}: expected 4 fields")]
    FieldCount(usize),
    #[error("line {0}: bad slot index")]
    BadSlot(usize),
    #[error("line {0}: bad phase tag")]
    BadPhase(usize),
    #[error("line {0}: bad outcome")]
    BadOutcome(usize),
    #[error("line {0}: bad transmitter list")]
    BadTransmitters(usize),
    #[error("line {0}: outcome does not match transmitter count")]
    Inconsistent(usize),
}

fn phase_token(phase: Phase) -> &'static str {
    match phase {
        Phase::ContentionWindow => "cw",
        Phase::Estimation => "est",
    }
}

fn outcome_token(outcome: &SlotOutcome) -> &'static str {
    match outcome {
        SlotOutcome::Empty => "empty",
        SlotOutcome::Success(_) => "success",
        SlotOutcome::Collision(_) => "collision",
    }
}

pub fn format_record(rec: &SlotRecord) -> String {
    let ids = if rec.transmitters.is_empty() {
        "-".to_string()
    } else {
        rec.transmitters
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(",")
    };
    format!(
        "{} {} {} {}",
        rec.slot_index,
        phase_token(rec.phase_tag),
        outcome_token(&rec.outcome),
        ids
    )
}

pub fn write_trace<W: Write>(out: &mut W, records: &[SlotRecord]) -> io::Result<()> {
    for rec in records {
        writeln!(out, "{}", format_record(rec))?;
    }
    Ok(())
}

/// Parses one record line; `line_no` is 1-based and used only for errors.
pub fn parse_line(line: &str, line_no: usize) -> Result<SlotRecord, TraceParseError> {
    let mut fields = line.split(' ');
    let slot = fields
        .next()
        .ok_or(TraceParseError::FieldCount(line_no))?
        .parse::<u64>()
        .map_err(|_| TraceParseError::BadSlot(line_no))?;
    let phase = match fields.next().ok_or(TraceParseError::FieldCount(line_no))? {
        "cw" => Phase::ContentionWindow,
        "est" => Phase::Estimation,
        _ => return Err(TraceParseError::BadPhase(line_no)),
    };
    let outcome_tok = fields.next().ok_or(TraceParseError::FieldCount(line_no))?;
    let ids_tok = fields.next().ok_or(TraceParseError::FieldCount(line_no))?;
    if fields.next().is_some() {
        return Err(TraceParseError::FieldCount(line_no));
    }

    let transmitters: Vec<StationId> = if ids_tok == "-" {
        Vec::new()
    } else {
        let mut ids = Vec::new();
        for part in ids_tok.split(',') {
            let id = part
                .parse::<StationId>()
                .map_err(|_| TraceParseError::BadTransmitters(line_no))?;
            if ids.last().is_some_and(|&prev| prev >= id) {
                return Err(TraceParseError::BadTransmitters(line_no));
            }
            ids.push(id);
        }
        ids
    };

    let outcome = classify_outcome(&transmitters);
    let expected = outcome_token(&outcome);
    if outcome_tok != expected {
        return Err(if matches!(outcome_tok, "empty" | "success" | "collision") {
            TraceParseError::Inconsistent(line_no)
        } else {
            TraceParseError::BadOutcome(line_no)
        });
    }

    Ok(SlotRecord {
        slot_index: slot,
        transmitters,
        outcome,
        phase_tag: phase,
    })
}

/// Parses a whole trace; blank lines are not allowed.
pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<SlotRecord>, TraceParseError> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|_| TraceParseError::FieldCount(i + 1))?;
        records.push(parse_line(&line, i + 1)?);
    }
    Ok(records)
}

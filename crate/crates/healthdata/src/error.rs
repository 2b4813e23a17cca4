use std::io;

use chrono::{DateTime, FixedOffset};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HealthDataError {
    #[error("unknown data source '{0}'")]
    UnknownSource(String),

    #[error("end precedes start ({end} < {start})")]
    ReversedRange {
        start: DateTime<FixedOffset>,
        end: DateTime<FixedOffset>,
    },

    #[error("{0} is a workout source; use the workout summary instead")]
    WorkoutSource(String),

    #[error("{0} is not a workout source")]
    NotWorkoutSource(String),

    #[error("invalid granularity '{0}' (expected one of hour, day, week, month)")]
    InvalidGranularity(String),

    #[error("invalid timestamp '{0}'")]
    InvalidTimestamp(String),

    #[error("unknown time zone '{0}'")]
    InvalidTimeZone(String),

    #[error("corrupt store file {path} at line {line}: {reason}")]
    CorruptStore {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("store I/O error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T, E = HealthDataError> = std::result::Result<T, E>;

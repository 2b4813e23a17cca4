use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};

use crate::catalog::DataSourceId;
use crate::error::HealthDataError;

/// One timestamped wearable observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthSample {
    pub source: DataSourceId,
    pub start: DateTime<FixedOffset>,
    pub end: DateTime<FixedOffset>,
    pub value: f64,
    pub unit: String,
    pub device: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkoutRecord {
    pub workout_type: String,
    pub start: DateTime<FixedOffset>,
    pub end: DateTime<FixedOffset>,
    pub duration_minutes: f64,
}

impl WorkoutRecord {
    /// Builds a workout whose duration is derived from its bounds.
    pub fn new(
        workout_type: impl Into<String>,
        start: DateTime<FixedOffset>,
        end: DateTime<FixedOffset>,
    ) -> Self {
        let duration_minutes = (end - start).num_milliseconds() as f64 / 60_000.0;
        Self {
            workout_type: workout_type.into(),
            start,
            end,
            duration_minutes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Hour,
    Day,
    Week,
    Month,
}

impl Granularity {
    pub const ALL: [Granularity; 4] = [Self::Hour, Self::Day, Self::Week, Self::Month];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Hour => "hour",
            Self::Day => "day",
            Self::Week => "week",
            Self::Month => "month",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Granularity {
    type Err = HealthDataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hour" => Ok(Self::Hour),
            "day" => Ok(Self::Day),
            "week" => Ok(Self::Week),
            "month" => Ok(Self::Month),
            _ => Err(HealthDataError::InvalidGranularity(s.to_string())),
        }
    }
}

/// Aggregate of the samples from one device within one calendar bucket.
///
/// `bucket_end` is the last second of the bucket, so consecutive buckets never
/// share an instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketSummary {
    pub bucket_start: DateTime<FixedOffset>,
    pub bucket_end: DateTime<FixedOffset>,
    pub device: String,
    pub value: f64,
    pub entries: usize,
}

/// Per-type roll-up of the workouts in a range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkoutTypeSummary {
    pub workout_type: String,
    pub count: usize,
    pub total_minutes: f64,
}

impl WorkoutTypeSummary {
    pub fn mean_minutes(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.total_minutes / self.count as f64
        }
    }
}

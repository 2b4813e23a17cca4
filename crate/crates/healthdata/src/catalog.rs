//! Catalog of the data sources the coach can query.
//!
//! Every stored sample names a source from the catalog, and the catalog decides
//! which unit the source is recorded in and how buckets are aggregated. The
//! default catalog covers the Apple Health sources the coach knows about;
//! further entries can be registered at runtime or loaded from configuration.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::HealthDataError;

pub const STEP_COUNT: &str = "health.stepcount";
pub const ACTIVE_ENERGY: &str = "health.activeenergy";
pub const BASAL_ENERGY: &str = "health.basalenergy";
pub const FLIGHTS_CLIMBED: &str = "health.flightsclimbed";
pub const DISTANCE_WALKING_RUNNING: &str = "health.distancewalkingrunning";
pub const HEART_RATE: &str = "health.heartrate";
pub const WORKOUT: &str = "health.workout";

/// Name of a catalog entry, e.g. `health.stepcount`.
///
/// Construct through [`SourceCatalog::resolve`] to guarantee the name is known.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DataSourceId(String);

impl DataSourceId {
    /// Wraps a name without checking it against a catalog.
    pub fn unchecked(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DataSourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AggregationMode {
    Sum,
    Mean,
    /// Workouts: grouped per workout type instead of per time bucket.
    ByType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceInfo {
    pub name: DataSourceId,
    pub description: String,
    pub unit: String,
    pub aggregation: AggregationMode,
}

impl SourceInfo {
    /// The header line that precedes every description of this source.
    pub fn description_line(&self) -> String {
        format!("{}: {}", self.name, self.description)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceCatalog {
    entries: BTreeMap<String, SourceInfo>,
}

impl Default for SourceCatalog {
    fn default() -> Self {
        let builtin = [
            (
                STEP_COUNT,
                "Number of steps taken, recorded by iPhone and Apple Watch. Values are summed per period.",
                "steps",
                AggregationMode::Sum,
            ),
            (
                ACTIVE_ENERGY,
                "Active energy burned through movement and exercise, in kilocalories. Values are summed per period.",
                "kcal",
                AggregationMode::Sum,
            ),
            (
                BASAL_ENERGY,
                "Basal (resting) energy burned, in kilocalories. Values are summed per period.",
                "kcal",
                AggregationMode::Sum,
            ),
            (
                FLIGHTS_CLIMBED,
                "Number of flights of stairs climbed. Values are summed per period.",
                "count",
                AggregationMode::Sum,
            ),
            (
                DISTANCE_WALKING_RUNNING,
                "Distance covered by walking and running, in kilometers. Values are summed per period.",
                "km",
                AggregationMode::Sum,
            ),
            (
                HEART_RATE,
                "Heart rate in beats per minute. Values are averaged per period.",
                "count/min",
                AggregationMode::Mean,
            ),
            (
                WORKOUT,
                "Recorded workouts, summarized per workout type with counts and durations.",
                "min",
                AggregationMode::ByType,
            ),
        ];
        let mut catalog = Self {
            entries: BTreeMap::new(),
        };
        for (name, description, unit, aggregation) in builtin {
            catalog.insert(SourceInfo {
                name: DataSourceId::unchecked(name),
                description: description.to_string(),
                unit: unit.to_string(),
                aggregation,
            });
        }
        catalog
    }
}

impl SourceCatalog {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// Adds or replaces an entry.
    pub fn insert(&mut self, info: SourceInfo) {
        self.entries.insert(info.name.0.clone(), info);
    }

    pub fn resolve(&self, name: &str) -> Result<DataSourceId, HealthDataError> {
        self.entries
            .get(name.trim())
            .map(|info| info.name.clone())
            .ok_or_else(|| HealthDataError::UnknownSource(name.to_string()))
    }

    pub fn info(&self, source: &DataSourceId) -> Result<&SourceInfo, HealthDataError> {
        self.entries
            .get(source.as_str())
            .ok_or_else(|| HealthDataError::UnknownSource(source.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &SourceInfo> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

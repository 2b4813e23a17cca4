//! Newline-delimited import format.
//!
//! Each non-blank line is one JSON object, either a sample
//!
//! ```text
//! {"source":"health.stepcount","start":"2024-02-23T08:00:00Z","end":"2024-02-23T08:10:00Z","value":122,"unit":"steps","device":"Apple Watch"}
//! ```
//!
//! or a workout
//!
//! ```text
//! {"source":"health.workout","workout_type":"cycling","start":"2024-03-01T07:00:00Z","end":"2024-03-01T07:21:00Z"}
//! ```
//!
//! Lines holding a FHIR `Observation` (or a `Bundle` of them) are converted
//! through [`crate::fhir`] first.

use chrono::{DateTime, FixedOffset};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::catalog::{AggregationMode, SourceCatalog};
use crate::fhir;
use crate::types::{HealthSample, WorkoutRecord};

/// Tolerance between a declared workout duration and its bounds, in minutes.
const DURATION_TOLERANCE_MINUTES: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub enum ImportRecord {
    Sample(HealthSample),
    Workout(WorkoutRecord),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    source: String,
    start: String,
    end: String,
    value: Option<f64>,
    unit: Option<String>,
    device: Option<String>,
    workout_type: Option<String>,
    duration_minutes: Option<f64>,
}

/// Parses one line into zero or more records. Each element carries either a
/// record or the reason it was rejected.
pub fn parse_line(line: &str, catalog: &SourceCatalog) -> Vec<Result<ImportRecord, String>> {
    let value: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return vec![Err(format!("malformed record: {e}"))],
    };
    match value.get("resourceType").and_then(Value::as_str) {
        Some("Observation") => vec![fhir::convert_observation(&value).and_then(|v| parse_value(v, catalog))],
        Some("Bundle") => fhir::bundle_observations(&value)
            .into_iter()
            .map(|obs| obs.and_then(|v| parse_value(v, catalog)))
            .collect(),
        Some(other) => vec![Err(format!("unsupported FHIR resource type '{other}'"))],
        None => vec![parse_value(value, catalog)],
    }
}

fn parse_value(value: Value, catalog: &SourceCatalog) -> Result<ImportRecord, String> {
    let raw: RawRecord =
        serde_json::from_value(value).map_err(|e| format!("malformed record: {e}"))?;
    let source = catalog
        .resolve(&raw.source)
        .map_err(|_| format!("unknown source '{}'", raw.source))?;
    let info = catalog.info(&source).map_err(|e| e.to_string())?;
    let start = parse_instant(&raw.start)?;
    let end = parse_instant(&raw.end)?;
    if start > end {
        return Err("start after end".to_string());
    }

    if info.aggregation == AggregationMode::ByType {
        let workout_type = raw
            .workout_type
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| "missing field 'workout_type'".to_string())?;
        let workout = WorkoutRecord::new(workout_type.trim(), start, end);
        if workout.duration_minutes <= 0.0 {
            return Err("workout duration must be positive".to_string());
        }
        if let Some(declared) = raw.duration_minutes {
            if (declared - workout.duration_minutes).abs() > DURATION_TOLERANCE_MINUTES {
                return Err(format!(
                    "duration_minutes {declared} disagrees with start/end ({:.2})",
                    workout.duration_minutes
                ));
            }
        }
        return Ok(ImportRecord::Workout(workout));
    }

    let value = raw.value.ok_or_else(|| "missing field 'value'".to_string())?;
    if !value.is_finite() {
        return Err("non-finite value".to_string());
    }
    let unit = raw.unit.ok_or_else(|| "missing field 'unit'".to_string())?;
    if unit != info.unit {
        return Err(format!("unit mismatch: expected '{}', got '{unit}'", info.unit));
    }
    let device = raw.device.ok_or_else(|| "missing field 'device'".to_string())?;
    Ok(ImportRecord::Sample(HealthSample {
        source,
        start,
        end,
        value,
        unit,
        device,
    }))
}

fn parse_instant(raw: &str) -> Result<DateTime<FixedOffset>, String> {
    DateTime::parse_from_rfc3339(raw.trim()).map_err(|_| format!("invalid RFC 3339 timestamp '{raw}'"))
}

/// Serializes a record back into the import format, one line, no newline.
pub fn to_line(record: &ImportRecord) -> String {
    let value = match record {
        ImportRecord::Sample(s) => json!({
            "source": s.source.as_str(),
            "start": s.start.to_rfc3339(),
            "end": s.end.to_rfc3339(),
            "value": s.value,
            "unit": s.unit,
            "device": s.device,
        }),
        ImportRecord::Workout(w) => json!({
            "source": crate::catalog::WORKOUT,
            "workout_type": w.workout_type,
            "start": w.start.to_rfc3339(),
            "end": w.end.to_rfc3339(),
        }),
    };
    value.to_string()
}

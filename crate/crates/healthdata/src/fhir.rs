//! Conversion of FHIR `Observation` resources into the import format.
//!
//! HealthKit exports encode each quantity sample as an Observation whose code
//! carries either a LOINC code or the HealthKit type identifier. Workouts use
//! the `HKWorkoutTypeIdentifier` code with the activity type as the value.

use serde_json::{json, Value};

use crate::catalog;

const HEALTHKIT_SYSTEM: &str = "http://developer.apple.com/documentation/healthkit";
const LOINC_SYSTEM: &str = "http://loinc.org";

fn source_for_code(system: Option<&str>, code: &str) -> Option<&'static str> {
    let by_loinc = match code {
        "55423-8" | "41950-7" => Some(catalog::STEP_COUNT),
        "8867-4" => Some(catalog::HEART_RATE),
        "41981-2" => Some(catalog::ACTIVE_ENERGY),
        "41953-1" => Some(catalog::DISTANCE_WALKING_RUNNING),
        _ => None,
    };
    let by_healthkit = match code {
        "HKQuantityTypeIdentifierStepCount" => Some(catalog::STEP_COUNT),
        "HKQuantityTypeIdentifierActiveEnergyBurned" => Some(catalog::ACTIVE_ENERGY),
        "HKQuantityTypeIdentifierBasalEnergyBurned" => Some(catalog::BASAL_ENERGY),
        "HKQuantityTypeIdentifierFlightsClimbed" => Some(catalog::FLIGHTS_CLIMBED),
        "HKQuantityTypeIdentifierDistanceWalkingRunning" => Some(catalog::DISTANCE_WALKING_RUNNING),
        "HKQuantityTypeIdentifierHeartRate" => Some(catalog::HEART_RATE),
        "HKWorkoutTypeIdentifier" => Some(catalog::WORKOUT),
        _ => None,
    };
    match system {
        Some(LOINC_SYSTEM) => by_loinc,
        Some(HEALTHKIT_SYSTEM) => by_healthkit,
        _ => by_healthkit.or(by_loinc),
    }
}

/// Converts a quantity to the catalog unit of `source`. Unrecognized units are
/// passed through unchanged so the importer reports the mismatch.
fn normalize_quantity(source: &str, value: f64, unit: &str) -> (f64, String) {
    let u = unit.trim();
    let (factor, canonical) = match (source, u) {
        (catalog::STEP_COUNT, "steps" | "{steps}" | "count" | "1") => (1.0, "steps"),
        (catalog::ACTIVE_ENERGY | catalog::BASAL_ENERGY, "kcal" | "Cal" | "[Cal]") => (1.0, "kcal"),
        (catalog::ACTIVE_ENERGY | catalog::BASAL_ENERGY, "kJ") => (1.0 / 4.184, "kcal"),
        (catalog::FLIGHTS_CLIMBED, "count" | "{flights}" | "1") => (1.0, "count"),
        (catalog::DISTANCE_WALKING_RUNNING, "km") => (1.0, "km"),
        (catalog::DISTANCE_WALKING_RUNNING, "m") => (1.0 / 1000.0, "km"),
        (catalog::DISTANCE_WALKING_RUNNING, "mi" | "[mi_i]") => (1.609344, "km"),
        (catalog::HEART_RATE, "/min" | "{beats}/min" | "beats/minute" | "count/min" | "bpm") => {
            (1.0, "count/min")
        }
        _ => return (value, u.to_string()),
    };
    (value * factor, canonical.to_string())
}

fn effective_bounds(obs: &Value) -> Result<(String, String), String> {
    if let Some(period) = obs.get("effectivePeriod") {
        let start = period.get("start").and_then(Value::as_str);
        let end = period.get("end").and_then(Value::as_str).or(start);
        if let (Some(s), Some(e)) = (start, end) {
            return Ok((s.to_string(), e.to_string()));
        }
    }
    ["effectiveDateTime", "effectiveInstant"]
        .iter()
        .find_map(|k| obs.get(*k).and_then(Value::as_str))
        .map(|t| (t.to_string(), t.to_string()))
        .ok_or_else(|| "observation has no effective time".to_string())
}

fn workout_type(obs: &Value) -> Option<String> {
    let raw = obs
        .get("valueString")
        .and_then(Value::as_str)
        .or_else(|| obs.pointer("/valueCodeableConcept/text").and_then(Value::as_str))
        .or_else(|| {
            obs.pointer("/valueCodeableConcept/coding/0/code")
                .and_then(Value::as_str)
        })?;
    let trimmed = raw.trim().trim_start_matches("HKWorkoutActivityType");
    let mut chars = trimmed.chars();
    let first = chars.next()?;
    Some(first.to_lowercase().chain(chars).collect())
}

/// Maps one Observation to an import-format object.
pub fn convert_observation(obs: &Value) -> Result<Value, String> {
    let codings = obs
        .pointer("/code/coding")
        .and_then(Value::as_array)
        .ok_or_else(|| "observation has no code.coding".to_string())?;
    let source = codings
        .iter()
        .find_map(|c| {
            let code = c.get("code").and_then(Value::as_str)?;
            source_for_code(c.get("system").and_then(Value::as_str), code)
        })
        .ok_or_else(|| {
            let codes: Vec<&str> = codings
                .iter()
                .filter_map(|c| c.get("code").and_then(Value::as_str))
                .collect();
            format!("unknown source for observation code(s) {codes:?}")
        })?;
    let (start, end) = effective_bounds(obs)?;

    if source == catalog::WORKOUT {
        let kind = workout_type(obs).ok_or_else(|| "workout observation has no activity type".to_string())?;
        return Ok(json!({
            "source": source,
            "workout_type": kind,
            "start": start,
            "end": end,
        }));
    }

    let quantity = obs
        .get("valueQuantity")
        .ok_or_else(|| "observation has no valueQuantity".to_string())?;
    let value = quantity
        .get("value")
        .and_then(Value::as_f64)
        .ok_or_else(|| "valueQuantity has no numeric value".to_string())?;
    let unit = quantity
        .get("code")
        .or_else(|| quantity.get("unit"))
        .and_then(Value::as_str)
        .unwrap_or("");
    let (value, unit) = normalize_quantity(source, value, unit);
    let device = obs
        .pointer("/device/display")
        .and_then(Value::as_str)
        .unwrap_or("unknown device");
    Ok(json!({
        "source": source,
        "start": start,
        "end": end,
        "value": value,
        "unit": unit,
        "device": device,
    }))
}

/// Converts every Observation entry of a Bundle; other entries are rejected.
pub fn bundle_observations(bundle: &Value) -> Vec<Result<Value, String>> {
    let Some(entries) = bundle.get("entry").and_then(Value::as_array) else {
        return Vec::new();
    };
    entries
        .iter()
        .map(|entry| {
            let resource = entry
                .get("resource")
                .ok_or_else(|| "bundle entry has no resource".to_string())?;
            match resource.get("resourceType").and_then(Value::as_str) {
                Some("Observation") => convert_observation(resource),
                other => Err(format!("unsupported FHIR resource type '{}'", other.unwrap_or("?"))),
            }
        })
        .collect()
}

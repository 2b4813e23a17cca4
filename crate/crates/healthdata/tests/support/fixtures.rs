//! Constructed stores whose rendered text must match the reference tool
//! outputs byte for byte.

use chrono::{DateTime, Duration, FixedOffset};
use coach_healthdata::{HealthStore, StoreConfig};

pub fn step(start: &str, end: &str, value: f64, device: &str) -> String {
    format!(
        r#"{{"source":"health.stepcount","start":"{start}","end":"{end}","value":{value},"unit":"steps","device":"{device}"}}"#
    )
}

fn workout(kind: &str, start: DateTime<FixedOffset>, millis: i64) -> String {
    let end = start + Duration::milliseconds(millis);
    format!(
        r#"{{"source":"health.workout","workout_type":"{kind}","start":"{}","end":"{}"}}"#,
        start.to_rfc3339(),
        end.to_rfc3339()
    )
}

pub fn store(lines: &[String], line_budget: usize) -> HealthStore {
    let store = HealthStore::in_memory(StoreConfig {
        line_budget,
        ..StoreConfig::default()
    });
    let report = store.ingest_str(&lines.join("\n")).unwrap();
    assert_eq!(report.rejected_count(), 0, "{:?}", report.rejected);
    store
}

pub const DAY_LINE: &str = "2024-02-23-00-00 to 2024-02-23-23-59: 10968.00 steps from Apple Watch (1 entries)";

/// One Apple Watch sample of 10968 steps on 2024-02-23.
pub fn day_lines() -> Vec<String> {
    vec![step("2024-02-23T08:00:00Z", "2024-02-23T20:00:00Z", 10968.0, "Apple Watch")]
}

pub const HOUR_LINES: [&str; 5] = [
    "2024-02-23-00-00 to 2024-02-23-00-59: 13.00 steps from iPhone (1 entries)",
    "2024-02-23-01-00 to 2024-02-23-01-59: 34.00 steps from Apple Watch (1 entries)",
    "2024-02-23-08-00 to 2024-02-23-08-59: 122.00 steps from Apple Watch (1 entries)",
    "2024-02-23-09-00 to 2024-02-23-09-59: 988.00 steps from Apple Watch (19 entries)",
    "... (output truncated)",
];

/// Hourly samples whose first four buckets are the reference lines; later
/// hours exist so a four-line budget truncates.
pub fn hour_lines() -> Vec<String> {
    let mut lines = vec![
        step("2024-02-23T00:10:00Z", "2024-02-23T00:12:00Z", 13.0, "iPhone"),
        step("2024-02-23T01:20:00Z", "2024-02-23T01:21:00Z", 34.0, "Apple Watch"),
        step("2024-02-23T08:00:00Z", "2024-02-23T08:05:00Z", 122.0, "Apple Watch"),
    ];
    for minute in 0..19 {
        let start = format!("2024-02-23T09:{:02}:00Z", minute * 3);
        let end = format!("2024-02-23T09:{:02}:30Z", minute * 3);
        lines.push(step(&start, &end, 52.0, "Apple Watch"));
    }
    lines.push(step("2024-02-23T10:00:00Z", "2024-02-23T10:30:00Z", 640.0, "Apple Watch"));
    lines.push(step("2024-02-23T17:45:00Z", "2024-02-23T18:00:00Z", 1200.0, "iPhone"));
    lines
}

pub const WORKOUT_LINES: [&str; 5] = [
    " - cycling: 29 workouts, 21.14 mins/workout, 613.00 mins  (10h13m)  total",
    " - running: 7 workouts, 71.14 mins/workout, 497.96 mins  (8h17m)  total",
    " - walking: 50 workouts, 19.07 mins/workout, 953.44 mins  (15h53m)  total",
    " - traditionalStrengthTraining: 2 workouts, 64.31 mins/workout, 128.63 mins  (2h8m)  total",
    " - hiking: 2 workouts, 46.39 mins/workout, 92.79 mins  (1h32m)  total",
];

/// March 2024 workouts: per type, all but the last last a whole number of
/// minutes and the last one makes up the total.
pub fn workout_lines() -> Vec<String> {
    // (type, count, regular minutes, last workout in milliseconds)
    let plan: [(&str, i64, i64, i64); 5] = [
        ("cycling", 29, 21, 25 * 60_000),
        ("running", 7, 71, 4_317_600),
        ("walking", 50, 19, 1_346_400),
        ("traditionalStrengthTraining", 2, 64, 3_877_560),
        ("hiking", 2, 46, 2_807_160),
    ];
    let month_start = DateTime::parse_from_rfc3339("2024-03-01T06:00:00+00:00").unwrap();
    let mut slot = 0;
    let mut lines = Vec::new();
    for (kind, count, minutes, last) in plan {
        for i in 0..count {
            // Three slots a day keeps every workout inside March.
            let start = month_start + Duration::hours(8 * slot);
            let millis = if i == count - 1 { last } else { minutes * 60_000 };
            lines.push(workout(kind, start, millis));
            slot += 1;
        }
    }
    lines
}

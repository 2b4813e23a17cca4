//! Model-facing text for describe/visualize tool results.
//!
//! These functions depend only on their arguments, so equal aggregates always
//! render to identical text.

use crate::catalog::SourceInfo;
use crate::types::{BucketSummary, WorkoutTypeSummary};

pub const DEFAULT_LINE_BUDGET: usize = 60;
pub const TRUNCATION_LINE: &str = "... (output truncated)";
pub const NO_DATA_LINE: &str = "No data recorded in this period.";
pub const NO_WORKOUTS_LINE: &str = "No workouts recorded in this period.";

const STAMP: &str = "%Y-%m-%d-%H-%M";

/// `2024-02-23-00-00 to 2024-02-23-23-59: 10968.00 steps from Apple Watch (1 entries)`
pub fn bucket_line(bucket: &BucketSummary, unit: &str) -> String {
    format!(
        "{} to {}: {:.2} {} from {} ({} entries)",
        bucket.bucket_start.format(STAMP),
        bucket.bucket_end.format(STAMP),
        bucket.value,
        unit,
        bucket.device,
        bucket.entries
    )
}

/// ` - cycling: 29 workouts, 21.14 mins/workout, 613.00 mins  (10h13m)  total`
pub fn workout_line(summary: &WorkoutTypeSummary) -> String {
    let total = summary.total_minutes;
    let hours = (total / 60.0).floor();
    let minutes = (total - hours * 60.0).floor();
    format!(
        " - {}: {} workouts, {:.2} mins/workout, {:.2} mins  ({}h{}m)  total",
        summary.workout_type,
        summary.count,
        summary.mean_minutes(),
        total,
        hours as i64,
        minutes as i64
    )
}

fn budgeted(lines: Vec<String>, budget: usize) -> Vec<String> {
    if lines.len() <= budget {
        return lines;
    }
    let mut kept: Vec<String> = lines.into_iter().take(budget).collect();
    kept.push(TRUNCATION_LINE.to_string());
    kept
}

/// Source description line followed by one line per bucket.
pub fn render_buckets(info: &SourceInfo, buckets: &[BucketSummary], budget: usize) -> String {
    let mut out = vec![info.description_line()];
    if buckets.is_empty() {
        out.push(NO_DATA_LINE.to_string());
    } else {
        out.extend(budgeted(
            buckets.iter().map(|b| bucket_line(b, &info.unit)).collect(),
            budget,
        ));
    }
    out.join("\n")
}

/// One line per workout type, without a header.
pub fn render_workout_lines(summaries: &[WorkoutTypeSummary], budget: usize) -> String {
    if summaries.is_empty() {
        return NO_WORKOUTS_LINE.to_string();
    }
    budgeted(summaries.iter().map(workout_line).collect(), budget).join("\n")
}

/// Workout summary preceded by the source description line.
pub fn render_workouts(info: &SourceInfo, summaries: &[WorkoutTypeSummary], budget: usize) -> String {
    format!(
        "{}\n{}",
        info.description_line(),
        render_workout_lines(summaries, budget)
    )
}

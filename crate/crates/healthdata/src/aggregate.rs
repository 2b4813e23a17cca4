//! Calendar bucketing of samples and per-type workout roll-ups.

use std::collections::BTreeMap;

use chrono::NaiveDateTime;
use chrono_tz::Tz;

use crate::catalog::AggregationMode;
use crate::time::{bucket_bounds, bucket_floor, to_local};
use crate::types::{BucketSummary, Granularity, HealthSample, WorkoutRecord, WorkoutTypeSummary};

/// Wall-clock start of the bucket a sample falls in. Samples are bucketed by
/// their start time.
pub fn bucket_key(sample: &HealthSample, granularity: Granularity, tz: Tz) -> NaiveDateTime {
    bucket_floor(to_local(tz, &sample.start), granularity)
}

#[derive(Default)]
struct Accumulator {
    sum: f64,
    entries: usize,
}

/// Groups samples by (bucket, device) and reduces each group. The result is
/// ordered by bucket start, then device name; empty buckets never appear.
pub fn aggregate_samples<'a>(
    samples: impl IntoIterator<Item = &'a HealthSample>,
    mode: AggregationMode,
    granularity: Granularity,
    tz: Tz,
) -> Vec<BucketSummary> {
    let mut groups: BTreeMap<(NaiveDateTime, &'a str), Accumulator> = BTreeMap::new();
    for sample in samples {
        let acc = groups
            .entry((bucket_key(sample, granularity, tz), sample.device.as_str()))
            .or_default();
        acc.sum += sample.value;
        acc.entries += 1;
    }
    groups
        .into_iter()
        .map(|((start, device), acc)| {
            let (bucket_start, bucket_end) = bucket_bounds(tz, start, granularity);
            let value = match mode {
                AggregationMode::Mean => acc.sum / acc.entries as f64,
                AggregationMode::Sum | AggregationMode::ByType => acc.sum,
            };
            BucketSummary {
                bucket_start,
                bucket_end,
                device: device.to_string(),
                value,
                entries: acc.entries,
            }
        })
        .collect()
}

/// One summary per workout type, in order of first occurrence.
pub fn summarize_workout_records<'a>(
    workouts: impl IntoIterator<Item = &'a WorkoutRecord>,
) -> Vec<WorkoutTypeSummary> {
    let mut out: Vec<WorkoutTypeSummary> = Vec::new();
    for workout in workouts {
        match out.iter_mut().find(|s| s.workout_type == workout.workout_type) {
            Some(summary) => {
                summary.count += 1;
                summary.total_minutes += workout.duration_minutes;
            }
            None => out.push(WorkoutTypeSummary {
                workout_type: workout.workout_type.clone(),
                count: 1,
                total_minutes: workout.duration_minutes,
            }),
        }
    }
    out
}

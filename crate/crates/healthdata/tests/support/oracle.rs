//! Brute-force reference bucketing, written without the crate's time helpers.

use std::collections::BTreeMap;

use chrono::{DateTime, Datelike, Duration, FixedOffset, NaiveDate, NaiveDateTime, TimeZone, Timelike};
use chrono_tz::Tz;
use coach_healthdata::aggregate::aggregate_samples;
use coach_healthdata::{AggregationMode, DataSourceId, Granularity, HealthSample};
use rand::Rng;

pub const ZONES: [Tz; 6] = [
    chrono_tz::UTC,
    chrono_tz::America::Los_Angeles,
    chrono_tz::Europe::Berlin,
    chrono_tz::Asia::Kolkata,
    chrono_tz::Australia::Lord_Howe,
    chrono_tz::America::St_Johns,
];

pub const DEVICES: [&str; 3] = ["Apple Watch", "iPhone", "Oura"];

pub const RELATIVE_TOLERANCE: f64 = 1e-9;

/// A random case: zone, granularity, mode and up to `max_samples` samples
/// spread over two years, stamped with assorted UTC offsets.
pub fn random_case(
    rng: &mut impl Rng,
    max_samples: usize,
) -> (Tz, Granularity, AggregationMode, Vec<HealthSample>) {
    let tz = ZONES[rng.gen_range(0..ZONES.len())];
    let granularity = Granularity::ALL[rng.gen_range(0..4)];
    let mode = if rng.gen_bool(0.5) {
        AggregationMode::Sum
    } else {
        AggregationMode::Mean
    };
    let n = rng.gen_range(0..=max_samples);
    let base = chrono::Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap().timestamp();
    let offsets = [-8 * 3600, -3 * 3600 - 1800, 0, 3600, 5 * 3600 + 1800, 13 * 3600];
    let source = DataSourceId::unchecked("health.stepcount");
    let samples = (0..n)
        .map(|_| {
            let secs = base + rng.gen_range(0..2 * 365 * 86_400);
            let offset = FixedOffset::east_opt(offsets[rng.gen_range(0..offsets.len())]).unwrap();
            let start = offset.timestamp_opt(secs, 0).unwrap();
            HealthSample {
                source: source.clone(),
                start,
                end: start + Duration::seconds(rng.gen_range(0..3600)),
                value: (rng.gen_range(0.0..5000.0f64) * 1000.0).round() / 1000.0,
                unit: "steps".into(),
                device: DEVICES[rng.gen_range(0..DEVICES.len())].into(),
            }
        })
        .collect();
    (tz, granularity, mode, samples)
}

fn floor(local: NaiveDateTime, granularity: Granularity) -> NaiveDateTime {
    let date = local.date();
    let midnight = |d: NaiveDate| d.and_hms_opt(0, 0, 0).unwrap();
    match granularity {
        Granularity::Hour => date.and_hms_opt(local.hour(), 0, 0).unwrap(),
        Granularity::Day => midnight(date),
        Granularity::Week => {
            let mut d = date;
            while d.weekday() != chrono::Weekday::Mon {
                d = d.pred_opt().unwrap();
            }
            midnight(d)
        }
        Granularity::Month => midnight(NaiveDate::from_ymd_opt(date.year(), date.month(), 1).unwrap()),
    }
}

/// First real instant at or after a wall-clock time; times skipped by a
/// daylight-saving jump move forward minute by minute.
pub fn first_instant(tz: Tz, mut local: NaiveDateTime) -> DateTime<FixedOffset> {
    loop {
        if let Some(t) = tz.from_local_datetime(&local).earliest() {
            return t.fixed_offset();
        }
        local += Duration::minutes(1);
    }
}

/// (bucket start instant, device) -> (sum, count).
pub fn brute_force(
    samples: &[HealthSample],
    granularity: Granularity,
    tz: Tz,
) -> BTreeMap<(DateTime<FixedOffset>, String), (f64, usize)> {
    let mut out: BTreeMap<(DateTime<FixedOffset>, String), (f64, usize)> = BTreeMap::new();
    for s in samples {
        let local = s.start.with_timezone(&tz).naive_local();
        let slot = out.entry((first_instant(tz, floor(local, granularity)), s.device.clone())).or_default();
        slot.0 += s.value;
        slot.1 += 1;
    }
    out
}

fn close(got: f64, want: f64) -> bool {
    (got - want).abs() <= RELATIVE_TOLERANCE * want.abs().max(1.0)
}

/// Every disagreement between the crate's aggregation and the oracle, and
/// every violation of the partition property.
pub fn mismatches(
    samples: &[HealthSample],
    mode: AggregationMode,
    granularity: Granularity,
    tz: Tz,
) -> Vec<String> {
    let got = aggregate_samples(samples, mode, granularity, tz);
    let want = brute_force(samples, granularity, tz);
    let mut problems = Vec::new();
    if got.len() != want.len() {
        problems.push(format!("{} buckets, oracle has {}", got.len(), want.len()));
    }
    for bucket in &got {
        let key = (bucket.bucket_start, bucket.device.clone());
        let Some(&(sum, count)) = want.get(&key) else {
            problems.push(format!("unexpected bucket {key:?}"));
            continue;
        };
        let expected = match mode {
            AggregationMode::Mean => sum / count as f64,
            _ => sum,
        };
        if bucket.entries != count || !close(bucket.value, expected) {
            problems.push(format!(
                "{key:?}: got {} over {} entries, oracle {expected} over {count}",
                bucket.value, bucket.entries
            ));
        }
    }

    let total: usize = got.iter().map(|b| b.entries).sum();
    if total != samples.len() {
        problems.push(format!("entries sum to {total}, {} samples", samples.len()));
    }
    let mut by_device: BTreeMap<&str, Vec<(DateTime<FixedOffset>, DateTime<FixedOffset>)>> = BTreeMap::new();
    for b in &got {
        by_device.entry(&b.device).or_default().push((b.bucket_start, b.bucket_end));
    }
    for (device, list) in by_device.iter_mut() {
        list.sort();
        for pair in list.windows(2) {
            if pair[0].1 >= pair[1].0 {
                problems.push(format!("{device}: buckets {:?} and {:?} overlap", pair[0], pair[1]));
            }
        }
    }
    // With buckets disjoint, a sample is covered exactly once when the last
    // bucket starting at or before it also ends at or after it.
    for s in samples {
        let list = by_device.get(s.device.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        let i = list.partition_point(|(a, _)| *a <= s.start);
        if i == 0 || list[i - 1].1 < s.start {
            problems.push(format!("sample at {} lies in no bucket of {}", s.start, s.device));
        }
    }
    problems
}

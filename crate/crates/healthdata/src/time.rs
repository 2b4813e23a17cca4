//! Calendar arithmetic in the store's configured time zone.

use chrono::{
    DateTime, Datelike, Duration, FixedOffset, LocalResult, NaiveDate, NaiveDateTime, NaiveTime,
    TimeZone, Timelike,
};
use chrono_tz::Tz;

use crate::error::{HealthDataError, Result};
use crate::types::Granularity;

pub fn parse_time_zone(name: &str) -> Result<Tz> {
    name.trim()
        .parse::<Tz>()
        .map_err(|_| HealthDataError::InvalidTimeZone(name.to_string()))
}

/// Maps a wall-clock time to an instant. Ambiguous times take the earlier
/// instant; times inside a DST gap move forward to the first valid time.
pub fn resolve_local(tz: Tz, naive: NaiveDateTime) -> DateTime<FixedOffset> {
    let mut probe = naive;
    for _ in 0..(4 * 48) {
        match tz.from_local_datetime(&probe) {
            LocalResult::Single(t) | LocalResult::Ambiguous(t, _) => return t.fixed_offset(),
            LocalResult::None => probe += Duration::minutes(15),
        }
    }
    // No zone has a gap this long; fall back to reading the time as UTC.
    tz.from_utc_datetime(&naive).fixed_offset()
}

pub fn to_local(tz: Tz, instant: &DateTime<FixedOffset>) -> NaiveDateTime {
    instant.with_timezone(&tz).naive_local()
}

/// Start of the calendar bucket containing `local`.
pub fn bucket_floor(local: NaiveDateTime, granularity: Granularity) -> NaiveDateTime {
    let date = local.date();
    match granularity {
        Granularity::Hour => date.and_hms_opt(local.hour(), 0, 0).expect("valid hour"),
        Granularity::Day => date.and_time(NaiveTime::MIN),
        Granularity::Week => {
            let back = date.weekday().num_days_from_monday() as i64;
            (date - Duration::days(back)).and_time(NaiveTime::MIN)
        }
        Granularity::Month => first_of_month(date.year(), date.month()).and_time(NaiveTime::MIN),
    }
}

/// Start of the bucket following the one that starts at `start`.
pub fn bucket_next(start: NaiveDateTime, granularity: Granularity) -> NaiveDateTime {
    match granularity {
        Granularity::Hour => start + Duration::hours(1),
        Granularity::Day => start + Duration::days(1),
        Granularity::Week => start + Duration::weeks(1),
        Granularity::Month => {
            let (year, month) = if start.month() == 12 {
                (start.year() + 1, 1)
            } else {
                (start.year(), start.month() + 1)
            };
            first_of_month(year, month).and_time(NaiveTime::MIN)
        }
    }
}

fn first_of_month(year: i32, month: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, month, 1).expect("valid month")
}

/// Instant bounds of the bucket whose wall-clock start is `start`.
/// The end is the last whole second of the bucket.
pub fn bucket_bounds(
    tz: Tz,
    start: NaiveDateTime,
    granularity: Granularity,
) -> (DateTime<FixedOffset>, DateTime<FixedOffset>) {
    let begin = resolve_local(tz, start);
    let end = resolve_local(tz, bucket_next(start, granularity)) - Duration::seconds(1);
    (begin, end)
}

/// The calendar range containing `date`: the day itself for `day` (and for
/// `hour`, which buckets a whole day by hour), Monday through Sunday for
/// `week`, the calendar month for `month`.
pub fn bucket_range(
    date: NaiveDate,
    granularity: Granularity,
    tz: Tz,
) -> (DateTime<FixedOffset>, DateTime<FixedOffset>) {
    let span = match granularity {
        Granularity::Hour => Granularity::Day,
        other => other,
    };
    bucket_bounds(tz, bucket_floor(date.and_time(NaiveTime::MIN), span), span)
}

/// Which side of a range a timestamp argument sits on. A bare date means the
/// first second of that day as a start and the last second as an end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeEdge {
    Start,
    End,
}

const NAIVE_FORMATS: [&str; 4] = [
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%dT%H:%M",
];

/// Parses a timestamp as given in a tool argument or import record. Times
/// without an offset are read in the store zone.
pub fn parse_timestamp(raw: &str, tz: Tz, edge: RangeEdge) -> Result<DateTime<FixedOffset>> {
    let text = raw.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Ok(t);
    }
    for format in NAIVE_FORMATS {
        if let Ok(naive) = NaiveDateTime::parse_from_str(text, format) {
            return Ok(resolve_local(tz, naive));
        }
    }
    if let Ok(date) = NaiveDate::parse_from_str(text, "%Y-%m-%d") {
        let start = resolve_local(tz, date.and_time(NaiveTime::MIN));
        return Ok(match edge {
            RangeEdge::Start => start,
            RangeEdge::End => {
                resolve_local(tz, (date + Duration::days(1)).and_time(NaiveTime::MIN))
                    - Duration::seconds(1)
            }
        });
    }
    Err(HealthDataError::InvalidTimestamp(raw.to_string()))
}

pub fn parse_date(raw: &str) -> Result<NaiveDate> {
    let text = raw.trim();
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .or_else(|_| DateTime::parse_from_rfc3339(text).map(|t| t.date_naive()))
        .or_else(|_| {
            NAIVE_FORMATS
                .iter()
                .find_map(|f| NaiveDateTime::parse_from_str(text, f).ok())
                .map(|t| t.date())
                .ok_or(())
        })
        .map_err(|_| HealthDataError::InvalidTimestamp(raw.to_string()))
}

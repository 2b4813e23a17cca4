use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, FixedOffset, NaiveDate};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::aggregate::{aggregate_samples, summarize_workout_records};
use crate::catalog::{AggregationMode, DataSourceId, SourceCatalog, SourceInfo};
use crate::error::{HealthDataError, Result};
use crate::import::{parse_line, to_line, ImportRecord};
use crate::render::{self, DEFAULT_LINE_BUDGET};
use crate::time;
use crate::types::{BucketSummary, Granularity, HealthSample, WorkoutRecord, WorkoutTypeSummary};

const RECORDS_FILE: &str = "records.ndjson";

#[derive(Debug, Clone)]
pub struct StoreConfig {
    pub time_zone: Tz,
    pub line_budget: usize,
    pub catalog: SourceCatalog,
}

impl Default for StoreConfig {
    fn default() -> Self {
        Self {
            time_zone: Tz::UTC,
            line_budget: DEFAULT_LINE_BUDGET,
            catalog: SourceCatalog::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub accepted: usize,
    /// Records already present in the store (or earlier in the same input).
    pub duplicates: usize,
    pub rejected: Vec<Rejection>,
}

impl IngestReport {
    pub fn rejected_count(&self) -> usize {
        self.rejected.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct SampleKey {
    source: String,
    start: i64,
    end: i64,
    device: String,
    value_bits: u64,
}

impl SampleKey {
    fn of(sample: &HealthSample) -> Self {
        // +0.0 and -0.0 compare equal but differ in bits.
        let value = if sample.value == 0.0 { 0.0 } else { sample.value };
        Self {
            source: sample.source.as_str().to_string(),
            start: nanos(&sample.start),
            end: nanos(&sample.end),
            device: sample.device.clone(),
            value_bits: value.to_bits(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct WorkoutKey {
    workout_type: String,
    start: i64,
    end: i64,
}

impl WorkoutKey {
    fn of(workout: &WorkoutRecord) -> Self {
        Self {
            workout_type: workout.workout_type.clone(),
            start: nanos(&workout.start),
            end: nanos(&workout.end),
        }
    }
}

fn nanos(t: &DateTime<FixedOffset>) -> i64 {
    t.timestamp_nanos_opt().unwrap_or_else(|| t.timestamp() * 1_000_000_000)
}

#[derive(Debug, Default)]
struct StoreData {
    /// Per source, sorted by start instant.
    samples: HashMap<DataSourceId, Vec<HealthSample>>,
    sample_keys: HashSet<SampleKey>,
    /// Sorted by start instant.
    workouts: Vec<WorkoutRecord>,
    workout_keys: HashSet<WorkoutKey>,
}

impl StoreData {
    /// Returns false when the record is already present.
    fn insert(&mut self, record: ImportRecord) -> bool {
        match record {
            ImportRecord::Sample(sample) => {
                if !self.sample_keys.insert(SampleKey::of(&sample)) {
                    return false;
                }
                let list = self.samples.entry(sample.source.clone()).or_default();
                let at = list.partition_point(|s| s.start <= sample.start);
                list.insert(at, sample);
                true
            }
            ImportRecord::Workout(workout) => {
                if !self.workout_keys.insert(WorkoutKey::of(&workout)) {
                    return false;
                }
                let at = self.workouts.partition_point(|w| w.start <= workout.start);
                self.workouts.insert(at, workout);
                true
            }
        }
    }

    fn is_duplicate(&self, record: &ImportRecord) -> bool {
        match record {
            ImportRecord::Sample(s) => self.sample_keys.contains(&SampleKey::of(s)),
            ImportRecord::Workout(w) => self.workout_keys.contains(&WorkoutKey::of(w)),
        }
    }
}

/// Embedded health-data store.
///
/// Readers share a lock; ingestion holds the writer lock for the whole batch
/// so queries always see either none or all of an import.
#[derive(Debug)]
pub struct HealthStore {
    config: StoreConfig,
    path: Option<PathBuf>,
    data: RwLock<StoreData>,
    writer: Mutex<()>,
}

impl HealthStore {
    pub fn in_memory(config: StoreConfig) -> Self {
        Self {
            config,
            path: None,
            data: RwLock::new(StoreData::default()),
            writer: Mutex::new(()),
        }
    }

    /// Opens (creating if needed) the store kept under `dir`.
    pub fn open(dir: impl AsRef<Path>, config: StoreConfig) -> Result<Self> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let path = dir.join(RECORDS_FILE);
        let mut data = StoreData::default();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (index, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                for parsed in parse_line(&line, &config.catalog) {
                    let record = parsed.map_err(|reason| HealthDataError::CorruptStore {
                        path: path.display().to_string(),
                        line: index + 1,
                        reason,
                    })?;
                    data.insert(record);
                }
            }
        }
        Ok(Self {
            config,
            path: Some(path),
            data: RwLock::new(data),
            writer: Mutex::new(()),
        })
    }

    pub fn config(&self) -> &StoreConfig {
        &self.config
    }

    pub fn catalog(&self) -> &SourceCatalog {
        &self.config.catalog
    }

    pub fn time_zone(&self) -> Tz {
        self.config.time_zone
    }

    pub fn resolve(&self, name: &str) -> Result<DataSourceId> {
        self.config.catalog.resolve(name)
    }

    pub fn source_info(&self, source: &DataSourceId) -> Result<&SourceInfo> {
        self.config.catalog.info(source)
    }

    pub fn ingest_str(&self, input: &str) -> Result<IngestReport> {
        self.ingest_reader(input.as_bytes())
    }

    /// Ingests newline-delimited records. Malformed lines are reported, never
    /// fatal; only storage failures return an error.
    pub fn ingest_reader(&self, reader: impl Read) -> Result<IngestReport> {
        let mut report = IngestReport::default();
        let mut parsed = Vec::new();
        for (index, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            for result in parse_line(&line, &self.config.catalog) {
                match result {
                    Ok(record) => parsed.push(record),
                    Err(reason) => report.rejected.push(Rejection {
                        line: index + 1,
                        reason,
                    }),
                }
            }
        }

        let _writer = self.writer.lock().expect("store writer lock poisoned");
        let mut data = self.data.write().expect("store data lock poisoned");
        let mut fresh = Vec::new();
        let mut seen = StoreData::default();
        for record in parsed {
            if data.is_duplicate(&record) || !seen.insert(record.clone()) {
                report.duplicates += 1;
            } else {
                fresh.push(record);
            }
        }
        if let Some(path) = &self.path {
            if !fresh.is_empty() {
                let mut file = OpenOptions::new().create(true).append(true).open(path)?;
                let mut buf = String::new();
                for record in &fresh {
                    buf.push_str(&to_line(record));
                    buf.push('\n');
                }
                file.write_all(buf.as_bytes())?;
                file.sync_all()?;
            }
        }
        report.accepted = fresh.len();
        for record in fresh {
            data.insert(record);
        }
        tracing::info!(
            accepted = report.accepted,
            duplicates = report.duplicates,
            rejected = report.rejected.len(),
            "ingested health records"
        );
        Ok(report)
    }

    /// Every stored sample and workout, in storage order.
    pub fn contents(&self) -> (Vec<HealthSample>, Vec<WorkoutRecord>) {
        let data = self.data.read().expect("store data lock poisoned");
        let mut sources: Vec<&DataSourceId> = data.samples.keys().collect();
        sources.sort();
        let samples = sources
            .into_iter()
            .flat_map(|s| data.samples[s].iter().cloned())
            .collect();
        (samples, data.workouts.clone())
    }

    pub fn bucket_range(
        &self,
        date: NaiveDate,
        granularity: Granularity,
    ) -> (DateTime<FixedOffset>, DateTime<FixedOffset>) {
        time::bucket_range(date, granularity, self.config.time_zone)
    }

    fn check_range(start: &DateTime<FixedOffset>, end: &DateTime<FixedOffset>) -> Result<()> {
        if start > end {
            return Err(HealthDataError::ReversedRange {
                start: *start,
                end: *end,
            });
        }
        Ok(())
    }

    /// Samples of `source` whose start lies in `[start, end]`.
    pub fn samples_in_range(
        &self,
        source: &DataSourceId,
        start: DateTime<FixedOffset>,
        end: DateTime<FixedOffset>,
    ) -> Result<Vec<HealthSample>> {
        self.config.catalog.info(source)?;
        Self::check_range(&start, &end)?;
        let data = self.data.read().expect("store data lock poisoned");
        let Some(list) = data.samples.get(source) else {
            return Ok(Vec::new());
        };
        let from = list.partition_point(|s| s.start < start);
        let to = list.partition_point(|s| s.start <= end);
        Ok(list[from..to.max(from)].to_vec())
    }

    pub fn aggregate(
        &self,
        source: &DataSourceId,
        start: DateTime<FixedOffset>,
        end: DateTime<FixedOffset>,
        granularity: Granularity,
    ) -> Result<Vec<BucketSummary>> {
        let info = self.config.catalog.info(source)?;
        if info.aggregation == AggregationMode::ByType {
            return Err(HealthDataError::WorkoutSource(source.to_string()));
        }
        Self::check_range(&start, &end)?;
        let data = self.data.read().expect("store data lock poisoned");
        let Some(list) = data.samples.get(source) else {
            return Ok(Vec::new());
        };
        let from = list.partition_point(|s| s.start < start);
        let to = list.partition_point(|s| s.start <= end).max(from);
        Ok(aggregate_samples(
            &list[from..to],
            info.aggregation,
            granularity,
            self.config.time_zone,
        ))
    }

    pub fn workout_summaries(
        &self,
        start: DateTime<FixedOffset>,
        end: DateTime<FixedOffset>,
    ) -> Result<Vec<WorkoutTypeSummary>> {
        Self::check_range(&start, &end)?;
        let data = self.data.read().expect("store data lock poisoned");
        let from = data.workouts.partition_point(|w| w.start < start);
        let to = data.workouts.partition_point(|w| w.start <= end).max(from);
        Ok(summarize_workout_records(&data.workouts[from..to]))
    }

    /// One line per workout type in the range.
    pub fn summarize_workouts(
        &self,
        start: DateTime<FixedOffset>,
        end: DateTime<FixedOffset>,
    ) -> Result<String> {
        let summaries = self.workout_summaries(start, end)?;
        Ok(render::render_workout_lines(&summaries, self.config.line_budget))
    }

    /// Natural-language description of a source over a range.
    pub fn render_describe(
        &self,
        source: &DataSourceId,
        start: DateTime<FixedOffset>,
        end: DateTime<FixedOffset>,
        granularity: Granularity,
    ) -> Result<String> {
        let info = self.config.catalog.info(source)?;
        if info.aggregation == AggregationMode::ByType {
            let summaries = self.workout_summaries(start, end)?;
            return Ok(render::render_workouts(info, &summaries, self.config.line_budget));
        }
        let buckets = self.aggregate(source, start, end, granularity)?;
        Ok(render::render_buckets(info, &buckets, self.config.line_budget))
    }
}

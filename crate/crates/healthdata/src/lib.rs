//! Wearable health data for the coaching engine.
//!
//! Samples and workouts are ingested from newline-delimited records (or FHIR
//! Observations), kept in an embedded store, bucketed on calendar boundaries
//! in the store's time zone, and rendered as the plain text that the
//! `describe` and `visualize` tools hand back to the model.

pub mod aggregate;
pub mod catalog;
pub mod error;
pub mod fhir;
pub mod import;
pub mod render;
pub mod store;
pub mod time;
pub mod types;

pub use catalog::{AggregationMode, DataSourceId, SourceCatalog, SourceInfo};
pub use error::{HealthDataError, Result};
pub use import::ImportRecord;
pub use store::{HealthStore, IngestReport, Rejection, StoreConfig};
pub use time::{bucket_range, parse_date, parse_time_zone, parse_timestamp, RangeEdge};
pub use types::{BucketSummary, Granularity, HealthSample, WorkoutRecord, WorkoutTypeSummary};

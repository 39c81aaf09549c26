//! Cohort schema, file ingestion, wave pairing and a synthetic generator.

pub mod dataset;
pub mod ingest;
pub mod schema;
pub mod synth;

pub use dataset::{build_wave_pairs, record_score, AgeBounds, Provenance, SupervisedDataset, TARGET_COLUMN, WAVE_GAP};
pub use ingest::{
    ingest_cohort, read_cohort, write_cohort, write_cohort_file, ColumnMap, ColumnRef, IngestOptions,
    ParticipantWaveRecord, MEASURED_WAVES,
};
pub use schema::{Category, FeatureDef, FeatureKind, FeatureSchema, FeatureSource};
pub use synth::generate_synthetic_cohort;

//! Event ingestion, code mapping, and aggregation to binary phenotype matrices.

mod aggregate;
mod codemap;
mod cohort;
mod events;
mod matrix;

pub use aggregate::{aggregate, matrix_to_events, VocabPolicy};
pub use codemap::{map_codes, truncate_events, truncate_to_parent, CodeMap, MappedEvents, UnmappedReport};
pub use cohort::{filter_cohort, CohortPredicate, Demographic, Demographics, Gender};
pub use events::{parse_events, CodeSystem, Event, EventSchema, EventTable, ParsedEvents};
pub use matrix::{PhenotypeMatrix, Vocabulary};

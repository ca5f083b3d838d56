//! Config-driven runs, scaling curves, report files and method ranking.

mod config;
mod pipeline;
mod rank;
mod report;
mod scaling;
mod schema;

pub use config::{
    AnalyticalTask, DatasetConfig, FidelityConfig, MapConfig, PrivacyConfig, ReportFormat, RunConfig,
    ScalingAxis, ScalingConfig, UtilityConfig, VocabConfig, VocabPolicyKind, DEFAULT_M_GRID,
    DEFAULT_N_GRID,
};
pub use pipeline::{
    align_vocabularies, load_real, load_synthetic, read_matrix, read_vocabulary, run_pipeline,
    write_matrix, write_plot_tables, Diagnostics, LoadedDataset, PreMapped,
};
pub use rank::{rank_methods, RankedMethod, Ranking};
pub use report::{
    flatten_json, validate_report, validate_value, write_atomic, write_flat_csv, write_report,
    AnalyticalPair, Better, DatasetSummary, Details, MetricReport, PrivacyDetails, Scalar, Timing,
    ToolInfo, UtilityDetails, Validation, VocabularyAlignment, REPORT_SCHEMA,
};
pub use scaling::{run_scaling_experiment, Replicate, ScalingRow, ScalingTable, Summary};
pub use schema::validate as validate_schema;

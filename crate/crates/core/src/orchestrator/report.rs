use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::ReportFormat;
use super::schema;
use crate::corpus::UnmappedReport;
use crate::error::{Error, Result};
use crate::fidelity::FidelityResult;
use crate::privacy::{AirResult, MirResult};
use crate::utility::{AnalyticalResult, PredictiveResult, SweepResult};

/// The report schema shipped with the crate.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Better {
    Higher,
    Lower,
}

/// A headline number and the direction in which it improves. `value` is
/// null when the metric could not be computed (e.g. a failed fit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scalar {
    pub value: Option<f64>,
    pub better: Better,
}

impl Scalar {
    pub fn lower(value: impl Into<Option<f64>>) -> Self {
        Scalar {
            value: value.into(),
            better: Better::Lower,
        }
    }

    pub fn higher(value: impl Into<Option<f64>>) -> Self {
        Scalar {
            value: value.into(),
            better: Better::Higher,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    /// `matrix`, `events` or `baseline:<name>`.
    pub source: String,
    pub path: Option<String>,
    pub n_rows: usize,
    pub n_cols: usize,
    pub dropped_empty_code: Option<usize>,
    pub mapping: Vec<UnmappedReport>,
    pub cohort: Option<String>,
    pub n_before_cohort: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VocabularyAlignment {
    pub k_real: usize,
    pub k_syn: usize,
    pub k_shared: usize,
    pub dropped_real: Vec<String>,
    pub dropped_syn: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticalPair {
    pub real: AnalyticalResult,
    pub synthetic: AnalyticalResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityDetails {
    pub predictive: Option<PredictiveResult>,
    pub analytical: Vec<AnalyticalPair>,
    pub sweep: Option<SweepResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyDetails {
    pub mir: Option<MirResult>,
    pub air: Option<AirResult>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Details {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fidelity: Option<FidelityResult>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub utility: Option<UtilityDetails>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub privacy: Option<PrivacyDetails>,
}

/// Wall-clock seconds; kept apart so it never mixes with metric content.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stages: BTreeMap<String, f64>,
    /// Baseline generation cost scaled to 100 synthetic rows.
    pub generation_seconds_per_100: Option<f64>,
    pub total_seconds: f64,
}

/// Everything one run produces. Headline numbers live in `metrics`
/// (family → name → tagged scalar); full results live in `details`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub tool: ToolInfo,
    pub method: String,
    pub config_hash: String,
    pub seed: u64,
    pub datasets: BTreeMap<String, DatasetSummary>,
    pub vocabulary: VocabularyAlignment,
    pub metrics: BTreeMap<String, BTreeMap<String, Scalar>>,
    pub details: Details,
    pub timing: Timing,
}

impl MetricReport {
    /// `family.name` → scalar, in sorted order.
    pub fn flat_metrics(&self) -> BTreeMap<String, Scalar> {
        self.metrics
            .iter()
            .flat_map(|(fam, m)| m.iter().map(move |(k, v)| (format!("{fam}.{k}"), *v)))
            .collect()
    }

    /// The report as JSON with the `timing` block removed.
    pub fn without_timing(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timing");
        v
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Every scalar leaf of a JSON value keyed by its dotted path; array
/// elements use their index. Empty arrays and objects contribute nothing.
pub fn flatten_json(value: &Value) -> Vec<(String, Value)> {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
        let join = |k: &str| {
            if prefix.is_empty() {
                k.to_string()
            } else {
                format!("{prefix}.{k}")
            }
        };
        match v {
            Value::Object(map) => {
                for (k, child) in map {
                    walk(&join(k), child, out);
                }
            }
            Value::Array(items) => {
                for (i, child) in items.iter().enumerate() {
                    walk(&join(&i.to_string()), child, out);
                }
            }
            leaf => out.push((prefix.to_string(), leaf.clone())),
        }
    }
    let mut out = Vec::new();
    walk("", value, &mut out);
    out
}

fn leaf_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Header plus one row of dotted-path columns.
pub fn write_flat_csv<W: Write>(value: &Value, out: W) -> Result<()> {
    let leaves = flatten_json(value);
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::data(format!("csv write failed: {e}"));
    w.write_record(leaves.iter().map(|(k, _)| k.as_str())).map_err(csv_err)?;
    w.write_record(leaves.iter().map(|(_, v)| leaf_text(v))).map_err(csv_err)?;
    w.flush().map_err(|e| Error::data(format!("csv write failed: {e}")))?;
    Ok(())
}

/// Writes `bytes` to `path` through a temporary sibling and a rename, so
/// readers never see a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes `report.json` (and `report.csv` for the CSV format) into `dir`.
/// Returns the written paths.
pub fn write_report(report: &MetricReport, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    let json_path = dir.join("report.json");
    let mut text = report.to_json_pretty();
    text.push('\n');
    write_atomic(&json_path, text.as_bytes())?;
    let mut written = vec![json_path];
    if format == ReportFormat::Csv {
        let mut buf = Vec::new();
        write_flat_csv(&serde_json::to_value(report).expect("report serializes"), &mut buf)?;
        let csv_path = dir.join("report.csv");
        write_atomic(&csv_path, &buf)?;
        written.push(csv_path);
    }
    Ok(written)
}

/// Outcome of checking a report file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validation {
    pub valid: bool,
    /// `path: problem` lines, empty when valid.
    pub errors: Vec<String>,
}

/// Checks a JSON report against the shipped schema, or a CSV report for a
/// consistent header/row pair with unique column paths.
pub fn validate_report(path: &Path) -> Result<Validation> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return Ok(validate_csv(&text));
    }
    let value: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            return Ok(Validation {
                valid: false,
                errors: vec![format!("$: not valid JSON ({e})")],
            })
        }
    };
    Ok(validate_value(&value))
}

pub fn validate_value(value: &Value) -> Validation {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).expect("shipped schema is valid JSON");
    let errors = schema::validate(&schema, value);
    Validation {
        valid: errors.is_empty(),
        errors,
    }
}

fn validate_csv(text: &str) -> Validation {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = match reader.records().collect() {
        Ok(r) => r,
        Err(e) => {
            return Validation {
                valid: false,
                errors: vec![format!("csv: {e}")],
            }
        }
    };
    let mut errors = Vec::new();
    if rows.len() != 2 {
        errors.push(format!("csv: expected a header and one row, found {} lines", rows.len()));
    } else {
        if rows[0].len() != rows[1].len() {
            errors.push(format!(
                "csv: header has {} columns, row has {}",
                rows[0].len(),
                rows[1].len()
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for h in rows[0].iter() {
            if !seen.insert(h) {
                errors.push(format!("{h}: duplicate column"));
            }
        }
        for required in ["config_hash", "method", "seed"] {
            if !seen.contains(required) {
                errors.push(format!("{required}: missing column"));
            }
        }
    }
    Validation {
        valid: errors.is_empty(),
        errors,
    }
}

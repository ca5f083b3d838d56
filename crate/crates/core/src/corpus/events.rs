use std::collections::HashSet;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CodeSystem {
    Icd9,
    Icd10,
    Snomed,
    PhecodeX,
}

impl FromStr for CodeSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect::<String>()
            .to_ascii_uppercase();
        match norm.as_str() {
            "ICD9" | "ICD9CM" | "9" => Ok(CodeSystem::Icd9),
            "ICD10" | "ICD10CM" | "10" => Ok(CodeSystem::Icd10),
            "SNOMED" | "SNOMEDCT" => Ok(CodeSystem::Snomed),
            "PHECODEX" | "PHECODE" => Ok(CodeSystem::PhecodeX),
            _ => Err(Error::config(format!("unknown code system tag {s:?}"))),
        }
    }
}

impl fmt::Display for CodeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CodeSystem::Icd9 => "ICD9",
            CodeSystem::Icd10 => "ICD10",
            CodeSystem::Snomed => "SNOMED",
            CodeSystem::PhecodeX => "PHECODEX",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub patient_id: String,
    pub code: String,
    pub system: CodeSystem,
    /// Kept for provenance; the cross-sectional pipeline ignores it.
    pub time: Option<String>,
}

/// Longitudinal diagnosis events plus the roster of every patient seen,
/// in first-appearance order. The roster survives code mapping so patients
/// whose codes all fail to map still become all-zero rows.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventTable {
    events: Vec<Event>,
    patients: Vec<String>,
}

impl EventTable {
    pub fn new(events: Vec<Event>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut patients = Vec::new();
        for e in &events {
            if e.patient_id.is_empty() || e.code.is_empty() {
                return Err(Error::data("event with empty patient id or code"));
            }
            if seen.insert(e.patient_id.as_str()) {
                patients.push(e.patient_id.clone());
            }
        }
        Ok(EventTable { events, patients })
    }

    /// Builds a table with an explicit roster. Every event's patient must be on it.
    pub fn with_roster(events: Vec<Event>, patients: Vec<String>) -> Result<Self> {
        let roster: HashSet<&str> = patients.iter().map(String::as_str).collect();
        if roster.len() != patients.len() {
            return Err(Error::data("duplicate patient in roster"));
        }
        if let Some(e) = events.iter().find(|e| !roster.contains(e.patient_id.as_str())) {
            return Err(Error::data(format!(
                "event for patient {} not on roster",
                e.patient_id
            )));
        }
        Ok(EventTable { events, patients })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn patients(&self) -> &[String] {
        &self.patients
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Distinct code systems present, sorted.
    pub fn systems(&self) -> Vec<CodeSystem> {
        let mut s: Vec<CodeSystem> = self.events.iter().map(|e| e.system).collect();
        s.sort();
        s.dedup();
        s
    }

    /// Keeps events and roster entries for patients in `keep`.
    pub fn retain_patients(&self, keep: &HashSet<String>) -> EventTable {
        EventTable {
            events: self
                .events
                .iter()
                .filter(|e| keep.contains(&e.patient_id))
                .cloned()
                .collect(),
            patients: self
                .patients
                .iter()
                .filter(|p| keep.contains(*p))
                .cloned()
                .collect(),
        }
    }

    pub(crate) fn into_parts(self) -> (Vec<Event>, Vec<String>) {
        (self.events, self.patients)
    }
}

/// Column names and defaults for reading an event CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EventSchema {
    pub patient_col: String,
    pub code_col: String,
    /// Per-row system column; overrides `system` when present.
    pub system_col: Option<String>,
    pub time_col: Option<String>,
    /// System tag for every row when no system column is configured.
    pub system: Option<String>,
    pub delimiter: char,
}

impl Default for EventSchema {
    fn default() -> Self {
        EventSchema {
            patient_col: "patient_id".into(),
            code_col: "code".into(),
            system_col: None,
            time_col: None,
            system: None,
            delimiter: ',',
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParsedEvents {
    pub table: EventTable,
    /// Lines dropped because the code field was blank.
    pub dropped_empty_code: usize,
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::config(format!("column {name:?} not found in header")))
}

/// Reads one event per non-header CSV line.
pub fn parse_events<R: Read>(input: R, schema: &EventSchema) -> Result<ParsedEvents> {
    if !schema.delimiter.is_ascii() {
        return Err(Error::config("delimiter must be an ASCII character"));
    }
    let default_system = schema.system.as_deref().map(CodeSystem::from_str).transpose()?;
    if default_system.is_none() && schema.system_col.is_none() {
        return Err(Error::config(
            "either a fixed code system or a system column is required",
        ));
    }

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(true)
        .flexible(false)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: format!("unreadable header: {e}"),
        })?
        .clone();
    let pid_idx = column(&headers, &schema.patient_col)?;
    let code_idx = column(&headers, &schema.code_col)?;
    let sys_idx = schema
        .system_col
        .as_deref()
        .map(|c| column(&headers, c))
        .transpose()?;
    let time_idx = schema
        .time_col
        .as_deref()
        .map(|c| column(&headers, c))
        .transpose()?;

    let mut events = Vec::new();
    let mut seen = HashSet::new();
    let mut patients = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let pid = record[pid_idx].trim();
        if pid.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty patient id".into(),
            });
        }
        if seen.insert(pid.to_string()) {
            patients.push(pid.to_string());
        }
        let code = record[code_idx].trim();
        if code.is_empty() {
            dropped += 1;
            continue;
        }
        let system = match sys_idx {
            Some(i) if !record[i].trim().is_empty() => record[i].trim().parse()?,
            _ => default_system.ok_or_else(|| Error::Parse {
                line,
                message: "blank system tag and no default system configured".into(),
            })?,
        };
        let time = match time_idx {
            Some(i) if !record[i].trim().is_empty() => {
                let t = record[i].trim();
                if !looks_like_iso8601(t) {
                    return Err(Error::Parse {
                        line,
                        message: format!("timestamp {t:?} is not ISO-8601"),
                    });
                }
                Some(t.to_string())
            }
            _ => None,
        };
        events.push(Event {
            patient_id: pid.to_string(),
            code: code.to_string(),
            system,
            time,
        });
    }
    Ok(ParsedEvents {
        table: EventTable { events, patients },
        dropped_empty_code: dropped,
    })
}

/// Accepts `YYYY-MM-DD` optionally followed by a `T` or space separated time.
fn looks_like_iso8601(s: &str) -> bool {
    let b = s.as_bytes();
    if b.len() < 10 {
        return false;
    }
    let date_ok = b[..4].iter().all(u8::is_ascii_digit)
        && b[4] == b'-'
        && b[5..7].iter().all(u8::is_ascii_digit)
        && b[7] == b'-'
        && b[8..10].iter().all(u8::is_ascii_digit);
    date_ok && (b.len() == 10 || b[10] == b'T' || b[10] == b' ')
}

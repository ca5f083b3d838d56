use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::events::{CodeSystem, Event, EventTable};
use crate::error::{Error, Result};

/// One-to-many code translation table between two coding systems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMap {
    source: CodeSystem,
    target: CodeSystem,
    entries: HashMap<String, Vec<String>>,
}

impl CodeMap {
    pub fn new(source: CodeSystem, target: CodeSystem) -> Self {
        CodeMap {
            source,
            target,
            entries: HashMap::new(),
        }
    }

    /// Adds a `source -> target` pair; repeated pairs are ignored.
    pub fn insert(&mut self, source_code: &str, target_code: &str) {
        let targets = self.entries.entry(source_code.to_string()).or_default();
        if !targets.iter().any(|t| t == target_code) {
            targets.push(target_code.to_string());
        }
    }

    /// Reads `source_code<TAB>target_code` lines. Blank lines and lines
    /// starting with `#` are skipped; columns past the second are ignored.
    pub fn read_tsv<R: BufRead>(input: R, source: CodeSystem, target: CodeSystem) -> Result<Self> {
        let mut map = CodeMap::new(source, target);
        for (i, line) in input.lines().enumerate() {
            let ln = i as u64 + 1;
            let line = line.map_err(|e| Error::Parse {
                line: ln,
                message: e.to_string(),
            })?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut fields = trimmed.split('\t');
            let (src, tgt) = match (fields.next(), fields.next()) {
                (Some(s), Some(t)) if !s.trim().is_empty() && !t.trim().is_empty() => {
                    (s.trim(), t.trim())
                }
                _ => {
                    return Err(Error::Parse {
                        line: ln,
                        message: "expected `source<TAB>target`".into(),
                    })
                }
            };
            map.insert(src, tgt);
        }
        Ok(map)
    }

    pub fn source(&self) -> CodeSystem {
        self.source
    }

    pub fn target(&self) -> CodeSystem {
        self.target
    }

    /// `None` when the code has no entry; entries are never empty.
    pub fn lookup(&self, code: &str) -> Option<&[String]> {
        self.entries.get(code).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Codes with no entry at one mapping stage and how many events carried them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnmappedReport {
    pub source: Option<CodeSystem>,
    pub target: Option<CodeSystem>,
    pub input_events: usize,
    pub output_events: usize,
    pub passed_through: usize,
    pub unmapped: BTreeMap<String, usize>,
}

impl UnmappedReport {
    pub fn dropped_events(&self) -> usize {
        self.unmapped.values().sum()
    }
}

#[derive(Debug, Clone)]
pub struct MappedEvents {
    pub table: EventTable,
    /// One entry per map, in chain order.
    pub stages: Vec<UnmappedReport>,
}

/// Pushes events through a chain of code maps.
///
/// At each stage, events in the map's source system expand to one event per
/// target code; events already in the map's target system pass through
/// unchanged (mixed ICD-9/ICD-10 extracts); any other system is a config
/// error. Events whose code is absent from the map are dropped and reported.
/// The patient roster is preserved.
pub fn map_codes(events: EventTable, maps: &[CodeMap]) -> Result<MappedEvents> {
    let (mut current, patients) = events.into_parts();
    let mut stages = Vec::with_capacity(maps.len());
    for map in maps {
        let mut report = UnmappedReport {
            source: Some(map.source),
            target: Some(map.target),
            input_events: current.len(),
            ..UnmappedReport::default()
        };
        let mut next = Vec::with_capacity(current.len());
        for event in current {
            if event.system == map.source {
                match map.lookup(&event.code) {
                    Some(targets) => {
                        for t in targets {
                            next.push(Event {
                                patient_id: event.patient_id.clone(),
                                code: t.clone(),
                                system: map.target,
                                time: event.time.clone(),
                            });
                        }
                    }
                    None => *report.unmapped.entry(event.code).or_insert(0) += 1,
                }
            } else if event.system == map.target {
                report.passed_through += 1;
                next.push(event);
            } else {
                return Err(Error::config(format!(
                    "map {} -> {} applied to event in {}",
                    map.source, map.target, event.system
                )));
            }
        }
        report.output_events = next.len();
        stages.push(report);
        current = next;
    }
    Ok(MappedEvents {
        table: EventTable::with_roster(current, patients)?,
        stages,
    })
}

/// Drops everything from the first `.` onward: `CV_401.1` -> `CV_401`.
pub fn truncate_to_parent(code: &str) -> &str {
    match code.find('.') {
        Some(i) => &code[..i],
        None => code,
    }
}

/// Applies [`truncate_to_parent`] to every event code.
pub fn truncate_events(events: EventTable) -> Result<EventTable> {
    let (evs, patients) = events.into_parts();
    let evs = evs
        .into_iter()
        .map(|mut e| {
            let parent = truncate_to_parent(&e.code);
            if parent.is_empty() {
                return Err(Error::data(format!("code {:?} has no parent part", e.code)));
            }
            e.code = parent.to_string();
            Ok(e)
        })
        .collect::<Result<Vec<_>>>()?;
    EventTable::with_roster(evs, patients)
}

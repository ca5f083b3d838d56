use std::collections::{BTreeMap, HashMap, HashSet};

use super::events::{CodeSystem, Event, EventTable};
use super::matrix::{PhenotypeMatrix, Vocabulary};
use crate::error::{Error, Result};

/// How the column set of an aggregated matrix is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VocabPolicy {
    /// Codes seen in at least `min_patients` patients, sorted lexicographically.
    FromData,
    /// Exactly this vocabulary; other codes are ignored.
    Fixed(Vocabulary),
}

/// Collapses longitudinal events to one binary row per rostered patient.
///
/// A cell is 1 when the patient has at least one event with that code.
/// Patients without surviving events become all-zero rows.
pub fn aggregate(
    events: &EventTable,
    policy: &VocabPolicy,
    min_patients: usize,
) -> Result<PhenotypeMatrix> {
    let systems = events.systems();
    if systems.len() > 1 {
        return Err(Error::data(format!(
            "cannot aggregate events from several code systems: {systems:?}"
        )));
    }

    let mut per_patient: HashMap<&str, HashSet<&str>> = HashMap::new();
    for e in events.events() {
        per_patient
            .entry(e.patient_id.as_str())
            .or_default()
            .insert(e.code.as_str());
    }

    let vocab = match policy {
        VocabPolicy::Fixed(v) => {
            if v.is_empty() {
                return Err(Error::config("fixed vocabulary is empty"));
            }
            v.clone()
        }
        VocabPolicy::FromData => {
            let mut support: BTreeMap<&str, usize> = BTreeMap::new();
            for codes in per_patient.values() {
                for c in codes {
                    *support.entry(c).or_insert(0) += 1;
                }
            }
            Vocabulary::new(
                support
                    .into_iter()
                    .filter(|&(_, n)| n >= min_patients)
                    .map(|(c, _)| c.to_string())
                    .collect(),
            )?
        }
    };

    let rows = events
        .patients()
        .iter()
        .map(|p| {
            per_patient
                .get(p.as_str())
                .map(|codes| {
                    codes
                        .iter()
                        .filter_map(|c| vocab.index_of(c).map(|i| i as u32))
                        .collect()
                })
                .unwrap_or_default()
        })
        .collect();
    PhenotypeMatrix::new(vocab, rows, Some(events.patients().to_vec()))
}

/// Expands a matrix back to one event per 1-cell. Row ids come from the
/// matrix when present, otherwise `row<i>`.
pub fn matrix_to_events(matrix: &PhenotypeMatrix, system: CodeSystem) -> Result<EventTable> {
    let ids: Vec<String> = match matrix.patient_ids() {
        Some(ids) => ids.to_vec(),
        None => (0..matrix.n_rows()).map(|i| format!("row{i}")).collect(),
    };
    let mut events = Vec::new();
    for (i, row) in matrix.rows().iter().enumerate() {
        for &k in row {
            events.push(Event {
                patient_id: ids[i].clone(),
                code: matrix.vocab().code(k as usize).to_string(),
                system,
                time: None,
            });
        }
    }
    EventTable::with_roster(events, ids)
}

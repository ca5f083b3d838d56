use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::report::{Better, MetricReport, Scalar};
use crate::error::{Error, Result};
use crate::ml::average_ranks;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedMethod {
    pub method: String,
    /// Weighted mean of the per-metric ranks; 1 is best.
    pub score: f64,
    pub ranks: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub weights: BTreeMap<String, f64>,
    pub methods: Vec<RankedMethod>,
}

/// Ranks methods per metric (1 = best, ties share the average rank) and
/// orders them by the weighted mean rank, breaking exact ties by name.
///
/// `weights` maps dotted metric paths such as `privacy.air_f1` to
/// nonnegative weights; an empty map weights every metric equally. A
/// metric that came out null for a method ranks that method last.
pub fn rank_methods(reports: &[MetricReport], weights: &BTreeMap<String, f64>) -> Result<Ranking> {
    if reports.is_empty() {
        return Err(Error::config("nothing to rank"));
    }
    let names: BTreeSet<&str> = reports.iter().map(|r| r.method.as_str()).collect();
    if names.len() != reports.len() {
        return Err(Error::config("method names must be distinct"));
    }
    let flat: Vec<BTreeMap<String, Scalar>> = reports.iter().map(MetricReport::flat_metrics).collect();

    let all: BTreeSet<&String> = flat.iter().flat_map(|m| m.keys()).collect();
    let missing: Vec<String> = reports
        .iter()
        .zip(&flat)
        .filter_map(|(r, m)| {
            let gone: Vec<&str> = all.iter().filter(|k| !m.contains_key(**k)).map(|k| k.as_str()).collect();
            (!gone.is_empty()).then(|| format!("{}: {}", r.method, gone.join(", ")))
        })
        .collect();
    if !missing.is_empty() {
        return Err(Error::data(format!("metric sets differ; missing {}", missing.join("; "))));
    }

    let k: BTreeSet<usize> = reports.iter().map(|r| r.vocabulary.k_shared).collect();
    if k.len() > 1 {
        log::warn!("reports were scored on different vocabulary sizes {k:?}");
    }

    let weights: BTreeMap<String, f64> = if weights.is_empty() {
        all.iter().map(|k| ((*k).clone(), 1.0)).collect()
    } else {
        if let Some(unknown) = weights.keys().find(|k| !all.contains(k)) {
            return Err(Error::config(format!("weight given for unknown metric {unknown}")));
        }
        weights.clone()
    };
    if weights.values().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::config("weights must be finite and nonnegative"));
    }
    let total: f64 = weights.values().sum();
    if total <= 0.0 {
        return Err(Error::config("weights sum to zero"));
    }

    let mut ranks: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); reports.len()];
    for metric in weights.keys() {
        let better = flat[0][metric].better;
        if flat.iter().any(|m| m[metric].better != better) {
            return Err(Error::data(format!("{metric} has conflicting directions across reports")));
        }
        // Map every value to a "badness" so that ascending rank = better.
        let badness: Vec<f64> = flat
            .iter()
            .map(|m| match m[metric].value {
                None => f64::INFINITY,
                Some(v) if v.is_nan() => f64::INFINITY,
                Some(v) => match better {
                    Better::Lower => v,
                    Better::Higher => -v,
                },
            })
            .collect();
        for (i, r) in average_ranks(&badness).into_iter().enumerate() {
            ranks[i].insert(metric.clone(), r);
        }
    }

    let mut methods: Vec<RankedMethod> = reports
        .iter()
        .zip(ranks)
        .map(|(rep, ranks)| {
            let score = weights.iter().map(|(k, w)| w * ranks[k]).sum::<f64>() / total;
            RankedMethod {
                method: rep.method.clone(),
                score,
                ranks,
            }
        })
        .collect();
    methods.sort_by(|a, b| a.score.total_cmp(&b.score).then_with(|| a.method.cmp(&b.method)));
    Ok(Ranking { weights, methods })
}

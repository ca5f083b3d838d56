use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::nn::NearestNeighbour;
use crate::corpus::PhenotypeMatrix;
use crate::error::{Error, Result};
use crate::fidelity::check_shared_vocab;
use crate::ml::Confusion;

/// Which codes count as "imbalanced" hidden attributes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImbalancedRule {
    /// Prevalence farthest from 0.5, among codes present in the real data.
    #[default]
    FarthestFromHalf,
    /// Lowest nonzero prevalence.
    LowestPrevalence,
}

impl fmt::Display for ImbalancedRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImbalancedRule::FarthestFromHalf => "farthest_from_half",
            ImbalancedRule::LowestPrevalence => "lowest_prevalence",
        })
    }
}

impl FromStr for ImbalancedRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "farthest_from_half" => Ok(ImbalancedRule::FarthestFromHalf),
            "lowest_prevalence" => Ok(ImbalancedRule::LowestPrevalence),
            other => Err(Error::config(format!(
                "unknown imbalanced rule `{other}` (farthest_from_half, lowest_prevalence)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AirOptions {
    pub n_balanced: usize,
    pub n_imbalanced: usize,
    pub imbalanced_rule: ImbalancedRule,
}

impl Default for AirOptions {
    fn default() -> Self {
        AirOptions {
            n_balanced: 10,
            n_imbalanced: 10,
            imbalanced_rule: ImbalancedRule::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenGroup {
    Balanced,
    Imbalanced,
    Given,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeF1 {
    pub code: String,
    pub group: HiddenGroup,
    pub prevalence: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirResult {
    pub hidden_codes: Vec<String>,
    /// Absent when the hidden set was supplied directly.
    pub imbalanced_rule: Option<ImbalancedRule>,
    pub f1_micro: f64,
    pub per_code: Vec<CodeF1>,
}

/// Balanced codes (prevalence closest to 0.5) and imbalanced codes, both
/// drawn from codes with nonzero real prevalence; ties go to the lower
/// column. A code is never picked twice.
pub fn select_hidden_codes(prev: &[f64], opts: &AirOptions) -> Result<(Vec<usize>, Vec<usize>)> {
    let need = opts.n_balanced + opts.n_imbalanced;
    if prev.len() <= need {
        return Err(Error::config(format!(
            "attribute inference hides {need} codes, so it needs more than {need} codes (have {})",
            prev.len()
        )));
    }
    let nonzero: Vec<usize> = (0..prev.len()).filter(|&k| prev[k] > 0.0).collect();
    if nonzero.len() < need {
        return Err(Error::data(format!(
            "attribute inference needs {need} codes present in the real data, found {}",
            nonzero.len()
        )));
    }
    let gap = |k: usize| (prev[k] - 0.5).abs();
    let mut by_gap = nonzero.clone();
    by_gap.sort_by(|&a, &b| gap(a).total_cmp(&gap(b)).then(a.cmp(&b)));
    let balanced: Vec<usize> = by_gap[..opts.n_balanced].to_vec();

    let mut ranking = nonzero;
    match opts.imbalanced_rule {
        ImbalancedRule::FarthestFromHalf => {
            ranking.sort_by(|&a, &b| gap(b).total_cmp(&gap(a)).then(a.cmp(&b)))
        }
        ImbalancedRule::LowestPrevalence => {
            ranking.sort_by(|&a, &b| prev[a].total_cmp(&prev[b]).then(a.cmp(&b)))
        }
    }
    let imbalanced: Vec<usize> = ranking
        .into_iter()
        .filter(|k| !balanced.contains(k))
        .take(opts.n_imbalanced)
        .collect();
    Ok((balanced, imbalanced))
}

/// Attribute inference with the balanced/imbalanced hidden-code rule.
pub fn air(real: &PhenotypeMatrix, syn: &PhenotypeMatrix, opts: &AirOptions) -> Result<AirResult> {
    check_shared_vocab(real, syn)?;
    let prev = real.prevalence()?;
    let (balanced, imbalanced) = select_hidden_codes(&prev, opts)?;
    let groups: Vec<(usize, HiddenGroup)> = balanced
        .iter()
        .map(|&k| (k, HiddenGroup::Balanced))
        .chain(imbalanced.iter().map(|&k| (k, HiddenGroup::Imbalanced)))
        .collect();
    let mut res = run(real, syn, &groups)?;
    res.imbalanced_rule = Some(opts.imbalanced_rule);
    Ok(res)
}

/// Attribute inference with an explicit set of hidden columns.
pub fn air_with_hidden(real: &PhenotypeMatrix, syn: &PhenotypeMatrix, hidden: &[usize]) -> Result<AirResult> {
    check_shared_vocab(real, syn)?;
    let groups: Vec<(usize, HiddenGroup)> = hidden.iter().map(|&k| (k, HiddenGroup::Given)).collect();
    run(real, syn, &groups)
}

fn run(real: &PhenotypeMatrix, syn: &PhenotypeMatrix, hidden: &[(usize, HiddenGroup)]) -> Result<AirResult> {
    if syn.n_rows() == 0 {
        return Err(Error::data("attribute inference needs a non-empty synthetic set"));
    }
    let k = real.n_cols();
    let mut is_hidden = vec![false; k];
    for &(c, _) in hidden {
        if c >= k || is_hidden[c] {
            return Err(Error::config(format!("hidden column {c} is out of range or repeated")));
        }
        is_hidden[c] = true;
    }
    if hidden.is_empty() {
        return Err(Error::config("no hidden columns"));
    }
    let known: Vec<bool> = is_hidden.iter().map(|h| !h).collect();
    let nn = NearestNeighbour::new(syn.rows(), k, Some(&known));
    let matches = nn.query_all(real.rows());

    let mut per = vec![Confusion::default(); hidden.len()];
    for (i, &(j, _)) in matches.iter().enumerate() {
        for (slot, &(c, _)) in per.iter_mut().zip(hidden) {
            slot.add(syn.get(j, c), real.get(i, c));
        }
    }
    let mut pooled = Confusion::default();
    for c in &per {
        pooled.merge(c);
    }
    let prev = real.prevalence()?;
    Ok(AirResult {
        hidden_codes: hidden.iter().map(|&(c, _)| real.vocab().code(c).to_string()).collect(),
        imbalanced_rule: None,
        f1_micro: pooled.f1(),
        per_code: hidden
            .iter()
            .zip(&per)
            .map(|(&(c, group), conf)| CodeF1 {
                code: real.vocab().code(c).to_string(),
                group,
                prevalence: prev[c],
                f1: conf.f1(),
                tp: conf.tp,
                fp: conf.fp,
                fn_: conf.fn_,
            })
            .collect(),
    })
}

//! Analytical utility (log-odds ratio recovery) and predictive utility
//! (train-real / train-synthetic / train-both, always tested on real).

use std::fmt;
use std::str::FromStr;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{PhenotypeMatrix, Vocabulary};
use crate::error::{Error, Result};
use crate::fidelity::check_shared_vocab;
use crate::ml::{self, BinaryDesign, Learner, LogisticLearner, LogisticOptions};

/// Normal quantile for a two-sided 95% interval.
pub const CI_Z: f64 = 1.96;

/// The code the paper's predictive task uses by default.
pub const DEFAULT_OUTCOME: &str = "CV_401";

/// Outcome definition: a single code, or every code starting with a prefix
/// (written with a trailing `*`, e.g. `CA*`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum OutcomeSpec {
    Code(String),
    Prefix(String),
}

impl OutcomeSpec {
    /// Vocabulary columns the outcome covers; never empty.
    pub fn resolve(&self, vocab: &Vocabulary) -> Result<Vec<usize>> {
        let cols = match self {
            OutcomeSpec::Code(c) => vocab.index_of(c).into_iter().collect(),
            OutcomeSpec::Prefix(p) => vocab.columns_with_prefix(p),
        };
        if cols.is_empty() {
            return Err(Error::config(format!("outcome `{self}` matches no vocabulary code")));
        }
        Ok(cols)
    }

    /// Per-row indicator: 1 if any outcome column is set.
    pub fn indicator(&self, m: &PhenotypeMatrix) -> Result<Vec<bool>> {
        let cols = self.resolve(m.vocab())?;
        Ok(row_indicator(m, &cols))
    }
}

fn row_indicator(m: &PhenotypeMatrix, cols: &[usize]) -> Vec<bool> {
    m.rows()
        .iter()
        .map(|r| r.iter().any(|&k| cols.contains(&(k as usize))))
        .collect()
}

impl fmt::Display for OutcomeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeSpec::Code(c) => f.write_str(c),
            OutcomeSpec::Prefix(p) => write!(f, "{p}*"),
        }
    }
}

impl FromStr for OutcomeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.strip_suffix('*') {
            Some("") => Err(Error::config("outcome prefix must not be empty")),
            Some(p) => Ok(OutcomeSpec::Prefix(p.to_string())),
            None if s.is_empty() => Err(Error::config("outcome must not be empty")),
            None => Ok(OutcomeSpec::Code(s.to_string())),
        }
    }
}

impl TryFrom<String> for OutcomeSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<OutcomeSpec> for String {
    fn from(o: OutcomeSpec) -> String {
        o.to_string()
    }
}

/// Counts of the predictor/outcome 2×2 table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoByTwo {
    pub x1_y1: u64,
    pub x1_y0: u64,
    pub x0_y1: u64,
    pub x0_y0: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticalResult {
    pub outcome: String,
    pub predictor: String,
    pub beta_hat: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub converged: bool,
    pub failure_reason: Option<String>,
    pub table: TwoByTwo,
}

impl AnalyticalResult {
    fn failed(outcome: &OutcomeSpec, predictor: &str, table: TwoByTwo, reason: String) -> Self {
        AnalyticalResult {
            outcome: outcome.to_string(),
            predictor: predictor.to_string(),
            beta_hat: None,
            ci_low: None,
            ci_high: None,
            converged: false,
            failure_reason: Some(reason),
            table,
        }
    }
}

/// Unpenalized bivariate logistic regression of the outcome indicator on one
/// predictor code, with a Wald 95% interval.
///
/// Positivity problems (single-class outcome, constant predictor, or an
/// empty cell in the 2×2 table) come back as a failed result, not an error:
/// the maximum-likelihood estimate does not exist there.
pub fn analytical_utility(
    m: &PhenotypeMatrix,
    outcome: &OutcomeSpec,
    predictor: &str,
) -> Result<AnalyticalResult> {
    let out_cols = outcome.resolve(m.vocab())?;
    let p = m
        .vocab()
        .index_of(predictor)
        .ok_or_else(|| Error::config(format!("predictor `{predictor}` is not in the vocabulary")))?;
    if out_cols.contains(&p) {
        return Err(Error::config(format!(
            "predictor `{predictor}` is part of outcome `{outcome}`"
        )));
    }
    if m.n_rows() == 0 {
        return Err(Error::Undefined("analytical utility on an empty matrix".into()));
    }
    let y = row_indicator(m, &out_cols);
    let mut table = TwoByTwo::default();
    let mut x_rows = Vec::with_capacity(m.n_rows());
    for (i, &yi) in y.iter().enumerate() {
        let xi = m.get(i, p);
        match (xi, yi) {
            (true, true) => table.x1_y1 += 1,
            (true, false) => table.x1_y0 += 1,
            (false, true) => table.x0_y1 += 1,
            (false, false) => table.x0_y0 += 1,
        }
        x_rows.push(if xi { vec![0] } else { vec![] });
    }

    let n_pos = table.x1_y1 + table.x0_y1;
    if n_pos == 0 || n_pos == m.n_rows() as u64 {
        return Ok(AnalyticalResult::failed(
            outcome,
            predictor,
            table,
            "single-class outcome".into(),
        ));
    }
    let n_x = table.x1_y1 + table.x1_y0;
    if n_x == 0 || n_x == m.n_rows() as u64 {
        return Ok(AnalyticalResult::failed(outcome, predictor, table, "constant predictor".into()));
    }
    let empty: Vec<&str> = [
        (table.x1_y1, "x=1,y=1"),
        (table.x1_y0, "x=1,y=0"),
        (table.x0_y1, "x=0,y=1"),
        (table.x0_y0, "x=0,y=0"),
    ]
    .iter()
    .filter(|(c, _)| *c == 0)
    .map(|(_, name)| *name)
    .collect();
    if !empty.is_empty() {
        return Ok(AnalyticalResult::failed(
            outcome,
            predictor,
            table,
            format!("separation: empty cell {} (positivity violated)", empty.join(", ")),
        ));
    }

    let design = BinaryDesign::new(1, x_rows)?;
    let model = ml::fit_logistic(&design, &y, &LogisticOptions::default())?;
    let beta = model.coefficients[0];
    match (&model.standard_errors, model.converged) {
        (Some(se), true) => Ok(AnalyticalResult {
            outcome: outcome.to_string(),
            predictor: predictor.to_string(),
            beta_hat: Some(beta),
            ci_low: Some(beta - CI_Z * se[0]),
            ci_high: Some(beta + CI_Z * se[0]),
            converged: true,
            failure_reason: None,
            table,
        }),
        _ => Ok(AnalyticalResult::failed(
            outcome,
            predictor,
            table,
            if model.separation_flag {
                "separation: coefficient diverged".into()
            } else {
                format!("did not converge in {} iterations", model.n_iter)
            },
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitOptions {
    /// Fraction of real rows held out for testing; 0.2 is the 4:1 split.
    pub test_fraction: f64,
    /// Split each outcome class separately so both sides keep its prevalence.
    pub stratified: bool,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            test_fraction: 0.2,
            stratified: true,
        }
    }
}

/// Seeded train/test split of `labels.len()` rows; both index lists sorted.
///
/// Each group (a class when stratified, otherwise all rows) is shuffled
/// with ChaCha8 and its first `round(n·test_fraction)` members are held out.
pub fn train_test_split(labels: &[bool], opts: &SplitOptions, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(opts.test_fraction > 0.0 && opts.test_fraction < 1.0) {
        return Err(Error::config(format!(
            "test fraction must lie strictly between 0 and 1, got {}",
            opts.test_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups: Vec<Vec<usize>> = if opts.stratified {
        [true, false]
            .iter()
            .map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
            .collect()
    } else {
        vec![(0..labels.len()).collect()]
    };
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut g in groups {
        g.shuffle(&mut rng);
        let n_test = (g.len() as f64 * opts.test_fraction).round() as usize;
        test.extend_from_slice(&g[..n_test]);
        train.extend_from_slice(&g[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Held-out performance of one training scenario, or why it could not run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub auc: Option<f64>,
    pub acc: Option<f64>,
    pub failure: Option<String>,
}

impl ScenarioResult {
    fn failed(reason: String) -> Self {
        ScenarioResult {
            auc: None,
            acc: None,
            failure: Some(reason),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scenario {
    Trtr,
    Tstr,
    Tsrtr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveResult {
    pub outcome: String,
    pub trtr: ScenarioResult,
    pub tstr: ScenarioResult,
    pub tsrtr: ScenarioResult,
    pub n_train: usize,
    pub n_test: usize,
    pub n_syn: usize,
    pub stratified_split: bool,
}

fn delta(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(a? - b?)
}

impl PredictiveResult {
    pub fn delta_auc_tstr(&self) -> Option<f64> {
        delta(self.tstr.auc, self.trtr.auc)
    }
    pub fn delta_acc_tstr(&self) -> Option<f64> {
        delta(self.tstr.acc, self.trtr.acc)
    }
    pub fn delta_auc_tsrtr(&self) -> Option<f64> {
        delta(self.tsrtr.auc, self.trtr.auc)
    }
    pub fn delta_acc_tsrtr(&self) -> Option<f64> {
        delta(self.tsrtr.acc, self.trtr.acc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveOptions {
    pub split: SplitOptions,
    pub seed: u64,
    pub learner: LogisticLearner,
}

impl Default for PredictiveOptions {
    fn default() -> Self {
        PredictiveOptions {
            split: SplitOptions::default(),
            seed: 0,
            learner: LogisticLearner::default(),
        }
    }
}

struct Prepared {
    outcome: String,
    real_x: BinaryDesign,
    real_y: Vec<bool>,
    syn_x: BinaryDesign,
    syn_y: Vec<bool>,
    train: Vec<usize>,
    test: Vec<usize>,
}

fn prepare(
    real: &PhenotypeMatrix,
    syn: &PhenotypeMatrix,
    outcome: &OutcomeSpec,
    opts: &PredictiveOptions,
) -> Result<Prepared> {
    check_shared_vocab(real, syn)?;
    if real.n_rows() < 10 {
        return Err(Error::data(format!(
            "predictive utility needs at least 10 real rows, got {}",
            real.n_rows()
        )));
    }
    let cols = outcome.resolve(real.vocab())?;
    let real_y = row_indicator(real, &cols);
    let (train, test) = train_test_split(&real_y, &opts.split, opts.seed)?;
    let n_test_pos = test.iter().filter(|&&i| real_y[i]).count();
    if n_test_pos == 0 || n_test_pos == test.len() {
        return Err(Error::data(format!(
            "outcome `{outcome}` has a single class in the real test split"
        )));
    }
    Ok(Prepared {
        outcome: outcome.to_string(),
        real_x: BinaryDesign::from_matrix(real, &cols),
        real_y,
        syn_x: BinaryDesign::from_matrix(syn, &cols),
        syn_y: row_indicator(syn, &cols),
        train,
        test,
    })
}

fn run_scenario(p: &Prepared, scenario: Scenario, learner: &dyn Learner) -> ScenarioResult {
    let pick = |idx: &[usize]| -> Vec<bool> { idx.iter().map(|&i| p.real_y[i]).collect() };
    let (x, y) = match scenario {
        Scenario::Trtr => (p.real_x.subset(&p.train), pick(&p.train)),
        Scenario::Tstr => (p.syn_x.clone(), p.syn_y.clone()),
        Scenario::Tsrtr => {
            let x = match p.real_x.subset(&p.train).stack(&p.syn_x) {
                Ok(x) => x,
                Err(e) => return ScenarioResult::failed(e.to_string()),
            };
            let mut y = pick(&p.train);
            y.extend_from_slice(&p.syn_y);
            (x, y)
        }
    };
    let n_pos = y.iter().filter(|&&v| v).count();
    if n_pos == 0 || n_pos == y.len() {
        return ScenarioResult::failed("single-class outcome in training data".into());
    }
    let y_test = pick(&p.test);
    let scored = learner
        .fit_predict(&x, &y, &p.real_x.subset(&p.test))
        .and_then(|s| Ok((ml::auc(&s, &y_test)?, ml::accuracy(&s, &y_test, 0.5)?)));
    match scored {
        Ok((auc, acc)) => ScenarioResult {
            auc: Some(auc),
            acc: Some(acc),
            failure: None,
        },
        Err(e) => ScenarioResult::failed(e.to_string()),
    }
}

/// TRTR, TSTR (all synthetic rows) and TSRTR (real-train plus all synthetic),
/// each scored on the same held-out real rows. Outcome columns are never
/// predictors.
pub fn predictive_utility(
    real: &PhenotypeMatrix,
    syn: &PhenotypeMatrix,
    outcome: &OutcomeSpec,
    opts: &PredictiveOptions,
) -> Result<PredictiveResult> {
    let p = prepare(real, syn, outcome, opts)?;
    let scenarios = [Scenario::Trtr, Scenario::Tstr, Scenario::Tsrtr];
    let mut results: Vec<ScenarioResult> = scenarios
        .par_iter()
        .map(|&s| run_scenario(&p, s, &opts.learner))
        .collect();
    let tsrtr = results.pop().expect("three scenarios");
    let tstr = results.pop().expect("three scenarios");
    let trtr = results.pop().expect("three scenarios");
    Ok(PredictiveResult {
        outcome: p.outcome,
        trtr,
        tstr,
        tsrtr,
        n_train: p.train.len(),
        n_test: p.test.len(),
        n_syn: syn.n_rows(),
        stratified_split: opts.split.stratified,
    })
}

/// The TSTR scenario alone, on the same split `predictive_utility` uses.
pub fn tstr_only(
    real: &PhenotypeMatrix,
    syn: &PhenotypeMatrix,
    outcome: &OutcomeSpec,
    opts: &PredictiveOptions,
) -> Result<ScenarioResult> {
    let p = prepare(real, syn, outcome, opts)?;
    Ok(run_scenario(&p, Scenario::Tstr, &opts.learner))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub code: String,
    pub prevalence: f64,
    pub auc_tstr: Option<f64>,
    pub auc_trtr: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    /// Spearman correlation of TSTR AUC against real prevalence, over codes
    /// that produced an AUC; absent when it is undefined.
    pub spearman_rho: Option<f64>,
}

/// Repeats the TSTR evaluation with each of `n_codes` randomly chosen codes
/// (real prevalence above `min_prev`) as the outcome.
///
/// `candidates` restricts the pool; `None` means the whole vocabulary.
/// Entries come back in vocabulary order.
pub fn per_code_tstr_sweep(
    real: &PhenotypeMatrix,
    syn: &PhenotypeMatrix,
    candidates: Option<&[String]>,
    min_prev: f64,
    n_codes: usize,
    opts: &PredictiveOptions,
) -> Result<SweepResult> {
    check_shared_vocab(real, syn)?;
    let prev = real.prevalence()?;
    let pool: Vec<usize> = match candidates {
        Some(codes) => codes
            .iter()
            .map(|c| {
                real.vocab()
                    .index_of(c)
                    .ok_or_else(|| Error::config(format!("sweep code `{c}` is not in the vocabulary")))
            })
            .collect::<Result<_>>()?,
        None => (0..real.n_cols()).collect(),
    };
    let eligible: Vec<usize> = pool.into_iter().filter(|&k| prev[k] > min_prev).collect();
    if eligible.len() < n_codes {
        return Err(Error::data(format!(
            "only {} codes have prevalence above {min_prev}; the sweep needs {n_codes}",
            eligible.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut chosen = eligible.into_iter().choose_multiple(&mut rng, n_codes);
    chosen.sort_unstable();

    let entries: Vec<SweepEntry> = chosen
        .par_iter()
        .map(|&k| {
            let code = real.vocab().code(k).to_string();
            let outcome = OutcomeSpec::Code(code.clone());
            let (auc_tstr, auc_trtr, failure) = match prepare(real, syn, &outcome, opts) {
                Ok(p) => {
                    let tstr = run_scenario(&p, Scenario::Tstr, &opts.learner);
                    let trtr = run_scenario(&p, Scenario::Trtr, &opts.learner);
                    (tstr.auc, trtr.auc, tstr.failure.or(trtr.failure))
                }
                Err(e) => (None, None, Some(e.to_string())),
            };
            SweepEntry {
                code,
                prevalence: prev[k],
                auc_tstr,
                auc_trtr,
                failure,
            }
        })
        .collect();
    let (aucs, prevs): (Vec<f64>, Vec<f64>) = entries
        .iter()
        .filter_map(|e| e.auc_tstr.map(|a| (a, e.prevalence)))
        .unzip();
    let spearman_rho = if aucs.len() >= 2 {
        ml::spearman(&aucs, &prevs)
    } else {
        None
    };
    Ok(SweepResult {
        entries,
        spearman_rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn vocab(codes: &[&str]) -> Vocabulary {
        Vocabulary::new(codes.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    /// Matrix over [X, Y] reproducing a 2×2 table.
    fn table(a: usize, b: usize, c: usize, d: usize) -> PhenotypeMatrix {
        let mut rows = Vec::new();
        rows.extend(std::iter::repeat(vec![1u8, 1]).take(a));
        rows.extend(std::iter::repeat(vec![1u8, 0]).take(b));
        rows.extend(std::iter::repeat(vec![0u8, 1]).take(c));
        rows.extend(std::iter::repeat(vec![0u8, 0]).take(d));
        PhenotypeMatrix::from_dense(vocab(&["X", "Y"]), &rows).unwrap()
    }

    fn correlated(seed: u64, n: usize, k: usize) -> PhenotypeMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let codes: Vec<String> = (0..k).map(|i| format!("C{i:02}")).collect();
        let rows: Vec<Vec<u8>> = (0..n)
            .map(|_| {
                let z = rng.gen_bool(0.4);
                (0..k)
                    .map(|j| {
                        let p = if z { 0.6 } else { 0.15 } * if j % 3 == 0 { 1.0 } else { 0.7 };
                        rng.gen_bool(p) as u8
                    })
                    .collect()
            })
            .collect();
        PhenotypeMatrix::from_dense(Vocabulary::new(codes).unwrap(), &rows).unwrap()
    }

    #[test]
    fn outcome_spec_parsing() {
        assert_eq!("CA*".parse::<OutcomeSpec>().unwrap(), OutcomeSpec::Prefix("CA".into()));
        assert_eq!("EM_202".parse::<OutcomeSpec>().unwrap(), OutcomeSpec::Code("EM_202".into()));
        assert!("*".parse::<OutcomeSpec>().is_err());
        let v = vocab(&["CA_101", "CA_102", "EM_202"]);
        assert_eq!(OutcomeSpec::Prefix("CA".into()).resolve(&v).unwrap(), vec![0, 1]);
        assert!(OutcomeSpec::Code("XX".into()).resolve(&v).unwrap_err().is_config());
    }

    #[test]
    fn woolf_table() {
        let r = analytical_utility(&table(30, 10, 10, 30), &"Y".parse().unwrap(), "X").unwrap();
        let se = (1.0f64 / 30.0 + 0.1 + 0.1 + 1.0 / 30.0).sqrt();
        let b = 9f64.ln();
        assert!(r.converged);
        assert!((r.beta_hat.unwrap() - b).abs() < 1e-6);
        assert!((r.ci_low.unwrap() - (b - 1.96 * se)).abs() < 1e-4);
        assert!((r.ci_high.unwrap() - (b + 1.96 * se)).abs() < 1e-4);
        assert!((r.ci_low.unwrap() - 1.185).abs() < 1e-3);
        assert!((r.ci_high.unwrap() - 3.209).abs() < 1e-3);
    }

    #[test]
    fn single_class_outcome() {
        let r = analytical_utility(&table(5, 0, 5, 0), &"Y".parse().unwrap(), "X").unwrap();
        assert!(!r.converged);
        assert_eq!(r.failure_reason.as_deref(), Some("single-class outcome"));
    }

    #[test]
    fn empty_cell_is_positivity_failure() {
        let r = analytical_utility(&table(20, 0, 10, 30), &"Y".parse().unwrap(), "X").unwrap();
        assert!(!r.converged);
        assert!(r.beta_hat.is_none());
        assert!(r.failure_reason.unwrap().contains("x=1,y=0"));
    }

    #[test]
    fn predictor_inside_outcome_is_config_error() {
        let m = PhenotypeMatrix::from_dense(vocab(&["CA_1", "CA_2"]), &[vec![1, 0], vec![0, 1]]).unwrap();
        assert!(analytical_utility(&m, &"CA*".parse().unwrap(), "CA_2")
            .unwrap_err()
            .is_config());
    }

    #[test]
    fn prefix_outcome_is_an_or() {
        let v = vocab(&["CA_1", "CA_2", "X"]);
        let m = PhenotypeMatrix::from_dense(v, &[vec![1, 0, 0], vec![0, 1, 1], vec![0, 0, 1]]).unwrap();
        assert_eq!(
            OutcomeSpec::Prefix("CA".into()).indicator(&m).unwrap(),
            vec![true, true, false]
        );
    }

    #[test]
    fn split_is_four_to_one_and_stratified() {
        let labels: Vec<bool> = (0..100).map(|i| i % 4 == 0).collect();
        let (train, test) = train_test_split(&labels, &SplitOptions::default(), 9).unwrap();
        assert_eq!((train.len(), test.len()), (80, 20));
        assert_eq!(test.iter().filter(|&&i| labels[i]).count(), 5);
        let again = train_test_split(&labels, &SplitOptions::default(), 9).unwrap();
        assert_eq!((train, test), again);
        let plain = SplitOptions {
            stratified: false,
            ..SplitOptions::default()
        };
        assert_eq!(train_test_split(&labels, &plain, 9).unwrap().1.len(), 20);
    }

    #[test]
    fn tstr_on_copy_of_train_matches_trtr() {
        let real = correlated(1, 600, 12);
        let opts = PredictiveOptions {
            seed: 5,
            ..Default::default()
        };
        let y = OutcomeSpec::Code("C00".into()).indicator(&real).unwrap();
        let (train, _) = train_test_split(&y, &opts.split, opts.seed).unwrap();
        let syn = real.subset(&train);
        let r = predictive_utility(&real, &syn, &"C00".parse().unwrap(), &opts).unwrap();
        assert!(r.delta_auc_tstr().unwrap().abs() <= 0.01);
        assert!(r.trtr.auc.unwrap() > 0.6);
    }

    #[test]
    fn trtr_does_not_depend_on_synthetic() {
        let real = correlated(2, 400, 10);
        let opts = PredictiveOptions::default();
        let a = predictive_utility(&real, &correlated(3, 300, 10), &"C03".parse().unwrap(), &opts).unwrap();
        let b = predictive_utility(&real, &correlated(4, 500, 10), &"C03".parse().unwrap(), &opts).unwrap();
        assert_eq!(a.trtr.auc.unwrap().to_bits(), b.trtr.auc.unwrap().to_bits());
        assert_eq!(a.trtr.acc.unwrap().to_bits(), b.trtr.acc.unwrap().to_bits());
    }

    #[test]
    fn shuffled_outcome_destroys_tstr() {
        let real = correlated(6, 2000, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut y: Vec<u8> = (0..real.n_rows()).map(|i| real.get(i, 0) as u8).collect();
        y.shuffle(&mut rng);
        let dense: Vec<Vec<u8>> = real
            .to_dense()
            .into_iter()
            .zip(y)
            .map(|(mut r, v)| {
                r[0] = v;
                r
            })
            .collect();
        let syn = PhenotypeMatrix::from_dense(real.vocab().clone(), &dense).unwrap();
        let r = predictive_utility(&real, &syn, &"C00".parse().unwrap(), &PredictiveOptions::default()).unwrap();
        // noise coefficients still rank through the shared latent factor, so
        // the null AUC scatters around 0.5 rather than sitting on it
        assert!((r.tstr.auc.unwrap() - 0.5).abs() < 0.15, "{:?}", r.tstr);
        assert!(r.delta_auc_tstr().unwrap() < -0.1);
    }

    #[test]
    fn single_class_synthetic_fails_only_tstr() {
        let real = correlated(7, 300, 8);
        let syn = PhenotypeMatrix::from_dense(real.vocab().clone(), &vec![vec![0u8; 8]; 50]).unwrap();
        let r = predictive_utility(&real, &syn, &"C00".parse().unwrap(), &PredictiveOptions::default()).unwrap();
        assert!(r.trtr.auc.is_some());
        assert!(r.tstr.failure.is_some());
        assert!(r.tsrtr.auc.is_some());
        assert!(r.delta_auc_tstr().is_none());
    }

    #[test]
    fn outcome_column_never_used() {
        let real = correlated(8, 300, 8);
        let zeroed: Vec<Vec<u8>> = real
            .to_dense()
            .into_iter()
            .map(|mut r| {
                r[0] = 0;
                r
            })
            .collect();
        let zeroed = PhenotypeMatrix::from_dense(real.vocab().clone(), &zeroed).unwrap();
        let opts = PredictiveOptions::default();
        let a = prepare(&real, &real, &"C00".parse().unwrap(), &opts).unwrap();
        let b = prepare(&real, &zeroed, &"C00".parse().unwrap(), &opts).unwrap();
        assert_eq!(a.real_x.n_features(), 7);
        assert_eq!(a.real_x, b.syn_x);
    }

    #[test]
    fn sweep_filters_by_prevalence() {
        let v = vocab(&["A", "B", "C"]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<u8>> = (0..400)
            .map(|i| {
                let a = rng.gen_bool(0.4);
                vec![a as u8, (a ^ rng.gen_bool(0.2)) as u8, (i == 0) as u8]
            })
            .collect();
        let m = PhenotypeMatrix::from_dense(v, &rows).unwrap();
        let r = per_code_tstr_sweep(&m, &m, None, 0.1, 2, &PredictiveOptions::default()).unwrap();
        let codes: Vec<&str> = r.entries.iter().map(|e| e.code.as_str()).collect();
        assert_eq!(codes, vec!["A", "B"]);
        let err = per_code_tstr_sweep(&m, &m, None, 0.1, 3, &PredictiveOptions::default()).unwrap_err();
        assert!(err.to_string().contains("only 2 codes"));
    }

    #[test]
    fn sweep_on_copy_tracks_trtr() {
        let real = correlated(9, 4000, 10);
        let opts = PredictiveOptions::default();
        let r = per_code_tstr_sweep(&real, &real, None, 0.1, 5, &opts).unwrap();
        assert_eq!(r.entries.len(), 5);
        for e in &r.entries {
            // synthetic = all real rows, so the train set differs only by the test fold
            assert!((e.auc_tstr.unwrap() - e.auc_trtr.unwrap()).abs() <= 0.02, "{e:?}");
        }
    }
}

//! Distributional fidelity of a synthetic matrix against the real one.
//!
//! `mmd` here is the largest absolute difference in per-code prevalence,
//! not the kernel maximum mean discrepancy.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::PhenotypeMatrix;
use crate::error::{Error, Result};
use crate::ml::{self, BinaryDesign, Learner, LogisticLearner};

/// RMSPE values are reported divided by this factor.
pub const RMSPE_REPORT_SCALE: f64 = 100.0;
/// COFD values are reported divided by this factor.
pub const COFD_REPORT_SCALE: f64 = 1000.0;

pub(crate) fn check_shared_vocab(real: &PhenotypeMatrix, syn: &PhenotypeMatrix) -> Result<()> {
    if real.vocab() != syn.vocab() {
        return Err(Error::VocabMismatch(format!(
            "real has {} codes, synthetic has {}; vocabularies must be identical",
            real.n_cols(),
            syn.n_cols()
        )));
    }
    Ok(())
}

/// max_k |prev_syn[k] - prev_real[k]|.
pub fn mmd_max(real: &PhenotypeMatrix, syn: &PhenotypeMatrix) -> Result<f64> {
    check_shared_vocab(real, syn)?;
    let (pr, ps) = (real.prevalence()?, syn.prevalence()?);
    Ok(pr
        .iter()
        .zip(&ps)
        .map(|(r, s)| (s - r).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentageErrors {
    /// 100 * sqrt(mean(rel^2)) over codes with nonzero real prevalence.
    pub rmspe_raw: f64,
    pub rmspe_reported: f64,
    /// 100 * mean(|rel|) over the same codes.
    pub mape: f64,
    /// Codes left out because their real prevalence is zero.
    pub excluded_codes: Vec<String>,
}

/// Relative prevalence errors, with the real side as denominator.
pub fn percentage_errors(real: &PhenotypeMatrix, syn: &PhenotypeMatrix) -> Result<PercentageErrors> {
    check_shared_vocab(real, syn)?;
    let (pr, ps) = (real.prevalence()?, syn.prevalence()?);
    let mut excluded = Vec::new();
    let mut sq = 0.0;
    let mut abs = 0.0;
    let mut used = 0usize;
    for (k, (r, s)) in pr.iter().zip(&ps).enumerate() {
        if *r == 0.0 {
            excluded.push(real.vocab().code(k).to_string());
            continue;
        }
        let rel = (s - r) / r;
        sq += rel * rel;
        abs += rel.abs();
        used += 1;
    }
    if used == 0 {
        return Err(Error::Undefined(
            "every code has zero real prevalence; relative errors are undefined".into(),
        ));
    }
    let rmspe_raw = 100.0 * (sq / used as f64).sqrt();
    Ok(PercentageErrors {
        rmspe_raw,
        rmspe_reported: rmspe_raw / RMSPE_REPORT_SCALE,
        mape: 100.0 * abs / used as f64,
        excluded_codes: excluded,
    })
}

pub fn rmspe(real: &PhenotypeMatrix, syn: &PhenotypeMatrix) -> Result<PercentageErrors> {
    percentage_errors(real, syn)
}

pub fn mape(real: &PhenotypeMatrix, syn: &PhenotypeMatrix) -> Result<f64> {
    Ok(percentage_errors(real, syn)?.mape)
}

/// Symmetric K x K count matrix `X^T X`, row-major.
pub fn cooccurrence_matrix(m: &PhenotypeMatrix) -> Vec<u64> {
    let k = m.n_cols();
    m.rows()
        .par_chunks(1024)
        .fold(
            || vec![0u64; k * k],
            |mut acc, chunk| {
                for row in chunk {
                    for &a in row {
                        let base = a as usize * k;
                        for &b in row {
                            acc[base + b as usize] += 1;
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; k * k],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Pearson correlation matrix of the columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub k: usize,
    /// Row-major; diagonal is 1, entries involving a constant column are 0.
    pub values: Vec<f64>,
    pub constant_columns: Vec<usize>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.k + b]
    }
}

/// Correlations computed exactly from integer counts:
/// `(n*B_ab - c_a*c_b) / sqrt((n*c_a - c_a^2) * (n*c_b - c_b^2))`.
pub fn correlation_matrix(m: &PhenotypeMatrix) -> CorrelationMatrix {
    let k = m.n_cols();
    let n = m.n_rows() as f64;
    let b = cooccurrence_matrix(m);
    let counts: Vec<f64> = (0..k).map(|i| b[i * k + i] as f64).collect();
    let var: Vec<f64> = counts.iter().map(|&c| n * c - c * c).collect();
    let constant_columns: Vec<usize> = (0..k).filter(|&i| var[i] == 0.0).collect();
    let values = (0..k)
        .into_par_iter()
        .flat_map_iter(|a| {
            let (b, counts, var) = (&b, &counts, &var);
            (0..k).map(move |c| {
                if a == c {
                    1.0
                } else if var[a] == 0.0 || var[c] == 0.0 {
                    0.0
                } else {
                    (n * b[a * k + c] as f64 - counts[a] * counts[c]) / (var[a] * var[c]).sqrt()
                }
            })
        })
        .collect();
    CorrelationMatrix {
        k,
        values,
        constant_columns,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfdResult {
    pub cfd: f64,
    /// Codes constant in the real matrix (their correlations were zeroed).
    pub constant_real: Vec<String>,
    pub constant_syn: Vec<String>,
}

fn frobenius_distance(a: &[f64], b: &[f64], k: usize) -> f64 {
    let row_sums: Vec<f64> = (0..k)
        .into_par_iter()
        .map(|r| {
            (0..k)
                .map(|c| {
                    let d = a[r * k + c] - b[r * k + c];
                    d * d
                })
                .sum::<f64>()
        })
        .collect();
    row_sums.iter().sum::<f64>().sqrt()
}

/// Frobenius norm of the difference between the two correlation matrices.
pub fn correlation_fd(real: &PhenotypeMatrix, syn: &PhenotypeMatrix) -> Result<CfdResult> {
    check_shared_vocab(real, syn)?;
    if real.n_cols() == 0 {
        return Err(Error::Undefined("CFD over zero codes".into()));
    }
    if real.n_rows() == 0 || syn.n_rows() == 0 {
        return Err(Error::Undefined("CFD needs rows on both sides".into()));
    }
    let (cr, cs) = (correlation_matrix(real), correlation_matrix(syn));
    let names = |cols: &[usize]| cols.iter().map(|&c| real.vocab().code(c).to_string()).collect();
    Ok(CfdResult {
        cfd: frobenius_distance(&cr.values, &cs.values, real.n_cols()),
        constant_real: names(&cr.constant_columns),
        constant_syn: names(&cs.constant_columns),
    })
}

/// Raw Frobenius distance between the co-occurrence count matrices.
pub fn cooccurrence_fd(real: &PhenotypeMatrix, syn: &PhenotypeMatrix) -> Result<f64> {
    check_shared_vocab(real, syn)?;
    let (br, bs) = (cooccurrence_matrix(real), cooccurrence_matrix(syn));
    let sum: u128 = br
        .iter()
        .zip(&bs)
        .map(|(&a, &b)| {
            let d = a.abs_diff(b) as u128;
            d * d
        })
        .sum();
    Ok((sum as f64).sqrt())
}

/// How pooled real and synthetic rows are split into folds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscriminatorCv {
    /// Identical records share a fold, so a test row never has an exact
    /// copy (with the opposite label) in the training folds.
    #[default]
    GroupedByRecord,
    /// Plain label-stratified folds.
    Stratified,
}

/// Group id per row: rows with the same set of codes share an id.
pub fn record_groups(rows: &[Vec<u32>]) -> Vec<usize> {
    let mut ids: HashMap<&[u32], usize> = HashMap::new();
    rows.iter()
        .map(|r| {
            let next = ids.len();
            *ids.entry(r.as_slice()).or_insert(next)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminativeResult {
    /// Mean held-out AUC over folds.
    pub auc: f64,
    pub acc: f64,
    pub fold_auc: Vec<f64>,
    pub fold_acc: Vec<f64>,
}

/// Cross-validated real-vs-synthetic classifier. Real rows are labelled 1.
pub fn discriminative_prediction(
    real: &PhenotypeMatrix,
    syn: &PhenotypeMatrix,
    k_folds: usize,
    seed: u64,
    cv: DiscriminatorCv,
    learner: &dyn Learner,
) -> Result<DiscriminativeResult> {
    check_shared_vocab(real, syn)?;
    if real.n_rows() < k_folds || syn.n_rows() < k_folds {
        return Err(Error::data(format!(
            "discriminative prediction needs at least {k_folds} rows per side (real {}, synthetic {})",
            real.n_rows(),
            syn.n_rows()
        )));
    }
    let design = BinaryDesign::from_matrix(real, &[])
        .stack(&BinaryDesign::from_matrix(syn, &[]))?;
    let labels: Vec<bool> = (0..design.n_rows()).map(|i| i < real.n_rows()).collect();
    let plan = match cv {
        DiscriminatorCv::Stratified => ml::stratified_kfold(&labels, k_folds, seed)?,
        DiscriminatorCv::GroupedByRecord => {
            ml::grouped_stratified_kfold(&labels, &record_groups(design.rows()), k_folds, seed)?
        }
    };

    let per_fold: Vec<(f64, f64)> = (0..k_folds)
        .into_par_iter()
        .map(|f| {
            let (train, test) = plan.split(f);
            let y_train: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
            let y_test: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
            let scores =
                learner.fit_predict(&design.subset(&train), &y_train, &design.subset(&test))?;
            Ok((ml::auc(&scores, &y_test)?, ml::accuracy(&scores, &y_test, 0.5)?))
        })
        .collect::<Result<_>>()?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let fold_auc: Vec<f64> = per_fold.iter().map(|p| p.0).collect();
    let fold_acc: Vec<f64> = per_fold.iter().map(|p| p.1).collect();
    Ok(DiscriminativeResult {
        auc: mean(&fold_auc),
        acc: mean(&fold_acc),
        fold_auc,
        fold_acc,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalencePair {
    pub code: String,
    pub real: f64,
    pub syn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityOptions {
    pub k_folds: usize,
    pub seed: u64,
    pub cv: DiscriminatorCv,
    pub learner: LogisticLearner,
    pub discriminative: bool,
    pub prevalence_table: bool,
}

impl Default for FidelityOptions {
    fn default() -> Self {
        FidelityOptions {
            k_folds: 5,
            seed: 0,
            cv: DiscriminatorCv::default(),
            learner: LogisticLearner::default(),
            discriminative: true,
            prevalence_table: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityResult {
    pub mmd: f64,
    pub rmspe_raw: f64,
    pub rmspe_reported: f64,
    pub mape: f64,
    pub cfd: f64,
    pub cofd_raw: f64,
    pub cofd_reported: f64,
    pub discriminative: Option<DiscriminativeResult>,
    pub excluded_codes: Vec<String>,
    pub constant_real: Vec<String>,
    pub constant_syn: Vec<String>,
    pub per_code_prevalence_pairs: Option<Vec<PrevalencePair>>,
}

pub fn evaluate_fidelity(
    real: &PhenotypeMatrix,
    syn: &PhenotypeMatrix,
    opts: &FidelityOptions,
) -> Result<FidelityResult> {
    let mmd = mmd_max(real, syn)?;
    let pe = percentage_errors(real, syn)?;
    let cfd = correlation_fd(real, syn)?;
    let cofd_raw = cooccurrence_fd(real, syn)?;
    let discriminative = if opts.discriminative {
        Some(discriminative_prediction(real, syn, opts.k_folds, opts.seed, opts.cv, &opts.learner)?)
    } else {
        None
    };
    let per_code_prevalence_pairs = if opts.prevalence_table {
        let (pr, ps) = (real.prevalence()?, syn.prevalence()?);
        Some(
            real.vocab()
                .codes()
                .iter()
                .zip(pr.iter().zip(&ps))
                .map(|(c, (&r, &s))| PrevalencePair {
                    code: c.clone(),
                    real: r,
                    syn: s,
                })
                .collect(),
        )
    } else {
        None
    };
    Ok(FidelityResult {
        mmd,
        rmspe_raw: pe.rmspe_raw,
        rmspe_reported: pe.rmspe_reported,
        mape: pe.mape,
        cfd: cfd.cfd,
        cofd_raw,
        cofd_reported: cofd_raw / COFD_REPORT_SCALE,
        discriminative,
        excluded_codes: pe.excluded_codes,
        constant_real: cfd.constant_real,
        constant_syn: cfd.constant_syn,
        per_code_prevalence_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{generate_pbr, generate_resample, GenerationConfig};
    use crate::corpus::Vocabulary;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vocab(k: usize) -> Vocabulary {
        Vocabulary::new((0..k).map(|i| format!("C{i}")).collect()).unwrap()
    }

    fn dense(rows: &[&[u8]]) -> PhenotypeMatrix {
        let rows: Vec<Vec<u8>> = rows.iter().map(|r| r.to_vec()).collect();
        PhenotypeMatrix::from_dense(vocab(rows[0].len()), &rows).unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, k: usize) -> PhenotypeMatrix {
        let probs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..0.7)).collect();
        let rows: Vec<Vec<u8>> = (0..n)
            .map(|_| probs.iter().map(|&p| rng.gen_bool(p) as u8).collect())
            .collect();
        PhenotypeMatrix::from_dense(vocab(k), &rows).unwrap()
    }

    // real prevalence [1.0, 0.5]
    fn real_a() -> PhenotypeMatrix {
        dense(&[&[1, 0], &[1, 1]])
    }

    #[test]
    fn identical_matrices_score_zero() {
        let m = dense(&[&[1, 0, 1], &[0, 1, 1], &[1, 1, 0]]);
        assert_eq!(mmd_max(&m, &m).unwrap(), 0.0);
        let pe = percentage_errors(&m, &m).unwrap();
        assert_eq!((pe.rmspe_raw, pe.mape), (0.0, 0.0));
        assert_eq!(correlation_fd(&m, &m).unwrap().cfd, 0.0);
        assert_eq!(cooccurrence_fd(&m, &m).unwrap(), 0.0);
    }

    #[test]
    fn mmd_hand_example() {
        // syn prevalence [0.5, 0.0]
        let syn = dense(&[&[1, 0], &[0, 0]]);
        assert_eq!(mmd_max(&real_a(), &syn).unwrap(), 0.5);
    }

    #[test]
    fn percentage_error_hand_example() {
        // syn prevalence [0.5, 0.25]
        let syn = dense(&[&[1, 0], &[1, 0], &[0, 1], &[0, 0]]);
        let pe = percentage_errors(&real_a(), &syn).unwrap();
        assert!((pe.rmspe_raw - 50.0).abs() < 1e-12);
        assert!((pe.rmspe_reported - 0.5).abs() < 1e-14);
        assert!((pe.mape - 50.0).abs() < 1e-12);
        assert!(pe.excluded_codes.is_empty());
    }

    #[test]
    fn zero_prevalence_codes_excluded() {
        let real = dense(&[&[1, 0, 0], &[1, 1, 0]]);
        let syn = dense(&[&[1, 0, 1], &[0, 0, 0]]);
        let pe = percentage_errors(&real, &syn).unwrap();
        assert_eq!(pe.excluded_codes, vec!["C2".to_string()]);
        // remaining relative errors: -0.5 and -1.0
        assert!((pe.mape - 75.0).abs() < 1e-12);

        let zero = dense(&[&[0, 0], &[0, 0]]);
        assert!(percentage_errors(&zero, &real_a()).is_err());
    }

    #[test]
    fn cfd_hand_example() {
        let real = dense(&[&[1, 0], &[0, 1], &[1, 1]]);
        let syn = dense(&[&[1, 1], &[0, 0], &[1, 0]]);
        let cr = correlation_matrix(&real);
        assert!((cr.get(0, 1) + 0.5).abs() < 1e-12);
        assert!((correlation_matrix(&syn).get(0, 1) - 0.5).abs() < 1e-12);
        let cfd = correlation_fd(&real, &syn).unwrap().cfd;
        assert!((cfd - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cofd_hand_example() {
        let real = dense(&[&[1, 0], &[0, 1], &[1, 1]]);
        let syn = dense(&[&[1, 1], &[0, 0], &[1, 0]]);
        assert_eq!(cooccurrence_matrix(&real), vec![2, 1, 1, 2]);
        assert_eq!(cooccurrence_matrix(&syn), vec![2, 1, 1, 1]);
        let raw = cooccurrence_fd(&real, &syn).unwrap();
        assert_eq!(raw, 1.0);
        assert_eq!(raw / COFD_REPORT_SCALE, 0.001);
    }

    #[test]
    fn stacking_doubles_cooccurrence() {
        let syn = dense(&[&[1, 1], &[0, 0], &[1, 0]]);
        let doubled = syn.stack(&syn).unwrap();
        let b: Vec<u64> = cooccurrence_matrix(&syn).iter().map(|x| 2 * x).collect();
        assert_eq!(cooccurrence_matrix(&doubled), b);
    }

    #[test]
    fn vocabulary_mismatch_rejected() {
        let a = dense(&[&[1, 0]]);
        let b = PhenotypeMatrix::from_dense(
            Vocabulary::new(vec!["X".into(), "Y".into()]).unwrap(),
            &[vec![1, 0]],
        )
        .unwrap();
        assert!(matches!(mmd_max(&a, &b), Err(Error::VocabMismatch(_))));
        assert!(cooccurrence_fd(&a, &b).is_err());
    }

    #[test]
    fn constant_columns_zeroed_and_droppable() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base_r = random_matrix(&mut rng, 60, 5);
        let base_s = random_matrix(&mut rng, 40, 5);
        // append a column that is all ones in real and all zeros in syn
        let widen = |m: &PhenotypeMatrix, on: bool| {
            let rows: Vec<Vec<u32>> = m
                .rows()
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    if on {
                        r.push(5);
                    }
                    r
                })
                .collect();
            PhenotypeMatrix::new(vocab(6), rows, None).unwrap()
        };
        let (wr, ws) = (widen(&base_r, true), widen(&base_s, false));
        let res = correlation_fd(&wr, &ws).unwrap();
        assert_eq!(res.constant_real, vec!["C5".to_string()]);
        assert_eq!(res.constant_syn, vec!["C5".to_string()]);
        let reduced = correlation_fd(&base_r, &base_s).unwrap().cfd;
        assert!((res.cfd - reduced).abs() < 1e-12);
    }

    #[test]
    fn symmetry_and_rmspe_asymmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_matrix(&mut rng, 50, 6);
        let b = random_matrix(&mut rng, 70, 6);
        assert_eq!(mmd_max(&a, &b).unwrap(), mmd_max(&b, &a).unwrap());
        assert_eq!(
            correlation_fd(&a, &b).unwrap().cfd,
            correlation_fd(&b, &a).unwrap().cfd
        );
        assert_eq!(cooccurrence_fd(&a, &b).unwrap(), cooccurrence_fd(&b, &a).unwrap());

        // prevalences 0.5 vs 0.25: relative error 0.5 one way, 1.0 the other
        let p = dense(&[&[1], &[0]]);
        let q = dense(&[&[1], &[0], &[0], &[0]]);
        assert!((percentage_errors(&p, &q).unwrap().mape - 50.0).abs() < 1e-12);
        assert!((percentage_errors(&q, &p).unwrap().mape - 100.0).abs() < 1e-12);
    }

    #[test]
    fn duplicating_real_rows_is_scale_free_except_cofd() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let real = random_matrix(&mut rng, 40, 5);
        let syn = random_matrix(&mut rng, 30, 5);
        let doubled = real.stack(&real).unwrap();
        assert_eq!(mmd_max(&real, &syn).unwrap(), mmd_max(&doubled, &syn).unwrap());
        let (p1, p2) = (
            percentage_errors(&real, &syn).unwrap(),
            percentage_errors(&doubled, &syn).unwrap(),
        );
        assert!((p1.rmspe_raw - p2.rmspe_raw).abs() < 1e-12);
        assert!((p1.mape - p2.mape).abs() < 1e-12);
        let (c1, c2) = (
            correlation_fd(&real, &syn).unwrap().cfd,
            correlation_fd(&doubled, &syn).unwrap().cfd,
        );
        assert!((c1 - c2).abs() < 1e-12);
        assert_ne!(
            cooccurrence_fd(&real, &syn).unwrap(),
            cooccurrence_fd(&doubled, &syn).unwrap()
        );
    }

    #[test]
    fn resample_mmd_shrinks_with_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let real = random_matrix(&mut rng, 500, 20);
        let mean_mmd = |m: usize| {
            (0..5)
                .map(|s| {
                    let syn = generate_resample(&real, &GenerationConfig { target_size: m, seed: s })
                        .unwrap();
                    mmd_max(&real, &syn).unwrap()
                })
                .sum::<f64>()
                / 5.0
        };
        let (a, b, c) = (mean_mmd(1_000), mean_mmd(10_000), mean_mmd(100_000));
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    fn pbr_cfd_equals_real_off_diagonal_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // two correlated pairs
        let rows: Vec<Vec<u8>> = (0..3000)
            .map(|_| {
                let a = rng.gen_bool(0.4);
                let b = if rng.gen_bool(0.8) { a } else { !a };
                let c = rng.gen_bool(0.3);
                let d = if rng.gen_bool(0.85) { c } else { rng.gen_bool(0.3) };
                vec![a as u8, b as u8, c as u8, d as u8]
            })
            .collect();
        let real = PhenotypeMatrix::from_dense(vocab(4), &rows).unwrap();
        let syn = generate_pbr(
            &real.prevalence().unwrap(),
            real.vocab(),
            &GenerationConfig { target_size: 200_000, seed: 1 },
        )
        .unwrap();
        let cr = correlation_matrix(&real);
        let off: f64 = (0..4)
            .flat_map(|a| (0..4).map(move |b| (a, b)))
            .filter(|(a, b)| a != b)
            .map(|(a, b)| cr.get(a, b).powi(2))
            .sum::<f64>()
            .sqrt();
        let cfd = correlation_fd(&real, &syn).unwrap().cfd;
        assert!((cfd - off).abs() < 0.02, "{cfd} vs {off}");
    }

    #[test]
    fn discriminator_cannot_tell_copies() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let real = random_matrix(&mut rng, 1500, 15);
        let res = discriminative_prediction(&real, &real.clone(), 5, 3, DiscriminatorCv::default(), &LogisticLearner::default())
            .unwrap();
        assert!((res.auc - 0.5).abs() <= 0.05, "{}", res.auc);
        assert_eq!(res.fold_auc.len(), 5);
    }

    #[test]
    fn plain_folds_leak_exact_copies() {
        // the artefact grouped folds exist to remove
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let real = random_matrix(&mut rng, 1500, 15);
        let res = discriminative_prediction(
            &real,
            &real.clone(),
            5,
            3,
            DiscriminatorCv::Stratified,
            &LogisticLearner::default(),
        )
        .unwrap();
        assert!(res.auc < 0.45, "{}", res.auc);
    }

    #[test]
    fn record_groups_match_identical_rows() {
        let rows = vec![vec![0, 2], vec![1], vec![0, 2], vec![]];
        assert_eq!(record_groups(&rows), vec![0, 1, 0, 2]);
    }

    #[test]
    fn discriminator_separates_complement() {
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let rows: Vec<Vec<u8>> = (0..1000)
            .map(|_| (0..10).map(|_| rng.gen_bool(0.15) as u8).collect())
            .collect();
        let real = PhenotypeMatrix::from_dense(vocab(10), &rows).unwrap();
        let comp: Vec<Vec<u8>> = rows.iter().map(|r| r.iter().map(|v| 1 - v).collect()).collect();
        let syn = PhenotypeMatrix::from_dense(vocab(10), &comp).unwrap();
        let res = discriminative_prediction(&real, &syn, 5, 3, DiscriminatorCv::default(), &LogisticLearner::default()).unwrap();
        assert!(res.auc >= 0.95, "{}", res.auc);
    }

    #[test]
    fn discriminator_null_for_same_process() {
        let prev: Vec<f64> = (0..12).map(|k| 0.05 + 0.07 * k as f64).collect();
        let gen = |seed| {
            generate_pbr(&prev, &vocab(12), &GenerationConfig { target_size: 2000, seed }).unwrap()
        };
        let res = discriminative_prediction(&gen(1), &gen(2), 5, 0, DiscriminatorCv::default(), &LogisticLearner::default())
            .unwrap();
        assert!((res.auc - 0.5).abs() <= 0.05, "{}", res.auc);
    }

    proptest! {
        #[test]
        fn metrics_are_row_permutation_invariant(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let real = random_matrix(&mut rng, 25, 4);
            let syn = random_matrix(&mut rng, 18, 4);
            let mut order: Vec<usize> = (0..syn.n_rows()).collect();
            rand::seq::SliceRandom::shuffle(&mut order[..], &mut rng);
            let shuffled = syn.subset(&order);
            prop_assert_eq!(mmd_max(&real, &syn).unwrap(), mmd_max(&real, &shuffled).unwrap());
            prop_assert_eq!(cooccurrence_fd(&real, &syn).unwrap(), cooccurrence_fd(&real, &shuffled).unwrap());
            prop_assert_eq!(correlation_fd(&real, &syn).unwrap().cfd, correlation_fd(&real, &shuffled).unwrap().cfd);
            prop_assert_eq!(
                percentage_errors(&real, &syn).unwrap().mape,
                percentage_errors(&real, &shuffled).unwrap().mape
            );
        }
    }
}

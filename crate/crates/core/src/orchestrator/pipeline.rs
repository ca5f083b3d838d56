use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{DatasetConfig, RunConfig, VocabPolicyKind};
use super::report::{
    write_atomic, write_report, AnalyticalPair, DatasetSummary, Details, MetricReport, PrivacyDetails, Scalar,
    Timing, ToolInfo, UtilityDetails, VocabularyAlignment,
};
use crate::baselines::{GenerationConfig, DEFAULT_TARGET_SIZE};
use crate::corpus::{
    aggregate, filter_cohort, map_codes, matrix_to_events, parse_events, truncate_events,
    CodeMap, CohortPredicate, Demographics, EventTable, PhenotypeMatrix, UnmappedReport,
    VocabPolicy, Vocabulary,
};
use crate::error::{Error, Result};
use crate::fidelity::{evaluate_fidelity, FidelityOptions, FidelityResult};
use crate::ml::LogisticLearner;
use crate::privacy::{air, mir_with_bins, AirOptions};
use crate::seed::derive_seed;
use crate::utility::{
    analytical_utility, per_code_tstr_sweep, predictive_utility, PredictiveOptions, SplitOptions,
};

/// Reads a sparse matrix file.
pub fn read_matrix(path: &Path) -> Result<PhenotypeMatrix> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    PhenotypeMatrix::read_sparse(BufReader::new(f))
}

/// Writes a sparse matrix file atomically.
pub fn write_matrix(m: &PhenotypeMatrix, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    m.write_sparse(&mut buf).map_err(|e| Error::io(path, e))?;
    write_atomic(path, &buf)
}

/// Reads a vocabulary file: codes separated by any whitespace.
pub fn read_vocabulary(path: &Path) -> Result<Vocabulary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let codes: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    if codes.is_empty() {
        return Err(Error::config(format!("vocabulary file {} is empty", path.display())));
    }
    Vocabulary::new(codes)
}

/// A loaded side of the comparison and how it was produced.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub matrix: PhenotypeMatrix,
    pub summary: DatasetSummary,
}

/// Real data in its original coding system, before any map, for fitting a
/// baseline ahead of mapping.
#[derive(Debug, Clone)]
pub struct PreMapped {
    pub matrix: PhenotypeMatrix,
    pub system: crate::corpus::CodeSystem,
}

fn vocab_policy(cfg: &RunConfig) -> Result<VocabPolicy> {
    match cfg.vocab.policy {
        VocabPolicyKind::FromData => Ok(VocabPolicy::FromData),
        VocabPolicyKind::Fixed => {
            let path = cfg.vocab.path.as_ref().expect("validated");
            Ok(VocabPolicy::Fixed(read_vocabulary(&cfg.resolve(path))?))
        }
    }
}

fn read_maps(cfg: &RunConfig, d: &DatasetConfig) -> Result<Vec<CodeMap>> {
    d.maps
        .iter()
        .map(|m| {
            let path = cfg.resolve(&m.path);
            let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
            CodeMap::read_tsv(BufReader::new(f), m.source, m.target)
        })
        .collect()
}

/// Maps and truncates events according to `d`.
fn normalize_events(
    cfg: &RunConfig,
    d: &DatasetConfig,
    table: EventTable,
) -> Result<(EventTable, Vec<UnmappedReport>)> {
    let maps = read_maps(cfg, d)?;
    let (table, stages) = if maps.is_empty() {
        (table, Vec::new())
    } else {
        let mapped = map_codes(table, &maps)?;
        for s in &mapped.stages {
            if !s.unmapped.is_empty() {
                log::info!(
                    "{} distinct codes ({} events) had no mapping {:?} -> {:?}",
                    s.unmapped.len(),
                    s.dropped_events(),
                    s.source,
                    s.target
                );
            }
        }
        (mapped.table, mapped.stages)
    };
    let table = if d.truncate { truncate_events(table)? } else { table };
    Ok((table, stages))
}

fn apply_cohort(
    cfg: &RunConfig,
    d: &DatasetConfig,
    m: PhenotypeMatrix,
    summary: &mut DatasetSummary,
) -> Result<PhenotypeMatrix> {
    let (Some(demo_path), Some(expr)) = (&d.demographics, &d.cohort) else {
        return Ok(m);
    };
    let path = cfg.resolve(demo_path);
    let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let demo = Demographics::read_csv(f)?;
    let predicate: CohortPredicate = expr.parse()?;
    summary.cohort = Some(expr.clone());
    summary.n_before_cohort = Some(m.n_rows());
    filter_cohort(&m, &demo, &predicate)
}

fn parse_event_file(cfg: &RunConfig, d: &DatasetConfig, path: &Path) -> Result<(EventTable, usize)> {
    let path = cfg.resolve(path);
    let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let parsed = parse_events(BufReader::new(f), &d.schema)?;
    Ok((parsed.table, parsed.dropped_empty_code))
}

/// Loads the real side. With `keep_premapped`, also returns the real data
/// aggregated in its original coding system (after the cohort filter).
pub fn load_real(cfg: &RunConfig, keep_premapped: bool) -> Result<(LoadedDataset, Option<PreMapped>)> {
    let d = &cfg.real;
    if let Some(p) = &d.matrix {
        let mut summary = DatasetSummary {
            source: "matrix".into(),
            path: Some(p.display().to_string()),
            ..Default::default()
        };
        let m = apply_cohort(cfg, d, read_matrix(&cfg.resolve(p))?, &mut summary)?;
        summary.n_rows = m.n_rows();
        summary.n_cols = m.n_cols();
        return Ok((LoadedDataset { matrix: m, summary }, None));
    }
    let p = d.events.as_ref().expect("validated");
    let (table, dropped) = parse_event_file(cfg, d, p)?;
    let mut summary = DatasetSummary {
        source: "events".into(),
        path: Some(p.display().to_string()),
        dropped_empty_code: Some(dropped),
        ..Default::default()
    };
    let premapped = if keep_premapped {
        let systems = table.systems();
        let system = match systems.as_slice() {
            [s] => *s,
            _ => {
                return Err(Error::data(
                    "generating before mapping needs real events in a single code system",
                ))
            }
        };
        let m = aggregate(&table, &VocabPolicy::FromData, 0)?;
        let mut scratch = DatasetSummary::default();
        Some(PreMapped {
            matrix: apply_cohort(cfg, d, m, &mut scratch)?,
            system,
        })
    } else {
        None
    };
    let (table, stages) = normalize_events(cfg, d, table)?;
    summary.mapping = stages;
    let m = aggregate(&table, &vocab_policy(cfg)?, cfg.vocab.min_patients)?;
    let m = apply_cohort(cfg, d, m, &mut summary)?;
    summary.n_rows = m.n_rows();
    summary.n_cols = m.n_cols();
    Ok((LoadedDataset { matrix: m, summary }, premapped))
}

/// Loads or generates the synthetic side. Returns the generation time for
/// baselines.
pub fn load_synthetic(
    cfg: &RunConfig,
    real: &PhenotypeMatrix,
    premapped: Option<&PreMapped>,
) -> Result<(LoadedDataset, Option<f64>)> {
    let d = &cfg.synthetic;
    if let Some(p) = &d.matrix {
        let mut summary = DatasetSummary {
            source: "matrix".into(),
            path: Some(p.display().to_string()),
            ..Default::default()
        };
        let m = apply_cohort(cfg, d, read_matrix(&cfg.resolve(p))?, &mut summary)?;
        summary.n_rows = m.n_rows();
        summary.n_cols = m.n_cols();
        return Ok((LoadedDataset { matrix: m, summary }, None));
    }
    if let Some(p) = &d.events {
        let (table, dropped) = parse_event_file(cfg, d, p)?;
        let (table, stages) = normalize_events(cfg, d, table)?;
        let mut summary = DatasetSummary {
            source: "events".into(),
            path: Some(p.display().to_string()),
            dropped_empty_code: Some(dropped),
            mapping: stages,
            ..Default::default()
        };
        let m = aggregate(&table, &vocab_policy(cfg)?, cfg.vocab.min_patients)?;
        let m = apply_cohort(cfg, d, m, &mut summary)?;
        summary.n_rows = m.n_rows();
        summary.n_cols = m.n_cols();
        return Ok((LoadedDataset { matrix: m, summary }, None));
    }

    let baseline = d.baseline.expect("validated");
    let gen = GenerationConfig {
        target_size: d.size.unwrap_or(DEFAULT_TARGET_SIZE),
        seed: derive_seed(cfg.seed, "baseline"),
    };
    let mut summary = DatasetSummary {
        source: format!("baseline:{}", format!("{baseline:?}").to_ascii_lowercase()),
        ..Default::default()
    };
    let start = Instant::now();
    let m = if d.generate_before_mapping {
        let pre = premapped.ok_or_else(|| Error::config("no pre-mapping real data available"))?;
        let generated = baseline.generate(&pre.matrix, &gen)?;
        let elapsed = start.elapsed().as_secs_f64();
        let events = matrix_to_events(&generated, pre.system)?;
        let (events, stages) = normalize_events(cfg, &cfg.real, events)?;
        summary.mapping = stages;
        let m = aggregate(&events, &vocab_policy(cfg)?, cfg.vocab.min_patients)?;
        summary.n_rows = m.n_rows();
        summary.n_cols = m.n_cols();
        return Ok((LoadedDataset { matrix: m, summary }, Some(elapsed)));
    } else {
        baseline.generate(real, &gen)?
    };
    let elapsed = start.elapsed().as_secs_f64();
    summary.n_rows = m.n_rows();
    summary.n_cols = m.n_cols();
    Ok((LoadedDataset { matrix: m, summary }, Some(elapsed)))
}

/// Restricts both matrices to their shared codes (in real-vocabulary order).
pub fn align_vocabularies(
    real: &PhenotypeMatrix,
    syn: &PhenotypeMatrix,
) -> Result<(PhenotypeMatrix, PhenotypeMatrix, VocabularyAlignment)> {
    let (rv, sv) = (real.vocab(), syn.vocab());
    let shared: Vec<String> = rv.codes().iter().filter(|c| sv.index_of(c).is_some()).cloned().collect();
    let alignment = VocabularyAlignment {
        k_real: rv.len(),
        k_syn: sv.len(),
        k_shared: shared.len(),
        dropped_real: rv.codes().iter().filter(|c| sv.index_of(c).is_none()).cloned().collect(),
        dropped_syn: sv.codes().iter().filter(|c| rv.index_of(c).is_none()).cloned().collect(),
    };
    if rv == sv {
        return Ok((real.clone(), syn.clone(), alignment));
    }
    if shared.is_empty() {
        return Err(Error::VocabMismatch("real and synthetic data share no codes".into()));
    }
    let vocab = Vocabulary::new(shared)?;
    Ok((real.reindex_to(&vocab), syn.reindex_to(&vocab), alignment))
}

/// Headline fidelity numbers and the full result.
pub fn fidelity_block(
    real: &PhenotypeMatrix,
    syn: &PhenotypeMatrix,
    cfg: &RunConfig,
) -> Result<(BTreeMap<String, Scalar>, FidelityResult)> {
    let f = &cfg.fidelity;
    let opts = FidelityOptions {
        k_folds: f.k_folds,
        seed: derive_seed(cfg.seed, "fidelity.discriminative"),
        cv: f.cv,
        learner: LogisticLearner {
            l2: f.l2,
            ..LogisticLearner::default()
        },
        discriminative: f.discriminative,
        prevalence_table: f.prevalence_table,
    };
    let res = evaluate_fidelity(real, syn, &opts)?;
    let mut m = BTreeMap::new();
    m.insert("mmd".into(), Scalar::lower(res.mmd));
    m.insert("rmspe".into(), Scalar::lower(res.rmspe_reported));
    m.insert("mape".into(), Scalar::lower(res.mape));
    m.insert("cfd".into(), Scalar::lower(res.cfd));
    m.insert("cofd".into(), Scalar::lower(res.cofd_reported));
    if let Some(d) = &res.discriminative {
        m.insert("disc_auc".into(), Scalar::lower(d.auc));
        m.insert("disc_acc".into(), Scalar::lower(d.acc));
    }
    Ok((m, res))
}

pub fn predictive_options(cfg: &RunConfig, label: &str) -> PredictiveOptions {
    PredictiveOptions {
        split: SplitOptions {
            test_fraction: cfg.utility.test_fraction,
            stratified: cfg.utility.stratified,
        },
        seed: derive_seed(cfg.seed, label),
        learner: LogisticLearner {
            l2: cfg.utility.l2,
            ..LogisticLearner::default()
        },
    }
}

/// Headline utility numbers and the full results. Each analytical task is
/// fitted on both sides so the estimates can be compared.
pub fn utility_block(
    real: &PhenotypeMatrix,
    syn: &PhenotypeMatrix,
    cfg: &RunConfig,
) -> Result<(BTreeMap<String, Scalar>, UtilityDetails)> {
    let u = &cfg.utility;
    let pred = predictive_utility(real, syn, &u.outcome, &predictive_options(cfg, "utility.split"))?;
    let mut m = BTreeMap::new();
    m.insert("auc_trtr".into(), Scalar::higher(pred.trtr.auc));
    m.insert("acc_trtr".into(), Scalar::higher(pred.trtr.acc));
    m.insert("auc_tstr".into(), Scalar::higher(pred.tstr.auc));
    m.insert("acc_tstr".into(), Scalar::higher(pred.tstr.acc));
    m.insert("auc_tsrtr".into(), Scalar::higher(pred.tsrtr.auc));
    m.insert("acc_tsrtr".into(), Scalar::higher(pred.tsrtr.acc));
    m.insert("delta_auc_tstr".into(), Scalar::higher(pred.delta_auc_tstr()));
    m.insert("delta_acc_tstr".into(), Scalar::higher(pred.delta_acc_tstr()));
    m.insert("delta_auc_tsrtr".into(), Scalar::higher(pred.delta_auc_tsrtr()));
    m.insert("delta_acc_tsrtr".into(), Scalar::higher(pred.delta_acc_tsrtr()));

    let analytical = u
        .analytical
        .iter()
        .map(|t| {
            Ok(AnalyticalPair {
                real: analytical_utility(real, &t.outcome, &t.predictor)?,
                synthetic: analytical_utility(syn, &t.outcome, &t.predictor)?,
            })
        })
        .collect::<Result<_>>()?;
    let sweep = if u.sweep > 0 {
        Some(per_code_tstr_sweep(
            real,
            syn,
            u.sweep_codes.as_deref(),
            u.sweep_min_prev,
            u.sweep,
            &predictive_options(cfg, "utility.sweep"),
        )?)
    } else {
        None
    };
    Ok((
        m,
        UtilityDetails {
            predictive: Some(pred),
            analytical,
            sweep,
        },
    ))
}

pub fn privacy_block(
    real: &PhenotypeMatrix,
    syn: &PhenotypeMatrix,
    cfg: &RunConfig,
) -> Result<(BTreeMap<String, Scalar>, PrivacyDetails)> {
    let p = &cfg.privacy;
    let mut m = BTreeMap::new();
    let mir = if p.mir {
        let r = mir_with_bins(real, syn, p.hist_bins)?;
        m.insert("mir_mean".into(), Scalar::higher(r.mean));
        m.insert("mir_median".into(), Scalar::higher(r.median));
        m.insert("mir_exact_match_fraction".into(), Scalar::lower(r.exact_match_fraction));
        Some(r)
    } else {
        None
    };
    let air = if p.air {
        let r = air(
            real,
            syn,
            &AirOptions {
                n_balanced: p.n_balanced,
                n_imbalanced: p.n_imbalanced,
                imbalanced_rule: p.imbalanced_rule,
            },
        )?;
        m.insert("air_f1".into(), Scalar::lower(r.f1_micro));
        Some(r)
    } else {
        None
    };
    Ok((m, PrivacyDetails { mir, air }))
}

/// What had finished when a stage failed; written as `diagnostics.json`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub failed_stage: String,
    pub error: String,
    pub config_hash: String,
    pub completed_stages: Vec<String>,
    pub datasets: BTreeMap<String, DatasetSummary>,
    pub vocabulary: Option<VocabularyAlignment>,
    pub metrics: BTreeMap<String, BTreeMap<String, Scalar>>,
}

#[derive(Default)]
struct Progress {
    diag: Diagnostics,
    timing: BTreeMap<String, f64>,
}

impl Progress {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| {
            self.diag.failed_stage = name.to_string();
            self.diag.error = e.to_string();
            e.in_stage(name)
        })?;
        self.timing.insert(name.to_string(), start.elapsed().as_secs_f64());
        self.diag.completed_stages.push(name.to_string());
        Ok(out)
    }
}

/// Thread pool sized to `workers` (all cores when `None`).
pub fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w);
    }
    b.build().map_err(|e| Error::config(format!("cannot start worker pool: {e}")))
}

/// Ingest, align, score and write. On failure the error names the stage
/// and `diagnostics.json` in the output directory records what finished.
pub fn run_pipeline(cfg: &RunConfig) -> Result<MetricReport> {
    cfg.validate()?;
    let pool = thread_pool(cfg.workers)?;
    let mut progress = Progress::default();
    progress.diag.config_hash = cfg.config_hash();
    let result = pool.install(|| run_stages(cfg, &mut progress));
    if result.is_err() {
        let out = cfg.output_path();
        let text = serde_json::to_string_pretty(&progress.diag).expect("diagnostics serialize");
        if let Err(e) = write_atomic(&out.join("diagnostics.json"), text.as_bytes()) {
            log::error!("could not write diagnostics: {e}");
        }
    }
    result
}

fn run_stages(cfg: &RunConfig, progress: &mut Progress) -> Result<MetricReport> {
    let start = Instant::now();
    let keep_pre = cfg.synthetic.generate_before_mapping;
    let (real, pre) = progress.stage("load_real", || load_real(cfg, keep_pre))?;
    progress.diag.datasets.insert("real".into(), real.summary.clone());
    let (syn, gen_secs) =
        progress.stage("load_synthetic", || load_synthetic(cfg, &real.matrix, pre.as_ref()))?;
    progress.diag.datasets.insert("synthetic".into(), syn.summary.clone());
    let (r, s, alignment) = progress.stage("align", || align_vocabularies(&real.matrix, &syn.matrix))?;
    progress.diag.vocabulary = Some(alignment.clone());

    let mut details = Details::default();
    if cfg.fidelity.enabled {
        let (m, d) = progress.stage("fidelity", || fidelity_block(&r, &s, cfg))?;
        progress.diag.metrics.insert("fidelity".into(), m);
        details.fidelity = Some(d);
    }
    if cfg.utility.enabled {
        let (m, d) = progress.stage("utility", || utility_block(&r, &s, cfg))?;
        progress.diag.metrics.insert("utility".into(), m);
        details.utility = Some(d);
    }
    if cfg.privacy.enabled {
        let (m, d) = progress.stage("privacy", || privacy_block(&r, &s, cfg))?;
        progress.diag.metrics.insert("privacy".into(), m);
        details.privacy = Some(d);
    }

    let mut report = MetricReport {
        tool: ToolInfo::default(),
        method: cfg.method_name(),
        config_hash: cfg.config_hash(),
        seed: cfg.seed,
        datasets: progress.diag.datasets.clone(),
        vocabulary: alignment,
        metrics: progress.diag.metrics.clone(),
        details,
        timing: Timing::default(),
    };
    let out = cfg.output_path();
    progress.stage("write", || {
        write_plot_tables(&report, &out)?;
        Ok(())
    })?;
    report.timing = Timing {
        stages: progress.timing.clone(),
        generation_seconds_per_100: gen_secs.map(|t| t / s.n_rows().max(1) as f64 * 100.0),
        total_seconds: start.elapsed().as_secs_f64(),
    };
    write_report(&report, &out, cfg.format)?;
    Ok(report)
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::data(format!("csv write failed: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::data(format!("csv write failed: {e}")))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Plot-ready CSVs for whatever the report contains. Returns the paths.
pub fn write_plot_tables(report: &MetricReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let p = dir.join(name);
        write_atomic(&p, &bytes)?;
        written.push(p);
        Ok(())
    };
    if let Some(mir) = report.details.privacy.as_ref().and_then(|p| p.mir.as_ref()) {
        let h = &mir.histogram;
        put(
            "mir_histogram.csv",
            csv_bytes(
                &["bin_low", "bin_high", "count"],
                h.counts.iter().enumerate().map(|(i, c)| {
                    vec![h.edges[i].to_string(), h.edges[i + 1].to_string(), c.to_string()]
                }),
            )?,
        )?;
        put(
            "mir_cdf.csv",
            csv_bytes(
                &["distance", "cdf"],
                mir.cdf_points.iter().map(|(d, q)| vec![d.to_string(), q.to_string()]),
            )?,
        )?;
        put(
            "mir_distances.csv",
            csv_bytes(&["distance"], mir.distances.iter().map(|d| vec![d.to_string()]))?,
        )?;
    }
    if let Some(sweep) = report.details.utility.as_ref().and_then(|u| u.sweep.as_ref()) {
        put(
            "tstr_sweep.csv",
            csv_bytes(
                &["code", "prevalence", "auc_tstr", "auc_trtr"],
                sweep.entries.iter().map(|e| {
                    vec![e.code.clone(), e.prevalence.to_string(), opt(e.auc_tstr), opt(e.auc_trtr)]
                }),
            )?,
        )?;
    }
    if let Some(pairs) = report
        .details
        .fidelity
        .as_ref()
        .and_then(|f| f.per_code_prevalence_pairs.as_ref())
    {
        put(
            "prevalence_pairs.csv",
            csv_bytes(
                &["code", "real", "synthetic"],
                pairs.iter().map(|p| vec![p.code.clone(), p.real.to_string(), p.syn.to_string()]),
            )?,
        )?;
    }
    Ok(written)
}

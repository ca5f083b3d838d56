mod common;

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;
use sha2::{Digest, Sha256};
use synthbench::baselines::{Baseline, GenerationConfig};
use synthbench::privacy::mir;
use synthbench::corpus::{PhenotypeMatrix, Vocabulary};
use synthbench::orchestrator::{
    rank_methods, run_pipeline, run_scaling_experiment, validate_report, write_matrix, write_report,
    DatasetSummary, Details, MetricReport, ReportFormat, RunConfig, Scalar, ScalingAxis, ScalingConfig, Timing,
    ToolInfo, VocabularyAlignment,
};

use common::*;

fn config(dir: &Path, real: &PhenotypeMatrix, extra: &str) -> RunConfig {
    RunConfig::from_file(&write_pipeline_fixture(dir, real, extra)).unwrap()
}

#[test]
fn resample_run_is_close_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &pipeline_real(1000, 50, 1), "");
    let rep = run_pipeline(&cfg).unwrap();
    let mmd = rep.metrics["fidelity"]["mmd"].value.unwrap();
    assert!(mmd <= 0.05, "mmd {mmd}");
    let out = dir.path().join("out");
    assert!(validate_report(&out.join("report.json")).unwrap().valid);
    for f in ["mir_histogram.csv", "mir_cdf.csv", "mir_distances.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let on_disk: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(on_disk, serde_json::to_value(&rep).unwrap());
}

fn metric_hash(v: &Value) -> String {
    let mut v = v.clone();
    v.as_object_mut().unwrap().remove("timing");
    hex::encode(Sha256::digest(serde_json::to_vec(&v).unwrap()))
}

#[test]
fn reruns_match_outside_timing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), &pipeline_real(500, 40, 2), "");
    let a = run_pipeline(&cfg).unwrap();
    cfg.workers = Some(2);
    cfg.output_dir = "other".into();
    let b = run_pipeline(&cfg).unwrap();
    assert_eq!(
        serde_json::to_string(&a.without_timing()).unwrap(),
        serde_json::to_string(&b.without_timing()).unwrap()
    );
    // Changing only the timing block leaves the metric hash unchanged.
    let mut c = a.clone();
    c.timing.total_seconds += 100.0;
    assert_eq!(
        metric_hash(&serde_json::to_value(&a).unwrap()),
        metric_hash(&serde_json::to_value(&c).unwrap())
    );
}

#[test]
fn disabled_privacy_is_omitted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &pipeline_real(300, 30, 3), "[privacy]\nenabled = false");
    let rep = run_pipeline(&cfg).unwrap();
    assert!(!rep.metrics.contains_key("privacy"));
    let v = serde_json::to_value(&rep).unwrap();
    assert!(v["details"].get("privacy").is_none());
    let check = validate_report(&dir.path().join("out/report.json")).unwrap();
    assert!(check.valid, "{:?}", check.errors);
}

#[test]
fn corrupted_report_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &pipeline_real(300, 30, 4), "");
    run_pipeline(&cfg).unwrap();
    let path = dir.path().join("out/report.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    v["metrics"]["fidelity"]["mmd"]["value"] = Value::String("small".into());
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();
    let check = validate_report(&bad).unwrap();
    assert!(!check.valid);
    assert!(
        check.errors.iter().any(|e| e.starts_with("$.metrics.fidelity.mmd")),
        "{:?}",
        check.errors
    );
}

fn count_leaves(v: &Value) -> usize {
    match v {
        Value::Object(m) => m.values().map(count_leaves).sum(),
        Value::Array(a) => a.iter().map(count_leaves).sum(),
        _ => 1,
    }
}

#[test]
fn csv_has_one_column_per_leaf() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), &pipeline_real(300, 30, 5), "format = \"csv\"");
    let rep = run_pipeline(&cfg).unwrap();
    let csv_path = dir.path().join("out/report.csv");
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().unwrap().clone();
    assert_eq!(header.len(), count_leaves(&serde_json::to_value(&rep).unwrap()));
    assert!(header.iter().any(|h| h == "metrics.fidelity.mmd.value"));
    assert!(validate_report(&csv_path).unwrap().valid);
}

#[test]
fn vocabularies_are_intersected() {
    let dir = tempfile::tempdir().unwrap();
    let real = pipeline_real(400, 30, 6);
    let mut names: Vec<String> = real.vocab().codes().to_vec();
    names.truncate(27);
    names.extend(["X1".to_string(), "X2".to_string()]);
    let syn = latent_class(400, 29, 7);
    let syn = PhenotypeMatrix::new(Vocabulary::new(names).unwrap(), syn.rows().to_vec(), None).unwrap();
    write_matrix(&syn, &dir.path().join("syn.txt")).unwrap();
    write_matrix(&real, &dir.path().join("real.txt")).unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "output_dir = \"out\"\n[real]\nmatrix = \"real.txt\"\n[synthetic]\nmatrix = \"syn.txt\"\n",
    )
    .unwrap();
    let cfg = RunConfig::from_file(&dir.path().join("run.toml")).unwrap();
    let rep = run_pipeline(&cfg).unwrap();
    let v = &rep.vocabulary;
    assert_eq!((v.k_real, v.k_syn, v.k_shared), (30, 29, 27));
    assert_eq!(v.k_shared + v.dropped_real.len(), v.k_real);
    assert_eq!(v.dropped_syn, vec!["X1", "X2"]);
    assert_eq!(rep.method, "syn");
}

#[test]
fn failed_stage_leaves_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    // no CV_401 column, so the utility stage has no outcome
    let cfg = config(dir.path(), &latent_class(200, 25, 8), "");
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(err.to_string().contains("utility"), "{err}");
    let diag: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["failed_stage"], "utility");
    assert_eq!(diag["completed_stages"][3], "fidelity");
    assert!(diag["metrics"]["fidelity"]["mmd"]["value"].is_number());
}

#[test]
fn hand_written_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let rep = report("a", &[("privacy.air_f1", 0.5, false)]);
    let paths = write_report(&rep, dir.path(), ReportFormat::Csv).unwrap();
    assert_eq!(paths.len(), 2);
    for p in paths {
        let check = validate_report(&p).unwrap();
        assert!(check.valid, "{}: {:?}", p.display(), check.errors);
    }
}

// ---- ranking ----------------------------------------------------------

fn report(method: &str, metrics: &[(&str, f64, bool)]) -> MetricReport {
    let mut m: BTreeMap<String, BTreeMap<String, Scalar>> = BTreeMap::new();
    for &(path, value, higher) in metrics {
        let (fam, name) = path.split_once('.').unwrap();
        let s = if higher { Scalar::higher(value) } else { Scalar::lower(value) };
        m.entry(fam.into()).or_default().insert(name.into(), s);
    }
    MetricReport {
        tool: ToolInfo::default(),
        method: method.into(),
        config_hash: "0".repeat(64),
        seed: 0,
        datasets: ["real", "synthetic"]
            .into_iter()
            .map(|k| (k.to_string(), DatasetSummary::default()))
            .collect(),
        vocabulary: VocabularyAlignment {
            k_real: 10,
            k_syn: 10,
            k_shared: 10,
            ..Default::default()
        },
        metrics: m,
        details: Details::default(),
        timing: Timing::default(),
    }
}

fn weights(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, w)| (k.to_string(), *w)).collect()
}

#[test]
fn dominating_method_ranks_first() {
    let a = report("zeta", &[("fidelity.mmd", 0.01, false), ("utility.auc_tstr", 0.8, true)]);
    let b = report("alpha", &[("fidelity.mmd", 0.05, false), ("utility.auc_tstr", 0.7, true)]);
    for w in [vec![], vec![("fidelity.mmd", 1.0)], vec![("fidelity.mmd", 0.1), ("utility.auc_tstr", 3.0)]] {
        let r = rank_methods(&[b.clone(), a.clone()], &weights(&w)).unwrap();
        assert_eq!(r.methods[0].method, "zeta");
        assert_eq!(r.methods[0].score, 1.0);
    }
}

#[test]
fn lower_is_better_is_honoured() {
    let a = report("A", &[("privacy.air_f1", 0.5, false), ("privacy.mir_mean", 1.0, true)]);
    let b = report("B", &[("privacy.air_f1", 0.7, false), ("privacy.mir_mean", 3.0, true)]);
    let r = rank_methods(&[b, a], &weights(&[("privacy.air_f1", 1.0)])).unwrap();
    assert_eq!(r.methods[0].method, "A");
    assert_eq!(r.methods[1].ranks["privacy.air_f1"], 2.0);
}

#[test]
fn equal_reports_tie_alphabetically() {
    let m = [("fidelity.mmd", 0.02, false)];
    let r = rank_methods(&[report("b", &m), report("c", &m), report("a", &m)], &BTreeMap::new()).unwrap();
    let order: Vec<&str> = r.methods.iter().map(|m| m.method.as_str()).collect();
    assert_eq!(order, ["a", "b", "c"]);
    assert!(r.methods.iter().all(|m| m.score == 2.0));
}

#[test]
fn ranking_rejects_bad_input() {
    let a = report("a", &[("fidelity.mmd", 0.01, false), ("fidelity.cfd", 1.0, false)]);
    let b = report("b", &[("fidelity.mmd", 0.02, false)]);
    let err = rank_methods(&[a.clone(), b], &BTreeMap::new()).unwrap_err();
    assert!(err.to_string().contains("b: fidelity.cfd"), "{err}");
    assert!(rank_methods(&[a.clone()], &weights(&[("fidelity.mmd", 0.0)])).unwrap_err().is_config());
    assert!(rank_methods(&[a.clone()], &weights(&[("nope.x", 1.0)])).unwrap_err().is_config());
    let flipped = report("c", &[("fidelity.mmd", 0.01, true), ("fidelity.cfd", 1.0, false)]);
    assert!(rank_methods(&[a, flipped], &BTreeMap::new()).is_err());
}

#[test]
fn null_metric_ranks_last() {
    let mut a = report("a", &[("utility.auc_tstr", 0.0, true)]);
    a.metrics.get_mut("utility").unwrap().get_mut("auc_tstr").unwrap().value = None;
    let b = report("b", &[("utility.auc_tstr", 0.1, true)]);
    let r = rank_methods(&[a, b], &BTreeMap::new()).unwrap();
    assert_eq!(r.methods[0].method, "b");
}

// ---- scaling ----------------------------------------------------------

fn scaling_cfg(dir: &Path, real: &PhenotypeMatrix, sc: ScalingConfig) -> RunConfig {
    let mut cfg = config(dir, real, "");
    cfg.utility.enabled = false;
    cfg.scaling = Some(sc);
    cfg
}

#[test]
fn resample_mmd_shrinks_with_m() {
    let dir = tempfile::tempdir().unwrap();
    let real = latent_class(1000, 40, 9);
    let cfg = scaling_cfg(
        dir.path(),
        &real,
        ScalingConfig {
            grid: Some(vec![100, 1000, 10_000]),
            replicates: 5,
            ..ScalingConfig::default()
        },
    );
    let t = run_scaling_experiment(&cfg).unwrap();
    assert_eq!(t.rows.len(), 3);
    let mmd: Vec<f64> = t.rows.iter().map(|r| r.mmd.mean.unwrap()).collect();
    assert!(mmd[0] > mmd[2], "{mmd:?}");
    assert!(t.rows.iter().all(|r| r.replicates.len() == 5 && r.mmd.sd.is_some()));
    t.write(dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

/// PBR rows carry no link between known and hidden codes, so AIR F1 is flat
/// in M in expectation; what must hold exactly is that a larger synthetic
/// pool never moves a record's nearest neighbour further away.
#[test]
fn pbr_air_does_not_fall_with_m() {
    let dir = tempfile::tempdir().unwrap();
    let real = latent_class(500, 40, 10);
    let cfg = scaling_cfg(
        dir.path(),
        &real,
        ScalingConfig {
            grid: Some(vec![50, 500, 2000]),
            replicates: 20,
            baseline: Baseline::Pbr,
            ..ScalingConfig::default()
        },
    );
    let t = run_scaling_experiment(&cfg).unwrap();
    let (lo, hi) = (&t.rows[0].air_f1, &t.rows[2].air_f1);
    // three standard errors of the difference in means
    let se = ((lo.sd.unwrap().powi(2) + hi.sd.unwrap().powi(2)) / 20.0).sqrt();
    assert!(hi.mean.unwrap() >= lo.mean.unwrap() - 3.0 * se, "{lo:?} {hi:?}");

    // PBR draws each column from its own stream, so a smaller sample is a
    // prefix of a larger one with the same seed.
    let gen = |m| {
        Baseline::Pbr
            .generate(&real, &GenerationConfig { target_size: m, seed: 3 })
            .unwrap()
    };
    let (small, large) = (gen(50), gen(2000));
    assert_eq!(small.rows(), &large.rows()[..50]);
    let (ds, dl) = (mir(&real, &small).unwrap().distances, mir(&real, &large).unwrap().distances);
    assert!(ds.iter().zip(&dl).all(|(s, l)| l <= s));
}

#[test]
fn single_point_single_replicate() {
    let dir = tempfile::tempdir().unwrap();
    let real = latent_class(300, 30, 11);
    let cfg = scaling_cfg(
        dir.path(),
        &real,
        ScalingConfig {
            axis: ScalingAxis::TrainSize,
            grid: Some(vec![200]),
            replicates: 1,
            synth_size: 300,
            ..ScalingConfig::default()
        },
    );
    let t = run_scaling_experiment(&cfg).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.rows[0].point, 200);
    assert_eq!(t.rows[0].mmd.sd, None);
    let again = run_scaling_experiment(&cfg).unwrap();
    assert_eq!(t, again);
}

#[test]
fn train_size_beyond_real_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let real = latent_class(100, 30, 12);
    let cfg = scaling_cfg(
        dir.path(),
        &real,
        ScalingConfig {
            axis: ScalingAxis::TrainSize,
            grid: Some(vec![50, 101]),
            replicates: 1,
            ..ScalingConfig::default()
        },
    );
    let err = run_scaling_experiment(&cfg).unwrap_err();
    assert!(err.to_string().contains("101"), "{err}");
}

#[test]
fn external_matrices_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let real = latent_class(300, 30, 13);
    let mut external = BTreeMap::new();
    for (m, seed) in [(100usize, 1u64), (400, 2)] {
        let files: Vec<_> = (0..2)
            .map(|rep| {
                let name = format!("ext_{m}_{rep}.txt");
                write_matrix(&latent_class(m, 30, seed * 10 + rep), &dir.path().join(&name)).unwrap();
                std::path::PathBuf::from(name)
            })
            .collect();
        external.insert(m.to_string(), files);
    }
    let mut cfg = scaling_cfg(
        dir.path(),
        &real,
        ScalingConfig {
            grid: Some(vec![100, 400]),
            external,
            ..ScalingConfig::default()
        },
    );
    cfg.method = Some("mygen".into());
    let t = run_scaling_experiment(&cfg).unwrap();
    assert_eq!(t.method, "mygen");
    assert!(t.rows.iter().all(|r| r.replicates.len() == 2));
}

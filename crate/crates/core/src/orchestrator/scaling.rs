use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, ScalingAxis, ScalingConfig};
use super::pipeline::{load_real, predictive_options, read_matrix, thread_pool};
use super::report::write_atomic;
use crate::baselines::GenerationConfig;
use crate::corpus::PhenotypeMatrix;
use crate::error::{Error, Result};
use crate::fidelity::mmd_max;
use crate::privacy::{air, AirOptions};
use crate::seed::derive_seed;
use crate::utility::tstr_only;

/// Mean and sample standard deviation over the replicates that produced a
/// value; `sd` needs at least two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[Option<f64>]) -> Summary {
        let v: Vec<f64> = values.iter().flatten().copied().collect();
        let n = v.len();
        if n == 0 {
            return Summary { mean: None, sd: None, n };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let sd = (n >= 2).then(|| {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        Summary { mean: Some(mean), sd, n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub mmd: f64,
    pub tstr_auc: Option<f64>,
    pub air_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub point: usize,
    pub replicates: Vec<Replicate>,
    pub mmd: Summary,
    pub tstr_auc: Summary,
    pub air_f1: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub axis: ScalingAxis,
    pub method: String,
    pub config_hash: String,
    pub rows: Vec<ScalingRow>,
}

impl ScalingTable {
    /// `point,n,mmd_mean,mmd_sd,...` with one line per grid point.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::data(format!("csv write failed: {e}"));
        w.write_record([
            "point", "replicates", "mmd_mean", "mmd_sd", "tstr_auc_mean", "tstr_auc_sd",
            "air_f1_mean", "air_f1_sd",
        ])
        .map_err(err)?;
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.point.to_string(),
                r.replicates.len().to_string(),
                f(r.mmd.mean),
                f(r.mmd.sd),
                f(r.tstr_auc.mean),
                f(r.tstr_auc.sd),
                f(r.air_f1.mean),
                f(r.air_f1.sd),
            ])
            .map_err(err)?;
        }
        w.into_inner().map_err(|e| Error::data(format!("csv write failed: {e}")))
    }

    /// Writes `scaling.json` and `scaling.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self).expect("table serializes");
        json.push('\n');
        write_atomic(&dir.join("scaling.json"), json.as_bytes())?;
        write_atomic(&dir.join("scaling.csv"), &self.to_csv()?)
    }
}

fn axis_label(axis: ScalingAxis) -> &'static str {
    match axis {
        ScalingAxis::SynthSize => "m",
        ScalingAxis::TrainSize => "n",
    }
}

/// Scores one synthetic matrix. Fidelity and utility compare against
/// `population`; attribute inference targets `training`, the records the
/// generator saw.
fn score(
    cfg: &RunConfig,
    population: &PhenotypeMatrix,
    training: &PhenotypeMatrix,
    syn: &PhenotypeMatrix,
) -> Result<Replicate> {
    let mmd = mmd_max(population, syn)?;
    let tstr = if cfg.utility.enabled {
        tstr_only(population, syn, &cfg.utility.outcome, &predictive_options(cfg, "utility.split"))?.auc
    } else {
        None
    };
    let air_f1 = if cfg.privacy.enabled && cfg.privacy.air {
        let opts = AirOptions {
            n_balanced: cfg.privacy.n_balanced,
            n_imbalanced: cfg.privacy.n_imbalanced,
            imbalanced_rule: cfg.privacy.imbalanced_rule,
        };
        Some(air(training, syn, &opts)?.f1_micro)
    } else {
        None
    };
    Ok(Replicate {
        mmd,
        tstr_auc: tstr,
        air_f1,
    })
}

/// Sweeps the synthetic size M or the training size N and reports mean and
/// standard deviation of MMD, TSTR AUC and AIR F1 per grid point.
///
/// Built-in baselines are regenerated for every replicate from a derived
/// seed. Along the N axis each replicate fits the baseline to a fresh
/// random subset of N real rows. External methods supply one matrix file
/// per replicate and grid point instead.
pub fn run_scaling_experiment(cfg: &RunConfig) -> Result<ScalingTable> {
    cfg.validate()?;
    let sc = cfg
        .scaling
        .clone()
        .ok_or_else(|| Error::config("config has no [scaling] section"))?;
    let pool = thread_pool(cfg.workers)?;
    pool.install(|| {
        let (real, _) = load_real(cfg, false).map_err(|e| e.in_stage("load_real"))?;
        run_grid(cfg, &sc, &real.matrix).map_err(|e| e.in_stage("scaling"))
    })
}

fn run_grid(cfg: &RunConfig, sc: &ScalingConfig, real: &PhenotypeMatrix) -> Result<ScalingTable> {
    let grid = sc.grid_values();
    if grid.iter().any(|&g| g == 0) {
        return Err(Error::config("grid values must be positive"));
    }
    if sc.axis == ScalingAxis::TrainSize {
        if let Some(&too_big) = grid.iter().find(|&&n| n > real.n_rows()) {
            return Err(Error::data(format!(
                "training size {too_big} exceeds the {} real rows",
                real.n_rows()
            )));
        }
    }
    let external = !sc.external.is_empty();
    let mut jobs = Vec::new();
    for &point in &grid {
        let reps = if external {
            let files = sc.external.get(&point.to_string()).ok_or_else(|| {
                Error::config(format!("no external matrices listed for grid point {point}"))
            })?;
            if files.is_empty() {
                return Err(Error::config(format!("grid point {point} lists no files")));
            }
            files.len()
        } else {
            sc.replicates
        };
        for rep in 0..reps {
            jobs.push((point, rep));
        }
    }

    let results: Vec<Replicate> = jobs
        .par_iter()
        .map(|&(point, rep)| {
            let label = format!("scaling/{}/{point}/{rep}", axis_label(sc.axis));
            let training = match sc.axis {
                ScalingAxis::SynthSize => real.clone(),
                ScalingAxis::TrainSize => {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("{label}/subset")));
                    let mut idx = sample(&mut rng, real.n_rows(), point).into_vec();
                    idx.sort_unstable();
                    real.subset(&idx)
                }
            };
            let syn = if external {
                let path = &sc.external[&point.to_string()][rep];
                read_matrix(&cfg.resolve(path))?.reindex_to(real.vocab())
            } else {
                let m = match sc.axis {
                    ScalingAxis::SynthSize => point,
                    ScalingAxis::TrainSize => sc.synth_size,
                };
                sc.baseline.generate(
                    &training,
                    &GenerationConfig {
                        target_size: m,
                        seed: derive_seed(cfg.seed, &label),
                    },
                )?
            };
            score(cfg, real, &training, &syn)
        })
        .collect::<Result<_>>()?;

    let mut rows: Vec<ScalingRow> = Vec::new();
    for ((point, _), rep) in jobs.iter().zip(results) {
        match rows.last_mut() {
            Some(r) if r.point == *point => r.replicates.push(rep),
            _ => rows.push(ScalingRow {
                point: *point,
                replicates: vec![rep],
                mmd: Summary::of(&[]),
                tstr_auc: Summary::of(&[]),
                air_f1: Summary::of(&[]),
            }),
        }
    }
    for r in &mut rows {
        r.mmd = Summary::of(&r.replicates.iter().map(|x| Some(x.mmd)).collect::<Vec<_>>());
        r.tstr_auc = Summary::of(&r.replicates.iter().map(|x| x.tstr_auc).collect::<Vec<_>>());
        r.air_f1 = Summary::of(&r.replicates.iter().map(|x| x.air_f1).collect::<Vec<_>>());
    }
    Ok(ScalingTable {
        axis: sc.axis,
        method: if external {
            cfg.method.clone().unwrap_or_else(|| "external".into())
        } else {
            format!("{:?}", sc.baseline).to_ascii_lowercase()
        },
        config_hash: cfg.config_hash(),
        rows,
    })
}

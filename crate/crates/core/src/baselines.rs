//! Reference generators: independent per-code Bernoulli draws at observed
//! prevalence (PBR) and a bootstrap of real rows (Resample).
//!
//! Both use ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`, with one stream per column (PBR) or per block of
//! [`RESAMPLE_BLOCK`] rows (Resample). Output therefore does not depend on
//! the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{PhenotypeMatrix, Vocabulary};
use crate::error::{Error, Result};

/// Rows per independent RNG stream when resampling.
pub const RESAMPLE_BLOCK: usize = 4096;

/// Default synthetic size for quantitative runs.
pub const DEFAULT_TARGET_SIZE: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub target_size: usize,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            target_size: DEFAULT_TARGET_SIZE,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Pbr,
    Resample,
}

impl std::str::FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pbr" => Ok(Baseline::Pbr),
            "resample" => Ok(Baseline::Resample),
            other => Err(Error::config(format!("unknown baseline {other:?}"))),
        }
    }
}

impl Baseline {
    pub fn generate(self, real: &PhenotypeMatrix, cfg: &GenerationConfig) -> Result<PhenotypeMatrix> {
        match self {
            Baseline::Pbr => generate_pbr(&real.prevalence()?, real.vocab(), cfg),
            Baseline::Resample => generate_resample(real, cfg),
        }
    }
}

fn synthetic_ids(m: usize) -> Vec<String> {
    (0..m).map(|i| format!("syn{i}")).collect()
}

/// Prevalence-based random data: cell (i, k) ~ Bernoulli(prev[k]), all independent.
pub fn generate_pbr(
    prev: &[f64],
    vocab: &Vocabulary,
    cfg: &GenerationConfig,
) -> Result<PhenotypeMatrix> {
    if cfg.target_size == 0 {
        return Err(Error::config("target size must be at least 1"));
    }
    if prev.len() != vocab.len() {
        return Err(Error::VocabMismatch(format!(
            "{} prevalences for {} codes",
            prev.len(),
            vocab.len()
        )));
    }
    if let Some(p) = prev.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::data(format!("prevalence {p} outside [0, 1]")));
    }
    let m = cfg.target_size;
    let hits: Vec<Vec<u32>> = prev
        .par_iter()
        .enumerate()
        .map(|(k, &p)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            (0..m as u32).filter(|_| rng.gen::<f64>() < p).collect()
        })
        .collect();
    let mut rows = vec![Vec::new(); m];
    for (k, col) in hits.iter().enumerate() {
        for &i in col {
            rows[i as usize].push(k as u32);
        }
    }
    PhenotypeMatrix::new(vocab.clone(), rows, Some(synthetic_ids(m)))
}

/// Bootstrap: `target_size` rows drawn uniformly with replacement from `real`.
pub fn generate_resample(real: &PhenotypeMatrix, cfg: &GenerationConfig) -> Result<PhenotypeMatrix> {
    if real.n_rows() == 0 {
        return Err(Error::Undefined("cannot resample an empty matrix".into()));
    }
    if cfg.target_size == 0 {
        return Err(Error::config("target size must be at least 1"));
    }
    let indices = resample_indices(real.n_rows(), cfg);
    let rows = indices.iter().map(|&i| real.row(i).to_vec()).collect();
    PhenotypeMatrix::new(real.vocab().clone(), rows, Some(synthetic_ids(cfg.target_size)))
}

/// Source row index of every resampled row.
pub fn resample_indices(n: usize, cfg: &GenerationConfig) -> Vec<usize> {
    let m = cfg.target_size;
    let blocks = m.div_ceil(RESAMPLE_BLOCK);
    (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let len = RESAMPLE_BLOCK.min(m - b * RESAMPLE_BLOCK);
            (0..len).map(move |_| rng.gen_range(0..n)).collect::<Vec<_>>()
        })
        .collect()
}

//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synthbench::corpus::{PhenotypeMatrix, Vocabulary};
use synthbench::orchestrator::write_matrix;

pub fn codes(k: usize) -> Vocabulary {
    Vocabulary::new((0..k).map(|j| format!("C{j:03}")).collect()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn from_dense(dense: &[Vec<u8>], k: usize) -> PhenotypeMatrix {
    PhenotypeMatrix::from_dense(codes(k), dense).unwrap()
}

/// Independent Bernoulli columns with the given probabilities.
pub fn independent(n: usize, probs: &[f64], seed: u64) -> PhenotypeMatrix {
    let mut r = rng(seed);
    let dense: Vec<Vec<u8>> = (0..n)
        .map(|_| probs.iter().map(|&p| r.gen_bool(p) as u8).collect())
        .collect();
    from_dense(&dense, probs.len())
}

/// Power-law marginals, p_j = 0.4 (1 + j)^-0.8 + 0.005, with a hidden
/// binary class z ~ Bern(0.3) that inflates every code (x1.8, capped at
/// 0.95) when z = 1 and deflates it (x0.65) otherwise. Gives correlated
/// codes without any exact structure.
pub fn latent_class(n: usize, k: usize, seed: u64) -> PhenotypeMatrix {
    let p: Vec<f64> = (0..k).map(|j| 0.4 * (1.0 + j as f64).powf(-0.8) + 0.005).collect();
    let mut r = rng(seed);
    let dense: Vec<Vec<u8>> = (0..n)
        .map(|_| {
            let z = r.gen_bool(0.3);
            p.iter()
                .map(|&pj| {
                    let q = if z { (pj * 1.8).min(0.95) } else { pj * 0.65 };
                    r.gen_bool(q) as u8
                })
                .collect()
        })
        .collect();
    from_dense(&dense, k)
}

/// Columns 0 and 1 are Bern(0.5) with P(both) = 0.375, which makes their
/// correlation 0.5; the other `k - 2` columns are independent Bern(0.3).
pub fn correlated_pair(n: usize, k: usize, seed: u64) -> PhenotypeMatrix {
    let mut r = rng(seed);
    let dense: Vec<Vec<u8>> = (0..n)
        .map(|_| {
            let u: f64 = r.gen();
            // (1,1) 0.375, (1,0) 0.125, (0,1) 0.125, (0,0) 0.375
            let (a, b) = if u < 0.375 {
                (1, 1)
            } else if u < 0.5 {
                (1, 0)
            } else if u < 0.625 {
                (0, 1)
            } else {
                (0, 0)
            };
            let mut row = vec![a, b];
            row.extend((2..k).map(|_| r.gen_bool(0.3) as u8));
            row
        })
        .collect();
    from_dense(&dense, k)
}

/// A small pipeline fixture: latent-class data whose first column is
/// renamed to the default outcome code.
pub fn pipeline_real(n: usize, k: usize, seed: u64) -> PhenotypeMatrix {
    let m = latent_class(n, k, seed);
    let mut names: Vec<String> = m.vocab().codes().to_vec();
    names[0] = "CV_401".into();
    PhenotypeMatrix::new(Vocabulary::new(names).unwrap(), m.rows().to_vec(), None).unwrap()
}

/// Writes `real.txt` and a config pointing at it; returns the config path.
/// `extra` goes before the `[real]` table, so it may hold top-level keys
/// or whole tables.
pub fn write_pipeline_fixture(dir: &Path, real: &PhenotypeMatrix, extra: &str) -> std::path::PathBuf {
    write_matrix(real, &dir.join("real.txt")).unwrap();
    let cfg = format!(
        r#"seed = 11
output_dir = "out"
{extra}
[real]
matrix = "real.txt"
[synthetic]
baseline = "resample"
size = {n}
"#,
        n = real.n_rows()
    );
    let path = dir.join("run.toml");
    std::fs::write(&path, cfg).unwrap();
    path
}

/// True when no two rows agree on every column outside `hidden`.
pub fn known_projections_unique(m: &PhenotypeMatrix, hidden: &[usize]) -> bool {
    let mut seen = std::collections::HashSet::new();
    m.rows().iter().all(|row| {
        let proj: Vec<u32> = row.iter().copied().filter(|c| !hidden.contains(&(*c as usize))).collect();
        seen.insert(proj)
    })
}

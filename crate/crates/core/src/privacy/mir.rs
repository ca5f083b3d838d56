use serde::{Deserialize, Serialize};

use super::nn::NearestNeighbour;
use crate::corpus::PhenotypeMatrix;
use crate::error::{Error, Result};
use crate::fidelity::check_shared_vocab;

pub const DEFAULT_HIST_BINS: usize = 50;

/// Equal-width bins over `[0, max]`; the last bin is closed on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn build(values: &[f64], bins: usize) -> Histogram {
        let max = values.iter().copied().fold(0.0, f64::max);
        let width = max / bins as f64;
        let edges = (0..=bins).map(|b| b as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            let b = if width > 0.0 {
                ((v / width) as usize).min(bins - 1)
            } else {
                0
            };
            counts[b] += 1;
        }
        Histogram { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirResult {
    pub mean: f64,
    pub median: f64,
    pub exact_match_fraction: f64,
    /// Real rows without any code, left out of every statistic.
    pub n_excluded: usize,
    pub n_evaluated: usize,
    pub histogram: Histogram,
    /// `(distance, fraction of distances <= distance)` at each distinct distance.
    pub cdf_points: Vec<(f64, f64)>,
    /// Per evaluated real row, in row order. Kept out of JSON reports;
    /// the pipeline writes it to its own CSV.
    #[serde(skip)]
    pub distances: Vec<f64>,
}

pub fn mir(real: &PhenotypeMatrix, syn: &PhenotypeMatrix) -> Result<MirResult> {
    mir_with_bins(real, syn, DEFAULT_HIST_BINS)
}

/// Euclidean distance from each non-empty real row to its closest synthetic
/// row. On 0/1 vectors that is the square root of the Hamming distance.
pub fn mir_with_bins(real: &PhenotypeMatrix, syn: &PhenotypeMatrix, bins: usize) -> Result<MirResult> {
    check_shared_vocab(real, syn)?;
    if syn.n_rows() == 0 {
        return Err(Error::data("membership inference needs a non-empty synthetic set"));
    }
    if bins == 0 {
        return Err(Error::config("histogram needs at least one bin"));
    }
    let queries: Vec<Vec<u32>> = real.rows().iter().filter(|r| !r.is_empty()).cloned().collect();
    if queries.is_empty() {
        return Err(Error::Undefined("every real row is empty".into()));
    }
    let nn = NearestNeighbour::new(syn.rows(), syn.n_cols(), None);
    let hamming: Vec<u32> = nn.query_all(&queries).into_iter().map(|(_, d)| d).collect();
    let distances: Vec<f64> = hamming.iter().map(|&h| (h as f64).sqrt()).collect();

    let n = distances.len();
    let mut sorted = hamming.clone();
    sorted.sort_unstable();
    let sq = |h: u32| (h as f64).sqrt();
    let median = if n % 2 == 1 {
        sq(sorted[n / 2])
    } else {
        (sq(sorted[n / 2 - 1]) + sq(sorted[n / 2])) / 2.0
    };
    let mut cdf_points = Vec::new();
    for (i, &h) in sorted.iter().enumerate() {
        if i + 1 == n || sorted[i + 1] != h {
            cdf_points.push((sq(h), (i + 1) as f64 / n as f64));
        }
    }
    Ok(MirResult {
        mean: distances.iter().sum::<f64>() / n as f64,
        median,
        exact_match_fraction: hamming.iter().filter(|&&h| h == 0).count() as f64 / n as f64,
        n_excluded: real.n_rows() - n,
        n_evaluated: n,
        histogram: Histogram::build(&distances, bins),
        cdf_points,
        distances,
    })
}

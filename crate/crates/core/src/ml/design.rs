use crate::corpus::PhenotypeMatrix;
use crate::error::{Error, Result};

/// Binary feature matrix: each row lists the features equal to 1, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDesign {
    n_features: usize,
    rows: Vec<Vec<u32>>,
}

impl BinaryDesign {
    pub fn new(n_features: usize, mut rows: Vec<Vec<u32>>) -> Result<Self> {
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            if row.last().is_some_and(|&j| j as usize >= n_features) {
                return Err(Error::data(format!(
                    "feature index out of range for {n_features} features"
                )));
            }
        }
        Ok(BinaryDesign { n_features, rows })
    }

    pub fn from_dense(dense: &[Vec<u8>]) -> Result<Self> {
        let p = dense.first().map_or(0, Vec::len);
        if dense.iter().any(|r| r.len() != p) {
            return Err(Error::data("ragged dense design"));
        }
        let rows = dense
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(j, _)| j as u32)
                    .collect()
            })
            .collect();
        BinaryDesign::new(p, rows)
    }

    /// All matrix columns except `exclude`, keeping column order.
    pub fn from_matrix(matrix: &PhenotypeMatrix, exclude: &[usize]) -> BinaryDesign {
        let mut remap = vec![0u32; matrix.n_cols()];
        let mut next = 0u32;
        for (k, slot) in remap.iter_mut().enumerate() {
            if exclude.contains(&k) {
                *slot = u32::MAX;
            } else {
                *slot = next;
                next += 1;
            }
        }
        let rows = matrix
            .rows()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&k| remap[k as usize])
                    .filter(|&j| j != u32::MAX)
                    .collect()
            })
            .collect();
        BinaryDesign {
            n_features: next as usize,
            rows,
        }
    }

    /// Intercept-only design with `n` rows.
    pub fn empty(n: usize) -> Self {
        BinaryDesign {
            n_features: 0,
            rows: vec![Vec::new(); n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn subset(&self, indices: &[usize]) -> BinaryDesign {
        BinaryDesign {
            n_features: self.n_features,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn stack(&self, other: &BinaryDesign) -> Result<BinaryDesign> {
        if self.n_features != other.n_features {
            return Err(Error::data("cannot stack designs with different widths"));
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(BinaryDesign {
            n_features: self.n_features,
            rows,
        })
    }
}

use rayon::prelude::*;

/// Exact nearest-neighbour search over binary rows in Hamming distance.
///
/// Candidate rows are held as an inverted index (column → rows containing
/// it), so a query costs one pass over the postings of its codes plus one
/// pass over the candidates. Only the columns flagged in the mask take part.
/// Ties go to the lowest candidate index.
#[derive(Debug, Clone)]
pub struct NearestNeighbour {
    postings: Vec<Vec<u32>>,
    sizes: Vec<u32>,
    mask: Vec<bool>,
}

impl NearestNeighbour {
    pub fn new(rows: &[Vec<u32>], n_cols: usize, mask: Option<&[bool]>) -> Self {
        let mask = mask.map_or_else(|| vec![true; n_cols], <[bool]>::to_vec);
        let mut postings = vec![Vec::new(); n_cols];
        let mut sizes = vec![0u32; rows.len()];
        for (j, row) in rows.iter().enumerate() {
            for &k in row.iter().filter(|&&k| mask[k as usize]) {
                postings[k as usize].push(j as u32);
                sizes[j] += 1;
            }
        }
        NearestNeighbour {
            postings,
            sizes,
            mask,
        }
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// `(index, hamming distance)` of the closest candidate; `overlap` is
    /// scratch space of length `self.len()`, zeroed on entry and exit.
    fn query_with(&self, row: &[u32], overlap: &mut [u32]) -> (usize, u32) {
        let mut own = 0u32;
        for &k in row.iter().filter(|&&k| self.mask[k as usize]) {
            own += 1;
            for &j in &self.postings[k as usize] {
                overlap[j as usize] += 1;
            }
        }
        let mut best = (0usize, u32::MAX);
        for (j, (o, &s)) in overlap.iter_mut().zip(&self.sizes).enumerate() {
            let d = own + s - 2 * *o;
            *o = 0;
            if d < best.1 {
                best = (j, d);
            }
        }
        best
    }

    pub fn query(&self, row: &[u32]) -> (usize, u32) {
        assert!(!self.is_empty(), "nearest neighbour over an empty set");
        self.query_with(row, &mut vec![0; self.len()])
    }

    /// Queries every row in parallel; results keep the input order.
    pub fn query_all(&self, rows: &[Vec<u32>]) -> Vec<(usize, u32)> {
        assert!(!self.is_empty(), "nearest neighbour over an empty set");
        rows.par_iter()
            .map_init(|| vec![0u32; self.len()], |buf, r| self.query_with(r, buf))
            .collect()
    }
}

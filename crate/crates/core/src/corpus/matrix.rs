use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered, duplicate-free list of codes; position is the column index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    codes: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(codes: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(codes.len());
        for (i, code) in codes.iter().enumerate() {
            if code.is_empty() || code.chars().any(char::is_whitespace) {
                return Err(Error::data(format!(
                    "vocabulary code {code:?} is empty or contains whitespace"
                )));
            }
            if index.insert(code.clone(), i).is_some() {
                return Err(Error::data(format!("duplicate vocabulary code {code}")));
            }
        }
        Ok(Vocabulary { codes, index })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn code(&self, column: usize) -> &str {
        &self.codes[column]
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.index.get(code).copied()
    }

    /// Columns whose code starts with `prefix`, in column order.
    pub fn columns_with_prefix(&self, prefix: &str) -> Vec<usize> {
        self.codes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.starts_with(prefix))
            .map(|(i, _)| i)
            .collect()
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = Error;

    fn try_from(codes: Vec<String>) -> Result<Self> {
        Vocabulary::new(codes)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.codes
    }
}

/// N x K binary presence matrix stored as one sorted index set per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhenotypeMatrix {
    vocab: Vocabulary,
    rows: Vec<Vec<u32>>,
    patient_ids: Option<Vec<String>>,
}

impl PhenotypeMatrix {
    /// Builds a matrix, sorting and deduplicating every row.
    pub fn new(
        vocab: Vocabulary,
        mut rows: Vec<Vec<u32>>,
        patient_ids: Option<Vec<String>>,
    ) -> Result<Self> {
        let k = vocab.len();
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            row.dedup();
            if let Some(&last) = row.last() {
                if last as usize >= k {
                    return Err(Error::data(format!(
                        "row {i} references column {last} but K = {k}"
                    )));
                }
            }
        }
        if let Some(ids) = &patient_ids {
            if ids.len() != rows.len() {
                return Err(Error::data(format!(
                    "{} patient ids for {} rows",
                    ids.len(),
                    rows.len()
                )));
            }
        }
        Ok(PhenotypeMatrix {
            vocab,
            rows,
            patient_ids,
        })
    }

    pub fn from_dense(vocab: Vocabulary, dense: &[Vec<u8>]) -> Result<Self> {
        let rows = dense
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(k, _)| k as u32)
                    .collect()
            })
            .collect();
        PhenotypeMatrix::new(vocab, rows, None)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.vocab.len()
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn patient_ids(&self) -> Option<&[String]> {
        self.patient_ids.as_deref()
    }

    pub fn get(&self, i: usize, k: usize) -> bool {
        self.rows[i].binary_search(&(k as u32)).is_ok()
    }

    /// Number of rows with a 1 in each column.
    pub fn column_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_cols()];
        for row in &self.rows {
            for &k in row {
                counts[k as usize] += 1;
            }
        }
        counts
    }

    /// Column means. Fails on an empty matrix.
    pub fn prevalence(&self) -> Result<Vec<f64>> {
        if self.rows.is_empty() {
            return Err(Error::Undefined(
                "prevalence of a matrix with no rows".into(),
            ));
        }
        let n = self.rows.len() as f64;
        Ok(self
            .column_counts()
            .into_iter()
            .map(|c| c as f64 / n)
            .collect())
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0u8; self.n_cols()];
                for &k in row {
                    dense[k as usize] = 1;
                }
                dense
            })
            .collect()
    }

    /// Rows at `indices`, in that order (repeats allowed).
    pub fn subset(&self, indices: &[usize]) -> PhenotypeMatrix {
        PhenotypeMatrix {
            vocab: self.vocab.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            patient_ids: self
                .patient_ids
                .as_ref()
                .map(|ids| indices.iter().map(|&i| ids[i].clone()).collect()),
        }
    }

    /// Appends `other` below `self`. Patient ids are kept only if both sides have them.
    pub fn stack(&self, other: &PhenotypeMatrix) -> Result<PhenotypeMatrix> {
        if self.vocab != other.vocab {
            return Err(Error::VocabMismatch(
                "cannot stack matrices over different vocabularies".into(),
            ));
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        let patient_ids = match (&self.patient_ids, &other.patient_ids) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
            _ => None,
        };
        Ok(PhenotypeMatrix {
            vocab: self.vocab.clone(),
            rows,
            patient_ids,
        })
    }

    /// Keeps only `columns` (in the given order), re-indexing rows.
    pub fn select_columns(&self, columns: &[usize]) -> Result<PhenotypeMatrix> {
        let codes = columns
            .iter()
            .map(|&c| self.vocab.code(c).to_string())
            .collect();
        let vocab = Vocabulary::new(codes)?;
        let mut remap = vec![u32::MAX; self.n_cols()];
        for (new, &old) in columns.iter().enumerate() {
            remap[old] = new as u32;
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&k| remap[k as usize])
                    .filter(|&k| k != u32::MAX)
                    .collect()
            })
            .collect();
        PhenotypeMatrix::new(vocab, rows, self.patient_ids.clone())
    }

    /// Re-expresses the matrix over `target`; codes absent from `target` are dropped.
    pub fn reindex_to(&self, target: &Vocabulary) -> PhenotypeMatrix {
        let remap: Vec<Option<u32>> = self
            .vocab
            .codes()
            .iter()
            .map(|c| target.index_of(c).map(|i| i as u32))
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut r: Vec<u32> = row.iter().filter_map(|&k| remap[k as usize]).collect();
                r.sort_unstable();
                r
            })
            .collect();
        PhenotypeMatrix {
            vocab: target.clone(),
            rows,
            patient_ids: self.patient_ids.clone(),
        }
    }

    pub fn with_patient_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.rows.len() {
            return Err(Error::data(format!(
                "{} patient ids for {} rows",
                ids.len(),
                self.rows.len()
            )));
        }
        self.patient_ids = Some(ids);
        Ok(self)
    }

    /// Sparse text serialization:
    ///
    /// ```text
    /// K 3
    /// vocab A B C
    /// p1 0 2
    /// p2
    /// ```
    ///
    /// Rows without patient ids are written with their 0-based row number.
    pub fn write_sparse<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "K {}", self.n_cols())?;
        let mut line = String::from("vocab");
        for code in self.vocab.codes() {
            line.push(' ');
            line.push_str(code);
        }
        writeln!(out, "{line}")?;
        for (i, row) in self.rows.iter().enumerate() {
            line.clear();
            match &self.patient_ids {
                Some(ids) => line.push_str(&ids[i]),
                None => line.push_str(&i.to_string()),
            }
            for k in row {
                line.push(' ');
                line.push_str(&k.to_string());
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_sparse<R: BufRead>(input: R) -> Result<PhenotypeMatrix> {
        let mut lines = input.lines().enumerate();
        let mut next_line = |what: &str| -> Result<(u64, String)> {
            match lines.next() {
                Some((i, Ok(l))) => Ok((i as u64 + 1, l)),
                Some((i, Err(e))) => Err(Error::Parse {
                    line: i as u64 + 1,
                    message: e.to_string(),
                }),
                None => Err(Error::Parse {
                    line: 0,
                    message: format!("missing {what} line"),
                }),
            }
        };

        let (ln, header) = next_line("K header")?;
        let k: usize = header
            .strip_prefix("K ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Parse {
                line: ln,
                message: format!("expected `K <int>`, found {header:?}"),
            })?;
        let (ln, vocab_line) = next_line("vocab")?;
        let mut parts = vocab_line.split_whitespace();
        if parts.next() != Some("vocab") {
            return Err(Error::Parse {
                line: ln,
                message: "expected `vocab` line".into(),
            });
        }
        let codes: Vec<String> = parts.map(str::to_string).collect();
        if codes.len() != k {
            return Err(Error::Parse {
                line: ln,
                message: format!("header says K = {k} but vocab lists {} codes", codes.len()),
            });
        }
        let vocab = Vocabulary::new(codes)?;

        let mut rows = Vec::new();
        let mut ids = Vec::new();
        for (i, line) in lines {
            let ln = i as u64 + 1;
            let line = line.map_err(|e| Error::Parse {
                line: ln,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let id = parts.next().unwrap_or_default().to_string();
            let mut row = Vec::new();
            for tok in parts {
                let idx: u32 = tok.parse().map_err(|_| Error::Parse {
                    line: ln,
                    message: format!("bad column index {tok:?}"),
                })?;
                if idx as usize >= k {
                    return Err(Error::Parse {
                        line: ln,
                        message: format!("column index {idx} out of range for K = {k}"),
                    });
                }
                row.push(idx);
            }
            ids.push(id);
            rows.push(row);
        }
        PhenotypeMatrix::new(vocab, rows, Some(ids))
    }

    /// Dense 0/1 CSV with a `patient_id` column followed by one column per code.
    pub fn write_dense_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["patient_id".to_string()];
        header.extend(self.vocab.codes().iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        let mut record = vec![String::new(); self.n_cols() + 1];
        for (i, row) in self.rows.iter().enumerate() {
            record[0] = match &self.patient_ids {
                Some(ids) => ids[i].clone(),
                None => i.to_string(),
            };
            for cell in record.iter_mut().skip(1) {
                *cell = "0".into();
            }
            for &k in row {
                record[k as usize + 1] = "1".into();
            }
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::data(e.to_string()))?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::data(format!("csv write failed: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(codes: &[&str]) -> Vocabulary {
        Vocabulary::new(codes.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn vocabulary_rejects_duplicates() {
        assert!(Vocabulary::new(vec!["A".into(), "A".into()]).is_err());
        assert!(Vocabulary::new(vec!["A B".into()]).is_err());
    }

    #[test]
    fn rows_are_sorted_and_deduplicated() {
        let m = PhenotypeMatrix::new(vocab(&["A", "B", "C"]), vec![vec![2, 0, 2]], None).unwrap();
        assert_eq!(m.row(0), &[0, 2]);
    }

    #[test]
    fn out_of_range_index_rejected() {
        assert!(PhenotypeMatrix::new(vocab(&["A"]), vec![vec![1]], None).is_err());
    }

    #[test]
    fn prevalence_examples() {
        let m = PhenotypeMatrix::from_dense(vocab(&["A", "B"]), &[vec![1, 0], vec![1, 1]]).unwrap();
        assert_eq!(m.prevalence().unwrap(), vec![1.0, 0.5]);

        let zeros = PhenotypeMatrix::from_dense(vocab(&["A", "B"]), &vec![vec![0, 0]; 3]).unwrap();
        assert_eq!(zeros.prevalence().unwrap(), vec![0.0, 0.0]);

        let single =
            PhenotypeMatrix::from_dense(vocab(&["A", "B", "C"]), &[vec![1, 0, 1]]).unwrap();
        assert_eq!(single.prevalence().unwrap(), vec![1.0, 0.0, 1.0]);

        let empty = PhenotypeMatrix::new(vocab(&["A"]), vec![], None).unwrap();
        assert!(matches!(empty.prevalence(), Err(Error::Undefined(_))));
    }

    #[test]
    fn sparse_roundtrip() {
        let m = PhenotypeMatrix::new(
            vocab(&["CV_401", "EM_202", "MB_286"]),
            vec![vec![0, 2], vec![], vec![1]],
            Some(vec!["p1".into(), "p2".into(), "p3".into()]),
        )
        .unwrap();
        let mut buf = Vec::new();
        m.write_sparse(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "K 3\nvocab CV_401 EM_202 MB_286\np1 0 2\np2\np3 1\n"
        );
        let back = PhenotypeMatrix::read_sparse(&buf[..]).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn sparse_reader_reports_line_numbers() {
        let text = "K 2\nvocab A B\np1 0\np2 5\n";
        match PhenotypeMatrix::read_sparse(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(PhenotypeMatrix::read_sparse("K 3\nvocab A B\n".as_bytes()).is_err());
    }

    #[test]
    fn dense_csv_export() {
        let m = PhenotypeMatrix::new(vocab(&["A", "B"]), vec![vec![1], vec![0, 1]], None).unwrap();
        let mut buf = Vec::new();
        m.write_dense_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "patient_id,A,B\n0,0,1\n1,1,1\n"
        );
    }

    #[test]
    fn select_and_reindex_columns() {
        let m = PhenotypeMatrix::from_dense(vocab(&["A", "B", "C"]), &[vec![1, 0, 1], vec![0, 1, 1]])
            .unwrap();
        let s = m.select_columns(&[2, 0]).unwrap();
        assert_eq!(s.vocab().codes(), &["C".to_string(), "A".to_string()]);
        assert_eq!(s.to_dense(), vec![vec![1, 1], vec![1, 0]]);

        let r = m.reindex_to(&vocab(&["B", "C", "Z"]));
        assert_eq!(r.to_dense(), vec![vec![0, 1, 0], vec![1, 1, 0]]);
    }
}

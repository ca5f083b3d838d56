use std::collections::HashMap;
use std::io::Read;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::matrix::PhenotypeMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gender {
    Female,
    Male,
    Other,
    Unknown,
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f" | "female" => Ok(Gender::Female),
            "m" | "male" => Ok(Gender::Male),
            "o" | "other" => Ok(Gender::Other),
            "" | "u" | "unknown" => Ok(Gender::Unknown),
            other => Err(Error::data(format!("unrecognized gender {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Demographic {
    pub age: u32,
    pub gender: Gender,
    pub ethnicity: String,
}

/// Per-patient attributes keyed by patient id.
#[derive(Debug, Clone, Default)]
pub struct Demographics {
    records: HashMap<String, Demographic>,
}

impl Demographics {
    pub fn new(records: HashMap<String, Demographic>) -> Self {
        Demographics { records }
    }

    pub fn get(&self, patient_id: &str) -> Option<&Demographic> {
        self.records.get(patient_id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Reads a CSV with `patient_id,age,gender,ethnicity` columns (any order).
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(input);
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::config(format!("demographics column {name:?} missing")))
        };
        let (pid, age, gender, eth) = (
            col("patient_id")?,
            col("age")?,
            col("gender")?,
            col("ethnicity")?,
        );
        let mut records = HashMap::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::Parse {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let parse_err = |message: String| Error::Parse { line, message };
            let age_v: u32 = rec[age]
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad age {:?}", &rec[age])))?;
            let gender_v: Gender = rec[gender].parse().map_err(|e: Error| parse_err(e.to_string()))?;
            records.insert(
                rec[pid].trim().to_string(),
                Demographic {
                    age: age_v,
                    gender: gender_v,
                    ethnicity: rec[eth].trim().to_string(),
                },
            );
        }
        Ok(Demographics { records })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
enum Clause {
    Age(Op, u32),
    Gender(Op, Gender),
    Ethnicity(Op, String),
}

/// Cohort predicate: comparisons over `age`, `gender`, `ethnicity` joined by
/// `and`/`&&` and `or`/`||` (`and` binds tighter). `true` matches everyone.
///
/// ```text
/// age > 50 and gender == F
/// ethnicity == "WHITE" or ethnicity == "BLACK"
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct CohortPredicate {
    // disjunction of conjunctions
    any_of: Vec<Vec<Clause>>,
}

impl CohortPredicate {
    pub fn all() -> Self {
        CohortPredicate {
            any_of: vec![vec![]],
        }
    }

    pub fn matches(&self, d: &Demographic) -> bool {
        self.any_of
            .iter()
            .any(|conj| conj.iter().all(|c| clause_matches(c, d)))
    }
}

fn compare<T: PartialOrd>(op: Op, lhs: &T, rhs: &T) -> bool {
    match op {
        Op::Eq => lhs == rhs,
        Op::Ne => lhs != rhs,
        Op::Lt => lhs < rhs,
        Op::Le => lhs <= rhs,
        Op::Gt => lhs > rhs,
        Op::Ge => lhs >= rhs,
    }
}

fn clause_matches(c: &Clause, d: &Demographic) -> bool {
    match c {
        Clause::Age(op, v) => compare(*op, &d.age, v),
        Clause::Gender(Op::Eq, g) => d.gender == *g,
        Clause::Gender(_, g) => d.gender != *g,
        Clause::Ethnicity(op, v) => {
            let eq = d.ethnicity.eq_ignore_ascii_case(v);
            if *op == Op::Eq {
                eq
            } else {
                !eq
            }
        }
    }
}

fn tokenize(s: &str) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '"' || c == '\'' {
            let end = chars[i + 1..]
                .iter()
                .position(|&x| x == c)
                .ok_or_else(|| Error::config("unterminated string in cohort predicate"))?;
            tokens.push(chars[i + 1..i + 1 + end].iter().collect());
            i += end + 2;
        } else if "=!<>&|".contains(c) {
            let mut j = i;
            while j < chars.len() && "=!<>&|".contains(chars[j]) {
                j += 1;
            }
            tokens.push(chars[i..j].iter().collect());
            i = j;
        } else {
            let mut j = i;
            while j < chars.len() && !chars[j].is_whitespace() && !"=!<>&|\"'".contains(chars[j]) {
                j += 1;
            }
            tokens.push(chars[i..j].iter().collect());
            i = j;
        }
    }
    Ok(tokens)
}

impl FromStr for CohortPredicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens = tokenize(s)?;
        if tokens.len() == 1 && tokens[0].eq_ignore_ascii_case("true") {
            return Ok(CohortPredicate::all());
        }
        let mut any_of = vec![vec![]];
        let mut i = 0;
        loop {
            if i + 3 > tokens.len() {
                return Err(Error::config(format!("incomplete cohort predicate {s:?}")));
            }
            let field = tokens[i].to_ascii_lowercase();
            let op = match tokens[i + 1].as_str() {
                "==" | "=" => Op::Eq,
                "!=" => Op::Ne,
                "<" => Op::Lt,
                "<=" => Op::Le,
                ">" => Op::Gt,
                ">=" => Op::Ge,
                other => return Err(Error::config(format!("unknown operator {other:?}"))),
            };
            let value = &tokens[i + 2];
            let clause = match field.as_str() {
                "age" => Clause::Age(
                    op,
                    value
                        .parse()
                        .map_err(|_| Error::config(format!("age needs an integer, got {value:?}")))?,
                ),
                "gender" | "sex" => {
                    if !matches!(op, Op::Eq | Op::Ne) {
                        return Err(Error::config("gender supports only == and !="));
                    }
                    Clause::Gender(op, value.parse().map_err(|e: Error| Error::config(e.to_string()))?)
                }
                "ethnicity" | "race" => {
                    if !matches!(op, Op::Eq | Op::Ne) {
                        return Err(Error::config("ethnicity supports only == and !="));
                    }
                    Clause::Ethnicity(op, value.clone())
                }
                other => return Err(Error::config(format!("unknown cohort field {other:?}"))),
            };
            any_of.last_mut().expect("nonempty").push(clause);
            i += 3;
            if i == tokens.len() {
                break;
            }
            match tokens[i].to_ascii_lowercase().as_str() {
                "and" | "&&" => {}
                "or" | "||" => any_of.push(vec![]),
                other => return Err(Error::config(format!("expected and/or, found {other:?}"))),
            }
            i += 1;
        }
        Ok(CohortPredicate { any_of })
    }
}

/// Keeps rows whose patient satisfies `predicate`, preserving row order.
pub fn filter_cohort(
    matrix: &PhenotypeMatrix,
    demo: &Demographics,
    predicate: &CohortPredicate,
) -> Result<PhenotypeMatrix> {
    let ids = matrix
        .patient_ids()
        .ok_or_else(|| Error::data("cohort filtering needs patient ids on the matrix"))?;
    let missing: Vec<String> = ids
        .iter()
        .filter(|id| demo.get(id).is_none())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPatients(missing));
    }
    let keep: Vec<usize> = ids
        .iter()
        .enumerate()
        .filter(|(_, id)| predicate.matches(demo.get(id).expect("checked above")))
        .map(|(i, _)| i)
        .collect();
    Ok(matrix.subset(&keep))
}

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::retrieval::{RankedDoc, Ranking};

/// Relevance grades for one query. Missing documents have grade 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Judgments {
    grades: HashMap<String, u32>,
}

impl Judgments {
    pub fn grade(&self, doc_id: &str) -> u32 {
        self.grades.get(doc_id).copied().unwrap_or(0)
    }

    pub fn is_relevant(&self, doc_id: &str) -> bool {
        self.grade(doc_id) >= 1
    }

    pub fn num_relevant(&self) -> usize {
        self.grades.values().filter(|g| **g >= 1).count()
    }

    /// All judged grades, highest first.
    pub fn grades_desc(&self) -> Vec<u32> {
        let mut g: Vec<u32> = self.grades.values().copied().collect();
        g.sort_unstable_by(|a, b| b.cmp(a));
        g
    }

    pub fn insert(&mut self, doc_id: impl Into<String>, grade: u32) {
        self.grades.insert(doc_id.into(), grade);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.grades.iter().map(|(d, g)| (d.as_str(), *g))
    }
}

impl<S: Into<String>> FromIterator<(S, u32)> for Judgments {
    fn from_iter<I: IntoIterator<Item = (S, u32)>>(iter: I) -> Self {
        Judgments {
            grades: iter.into_iter().map(|(d, g)| (d.into(), g)).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    queries: BTreeMap<String, Judgments>,
}

static EMPTY: std::sync::OnceLock<Judgments> = std::sync::OnceLock::new();

impl Qrels {
    pub fn judgments(&self, query_id: &str) -> &Judgments {
        self.queries
            .get(query_id)
            .unwrap_or_else(|| EMPTY.get_or_init(Judgments::default))
    }

    pub fn insert(&mut self, query_id: impl Into<String>, doc_id: impl Into<String>, grade: u32) {
        self.queries.entry(query_id.into()).or_default().insert(doc_id, grade);
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.queries.keys().map(String::as_str)
    }

    /// Parses TREC qrels: `qid iteration doc_id grade`, whitespace separated.
    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut qrels = Qrels::default();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let [qid, _iter, doc, grade] = fields[..] else {
                return Err(Error::input(format!(
                    "qrels line {}: expected `qid 0 doc_id grade`",
                    lineno + 1
                )));
            };
            let grade: u32 = grade.parse().map_err(|_| {
                Error::input(format!(
                    "qrels line {}: grade {grade:?} is not a non-negative integer",
                    lineno + 1
                ))
            })?;
            qrels.insert(qid, doc, grade);
        }
        Ok(qrels)
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for (qid, j) in &self.queries {
            let mut docs: Vec<(&str, u32)> = j.iter().collect();
            docs.sort();
            for (doc, grade) in docs {
                writeln!(out, "{qid} 0 {doc} {grade}")?;
            }
        }
        Ok(())
    }
}

/// Parses a TREC run (`qid Q0 doc_id rank score tag`) into one ranking per
/// query, ordered by descending score then ascending doc id.
pub fn read_run<R: BufRead>(input: R) -> Result<BTreeMap<String, Ranking>> {
    let mut per_query: BTreeMap<String, Vec<RankedDoc>> = BTreeMap::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _q0, doc, _rank, score, _tag] = fields[..] else {
            return Err(Error::input(format!(
                "run line {}: expected `qid Q0 doc_id rank score tag`",
                lineno + 1
            )));
        };
        let score: f64 = score
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or_else(|| Error::input(format!("run line {}: bad score {score:?}", lineno + 1)))?;
        let docs = per_query.entry(qid.to_string()).or_default();
        if docs.iter().any(|d| d.doc_id == doc) {
            return Err(Error::input(format!(
                "run line {}: document {doc:?} repeated for query {qid:?}",
                lineno + 1
            )));
        }
        docs.push(RankedDoc {
            doc_id: doc.to_string(),
            score,
        });
    }
    Ok(per_query
        .into_iter()
        .map(|(q, docs)| {
            let n = docs.len();
            (q, Ranking::from_scored(docs, n))
        })
        .collect())
}

pub fn write_run<W: Write>(mut out: W, query_id: &str, ranking: &Ranking, tag: &str) -> Result<()> {
    for (rank, entry) in ranking.entries.iter().enumerate() {
        writeln!(
            out,
            "{query_id} Q0 {} {} {:.6} {tag}",
            entry.doc_id,
            rank + 1,
            entry.score
        )?;
    }
    Ok(())
}

//! Exact late-interaction scoring and reranking.

use rayon::prelude::*;

use super::candidates::CandidateSet;
use crate::corpus::DocumentEntry;
use crate::error::{Error, Result};
use crate::index::{DocId, EmbeddingStore};
use crate::text::QueryRepresentation;

#[inline]
fn dot64(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum()
}

/// Sum over query embeddings of the best dot product with any document
/// embedding. Query embeddings are summed in order. `doc` must be non-empty.
pub fn maxsim<'q, 'd, Q, D>(query: Q, doc: D) -> f64
where
    Q: IntoIterator<Item = &'q [f32]>,
    D: Iterator<Item = &'d [f32]> + Clone,
{
    query
        .into_iter()
        .map(|q| doc.clone().map(|d| dot64(q, d)).fold(f64::NEG_INFINITY, f64::max))
        .sum()
}

/// Score of a stored document against the full query representation.
pub fn score_stored(query: &QueryRepresentation, store: &EmbeddingStore, doc: DocId) -> Result<f64> {
    let vectors = store
        .doc_vectors(doc)
        .ok_or_else(|| Error::Internal(format!("document {} is not in the store", doc.0)))?;
    if query.dim() != store.dim() {
        return Err(Error::input(format!(
            "query dim {} does not match store dim {}",
            query.dim(),
            store.dim()
        )));
    }
    Ok(maxsim(
        query.embeddings().iter().map(|e| e.as_slice()),
        vectors.chunks_exact(store.dim()),
    ))
}

/// MaxSim over every query embedding and every document embedding.
pub fn exact_score(query: &QueryRepresentation, doc: &DocumentEntry) -> Result<f64> {
    if doc.is_empty() {
        return Err(Error::input(format!("document {:?} has no embeddings", doc.doc_id())));
    }
    if doc.embeddings()[0].dim() != query.dim() {
        return Err(Error::input(format!(
            "query dim {} does not match document dim {}",
            query.dim(),
            doc.embeddings()[0].dim()
        )));
    }
    Ok(maxsim(
        query.embeddings().iter().map(|e| e.as_slice()),
        doc.embeddings().iter().map(|e| e.as_slice()),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedDoc {
    pub doc_id: String,
    pub score: f64,
}

/// Final top-k list: scores non-increasing, ties by ascending doc id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ranking {
    pub entries: Vec<RankedDoc>,
}

impl Ranking {
    /// Sorts by descending score then ascending doc id and keeps `k`.
    pub fn from_scored(mut entries: Vec<RankedDoc>, k: usize) -> Self {
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
        entries.truncate(k);
        Ranking { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }
}

/// Exact-scores every candidate with the full query and keeps the top `k`.
pub fn rerank(
    candidates: &CandidateSet,
    query: &QueryRepresentation,
    store: &EmbeddingStore,
    k: usize,
) -> Result<Ranking> {
    if k == 0 {
        return Err(Error::config("k must be >= 1"));
    }
    let docs: Vec<DocId> = candidates.docs().collect();
    let scored = docs
        .par_iter()
        .map(|&doc| {
            let score = score_stored(query, store, doc)?;
            Ok(RankedDoc {
                doc_id: store
                    .doc_name(doc)
                    .ok_or_else(|| Error::Internal(format!("document {} is not in the store", doc.0)))?
                    .to_string(),
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ranking::from_scored(scored, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::Embedding;
    use crate::text::Token;

    fn emb(v: &[f32]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    fn query_of(vs: &[&[f32]]) -> QueryRepresentation {
        let mut tokens = vec![Token::cls()];
        for i in 1..vs.len() {
            tokens.push(Token::wordpiece(format!("w{i}"), i));
        }
        QueryRepresentation::new(tokens, vs.iter().map(|v| emb(v)).collect()).unwrap()
    }

    fn doc_of(name: &str, vs: &[&[f32]]) -> DocumentEntry {
        let tokens = (0..vs.len()).map(|i| Token::wordpiece(format!("t{i}"), i)).collect();
        DocumentEntry::new(name, tokens, vs.iter().map(|v| emb(v)).collect()).unwrap()
    }

    #[test]
    fn picks_best_document_embedding() {
        let q = query_of(&[&[1.0, 0.0]]);
        let d = doc_of("d", &[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(exact_score(&q, &d).unwrap(), 1.0);
    }

    #[test]
    fn identical_unit_embeddings_sum_to_count() {
        let q = query_of(&[&[0.6, 0.8], &[0.0, 1.0]]);
        let d = doc_of("d", &[&[1.0, 0.0], &[0.0, 1.0], &[0.6, 0.8]]);
        assert!((exact_score(&q, &d).unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn negative_similarities_are_kept() {
        let q = query_of(&[&[1.0, 0.0]]);
        let d = doc_of("d", &[&[-1.0, 0.0], &[-0.5, 0.0]]);
        assert_eq!(exact_score(&q, &d).unwrap(), -0.5);
    }

    #[test]
    fn ranking_breaks_ties_by_doc_id() {
        let r = Ranking::from_scored(
            vec![
                RankedDoc {
                    doc_id: "b".into(),
                    score: 1.0,
                },
                RankedDoc {
                    doc_id: "c".into(),
                    score: 2.0,
                },
                RankedDoc {
                    doc_id: "a".into(),
                    score: 1.0,
                },
            ],
            2,
        );
        assert_eq!(r.doc_ids().collect::<Vec<_>>(), ["c", "a"]);
    }
}

//! Per-query effectiveness measures. A document is relevant when its grade
//! is at least 1.

use super::qrels::Judgments;
use crate::index::EmbeddingStore;
use crate::retrieval::{CandidateSet, Ranking};

/// nDCG at `cutoff` with linear gain (gain = grade) and discount
/// `1 / log2(rank + 1)`. The ideal ordering is taken over all judged
/// documents. Returns 0 when no judged document has positive grade.
pub fn ndcg_at(ranking: &Ranking, judgments: &Judgments, cutoff: usize) -> f64 {
    let discount = |rank: usize| 1.0 / ((rank + 1) as f64).log2();
    let dcg: f64 = ranking
        .doc_ids()
        .take(cutoff)
        .enumerate()
        .map(|(i, d)| f64::from(judgments.grade(d)) * discount(i + 1))
        .sum();
    let idcg: f64 = judgments
        .grades_desc()
        .into_iter()
        .take(cutoff)
        .enumerate()
        .map(|(i, g)| f64::from(g) * discount(i + 1))
        .sum();
    if idcg > 0.0 {
        dcg / idcg
    } else {
        0.0
    }
}

/// Average precision over all judged-relevant documents; relevant documents
/// that were not retrieved contribute 0. Returns 0 when nothing is relevant.
pub fn average_precision(ranking: &Ranking, judgments: &Judgments) -> f64 {
    let total = judgments.num_relevant();
    if total == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, d) in ranking.doc_ids().enumerate() {
        if judgments.is_relevant(d) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total as f64
}

/// Reciprocal rank of the first relevant document within `cutoff`.
pub fn rr_at(ranking: &Ranking, judgments: &Judgments, cutoff: usize) -> f64 {
    ranking
        .doc_ids()
        .take(cutoff)
        .position(|d| judgments.is_relevant(d))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// `(documents retrieved, relevant documents retrieved)` for a candidate
/// set.
pub fn candidate_counts(candidates: &CandidateSet, store: &EmbeddingStore, judgments: &Judgments) -> (usize, usize) {
    let relevant = candidates
        .docs()
        .filter(|&d| store.doc_name(d).is_some_and(|name| judgments.is_relevant(name)))
        .count();
    (candidates.len(), relevant)
}

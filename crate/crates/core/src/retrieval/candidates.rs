use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::index::{DocId, EmbeddingHit, IvfIndex};

/// First-stage output for one query embedding: the nearest document
/// embeddings and the documents that own them.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnResult {
    pub hits: Vec<EmbeddingHit>,
    /// Owning documents, ascending and deduplicated.
    pub docs: Vec<DocId>,
}

/// Top-`k_prime` document embeddings for `phi` among the `n_probe` most
/// similar partitions, mapped back to their documents.
pub fn ann_candidates(index: &IvfIndex, phi: &[f32], k_prime: usize, n_probe: usize) -> Result<AnnResult> {
    let hits = index.search_embeddings(phi, k_prime, n_probe)?;
    let mut docs: Vec<DocId> = hits
        .iter()
        .map(|h| index.store().owner(h.embedding_id as usize))
        .collect();
    docs.sort_unstable();
    docs.dedup();
    Ok(AnnResult { hits, docs })
}

/// Documents retrieved by one query embedding, tagged with that embedding's
/// position in the query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerEmbeddingDocs {
    pub position: usize,
    pub docs: Vec<DocId>,
}

/// Union of per-embedding document sets, remembering which query positions
/// contributed each document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CandidateSet {
    provenance: BTreeMap<DocId, BTreeSet<usize>>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }

    pub fn contains(&self, doc: DocId) -> bool {
        self.provenance.contains_key(&doc)
    }

    /// Documents in ascending id order.
    pub fn docs(&self) -> impl Iterator<Item = DocId> + '_ {
        self.provenance.keys().copied()
    }

    pub fn provenance(&self, doc: DocId) -> Option<&BTreeSet<usize>> {
        self.provenance.get(&doc)
    }

    pub fn insert(&mut self, doc: DocId, position: usize) {
        self.provenance.entry(doc).or_default().insert(position);
    }

    pub fn is_subset(&self, other: &CandidateSet) -> bool {
        self.docs().all(|d| other.contains(d))
    }
}

/// Unions the first `p` per-embedding sets, which must already be in
/// strategy order. With `p` equal to the query length this is the unpruned
/// union.
pub fn pruned_union(per_embedding: &[PerEmbeddingDocs], p: usize) -> Result<CandidateSet> {
    if p == 0 {
        return Err(Error::config(
            "p must satisfy p >= 1: at least one query embedding is processed",
        ));
    }
    if p > per_embedding.len() {
        return Err(Error::config(format!(
            "p = {p} exceeds the {} available query embeddings",
            per_embedding.len()
        )));
    }
    let mut set = CandidateSet::default();
    for entry in &per_embedding[..p] {
        for &doc in &entry.docs {
            set.insert(doc, entry.position);
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn per(position: usize, docs: &[u32]) -> PerEmbeddingDocs {
        PerEmbeddingDocs {
            position,
            docs: docs.iter().map(|&d| DocId(d)).collect(),
        }
    }

    #[test]
    fn union_tracks_provenance() {
        let sets = [per(1, &[0, 1]), per(2, &[1, 2])];
        let u = pruned_union(&sets, 2).unwrap();
        assert_eq!(u.docs().collect::<Vec<_>>(), [DocId(0), DocId(1), DocId(2)]);
        assert_eq!(
            u.provenance(DocId(1)).unwrap().iter().copied().collect::<Vec<_>>(),
            [1, 2]
        );
        assert_eq!(u.provenance(DocId(0)).unwrap().len(), 1);
    }

    #[test]
    fn prefix_only() {
        let sets = [per(0, &[5]), per(1, &[6])];
        let u = pruned_union(&sets, 1).unwrap();
        assert!(u.contains(DocId(5)) && !u.contains(DocId(6)));
    }

    #[test]
    fn p_bounds() {
        let sets = [per(0, &[5])];
        assert!(matches!(pruned_union(&sets, 0), Err(Error::InvalidConfig(_))));
        assert!(matches!(pruned_union(&sets, 2), Err(Error::InvalidConfig(_))));
    }
}

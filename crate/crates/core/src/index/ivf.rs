use std::cmp::Ordering;

use rayon::prelude::*;

use super::kmeans::Centroids;
use super::store::EmbeddingStore;
use crate::embed::dot;
use crate::error::{Error, Result};

/// Embeddings routed to one centroid, kept at full precision.
#[derive(Debug, Clone, Default)]
pub struct InvertedList {
    pub(crate) ids: Vec<u64>,
    pub(crate) vectors: Vec<f32>,
}

impl PartialEq for InvertedList {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids
            && self.vectors.len() == other.vectors.len()
            && self
                .vectors
                .iter()
                .zip(&other.vectors)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl InvertedList {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }
}

/// One scored embedding from a list scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingHit {
    pub embedding_id: u64,
    pub score: f32,
}

/// Descending score, ascending id.
pub(crate) fn hit_order(a: &EmbeddingHit, b: &EmbeddingHit) -> Ordering {
    b.score.total_cmp(&a.score).then(a.embedding_id.cmp(&b.embedding_id))
}

/// Coarse-quantized inverted file over an [`EmbeddingStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct IvfIndex {
    store: EmbeddingStore,
    centroids: Centroids,
    lists: Vec<InvertedList>,
}

/// Routes every stored embedding to its most similar centroid (ties to the
/// lowest centroid index). Lists keep store order.
pub fn build_ivf(store: EmbeddingStore, centroids: Centroids) -> Result<IvfIndex> {
    if store.dim() != centroids.dim() {
        return Err(Error::input(format!(
            "store dim {} does not match centroid dim {}",
            store.dim(),
            centroids.dim()
        )));
    }
    let assignment: Vec<usize> = store
        .vectors()
        .par_chunks_exact(store.dim())
        .map(|v| centroids.nearest(v).0)
        .collect();
    let mut lists = vec![InvertedList::default(); centroids.n_list()];
    for (id, &c) in assignment.iter().enumerate() {
        lists[c].ids.push(id as u64);
        lists[c].vectors.extend_from_slice(store.embedding(id));
    }
    Ok(IvfIndex {
        store,
        centroids,
        lists,
    })
}

impl IvfIndex {
    /// Assembles an index from decoded parts and checks that the lists are a
    /// disjoint cover of the store whose vectors match the store.
    pub(crate) fn from_parts(store: EmbeddingStore, centroids: Centroids, lists: Vec<InvertedList>) -> Result<Self> {
        if lists.len() != centroids.n_list() {
            return Err(Error::input("list count does not match centroid count"));
        }
        let dim = store.dim();
        let mut seen = vec![false; store.num_embeddings()];
        for list in &lists {
            if list.vectors.len() != list.ids.len() * dim {
                return Err(Error::input("inverted list vector buffer has the wrong size"));
            }
            for (&id, v) in list.ids.iter().zip(list.vectors.chunks_exact(dim)) {
                let slot = seen
                    .get_mut(id as usize)
                    .ok_or_else(|| Error::input(format!("embedding id {id} is out of range")))?;
                if std::mem::replace(slot, true) {
                    return Err(Error::input(format!("embedding id {id} appears in two lists")));
                }
                if v.iter()
                    .zip(store.embedding(id as usize))
                    .any(|(a, b)| a.to_bits() != b.to_bits())
                {
                    return Err(Error::input(format!("embedding {id} differs from the store")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::input(format!("embedding id {missing} is in no list")));
        }
        Ok(IvfIndex {
            store,
            centroids,
            lists,
        })
    }

    pub fn store(&self) -> &EmbeddingStore {
        &self.store
    }

    pub fn centroids(&self) -> &Centroids {
        &self.centroids
    }

    pub fn lists(&self) -> &[InvertedList] {
        &self.lists
    }

    pub fn n_list(&self) -> usize {
        self.lists.len()
    }

    pub fn dim(&self) -> usize {
        self.store.dim()
    }

    /// The `n_probe` centroids most similar to `query`, best first, ties by
    /// ascending centroid index.
    pub fn probe(&self, query: &[f32], n_probe: usize) -> Vec<usize> {
        let mut scored: Vec<(usize, f32)> = (0..self.n_list())
            .map(|c| (c, dot(query, self.centroids.centroid(c))))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(n_probe);
        scored.into_iter().map(|(c, _)| c).collect()
    }

    /// Exact top-`k` embeddings among the given lists, sorted by descending
    /// score then ascending embedding id.
    pub fn scan_lists(&self, query: &[f32], lists: &[usize], k: usize) -> Vec<EmbeddingHit> {
        let dim = self.dim();
        let mut hits: Vec<EmbeddingHit> = lists
            .iter()
            .flat_map(|&c| {
                let list = &self.lists[c];
                list.ids
                    .iter()
                    .zip(list.vectors.chunks_exact(dim))
                    .map(|(&embedding_id, v)| EmbeddingHit {
                        embedding_id,
                        score: dot(query, v),
                    })
            })
            .collect();
        if k == 0 {
            return Vec::new();
        }
        if hits.len() > k {
            hits.select_nth_unstable_by(k - 1, hit_order);
            hits.truncate(k);
        }
        hits.sort_unstable_by(hit_order);
        hits
    }

    /// Probes `n_probe` lists and returns the `k` best embeddings in them.
    pub fn search_embeddings(&self, query: &[f32], k: usize, n_probe: usize) -> Result<Vec<EmbeddingHit>> {
        if query.len() != self.dim() {
            return Err(Error::input(format!(
                "query embedding has dim {} but the index has dim {}",
                query.len(),
                self.dim()
            )));
        }
        if n_probe == 0 || n_probe > self.n_list() {
            return Err(Error::config(format!(
                "n_probe must satisfy 1 <= n_probe <= n_list = {} (got {n_probe})",
                self.n_list()
            )));
        }
        let lists = self.probe(query, n_probe);
        Ok(self.scan_lists(query, &lists, k))
    }
}

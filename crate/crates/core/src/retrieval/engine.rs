use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::candidates::{ann_candidates, pruned_union, AnnResult, CandidateSet, PerEmbeddingDocs};
use super::order::{order_embeddings, Strategy};
use super::score::{rerank, score_stored, RankedDoc, Ranking};
use crate::corpus::{embed_corpus, DocumentEntry};
use crate::embed::Embedder;
use crate::error::{Error, Result};
use crate::index::{
    build_ivf, default_n_list, train_centroids, DocSpan, DumpedDocument, EmbeddingStore, IvfIndex, KMeansParams,
};
use crate::lexicon::{build_lexicon, Lexicon};
use crate::text::{document_tokens, QueryRepresentation};

/// First-stage parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruningConfig {
    pub strategy: Strategy,
    /// Number of ordered query embeddings sent to the ANN stage.
    pub p: usize,
    /// Document embeddings fetched per query embedding.
    pub k_prime: usize,
    /// Partitions probed per query embedding.
    pub n_probe: usize,
}

impl PruningConfig {
    pub fn validate(&self, q_len: usize, n_list: usize) -> Result<()> {
        if self.p == 0 || self.p > q_len {
            return Err(Error::config(format!(
                "p must satisfy p >= 1 and p <= q_len = {q_len} (got {})",
                self.p
            )));
        }
        if self.k_prime == 0 {
            return Err(Error::config("k_prime must be >= 1"));
        }
        if self.n_probe == 0 || self.n_probe > n_list {
            return Err(Error::config(format!(
                "n_probe must satisfy n_probe >= 1 and n_probe <= n_list = {n_list} (got {})",
                self.n_probe
            )));
        }
        Ok(())
    }
}

/// Index-construction parameters; `n_list = None` picks
/// [`default_n_list`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexParams {
    pub sample_fraction: f64,
    pub n_list: Option<usize>,
    pub iterations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub query: QueryRepresentation,
    pub order: Vec<usize>,
    pub candidates: CandidateSet,
    pub ranking: Ranking,
}

/// Immutable bundle of everything a search needs.
#[derive(Debug, Clone)]
pub struct Engine {
    index: IvfIndex,
    lexicon: Lexicon,
    embedder: Embedder,
}

fn train_and_build(store: EmbeddingStore, params: &IndexParams) -> Result<IvfIndex> {
    let n_list = params.n_list.unwrap_or_else(|| default_n_list(store.num_embeddings()));
    let centroids = train_centroids(
        &store,
        &KMeansParams {
            sample_fraction: params.sample_fraction,
            n_list,
            iterations: params.iterations,
            seed: params.seed,
        },
    )?;
    build_ivf(store, centroids)
}

impl Engine {
    pub fn new(index: IvfIndex, lexicon: Lexicon, embedder: Embedder) -> Result<Self> {
        if index.dim() != embedder.dim() {
            return Err(Error::config(format!(
                "embedder dim {} does not match index dim {}",
                embedder.dim(),
                index.dim()
            )));
        }
        if lexicon.num_docs() != index.store().num_docs() as u64 {
            return Err(Error::input(format!(
                "lexicon covers {} documents but the index holds {}",
                lexicon.num_docs(),
                index.store().num_docs()
            )));
        }
        Ok(Engine {
            index,
            lexicon,
            embedder,
        })
    }

    pub fn from_documents(docs: &[DocumentEntry], embedder: Embedder, params: &IndexParams) -> Result<Self> {
        let lexicon = build_lexicon(docs)?;
        let store = EmbeddingStore::from_documents(docs)?;
        Engine::new(train_and_build(store, params)?, lexicon, embedder)
    }

    /// Embeds `(doc_id, text)` pairs with the toy embedder and indexes them.
    pub fn from_corpus(corpus: &[(String, String)], embedder: Embedder, params: &IndexParams) -> Result<Self> {
        let docs = embed_corpus(corpus, &embedder)?;
        Engine::from_documents(&docs, embedder, params)
    }

    /// Indexes externally produced document embeddings. The corpus text is
    /// still needed for collection statistics; store order follows the
    /// corpus and every corpus document must appear in the dump.
    pub fn from_dump(
        corpus: &[(String, String)],
        dim: usize,
        dumped: Vec<DumpedDocument>,
        embedder: Embedder,
        params: &IndexParams,
    ) -> Result<Self> {
        let mut by_name: HashMap<String, DumpedDocument> = HashMap::with_capacity(dumped.len());
        for d in dumped {
            if by_name.contains_key(&d.doc_id) {
                return Err(Error::input(format!(
                    "document {:?} appears twice in the dump",
                    d.doc_id
                )));
            }
            by_name.insert(d.doc_id.clone(), d);
        }
        if by_name.len() != corpus.len() {
            return Err(Error::input(format!(
                "dump holds {} documents but the corpus has {}",
                by_name.len(),
                corpus.len()
            )));
        }
        let mut token_lists = Vec::with_capacity(corpus.len());
        let mut spans = Vec::with_capacity(corpus.len());
        let mut vectors = Vec::new();
        for (doc_id, text) in corpus {
            let dumped = by_name
                .remove(doc_id)
                .ok_or_else(|| Error::input(format!("document {doc_id:?} is missing from the dump")))?;
            token_lists.push(document_tokens(text));
            spans.push(DocSpan {
                start: (vectors.len() / dim) as u64,
                len: dumped.embeddings.len() as u32,
            });
            for e in dumped.embeddings {
                if e.dim() != dim {
                    return Err(Error::input(format!(
                        "document {doc_id:?} has an embedding of dim {}",
                        e.dim()
                    )));
                }
                vectors.extend(e.into_inner());
            }
        }
        let lexicon = Lexicon::from_documents(token_lists.iter().map(Vec::as_slice))?;
        let ids = corpus.iter().map(|(id, _)| id.clone()).collect();
        let store = EmbeddingStore::from_parts(dim, ids, spans, vectors)?;
        Engine::new(train_and_build(store, params)?, lexicon, embedder)
    }

    pub fn index(&self) -> &IvfIndex {
        &self.index
    }

    pub fn store(&self) -> &EmbeddingStore {
        self.index.store()
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn embedder(&self) -> &Embedder {
        &self.embedder
    }

    pub fn encode(&self, query_text: &str, q_len: usize) -> Result<QueryRepresentation> {
        QueryRepresentation::encode(query_text, q_len, &self.embedder)
    }

    /// ANN results for the given query positions. Positions holding the same
    /// token share one scan, since their embeddings are identical.
    fn ann_for_positions(
        &self,
        query: &QueryRepresentation,
        positions: &[usize],
        k_prime: usize,
        n_probe: usize,
    ) -> Result<Vec<AnnResult>> {
        let tokens = query.tokens();
        let mut unique: Vec<usize> = Vec::new();
        let mut slot_of: HashMap<u64, usize> = HashMap::new();
        let slots: Vec<usize> = positions
            .iter()
            .map(|&pos| {
                *slot_of.entry(tokens[pos].id).or_insert_with(|| {
                    unique.push(pos);
                    unique.len() - 1
                })
            })
            .collect();
        let results = unique
            .par_iter()
            .map(|&pos| ann_candidates(&self.index, query.embeddings()[pos].as_slice(), k_prime, n_probe))
            .collect::<Result<Vec<_>>>()?;
        Ok(slots.into_iter().map(|s| results[s].clone()).collect())
    }

    /// Full two-stage search: order, ANN over the first `p` embeddings,
    /// union, exact rerank with all `q_len` embeddings.
    pub fn search(&self, query_text: &str, q_len: usize, config: &PruningConfig, k: usize) -> Result<SearchOutcome> {
        config.validate(q_len, self.index.n_list())?;
        if k == 0 {
            return Err(Error::config("k must be >= 1"));
        }
        let query = self.encode(query_text, q_len)?;
        let order = order_embeddings(&query, &self.lexicon, config.strategy);
        let processed = &order[..config.p];
        let ann = self.ann_for_positions(&query, processed, config.k_prime, config.n_probe)?;
        let per_embedding: Vec<PerEmbeddingDocs> = processed
            .iter()
            .zip(ann)
            .map(|(&position, r)| PerEmbeddingDocs { position, docs: r.docs })
            .collect();
        let candidates = pruned_union(&per_embedding, config.p)?;
        let ranking = rerank(&candidates, &query, self.store(), k)?;
        Ok(SearchOutcome {
            query,
            order,
            candidates,
            ranking,
        })
    }

    /// Runs the first stage for every query position once so that any
    /// (strategy, p) combination can be evaluated without further scans.
    pub fn prepare(&self, query_text: &str, q_len: usize, k_prime: usize, n_probe: usize) -> Result<PreparedQuery> {
        let probe_check = PruningConfig {
            strategy: Strategy::First,
            p: q_len.max(1),
            k_prime,
            n_probe,
        };
        probe_check.validate(q_len, self.index.n_list())?;
        let query = self.encode(query_text, q_len)?;
        let all: Vec<usize> = (0..q_len).collect();
        let ann = self.ann_for_positions(&query, &all, k_prime, n_probe)?;
        Ok(PreparedQuery {
            query,
            ann,
            scores: HashMap::new(),
        })
    }
}

/// A query with first-stage results for every position and a cache of
/// exact scores. Exact scores use the full query, so they do not depend on
/// the strategy or `p` that produced a candidate.
#[derive(Debug, Clone)]
pub struct PreparedQuery {
    query: QueryRepresentation,
    ann: Vec<AnnResult>,
    scores: HashMap<crate::index::DocId, f64>,
}

impl PreparedQuery {
    pub fn query(&self) -> &QueryRepresentation {
        &self.query
    }

    pub fn ann(&self) -> &[AnnResult] {
        &self.ann
    }

    pub fn order(&self, lexicon: &Lexicon, strategy: Strategy) -> Vec<usize> {
        order_embeddings(&self.query, lexicon, strategy)
    }

    pub fn candidates(&self, order: &[usize], p: usize) -> Result<CandidateSet> {
        let per: Vec<PerEmbeddingDocs> = order
            .iter()
            .map(|&position| PerEmbeddingDocs {
                position,
                docs: self.ann[position].docs.clone(),
            })
            .collect();
        pruned_union(&per, p)
    }

    /// Exact scores for every document any position retrieved.
    pub fn score_all(&mut self, store: &EmbeddingStore) -> Result<()> {
        let mut docs: Vec<_> = self.ann.iter().flat_map(|r| r.docs.iter().copied()).collect();
        docs.sort_unstable();
        docs.dedup();
        docs.retain(|d| !self.scores.contains_key(d));
        let query = &self.query;
        let scored = docs
            .par_iter()
            .map(|&d| score_stored(query, store, d).map(|s| (d, s)))
            .collect::<Result<Vec<_>>>()?;
        self.scores.extend(scored);
        Ok(())
    }

    /// Reranks using cached scores, computing any that are missing.
    pub fn rank(&mut self, candidates: &CandidateSet, store: &EmbeddingStore, k: usize) -> Result<Ranking> {
        if k == 0 {
            return Err(Error::config("k must be >= 1"));
        }
        let mut entries = Vec::with_capacity(candidates.len());
        for doc in candidates.docs() {
            let score = match self.scores.get(&doc) {
                Some(s) => *s,
                None => {
                    let s = score_stored(&self.query, store, doc)?;
                    self.scores.insert(doc, s);
                    s
                }
            };
            entries.push(RankedDoc {
                doc_id: store
                    .doc_name(doc)
                    .ok_or_else(|| Error::Internal(format!("document {} is not in the store", doc.0)))?
                    .to_string(),
                score,
            });
        }
        Ok(Ranking::from_scored(entries, k))
    }
}

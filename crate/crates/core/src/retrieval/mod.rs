//! Two-stage retrieval: embedding ordering, per-embedding ANN candidate
//! generation, pruned union and exact MaxSim reranking.

pub mod candidates;
pub mod engine;
pub mod order;
pub mod score;

pub use candidates::{ann_candidates, pruned_union, AnnResult, CandidateSet, PerEmbeddingDocs};
pub use engine::{Engine, IndexParams, PreparedQuery, PruningConfig, SearchOutcome};
pub use order::{order_embeddings, Strategy};
pub use score::{exact_score, maxsim, rerank, RankedDoc, Ranking};

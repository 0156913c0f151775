//! Multi-vector dense retrieval engine.
//!
//! Documents and queries are represented by one embedding per token. Search
//! runs in two stages: every processed query embedding fetches its nearest
//! document embeddings from an IVF index, the owning documents are unioned
//! into a candidate set, and the candidates are reranked with the exact
//! MaxSim score over the full query representation.
//!
//! Query-embedding pruning limits the first stage to the `p` most important
//! query embeddings. Importance is either position (`First`) or the inverse
//! collection frequency of the embedding's token (`Icf`, `Idf`).

pub mod cli;
pub mod config;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod index;
pub mod lexicon;
pub mod retrieval;
pub mod synthetic;
pub mod text;

pub use embed::{Embedder, Embedding};
pub use error::{Error, Result};
pub use lexicon::Lexicon;
pub use text::{QueryRepresentation, Token, TokenKind};

//! Documents and the line-oriented corpus/query file formats.

use std::collections::HashSet;
use std::io::BufRead;

use crate::embed::{Embedder, Embedding};
use crate::error::{Error, Result};
use crate::text::{document_tokens, Token};

/// One document: its identifier, tokens and per-token embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentEntry {
    doc_id: String,
    tokens: Vec<Token>,
    embeddings: Vec<Embedding>,
}

impl DocumentEntry {
    pub fn new(doc_id: impl Into<String>, tokens: Vec<Token>, embeddings: Vec<Embedding>) -> Result<Self> {
        let doc_id = doc_id.into();
        if embeddings.is_empty() {
            return Err(Error::input(format!("document {doc_id:?} has no embeddings")));
        }
        if tokens.len() != embeddings.len() {
            return Err(Error::input(format!(
                "document {doc_id:?}: {} tokens but {} embeddings",
                tokens.len(),
                embeddings.len()
            )));
        }
        let dim = embeddings[0].dim();
        if embeddings.iter().any(|e| e.dim() != dim) {
            return Err(Error::input(format!("document {doc_id:?} mixes embedding dimensions")));
        }
        Ok(DocumentEntry {
            doc_id,
            tokens,
            embeddings,
        })
    }

    /// Tokenizes and embeds raw text.
    pub fn from_text(doc_id: impl Into<String>, text: &str, embedder: &Embedder) -> Result<Self> {
        let doc_id = doc_id.into();
        let tokens = document_tokens(text);
        if tokens.is_empty() {
            return Err(Error::input(format!("document {doc_id:?} has no indexable terms")));
        }
        let embeddings = embedder.embed_tokens(&tokens);
        DocumentEntry::new(doc_id, tokens, embeddings)
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn token_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.tokens.iter().map(|t| t.id)
    }

    pub fn embeddings(&self) -> &[Embedding] {
        &self.embeddings
    }

    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }
}

/// Reads `id<TAB>text` lines. Blank lines are skipped; ids must be unique
/// and non-empty. Used for both the corpus and the queries file.
pub fn read_tsv_pairs<R: BufRead>(input: R, what: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let Some((id, text)) = line.split_once('\t') else {
            return Err(Error::input(format!(
                "{what} line {}: expected id<TAB>text",
                lineno + 1
            )));
        };
        if id.is_empty() {
            return Err(Error::input(format!("{what} line {}: empty id", lineno + 1)));
        }
        if !ids.insert(id.to_string()) {
            return Err(Error::input(format!("{what} line {}: duplicate id {id:?}", lineno + 1)));
        }
        out.push((id.to_string(), text.to_string()));
    }
    if out.is_empty() {
        return Err(Error::input(format!("{what} is empty")));
    }
    Ok(out)
}

pub fn read_corpus<R: BufRead>(input: R) -> Result<Vec<(String, String)>> {
    read_tsv_pairs(input, "corpus")
}

pub fn read_queries<R: BufRead>(input: R) -> Result<Vec<(String, String)>> {
    read_tsv_pairs(input, "queries")
}

pub fn embed_corpus(docs: &[(String, String)], embedder: &Embedder) -> Result<Vec<DocumentEntry>> {
    docs.iter()
        .map(|(id, text)| DocumentEntry::from_text(id.clone(), text, embedder))
        .collect()
}

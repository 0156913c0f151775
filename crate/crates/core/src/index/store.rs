use std::collections::HashMap;

use crate::corpus::DocumentEntry;
use crate::error::{Error, Result};

/// Dense index of a document inside an [`EmbeddingStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DocId(pub u32);

impl DocId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Contiguous range of embeddings owned by one document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DocSpan {
    pub start: u64,
    pub len: u32,
}

/// All document embeddings, concatenated in corpus order. Embedding ids are
/// global indices into this sequence.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: Vec<f32>,
    spans: Vec<DocSpan>,
    doc_ids: Vec<String>,
    owner: Vec<DocId>,
    by_name: HashMap<String, DocId>,
}

impl PartialEq for EmbeddingStore {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.spans == other.spans
            && self.doc_ids == other.doc_ids
            && self.vectors.len() == other.vectors.len()
            && self
                .vectors
                .iter()
                .zip(&other.vectors)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl EmbeddingStore {
    pub fn from_documents(docs: &[DocumentEntry]) -> Result<Self> {
        let Some(first) = docs.first() else {
            return Err(Error::input("cannot build a store from an empty corpus"));
        };
        let dim = first.embeddings()[0].dim();
        let mut vectors = Vec::with_capacity(docs.iter().map(|d| d.len() * dim).sum());
        let mut spans = Vec::with_capacity(docs.len());
        let mut doc_ids = Vec::with_capacity(docs.len());
        for doc in docs {
            let start = (vectors.len() / dim) as u64;
            for e in doc.embeddings() {
                if e.dim() != dim {
                    return Err(Error::input(format!(
                        "document {:?} has dim {} but the store has dim {dim}",
                        doc.doc_id(),
                        e.dim()
                    )));
                }
                vectors.extend_from_slice(e.as_slice());
            }
            spans.push(DocSpan {
                start,
                len: doc.len() as u32,
            });
            doc_ids.push(doc.doc_id().to_string());
        }
        Self::from_parts(dim, doc_ids, spans, vectors)
    }

    /// Assembles a store from raw parts, checking that the spans partition
    /// the vector sequence in order and that every document is non-empty.
    pub fn from_parts(dim: usize, doc_ids: Vec<String>, spans: Vec<DocSpan>, vectors: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("store dim must be >= 1"));
        }
        if !vectors.len().is_multiple_of(dim) {
            return Err(Error::input("vector buffer is not a multiple of dim"));
        }
        if doc_ids.len() != spans.len() {
            return Err(Error::input("doc id / span count mismatch"));
        }
        if let Some(i) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("embedding component {i} is not finite")));
        }
        let total = (vectors.len() / dim) as u64;
        let mut owner = Vec::with_capacity(total as usize);
        let mut by_name = HashMap::with_capacity(doc_ids.len());
        let mut next = 0u64;
        for (i, (span, name)) in spans.iter().zip(&doc_ids).enumerate() {
            if span.start != next {
                return Err(Error::input(format!(
                    "document {name:?} starts at {} but {next} was expected",
                    span.start
                )));
            }
            if span.len == 0 {
                return Err(Error::input(format!("document {name:?} has no embeddings")));
            }
            next += u64::from(span.len);
            if next > total {
                return Err(Error::input(format!("document {name:?} extends past the store")));
            }
            let id = DocId(i as u32);
            owner.extend(std::iter::repeat_n(id, span.len as usize));
            if by_name.insert(name.clone(), id).is_some() {
                return Err(Error::input(format!("duplicate document id {name:?}")));
            }
        }
        if next != total {
            return Err(Error::input(format!(
                "documents cover {next} embeddings but the store holds {total}"
            )));
        }
        Ok(EmbeddingStore {
            dim,
            vectors,
            spans,
            doc_ids,
            owner,
            by_name,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_docs(&self) -> usize {
        self.spans.len()
    }

    pub fn num_embeddings(&self) -> usize {
        self.owner.len()
    }

    pub fn embedding(&self, id: usize) -> &[f32] {
        &self.vectors[id * self.dim..(id + 1) * self.dim]
    }

    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn owner(&self, embedding_id: usize) -> DocId {
        self.owner[embedding_id]
    }

    pub fn spans(&self) -> &[DocSpan] {
        &self.spans
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_name(&self, doc: DocId) -> Option<&str> {
        self.doc_ids.get(doc.index()).map(String::as_str)
    }

    pub fn lookup(&self, name: &str) -> Option<DocId> {
        self.by_name.get(name).copied()
    }

    /// Flat `len × dim` slice of a document's embeddings.
    pub fn doc_vectors(&self, doc: DocId) -> Option<&[f32]> {
        let span = self.spans.get(doc.index())?;
        let start = span.start as usize * self.dim;
        Some(&self.vectors[start..start + span.len as usize * self.dim])
    }
}

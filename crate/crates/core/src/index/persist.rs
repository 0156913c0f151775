//! Little-endian binary index file.
//!
//! ```text
//! "MVIX" | u32 version | u32 dim | u32 n_list | u64 num_docs | u64 num_embeddings
//! doc table:  num_docs × (u32 name_len, name bytes, u64 start, u32 len)
//! centroids:  n_list × dim × f32
//! lists:      n_list × (u64 count, count × (u64 embedding_id, dim × f32))
//! ```
//!
//! The store vectors are not written separately; they are rebuilt from the
//! lists, which hold every embedding exactly once.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::ivf::{InvertedList, IvfIndex};
use super::kmeans::Centroids;
use super::store::{DocSpan, EmbeddingStore};
use crate::error::{Error, Result};

pub const INDEX_MAGIC: &[u8; 4] = b"MVIX";
pub const INDEX_VERSION: u32 = 1;

pub fn index_to_bytes(index: &IvfIndex) -> Vec<u8> {
    let store = index.store();
    let dim = store.dim();
    let mut out = Vec::with_capacity(32 + store.vectors().len() * 4 + store.num_embeddings() * 8);
    out.extend_from_slice(INDEX_MAGIC);
    out.extend_from_slice(&INDEX_VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(index.n_list() as u32).to_le_bytes());
    out.extend_from_slice(&(store.num_docs() as u64).to_le_bytes());
    out.extend_from_slice(&(store.num_embeddings() as u64).to_le_bytes());
    for (name, span) in store.doc_ids().iter().zip(store.spans()) {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&span.start.to_le_bytes());
        out.extend_from_slice(&span.len.to_le_bytes());
    }
    for v in index.centroids().as_flat() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for list in index.lists() {
        out.extend_from_slice(&(list.len() as u64).to_le_bytes());
        for (id, v) in list.ids.iter().zip(list.vectors.chunks_exact(dim)) {
            out.extend_from_slice(&id.to_le_bytes());
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

pub fn save_index(index: &IvfIndex, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(&index_to_bytes(index))?;
    file.sync_all()?;
    Ok(())
}

pub fn load_index(path: &Path) -> Result<IvfIndex> {
    index_from_bytes(&fs::read(path)?)
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize, section: &'static str) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::corrupt(
                section,
                format!(
                    "truncated: needed {n} bytes at offset {}, {} left",
                    self.pos,
                    self.remaining()
                ),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u32(&mut self, section: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, section)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self, section: &'static str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, section)?.try_into().unwrap()))
    }

    pub(crate) fn f32s(&mut self, n: usize, out: &mut Vec<f32>, section: &'static str) -> Result<()> {
        let bytes = self.take(
            n.checked_mul(4)
                .ok_or_else(|| Error::corrupt(section, "length overflow"))?,
            section,
        )?;
        out.extend(bytes.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())));
        Ok(())
    }

    pub(crate) fn string(&mut self, section: &'static str) -> Result<String> {
        let len = self.u32(section)? as usize;
        let bytes = self.take(len, section)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::corrupt(section, "name is not valid UTF-8"))
    }
}

pub fn index_from_bytes(bytes: &[u8]) -> Result<IvfIndex> {
    let mut r = Reader::new(bytes);
    if r.take(4, "magic")? != INDEX_MAGIC {
        return Err(Error::corrupt("magic", "not an MVIX index file"));
    }
    let version = r.u32("header")?;
    if version != INDEX_VERSION {
        return Err(Error::corrupt("header", format!("unsupported version {version}")));
    }
    let dim = r.u32("header")? as usize;
    let n_list = r.u32("header")? as usize;
    let num_docs = r.u64("header")?;
    let num_embeddings = r.u64("header")?;
    if dim == 0 || n_list == 0 {
        return Err(Error::corrupt("header", format!("dim = {dim}, n_list = {n_list}")));
    }

    // Lower bound on the body size; rejects headers that overstate the
    // content before anything is allocated.
    let min_body = (|| {
        let docs = num_docs.checked_mul(16)?;
        let centroids = (n_list as u64).checked_mul(dim as u64 * 4)?;
        let lists = (n_list as u64).checked_mul(8)?;
        let entries = num_embeddings.checked_mul(8 + dim as u64 * 4)?;
        docs.checked_add(centroids)?.checked_add(lists)?.checked_add(entries)
    })();
    let available = r.remaining() as u64;
    if !min_body.is_some_and(|n| n <= available) {
        let detail = format!("truncated: header declares {num_docs} docs and {num_embeddings} embeddings");
        return Err(Error::corrupt(
            "header",
            format!("{detail} but only {available} bytes follow"),
        ));
    }
    let num_docs = num_docs as usize;
    let num_embeddings = num_embeddings as usize;

    let mut doc_ids = Vec::with_capacity(num_docs);
    let mut spans = Vec::with_capacity(num_docs);
    for _ in 0..num_docs {
        doc_ids.push(r.string("doc table")?);
        let start = r.u64("doc table")?;
        let len = r.u32("doc table")?;
        spans.push(DocSpan { start, len });
    }

    let mut centroid_values = Vec::with_capacity(n_list * dim);
    r.f32s(n_list * dim, &mut centroid_values, "centroids")?;
    let centroids = Centroids::new(dim, centroid_values).map_err(|e| Error::corrupt("centroids", e.to_string()))?;

    let mut vectors = vec![0.0f32; num_embeddings * dim];
    let mut filled = vec![false; num_embeddings];
    let mut lists = Vec::with_capacity(n_list);
    for c in 0..n_list {
        let count = r.u64("lists")?;
        if count > (r.remaining() / (8 + dim * 4)) as u64 {
            return Err(Error::corrupt(
                "lists",
                format!("truncated: list {c} declares {count} entries"),
            ));
        }
        let mut list = InvertedList {
            ids: Vec::with_capacity(count as usize),
            vectors: Vec::with_capacity(count as usize * dim),
        };
        for _ in 0..count {
            let id = r.u64("lists")?;
            let slot = filled
                .get_mut(id as usize)
                .ok_or_else(|| Error::corrupt("lists", format!("embedding id {id} out of range in list {c}")))?;
            if std::mem::replace(slot, true) {
                return Err(Error::corrupt("lists", format!("embedding id {id} stored twice")));
            }
            let start = list.vectors.len();
            r.f32s(dim, &mut list.vectors, "lists")?;
            let id = id as usize;
            vectors[id * dim..(id + 1) * dim].copy_from_slice(&list.vectors[start..]);
            list.ids.push(id as u64);
        }
        lists.push(list);
    }
    if let Some(missing) = filled.iter().position(|f| !f) {
        return Err(Error::corrupt("lists", format!("embedding id {missing} is missing")));
    }
    if r.remaining() != 0 {
        return Err(Error::corrupt(
            "trailer",
            format!("{} unexpected trailing bytes", r.remaining()),
        ));
    }

    let store = EmbeddingStore::from_parts(dim, doc_ids, spans, vectors)
        .map_err(|e| Error::corrupt("doc table", e.to_string()))?;
    IvfIndex::from_parts(store, centroids, lists).map_err(|e| Error::corrupt("lists", e.to_string()))
}

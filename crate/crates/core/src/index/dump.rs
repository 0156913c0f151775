//! External embedding dumps, for indexing vectors produced by a real
//! encoder.
//!
//! ```text
//! "MVED" | u32 version=1 | u32 dim | u64 num_docs
//! per doc: u32 name_len, name, u32 num_embeddings, num_embeddings × dim × f32
//! ```
//! All integers and floats are little-endian.

use std::fs;
use std::path::Path;

use super::persist::Reader;
use crate::embed::Embedding;
use crate::error::{Error, Result};

pub const DUMP_MAGIC: &[u8; 4] = b"MVED";
pub const DUMP_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DumpedDocument {
    pub doc_id: String,
    pub embeddings: Vec<Embedding>,
}

pub fn dump_to_bytes(dim: usize, docs: &[DumpedDocument]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(DUMP_MAGIC);
    out.extend_from_slice(&DUMP_VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(docs.len() as u64).to_le_bytes());
    for doc in docs {
        out.extend_from_slice(&(doc.doc_id.len() as u32).to_le_bytes());
        out.extend_from_slice(doc.doc_id.as_bytes());
        out.extend_from_slice(&(doc.embeddings.len() as u32).to_le_bytes());
        for e in &doc.embeddings {
            for x in e.as_slice() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

/// Decodes a dump. Every document must carry at least one embedding of the
/// declared dimension with finite values.
pub fn dump_from_bytes(bytes: &[u8]) -> Result<(usize, Vec<DumpedDocument>)> {
    let mut r = Reader::new(bytes);
    if r.take(4, "dump magic")? != DUMP_MAGIC {
        return Err(Error::corrupt("dump magic", "not an MVED embedding dump"));
    }
    let version = r.u32("dump header")?;
    if version != DUMP_VERSION {
        return Err(Error::corrupt("dump header", format!("unsupported version {version}")));
    }
    let dim = r.u32("dump header")? as usize;
    let num_docs = r.u64("dump header")?;
    if dim == 0 {
        return Err(Error::corrupt("dump header", "dim = 0"));
    }
    if num_docs > (r.remaining() / 8) as u64 {
        return Err(Error::corrupt(
            "dump header",
            format!("truncated: declares {num_docs} documents"),
        ));
    }
    let mut docs = Vec::with_capacity(num_docs as usize);
    for _ in 0..num_docs {
        let doc_id = r.string("dump documents")?;
        let n = r.u32("dump documents")? as usize;
        if n == 0 {
            return Err(Error::input(format!("dumped document {doc_id:?} has no embeddings")));
        }
        let mut flat = Vec::new();
        r.f32s(n * dim, &mut flat, "dump documents")?;
        let embeddings = flat
            .chunks_exact(dim)
            .map(|c| Embedding::new(c.to_vec()))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::input(format!("dumped document {doc_id:?}: {e}")))?;
        docs.push(DumpedDocument { doc_id, embeddings });
    }
    if r.remaining() != 0 {
        return Err(Error::corrupt(
            "dump trailer",
            format!("{} unexpected trailing bytes", r.remaining()),
        ));
    }
    Ok((dim, docs))
}

pub fn read_embedding_dump(path: &Path) -> Result<(usize, Vec<DumpedDocument>)> {
    dump_from_bytes(&fs::read(path)?)
}

pub fn write_embedding_dump(path: &Path, dim: usize, docs: &[DumpedDocument]) -> Result<()> {
    fs::write(path, dump_to_bytes(dim, docs))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(name: &str, vs: &[[f32; 2]]) -> DumpedDocument {
        DumpedDocument {
            doc_id: name.into(),
            embeddings: vs.iter().map(|v| Embedding::new(v.to_vec()).unwrap()).collect(),
        }
    }

    #[test]
    fn round_trip() {
        let docs = vec![doc("a", &[[1.0, 2.0]]), doc("bé", &[[0.5, -0.5], [3.0, 4.0]])];
        let bytes = dump_to_bytes(2, &docs);
        assert_eq!(&bytes[..4], b"MVED");
        assert_eq!(dump_from_bytes(&bytes).unwrap(), (2, docs));
    }

    #[test]
    fn rejects_bad_files() {
        let bytes = dump_to_bytes(2, &[doc("a", &[[1.0, 2.0]])]);
        assert!(matches!(
            dump_from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::CorruptIndex { .. })
        ));
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(matches!(
            dump_from_bytes(&wrong),
            Err(Error::CorruptIndex {
                section: "dump magic",
                ..
            })
        ));
        let mut nan = bytes;
        let at = nan.len() - 4;
        nan[at..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(dump_from_bytes(&nan), Err(Error::InvalidInput(_))));
    }
}

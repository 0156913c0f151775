//! Document-embedding store, coarse centroid training, the IVF index and
//! its on-disk formats.

pub mod dump;
pub mod ivf;
pub mod kmeans;
pub mod persist;
pub mod store;

pub use dump::{read_embedding_dump, write_embedding_dump, DumpedDocument};
pub use ivf::{build_ivf, EmbeddingHit, InvertedList, IvfIndex};
pub use kmeans::{default_n_list, train_centroids, train_centroids_traced, Centroids, KMeansParams};
pub use persist::{index_from_bytes, index_to_bytes, load_index, save_index};
pub use store::{DocId, DocSpan, EmbeddingStore};

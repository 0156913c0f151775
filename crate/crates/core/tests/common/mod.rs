//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use mve::corpus::DocumentEntry;
use mve::index::{build_ivf, train_centroids, EmbeddingStore, KMeansParams};
use mve::{Embedding, QueryRepresentation, Token};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector(rng: &mut impl Rng, dim: usize) -> Vec<f32> {
    let mut v: Vec<f32> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = v.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt() as f32;
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

pub fn document(name: &str, vectors: Vec<Vec<f32>>) -> DocumentEntry {
    let tokens = (0..vectors.len())
        .map(|i| Token::wordpiece(format!("t{i}"), i))
        .collect();
    let embeddings = vectors.into_iter().map(|v| Embedding::new(v).unwrap()).collect();
    DocumentEntry::new(name, tokens, embeddings).unwrap()
}

/// A query with `words` wordpieces padded by masks to `q_len`, with random
/// embeddings.
pub fn random_query(rng: &mut impl Rng, words: usize, q_len: usize, dim: usize) -> QueryRepresentation {
    let words = words.min(q_len - 1);
    let mut tokens = vec![Token::cls()];
    tokens.extend((1..=words).map(|i| Token::wordpiece(format!("w{i}"), i)));
    tokens.extend((words + 1..q_len).map(Token::mask));
    let embeddings = (0..q_len)
        .map(|_| Embedding::new(unit_vector(rng, dim)).unwrap())
        .collect();
    QueryRepresentation::new(tokens, embeddings).unwrap()
}

/// Documents with a random number of embeddings in `len`.
pub fn random_documents(seed: u64, num_docs: usize, len: (usize, usize), dim: usize) -> Vec<DocumentEntry> {
    let mut r = rng(seed);
    (0..num_docs)
        .map(|i| {
            let n = r.random_range(len.0..=len.1);
            document(
                &format!("doc{i:05}"),
                (0..n).map(|_| unit_vector(&mut r, dim)).collect(),
            )
        })
        .collect()
}

pub fn random_index(
    seed: u64,
    num_docs: usize,
    len: (usize, usize),
    dim: usize,
    n_list: usize,
) -> mve::index::IvfIndex {
    let docs = random_documents(seed, num_docs, len, dim);
    let store = EmbeddingStore::from_documents(&docs).unwrap();
    let sample_fraction = if store.num_embeddings() < 1000 { 1.0 } else { 0.2 };
    let centroids = train_centroids(
        &store,
        &KMeansParams {
            sample_fraction,
            n_list,
            iterations: 10,
            seed,
        },
    )
    .unwrap();
    build_ivf(store, centroids).unwrap()
}

/// f32 dot product in index order, matching how the ANN stage scores.
pub fn dot32(a: &[f32], b: &[f32]) -> f32 {
    let mut s = 0.0f32;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Exhaustive top-k over every stored embedding by (score desc, id asc).
pub fn brute_top_k(store: &EmbeddingStore, q: &[f32], k: usize) -> Vec<u64> {
    let mut all: Vec<(f32, u64)> = (0..store.num_embeddings())
        .map(|i| (dot32(q, store.embedding(i)), i as u64))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, id)| id).collect()
}

/// MaxSim through an explicit |q| × |d| similarity matrix.
pub fn dense_maxsim(q: &[&[f32]], d: &[&[f32]]) -> f64 {
    let matrix: Vec<Vec<f64>> = q
        .iter()
        .map(|qi| {
            d.iter()
                .map(|dj| {
                    qi.iter()
                        .zip(dj.iter())
                        .map(|(a, b)| f64::from(*a) * f64::from(*b))
                        .sum()
                })
                .collect()
        })
        .collect();
    let mut total = 0.0;
    for row in &matrix {
        let mut best = f64::NEG_INFINITY;
        for &s in row {
            if s > best {
                best = s;
            }
        }
        total += best;
    }
    total
}

pub fn query_slices(q: &QueryRepresentation) -> Vec<&[f32]> {
    q.embeddings().iter().map(|e| e.as_slice()).collect()
}

pub fn set<T: Ord + Clone>(items: &[T]) -> BTreeSet<T> {
    items.iter().cloned().collect()
}

/// Paired samples shared by the significance tests.
pub const A: [f64; 30] = [
    0.423, 0.26, 0.243, 0.299, 0.708, 0.301, 0.406, 0.647, 0.531, 0.851, 0.491, 0.437, 0.591, 0.273, 0.822, 0.399,
    0.41, 0.646, 0.222, 0.628, 0.78, 0.371, 0.857, 0.523, 0.72, 0.475, 0.422, 0.316, 0.106, 0.263,
];
pub const B: [f64; 30] = [
    0.305, 0.219, 0.214, 0.196, 0.655, 0.185, 0.395, 0.66, 0.424, 0.874, 0.406, 0.386, 0.474, 0.163, 0.76, 0.443,
    0.456, 0.615, 0.133, 0.664, 0.758, 0.406, 0.854, 0.572, 0.714, 0.436, 0.438, 0.232, 0.147, 0.277,
];

/// Two-sided p for Student t with an odd number of degrees of freedom,
/// integrating the density numerically. The normalising constant uses
/// Gamma at integers and half-integers, which have product forms.
pub fn two_sided_p(t: f64, df: u32) -> f64 {
    assert!(df % 2 == 1);
    let nu = f64::from(df);
    let gamma_int = |n: u32| (1..n).map(f64::from).product::<f64>();
    let gamma_half = |n: u32| (0..n).map(|k| k as f64 + 0.5).product::<f64>() * std::f64::consts::PI.sqrt();
    // Gamma((nu + 1) / 2) / Gamma(nu / 2), with nu / 2 = (df - 1) / 2 + 0.5
    let c = gamma_int(df.div_ceil(2)) / gamma_half((df - 1) / 2) / (nu * std::f64::consts::PI).sqrt();
    let density = |x: f64| c * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0);
    let (lo, hi, n) = (t.abs(), 400.0, 400_000);
    let h = (hi - lo) / n as f64;
    let mut s = density(lo) + density(hi);
    for i in 1..n {
        s += density(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 * s * h / 3.0
}

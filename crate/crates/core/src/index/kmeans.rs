//! Spherical k-means for the coarse quantizer.
//!
//! Training runs on L2-normalized copies of a random sample of the stored
//! embeddings. Points are assigned to the centroid with the largest dot
//! product and centroids are re-estimated as normalized means, so the mean
//! similarity to the assigned centroid never decreases between iterations.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::store::EmbeddingStore;
use crate::embed::{dot, normalize};
use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_FRACTION: f64 = 0.05;
pub const DEFAULT_ITERATIONS: usize = 20;

/// `max(1, floor(sqrt(num_embeddings)))`.
pub fn default_n_list(num_embeddings: usize) -> usize {
    (num_embeddings as f64).sqrt().floor().max(1.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansParams {
    pub sample_fraction: f64,
    pub n_list: usize,
    pub iterations: usize,
    pub seed: u64,
}

/// Unit-norm centroids, `n_list × dim`, row-major.
#[derive(Debug, Clone)]
pub struct Centroids {
    dim: usize,
    vectors: Vec<f32>,
}

impl PartialEq for Centroids {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.vectors.len() == other.vectors.len()
            && self
                .vectors
                .iter()
                .zip(&other.vectors)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Centroids {
    pub fn new(dim: usize, vectors: Vec<f32>) -> Result<Self> {
        if dim == 0 || vectors.is_empty() || !vectors.len().is_multiple_of(dim) {
            return Err(Error::input(format!(
                "centroid buffer of {} values does not hold whole vectors of dim {dim}",
                vectors.len()
            )));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("centroid contains a non-finite value"));
        }
        Ok(Centroids { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_list(&self) -> usize {
        self.vectors.len() / self.dim
    }

    pub fn centroid(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_flat(&self) -> &[f32] {
        &self.vectors
    }

    /// Index of the most similar centroid; ties go to the lowest index.
    pub fn nearest(&self, v: &[f32]) -> (usize, f32) {
        let mut best = (0, f32::NEG_INFINITY);
        for (i, c) in self.vectors.chunks_exact(self.dim).enumerate() {
            let s = dot(v, c);
            if s > best.1 {
                best = (i, s);
            }
        }
        best
    }
}

/// Trains centroids and returns them with the objective after
/// initialization and after every iteration.
pub fn train_centroids_traced(store: &EmbeddingStore, params: &KMeansParams) -> Result<(Centroids, Vec<f64>)> {
    if !(params.sample_fraction > 0.0 && params.sample_fraction <= 1.0) {
        return Err(Error::config(format!(
            "sample_fraction must be in (0, 1] (got {})",
            params.sample_fraction
        )));
    }
    if params.n_list == 0 {
        return Err(Error::config("n_list must be >= 1"));
    }
    if params.iterations == 0 {
        return Err(Error::config("iterations must be >= 1"));
    }
    let total = store.num_embeddings();
    let sample_size = ((total as f64 * params.sample_fraction).ceil() as usize).clamp(1, total.max(1));
    if total == 0 || params.n_list > sample_size {
        return Err(Error::config(format!(
            "n_list = {} exceeds the training sample of {sample_size} embeddings",
            params.n_list
        )));
    }

    let dim = store.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut picked = sample(&mut rng, total, sample_size).into_vec();
    picked.sort_unstable();
    let mut points = Vec::with_capacity(sample_size * dim);
    for &i in &picked {
        let start = points.len();
        points.extend_from_slice(store.embedding(i));
        normalize(&mut points[start..]);
    }

    let mut centroids = kmeans_pp_init(&points, dim, params.n_list, &mut rng);
    let mut trace = vec![objective(&points, &centroids, dim)];
    for _ in 0..params.iterations {
        let assigned = assign(&points, &centroids, dim);
        update(&points, &assigned, &mut centroids, dim);
        trace.push(objective(&points, &centroids, dim));
    }
    Ok((Centroids::new(dim, centroids)?, trace))
}

pub fn train_centroids(store: &EmbeddingStore, params: &KMeansParams) -> Result<Centroids> {
    train_centroids_traced(store, params).map(|(c, _)| c)
}

fn kmeans_pp_init(points: &[f32], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let n = points.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut chosen = vec![false; n];
    let mut centroids = Vec::with_capacity(k * dim);

    let first = rng.random_range(0..n);
    chosen[first] = true;
    centroids.extend_from_slice(row(first));
    let mut best_sim: Vec<f32> = (0..n).map(|i| dot(row(i), row(first))).collect();

    while centroids.len() < k * dim {
        // squared euclidean distance between unit vectors
        let weights: Vec<f64> = best_sim
            .iter()
            .zip(&chosen)
            .map(|(s, &c)| if c { 0.0 } else { (2.0 - 2.0 * f64::from(*s)).max(0.0) })
            .collect();
        let total: f64 = weights.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            weights
                .iter()
                .position(|w| {
                    acc += w;
                    *w > 0.0 && acc > target
                })
                .unwrap_or_else(|| weights.iter().rposition(|w| *w > 0.0).unwrap())
        } else {
            // remaining points duplicate existing centroids
            chosen.iter().position(|c| !c).unwrap()
        };
        chosen[next] = true;
        centroids.extend_from_slice(row(next));
        for (i, s) in best_sim.iter_mut().enumerate() {
            *s = s.max(dot(row(i), row(next)));
        }
    }
    centroids
}

struct Assignment {
    cluster: Vec<usize>,
    sim: Vec<f32>,
}

fn assign(points: &[f32], centroids: &[f32], dim: usize) -> Assignment {
    let view = Centroids {
        dim,
        vectors: centroids.to_vec(),
    };
    let (cluster, sim) = points.par_chunks_exact(dim).map(|p| view.nearest(p)).unzip();
    Assignment { cluster, sim }
}

fn update(points: &[f32], assigned: &Assignment, centroids: &mut [f32], dim: usize) {
    let k = centroids.len() / dim;
    let mut sums = vec![0.0f64; k * dim];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.chunks_exact(dim).zip(&assigned.cluster) {
        counts[c] += 1;
        for (s, x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(p) {
            *s += f64::from(*x);
        }
    }

    // Empty clusters take the points worst served by their centroid.
    let mut worst: Vec<usize> = (0..assigned.sim.len()).collect();
    worst.sort_by(|&a, &b| assigned.sim[a].total_cmp(&assigned.sim[b]).then(a.cmp(&b)));
    let mut donors = worst.into_iter();

    for c in 0..k {
        let target = &mut centroids[c * dim..(c + 1) * dim];
        if counts[c] > 0 {
            for (t, s) in target.iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                *t = (*s / counts[c] as f64) as f32;
            }
            normalize(target);
        } else if let Some(p) = donors.next() {
            target.copy_from_slice(&points[p * dim..(p + 1) * dim]);
        }
    }
}

fn objective(points: &[f32], centroids: &[f32], dim: usize) -> f64 {
    let assigned = assign(points, centroids, dim);
    let n = assigned.sim.len();
    assigned.sim.iter().map(|s| f64::from(*s)).sum::<f64>() / n as f64
}

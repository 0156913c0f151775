//! Embedding vectors and the deterministic token embedder.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::text::Token;

/// A dense, finite, non-empty `f32` vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f32>);

impl Embedding {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("embedding has dimension 0"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "embedding component {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Embedding(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }
}

impl AsRef<[f32]> for Embedding {
    fn as_ref(&self) -> &[f32] {
        &self.0
    }
}

/// Sequential dot product. The summation order is fixed (left to right) so
/// that any scan using this function is bitwise reproducible.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scales `v` to unit L2 norm in place. Zero vectors are left untouched.
pub fn normalize(v: &mut [f32]) {
    let norm = v.iter().map(|x| f64::from(*x) * f64::from(*x)).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x = (f64::from(*x) / norm) as f32;
        }
    }
}

/// Context-free stand-in for a neural encoder: token id `t` maps to a unit
/// vector drawn from a standard normal using a ChaCha8 stream keyed on
/// `(seed, t)`. Queries and documents share the same function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Embedder {
    dim: usize,
    seed: u64,
}

impl Embedder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("embedding dim must be >= 1"));
        }
        Ok(Embedder { dim, seed })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn embed_id(&self, token_id: u64) -> Embedding {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(token_id);
        let mut values: Vec<f32> = (0..self.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        normalize(&mut values);
        Embedding(values)
    }

    pub fn embed_tokens(&self, tokens: &[Token]) -> Vec<Embedding> {
        tokens.iter().map(|t| self.embed_id(t.id)).collect()
    }
}

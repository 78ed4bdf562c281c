use std::collections::HashMap;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use super::MetricsError;
use crate::text::{sha256_hex, word_tokens};

#[derive(Debug, Clone, Error)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    Unavailable(String),
}

/// Sentence-embedding source. Implementations must be deterministic for a
/// given text to keep evaluation reproducible.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError>;
}

/// Deterministic local provider: seeded random projection of bag-of-words
/// counts. Texts sharing vocabulary land near each other; identical texts
/// embed identically.
pub struct HashingProvider {
    pub dim: usize,
}

impl Default for HashingProvider {
    fn default() -> Self {
        HashingProvider { dim: 64 }
    }
}

impl EmbeddingProvider for HashingProvider {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let mut acc = vec![0.0f64; self.dim];
        for token in word_tokens(text) {
            let mut seed = [0u8; 32];
            let digest = sha256_hex(&token);
            seed.copy_from_slice(&digest.as_bytes()[..32]);
            let mut rng = ChaCha20Rng::from_seed(seed);
            for slot in acc.iter_mut() {
                *slot += rng.random_range(-1.0..1.0);
            }
        }
        Ok(acc)
    }
}

/// Fixed text → vector table for tests.
pub struct StubProvider {
    pub table: HashMap<String, Vec<f64>>,
    pub fail: bool,
}

impl StubProvider {
    pub fn new(entries: &[(&str, Vec<f64>)]) -> Self {
        StubProvider {
            table: entries
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
            fail: false,
        }
    }

    pub fn unavailable() -> Self {
        StubProvider {
            table: HashMap::new(),
            fail: true,
        }
    }
}

impl EmbeddingProvider for StubProvider {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        if self.fail {
            return Err(ProviderError::Unavailable("stub marked offline".into()));
        }
        self.table
            .get(text)
            .cloned()
            .ok_or_else(|| ProviderError::Unavailable(format!("no stub vector for {text:?}")))
    }
}

/// Wraps a provider with a by-text-hash cache so repeated references embed
/// once. Population is single-flight per key under the map lock.
pub struct CachingProvider<P> {
    inner: P,
    cache: Mutex<HashMap<String, Vec<f64>>>,
}

impl<P: EmbeddingProvider> CachingProvider<P> {
    pub fn new(inner: P) -> Self {
        CachingProvider {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn cached_len(&self) -> usize {
        self.cache.lock().unwrap().len()
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachingProvider<P> {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let key = sha256_hex(text);
        let mut cache = self.cache.lock().unwrap();
        if let Some(hit) = cache.get(&key) {
            return Ok(hit.clone());
        }
        let vector = self.inner.embed(text)?;
        cache.insert(key, vector.clone());
        Ok(vector)
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

/// Max cosine similarity between the candidate and any reference, clamped
/// to [0, 1]. Provider failure propagates so callers can mark the score
/// absent rather than zero.
pub fn embed_similarity(
    candidate: &str,
    references: &[String],
    provider: &dyn EmbeddingProvider,
) -> Result<f64, MetricsError> {
    if candidate.trim().is_empty() {
        return Err(MetricsError::EmptyCandidate);
    }
    if references.is_empty() {
        return Err(MetricsError::EmptyReferences);
    }
    let cand = provider
        .embed(candidate)
        .map_err(|e| MetricsError::ProviderUnavailable(e.to_string()))?;
    let mut best = f64::NEG_INFINITY;
    for reference in references {
        let r = provider
            .embed(reference)
            .map_err(|e| MetricsError::ProviderUnavailable(e.to_string()))?;
        best = best.max(cosine(&cand, &r));
    }
    Ok(best.clamp(0.0, 1.0))
}

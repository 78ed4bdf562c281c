use serde::{Deserialize, Serialize};

use super::SelectionIndex;
use crate::encoder::EmbeddingVector;

pub const INDEX_SCHEMA_VERSION: u32 = 1;

/// Serialized selection index: clustering plus everything needed to reuse
/// the pool embeddings without re-encoding (record ids, their embeddings,
/// the vocabulary, and the encoder provenance hashes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexFile {
    pub schema_version: u32,
    pub k: usize,
    pub kmeans_seed: u64,
    pub encoder_seed: u64,
    pub encoder_params_hash: String,
    pub vocab_hash: String,
    pub vocab_labels: Vec<String>,
    pub record_ids: Vec<String>,
    pub embeddings: Vec<[f64; 2]>,
    pub centroids: Vec<[f64; 2]>,
    pub assignments: Vec<usize>,
}

impl IndexFile {
    pub fn selection_index(&self) -> SelectionIndex {
        SelectionIndex {
            centroids: self.centroids.clone(),
            assignments: self.assignments.clone(),
            k: self.k,
            rng_seed: self.kmeans_seed,
        }
    }

    pub fn embedding_vectors(&self) -> Vec<EmbeddingVector> {
        self.embeddings.iter().map(|&e| EmbeddingVector(e)).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("index serialization");
        s.push('\n');
        s
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}

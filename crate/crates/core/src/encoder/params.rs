use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{EMBED_DIM, NUM_LAYERS, OUTPUT_DIM};

/// Encoder weights, fully determined by `(vocab_size, seed)`.
///
/// Every entry is drawn from `uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))` with
/// `fan_in = 100`, from a ChaCha20 stream seeded with `seed`, in a fixed
/// order: embedding table row-major, the two layer weights row-major, the
/// output projection, then its bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub token_embedding: Vec<Vec<f64>>,
    pub gcn_weights: Vec<Vec<Vec<f64>>>,
    pub output_projection: Vec<Vec<f64>>,
    pub output_bias: Vec<f64>,
    pub seed: u64,
}

impl EncoderParams {
    pub fn init(vocab_size: usize, seed: u64) -> Self {
        assert!(vocab_size >= 1, "vocab_size must be at least 1");
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let bound = 1.0 / (EMBED_DIM as f64).sqrt();
        let mut draw_matrix = |rows: usize, cols: usize| -> Vec<Vec<f64>> {
            (0..rows)
                .map(|_| (0..cols).map(|_| rng.random_range(-bound..bound)).collect())
                .collect()
        };
        let token_embedding = draw_matrix(vocab_size, EMBED_DIM);
        let gcn_weights = (0..NUM_LAYERS)
            .map(|_| draw_matrix(EMBED_DIM, EMBED_DIM))
            .collect();
        let output_projection = draw_matrix(OUTPUT_DIM, EMBED_DIM);
        let output_bias = (0..OUTPUT_DIM)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        EncoderParams {
            token_embedding,
            gcn_weights,
            output_projection,
            output_bias,
            seed,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.token_embedding.len()
    }

    pub fn embed_dim(&self) -> usize {
        EMBED_DIM
    }

    /// SHA-256 over seed and dimensions; identifies the parameter set in
    /// serialized indexes without storing the matrices.
    pub fn content_hash(&self) -> String {
        crate::text::sha256_hex(&format!(
            "encoder-v1:seed={}:vocab={}:dims={}x{}x{}",
            self.seed,
            self.vocab_size(),
            EMBED_DIM,
            NUM_LAYERS,
            OUTPUT_DIM,
        ))
    }

    pub fn descriptor(&self, vocab_hash: &str) -> EncoderDescriptor {
        EncoderDescriptor {
            schema_version: ENCODER_SCHEMA_VERSION,
            seed: self.seed,
            vocab_size: self.vocab_size(),
            vocab_hash: vocab_hash.to_string(),
            embed_dim: EMBED_DIM,
            num_layers: NUM_LAYERS,
            output_dim: OUTPUT_DIM,
        }
    }
}

pub const ENCODER_SCHEMA_VERSION: u32 = 1;

/// Versioned on-disk form of the encoder: seed and dimensions suffice to
/// regenerate the full weights, so only provenance is stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderDescriptor {
    pub schema_version: u32,
    pub seed: u64,
    pub vocab_size: usize,
    pub vocab_hash: String,
    pub embed_dim: usize,
    pub num_layers: usize,
    pub output_dim: usize,
}

impl EncoderDescriptor {
    pub fn regenerate(&self) -> EncoderParams {
        EncoderParams::init(self.vocab_size, self.seed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("descriptor serialization");
        s.push('\n');
        s
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}

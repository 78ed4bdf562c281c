//! Scoring of generated utterances: sentence-level BLEU-4, embedding-cosine
//! similarity behind a provider interface, an optional external alignment
//! scorer, paired t-tests for significance markers, and Fleiss' kappa for
//! annotation matrices.

mod bleu;
mod embed;
mod filter;
mod report;
mod stats;

pub use bleu::bleu4;
pub use embed::{
    embed_similarity, CachingProvider, EmbeddingProvider, HashingProvider, ProviderError,
    StubProvider,
};
pub use filter::{quality_filter, AlignScorer, StubAligner};
pub use report::{MethodScores, ReportRow, SampleScore, ScoreReport};
pub use stats::{fleiss_kappa, paired_t_test, TTestOutcome};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("candidate text is empty")]
    EmptyCandidate,
    #[error("reference list is empty")]
    EmptyReferences,
    #[error("paired lists differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 paired samples, got {0}")]
    TooFewSamples(usize),
    #[error("rating matrix rows must all sum to the same rater count")]
    RaggedMatrix,
    #[error("need at least 3 candidate texts, got {0}")]
    TooFewCandidates(usize),
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
}

use super::embed::EmbeddingProvider;
use super::{embed_similarity, MetricsError};

/// External alignment scorer (e.g. an HTTP service wrapping a consistency
/// model). Absence is a supported configuration.
pub trait AlignScorer: Send + Sync {
    fn score(&self, context: &str, claim: &str) -> Result<f64, MetricsError>;
}

/// Fixed-function aligner for tests: scores by shared-word fraction.
pub struct StubAligner;

impl AlignScorer for StubAligner {
    fn score(&self, context: &str, claim: &str) -> Result<f64, MetricsError> {
        let a: std::collections::BTreeSet<String> =
            crate::text::word_tokens(context).into_iter().collect();
        let b: std::collections::BTreeSet<String> =
            crate::text::word_tokens(claim).into_iter().collect();
        if a.is_empty() || b.is_empty() {
            return Ok(0.0);
        }
        Ok(a.intersection(&b).count() as f64 / a.union(&b).count() as f64)
    }
}

/// Keep the top three candidates by mean of the available scores against the
/// original utterance. Ties break by input order; with no aligner the
/// ranking falls back to the embedding score alone.
pub fn quality_filter(
    original: &str,
    generated: &[String],
    embed: &dyn EmbeddingProvider,
    align: Option<&dyn AlignScorer>,
) -> Result<Vec<String>, MetricsError> {
    if generated.len() < 3 {
        return Err(MetricsError::TooFewCandidates(generated.len()));
    }
    let reference = vec![original.to_string()];
    let mut scored: Vec<(usize, f64)> = Vec::with_capacity(generated.len());
    for (i, candidate) in generated.iter().enumerate() {
        let embed_score = embed_similarity(candidate, &reference, embed)?;
        let score = match align {
            Some(aligner) => (embed_score + aligner.score(original, candidate)?) / 2.0,
            None => embed_score,
        };
        scored.push((i, score));
    }
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    Ok(scored
        .into_iter()
        .take(3)
        .map(|(i, _)| generated[i].clone())
        .collect())
}

use std::collections::HashMap;

use super::MetricsError;
use crate::text::bleu_tokens;

/// Sentence-level BLEU-4.
///
/// Modified n-gram precisions p_1..p_4 clip candidate counts against the
/// maximum count over all references. A zero precision is smoothed to
/// `1 / (2 * candidate_length)`; orders for which the candidate has no
/// n-grams at all (length < n) are dropped from the geometric mean. The
/// brevity penalty uses the reference length closest to the candidate
/// length (ties to the shorter): `min(1, exp(1 - r/c))`.
pub fn bleu4(candidate: &str, references: &[String]) -> Result<f64, MetricsError> {
    let cand = bleu_tokens(candidate);
    if cand.is_empty() {
        return Err(MetricsError::EmptyCandidate);
    }
    let refs: Vec<Vec<String>> = references.iter().map(|r| bleu_tokens(r)).collect();
    if refs.is_empty() || refs.iter().all(|r| r.is_empty()) {
        return Err(MetricsError::EmptyReferences);
    }

    let c = cand.len();
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=4usize {
        if c < n {
            break;
        }
        let cand_grams = ngram_counts(&cand, n);
        let total: usize = cand_grams.values().sum();
        let mut clipped = 0usize;
        for (gram, &count) in &cand_grams {
            let max_ref = refs
                .iter()
                .map(|r| ngram_counts(r, n).get(gram).copied().unwrap_or(0))
                .max()
                .unwrap_or(0);
            clipped += count.min(max_ref);
        }
        let p = if clipped == 0 {
            1.0 / (2.0 * c as f64)
        } else {
            clipped as f64 / total as f64
        };
        log_sum += p.ln();
        orders += 1;
    }

    // Closest reference length; ties resolved to the shorter reference.
    let r = refs
        .iter()
        .filter(|r| !r.is_empty())
        .map(|r| r.len())
        .min_by_key(|&len| (len.abs_diff(c), len))
        .unwrap_or(c);
    let bp = if c >= r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };

    Ok(bp * (log_sum / orders as f64).exp())
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for window in tokens.windows(n) {
        *counts.entry(window).or_insert(0) += 1;
    }
    counts
}

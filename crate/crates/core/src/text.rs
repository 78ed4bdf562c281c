//! Shared text tokenization helpers.

/// Lower-cased alphanumeric/underscore runs; everything else separates.
/// Used by BM25 and the leakage check.
pub fn word_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Lower-cased whitespace split after separating punctuation into its own
/// tokens. Used by BLEU.
pub fn bleu_tokens(text: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(text.len() * 2);
    for c in text.chars() {
        if c.is_alphanumeric() || c.is_whitespace() || c == '\'' {
            spaced.push(c);
        } else {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        }
    }
    spaced
        .split_whitespace()
        .map(|t| t.to_lowercase())
        .collect()
}

/// Rough prompt-size estimate: whitespace token count scaled by 1.3.
pub fn estimate_tokens(text: &str) -> usize {
    let words = text.split_whitespace().count();
    (words as f64 * 1.3).ceil() as usize
}

/// Hex SHA-256 of a string, used wherever a stable content key is needed
/// (prompt hashes, cache keys, canned-response lookup).
pub fn sha256_hex(text: &str) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_tokens_split_on_punctuation_keep_identifiers() {
        assert_eq!(
            word_tokens("SELECT dog_id, name FROM Dogs!"),
            vec!["select", "dog_id", "name", "from", "dogs"]
        );
    }

    #[test]
    fn bleu_tokens_separate_punctuation() {
        assert_eq!(
            bleu_tokens("How many dogs?"),
            vec!["how", "many", "dogs", "?"]
        );
        assert_eq!(bleu_tokens("the cat sat."), vec!["the", "cat", "sat", "."]);
    }

    #[test]
    fn estimate_scales_word_count() {
        assert_eq!(estimate_tokens("one two three four"), 6); // ceil(4 * 1.3)
        assert_eq!(estimate_tokens(""), 0);
    }
}

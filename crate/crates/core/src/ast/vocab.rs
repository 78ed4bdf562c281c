use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AstError, AstGraph};

pub const UNK_ID: u32 = 0;
pub const PAD_ID: u32 = 1;

/// Index tokenizer: maps node labels to dense ids, lexicographically
/// assigned after the reserved UNK and PAD slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenVocab {
    ids: BTreeMap<String, u32>,
}

impl TokenVocab {
    pub fn id_of(&self, label: &str) -> u32 {
        self.ids.get(label).copied().unwrap_or(UNK_ID)
    }

    /// Total table size including the two reserved ids.
    pub fn len(&self) -> usize {
        self.ids.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Labels in id order (excludes UNK/PAD).
    pub fn labels(&self) -> Vec<String> {
        self.ids.keys().cloned().collect()
    }

    pub fn from_labels(labels: impl IntoIterator<Item = String>) -> Self {
        let unique: std::collections::BTreeSet<String> = labels.into_iter().collect();
        let ids = unique
            .into_iter()
            .enumerate()
            .map(|(i, label)| (label, i as u32 + 2))
            .collect();
        TokenVocab { ids }
    }

    /// SHA-256 over the ordered label list, for params/index provenance.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for label in self.ids.keys() {
            hasher.update(label.as_bytes());
            hasher.update([0u8]);
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Build the vocabulary over every label occurring in the corpus.
pub fn build_vocab(corpus: &[AstGraph]) -> Result<TokenVocab, AstError> {
    if corpus.is_empty() {
        return Err(AstError::EmptyCorpus);
    }
    Ok(TokenVocab::from_labels(
        corpus
            .iter()
            .flat_map(|g| g.nodes.iter().cloned()),
    ))
}

/// Fill `node_tokens` from the vocabulary; unseen labels map to UNK.
pub fn tokenize(graph: &AstGraph, vocab: &TokenVocab) -> AstGraph {
    let mut out = graph.clone();
    out.node_tokens = out.nodes.iter().map(|label| vocab.id_of(label)).collect();
    out
}

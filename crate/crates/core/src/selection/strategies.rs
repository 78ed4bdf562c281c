use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{DemoPool, SelectionError, SelectionIndex};
use crate::encoder::EmbeddingVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ZeroShot,
    Random,
    Bm25,
    AstIcl,
    AstIclTop,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Strategy::ZeroShot => "zero_shot",
            Strategy::Random => "random",
            Strategy::Bm25 => "bm25",
            Strategy::AstIcl => "ast_icl",
            Strategy::AstIclTop => "ast_icl_top",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero_shot" => Ok(Strategy::ZeroShot),
            "random" => Ok(Strategy::Random),
            "bm25" => Ok(Strategy::Bm25),
            "ast_icl" => Ok(Strategy::AstIcl),
            "ast_icl_top" => Ok(Strategy::AstIclTop),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

/// How demonstration pairs are arranged in the rendered prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoOrder {
    /// Nearest demonstration adjacent to the test seed.
    #[default]
    SimilarLast,
    SimilarFirst,
    /// Keep whatever order the strategy produced.
    AsSelected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedDemo {
    pub record_id: String,
    pub sql: String,
    pub utterance: Option<String>,
    /// Strategy-defined similarity: Euclidean distance for the embedding
    /// strategies (lower is closer), BM25 score for bm25 (higher is closer),
    /// absent for random sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedDemos {
    pub strategy: Strategy,
    pub pairs: Vec<SelectedDemo>,
    /// Arrangement of `pairs` as returned by the strategy.
    pub order: DemoOrder,
}

impl SelectedDemos {
    pub fn empty(strategy: Strategy) -> Self {
        SelectedDemos {
            strategy,
            pairs: Vec::new(),
            order: DemoOrder::AsSelected,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs rearranged for prompt rendering. Unranked selections are left
    /// as-is regardless of the requested order.
    pub fn arranged(&self, order: DemoOrder) -> Vec<SelectedDemo> {
        let mut pairs = self.pairs.clone();
        match (self.order, order) {
            (DemoOrder::SimilarLast, DemoOrder::SimilarFirst)
            | (DemoOrder::SimilarFirst, DemoOrder::SimilarLast) => pairs.reverse(),
            _ => {}
        }
        pairs
    }
}

fn demo(pool: &DemoPool, index: usize, score: Option<f64>) -> SelectedDemo {
    let record = &pool.records[index];
    SelectedDemo {
        record_id: record.id.clone(),
        sql: record.sql.clone(),
        utterance: record.utterance.clone(),
        score,
    }
}

/// Pool indices eligible for selection: everything except the test record.
fn eligible(pool: &DemoPool, exclude_id: Option<&str>) -> Vec<usize> {
    (0..pool.len())
        .filter(|&i| exclude_id != Some(pool.records[i].id.as_str()))
        .collect()
}

/// Uniform sample of `n` records without replacement.
pub fn select_random(
    pool: &DemoPool,
    n: usize,
    rng_seed: u64,
    exclude_id: Option<&str>,
) -> Result<SelectedDemos, SelectionError> {
    if pool.is_empty() {
        return Err(SelectionError::EmptyPool);
    }
    let candidates = eligible(pool, exclude_id);
    if candidates.len() < n {
        return Err(SelectionError::PoolTooSmall {
            pool: candidates.len(),
            wanted: n,
        });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    let picks = sample(&mut rng, candidates.len(), n);
    Ok(SelectedDemos {
        strategy: Strategy::Random,
        pairs: picks.iter().map(|i| demo(pool, candidates[i], None)).collect(),
        order: DemoOrder::AsSelected,
    })
}

/// Okapi BM25 over the pool SQL texts; top n by (score desc, index asc),
/// returned best-first.
pub fn select_bm25(
    test_sql: &str,
    pool: &DemoPool,
    n: usize,
    exclude_id: Option<&str>,
) -> Result<SelectedDemos, SelectionError> {
    if pool.is_empty() {
        return Err(SelectionError::EmptyPool);
    }
    let candidates = eligible(pool, exclude_id);
    if candidates.len() < n {
        return Err(SelectionError::PoolTooSmall {
            pool: candidates.len(),
            wanted: n,
        });
    }
    let mut scored: Vec<(usize, f64)> = candidates
        .iter()
        .map(|&i| (i, pool.bm25.score(test_sql, i)))
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    Ok(SelectedDemos {
        strategy: Strategy::Bm25,
        pairs: scored
            .into_iter()
            .take(n)
            .map(|(i, s)| demo(pool, i, Some(s)))
            .collect(),
        order: DemoOrder::SimilarFirst,
    })
}

/// Full scan: the n pool records nearest to the test embedding in Euclidean
/// distance, ties by ascending record index, returned most-similar-last.
pub fn select_ast_icl_top(
    test: &EmbeddingVector,
    pool: &DemoPool,
    n: usize,
    exclude_id: Option<&str>,
) -> Result<SelectedDemos, SelectionError> {
    if pool.is_empty() {
        return Err(SelectionError::EmptyPool);
    }
    let candidates = eligible(pool, exclude_id);
    if candidates.len() < n {
        return Err(SelectionError::PoolTooSmall {
            pool: candidates.len(),
            wanted: n,
        });
    }
    let mut scored: Vec<(usize, f64)> = candidates
        .iter()
        .map(|&i| (i, test.distance(&pool.embeddings[i])))
        .collect();
    scored.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    let mut pairs: Vec<SelectedDemo> = scored
        .into_iter()
        .take(n)
        .map(|(i, d)| demo(pool, i, Some(d)))
        .collect();
    pairs.reverse();
    Ok(SelectedDemos {
        strategy: Strategy::AstIclTop,
        pairs,
        order: DemoOrder::SimilarLast,
    })
}

/// Cluster-then-sample: find the centroid nearest to the test embedding and
/// sample n members of that cluster uniformly; undersized clusters are
/// topped up from next-nearest clusters in centroid-distance order.
pub fn select_ast_icl(
    test: &EmbeddingVector,
    index: &SelectionIndex,
    pool: &DemoPool,
    n: usize,
    rng_seed: u64,
    exclude_id: Option<&str>,
) -> Result<SelectedDemos, SelectionError> {
    if pool.is_empty() {
        return Err(SelectionError::EmptyPool);
    }
    let candidates = eligible(pool, exclude_id);
    if candidates.len() < n {
        return Err(SelectionError::PoolTooSmall {
            pool: candidates.len(),
            wanted: n,
        });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    for cluster in index.centroids_by_distance(&test.0) {
        if chosen.len() == n {
            break;
        }
        let members: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&i| index.assignments[i] == cluster)
            .collect();
        if members.is_empty() {
            continue;
        }
        let take = (n - chosen.len()).min(members.len());
        let picks = sample(&mut rng, members.len(), take);
        chosen.extend(picks.iter().map(|j| members[j]));
    }
    debug_assert_eq!(chosen.len(), n);
    Ok(SelectedDemos {
        strategy: Strategy::AstIcl,
        pairs: chosen
            .into_iter()
            .map(|i| demo(pool, i, Some(test.distance(&pool.embeddings[i]))))
            .collect(),
        order: DemoOrder::AsSelected,
    })
}

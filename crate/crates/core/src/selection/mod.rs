//! Demonstration selection: cluster-then-sample over AST-graph embeddings,
//! full-scan nearest neighbors, and the random / BM25 baselines.

mod bm25;
mod index;
mod kmeans;
mod strategies;

pub use bm25::Bm25Stats;
pub use index::{IndexFile, INDEX_SCHEMA_VERSION};
pub use kmeans::{kmeans, silhouette, KMeansConfig, KMeansResult};
pub use strategies::{
    select_ast_icl, select_ast_icl_top, select_bm25, select_random, DemoOrder, SelectedDemo,
    SelectedDemos, Strategy,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::QueryRecord;
use crate::encoder::EmbeddingVector;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectionError {
    #[error("pool of {pool} records is too small for {wanted}")]
    PoolTooSmall { pool: usize, wanted: usize },
    #[error("demonstration pool is empty")]
    EmptyPool,
    #[error("clustering needs at least 2 clusters, got {0}")]
    DegenerateClustering(usize),
    #[error("pool and embeddings lengths differ: {records} vs {embeddings}")]
    LengthMismatch { records: usize, embeddings: usize },
}

/// The demonstration pool: records, their embeddings, and BM25 statistics
/// over the SQL texts.
#[derive(Debug, Clone)]
pub struct DemoPool {
    pub records: Vec<QueryRecord>,
    pub embeddings: Vec<EmbeddingVector>,
    pub bm25: Bm25Stats,
}

impl DemoPool {
    pub fn new(
        records: Vec<QueryRecord>,
        embeddings: Vec<EmbeddingVector>,
    ) -> Result<Self, SelectionError> {
        if records.len() != embeddings.len() {
            return Err(SelectionError::LengthMismatch {
                records: records.len(),
                embeddings: embeddings.len(),
            });
        }
        let bm25 = Bm25Stats::build(records.iter().map(|r| r.sql.as_str()));
        Ok(DemoPool {
            records,
            embeddings,
            bm25,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// K-means clustering of the pool embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionIndex {
    pub centroids: Vec<[f64; 2]>,
    pub assignments: Vec<usize>,
    pub k: usize,
    pub rng_seed: u64,
}

impl SelectionIndex {
    /// Build by running seeded k-means over the pool embeddings.
    pub fn build(
        pool: &DemoPool,
        k: usize,
        seed: u64,
        max_iters: usize,
        tol: f64,
    ) -> Result<Self, SelectionError> {
        if pool.len() < k {
            return Err(SelectionError::PoolTooSmall {
                pool: pool.len(),
                wanted: k,
            });
        }
        let points: Vec<[f64; 2]> = pool.embeddings.iter().map(|e| e.0).collect();
        let result = kmeans(
            &points,
            &KMeansConfig {
                k,
                seed,
                max_iters,
                tol,
            },
        )?;
        Ok(SelectionIndex {
            centroids: result.centroids,
            assignments: result.assignments,
            k,
            rng_seed: seed,
        })
    }

    pub fn nearest_centroid(&self, point: &[f64; 2]) -> usize {
        nearest(point, &self.centroids)
    }

    /// Centroid indices ordered by distance to `point` (ties by index).
    pub fn centroids_by_distance(&self, point: &[f64; 2]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.centroids.len()).collect();
        order.sort_by(|&a, &b| {
            dist2(point, &self.centroids[a])
                .partial_cmp(&dist2(point, &self.centroids[b]))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        order
    }
}

/// Silhouette of an index's clustering over its pool.
pub fn silhouette_of(pool: &DemoPool, index: &SelectionIndex) -> Result<f64, SelectionError> {
    let points: Vec<[f64; 2]> = pool.embeddings.iter().map(|e| e.0).collect();
    silhouette(&points, &index.assignments, index.k)
}

pub(crate) fn dist2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

pub(crate) fn nearest(point: &[f64; 2], centroids: &[[f64; 2]]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = dist2(point, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests;

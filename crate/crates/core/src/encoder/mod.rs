//! Graph-convolutional encoder: token embedding, two aggregation layers with
//! symmetric degree normalization, global mean pooling and a linear
//! projection down to two dimensions.
//!
//! The encoder is untrained: parameters come from a seeded uniform
//! initialization and act as a fixed structural projection. Aggregation runs
//! over the directed parent->child edges plus a self-loop on every node, and
//! all floating-point accumulation happens in a canonical node order so the
//! result is exactly permutation invariant.

mod params;

pub use params::{EncoderDescriptor, EncoderParams, ENCODER_SCHEMA_VERSION};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::AstGraph;

pub const EMBED_DIM: usize = 100;
pub const OUTPUT_DIM: usize = 2;
pub const NUM_LAYERS: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncoderError {
    #[error("feature width {features} does not match weight width {weights}")]
    DimensionMismatch { features: usize, weights: usize },
    #[error("token id {token} outside embedding table of size {table}")]
    TokenOutOfRange { token: u32, table: usize },
    #[error("graph has no tokens; tokenize it against the vocabulary first")]
    MissingTokens,
    #[error("graph is not a rooted tree")]
    NotATree,
}

/// Pooled graph embedding in the 2-dim output space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(pub [f64; OUTPUT_DIM]);

impl EmbeddingVector {
    pub fn distance(&self, other: &EmbeddingVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// One aggregation layer: `h_i' = relu(sum_{j in N(i)} W h_j / sqrt(d_i d_j))`
/// where `N(i)` is the in-neighbors of `i` (its parent, for a tree) plus `i`
/// itself, and `d` counts in-edges including the self-loop.
///
/// Messages accumulate in ascending source-index order, which pins the
/// floating-point summation order.
pub fn gcn_layer(
    node_features: &[Vec<f64>],
    graph: &AstGraph,
    weights: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, EncoderError> {
    let dim = weights.len();
    for row in node_features {
        if row.len() != dim {
            return Err(EncoderError::DimensionMismatch {
                features: row.len(),
                weights: dim,
            });
        }
    }
    let n = node_features.len();

    // In-neighbor lists with self-loops, sources sorted ascending.
    let mut in_neighbors: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for &(parent, child) in &graph.edges {
        in_neighbors[child].push(parent);
    }
    for list in &mut in_neighbors {
        list.sort_unstable();
    }
    let degree: Vec<f64> = in_neighbors.iter().map(|l| l.len() as f64).collect();

    // Transform once per node, aggregate per edge.
    let transformed: Vec<Vec<f64>> = node_features
        .iter()
        .map(|h| {
            weights
                .iter()
                .map(|w_row| w_row.iter().zip(h.iter()).map(|(w, x)| w * x).sum())
                .collect()
        })
        .collect();

    let mut out = vec![vec![0.0; dim]; n];
    for i in 0..n {
        for &j in &in_neighbors[i] {
            let norm = 1.0 / (degree[i] * degree[j]).sqrt();
            for (acc, msg) in out[i].iter_mut().zip(transformed[j].iter()) {
                *acc += norm * msg;
            }
        }
        for v in &mut out[i] {
            *v = v.max(0.0);
        }
    }
    Ok(out)
}

/// Encode a tokenized graph: embedding lookup, two GCN layers, mean pool,
/// linear projection.
pub fn encode(graph: &AstGraph, params: &EncoderParams) -> Result<EmbeddingVector, EncoderError> {
    if graph.node_tokens.len() != graph.nodes.len() {
        return Err(EncoderError::MissingTokens);
    }
    let canonical = canonicalize(graph)?;

    let mut features: Vec<Vec<f64>> = Vec::with_capacity(canonical.nodes.len());
    for &token in &canonical.node_tokens {
        let row = params
            .token_embedding
            .get(token as usize)
            .ok_or(EncoderError::TokenOutOfRange {
                token,
                table: params.token_embedding.len(),
            })?;
        features.push(row.clone());
    }

    for weights in &params.gcn_weights {
        features = gcn_layer(&features, &canonical, weights)?;
    }

    let n = features.len() as f64;
    let mut pooled = vec![0.0; params.embed_dim()];
    for row in &features {
        for (acc, v) in pooled.iter_mut().zip(row.iter()) {
            *acc += v;
        }
    }
    for v in &mut pooled {
        *v /= n;
    }

    let mut out = [0.0; OUTPUT_DIM];
    for (k, (proj_row, bias)) in params
        .output_projection
        .iter()
        .zip(params.output_bias.iter())
        .enumerate()
    {
        out[k] = proj_row
            .iter()
            .zip(pooled.iter())
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + bias;
    }
    Ok(EmbeddingVector(out))
}

/// Reorder nodes into pre-order traversal position (root first, children in
/// edge-list order). Graphs straight out of the parser are already in this
/// order; permuted copies of the same tree map back onto it, which is what
/// makes `encode` exactly permutation invariant.
fn canonicalize(graph: &AstGraph) -> Result<AstGraph, EncoderError> {
    let n = graph.nodes.len();
    if n == 0 {
        return Err(EncoderError::NotATree);
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut has_parent = vec![false; n];
    for &(parent, child) in &graph.edges {
        if parent >= n || child >= n {
            return Err(EncoderError::NotATree);
        }
        children[parent].push(child);
        has_parent[child] = true;
    }
    let root = has_parent
        .iter()
        .position(|&p| !p)
        .ok_or(EncoderError::NotATree)?;

    let mut order = Vec::with_capacity(n);
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        order.push(node);
        for &child in children[node].iter().rev() {
            stack.push(child);
        }
    }
    if order.len() != n {
        return Err(EncoderError::NotATree);
    }

    let mut new_index = vec![0usize; n];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    let mut edges: Vec<(usize, usize)> = graph
        .edges
        .iter()
        .map(|&(p, c)| (new_index[p], new_index[c]))
        .collect();
    edges.sort_unstable();
    Ok(AstGraph {
        nodes: order.iter().map(|&i| graph.nodes[i].clone()).collect(),
        edges,
        node_tokens: order.iter().map(|&i| graph.node_tokens[i]).collect(),
    })
}

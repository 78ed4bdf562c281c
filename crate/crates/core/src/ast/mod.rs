//! SQL parsing into node-labeled AST graphs.
//!
//! A statement is lexed and parsed into a [`SqlNode`] tree whose labels are
//! the lower-cased keywords, operators, identifiers and literals of the
//! source, then flattened in pre-order into an [`AstGraph`] (node 0 is the
//! statement root, edges run parent -> child in source order).

mod graph;
mod lexer;
mod parser;
mod vocab;

pub use graph::AstGraph;
pub use parser::{parse_tree, NodeKind, SqlNode};
pub use vocab::{build_vocab, tokenize, TokenVocab, PAD_ID, UNK_ID};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AstError {
    #[error("parse error at byte {position}: {message}")]
    ParseError { position: usize, message: String },
    #[error("input contains more than one SQL statement")]
    MultiStatementError,
    #[error("vocabulary corpus is empty")]
    EmptyCorpus,
}

/// Coarse query class used for result stratification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryType {
    Simple,
    Nested,
    Aggregate,
}

impl std::fmt::Display for QueryType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QueryType::Simple => write!(f, "simple"),
            QueryType::Nested => write!(f, "nested"),
            QueryType::Aggregate => write!(f, "aggregate"),
        }
    }
}

/// Parse a single SQL statement into its flattened AST graph.
pub fn parse_sql(sql: &str) -> Result<AstGraph, AstError> {
    Ok(AstGraph::from_tree(&parse_tree(sql)?))
}

const AGGREGATE_FUNCTIONS: [&str; 5] = ["count", "sum", "avg", "min", "max"];

/// Classify a query as nested, aggregate or simple.
///
/// Precedence is nested > aggregate > simple: a query with any subquery
/// (a `select` node other than the root) is nested even when it also
/// aggregates.
pub fn classify_query(graph: &AstGraph) -> QueryType {
    let has_subquery = graph
        .nodes
        .iter()
        .enumerate()
        .any(|(i, label)| i > 0 && label == "select");
    if has_subquery {
        return QueryType::Nested;
    }
    let has_aggregate = graph
        .nodes
        .iter()
        .any(|label| AGGREGATE_FUNCTIONS.contains(&label.as_str()));
    if has_aggregate {
        QueryType::Aggregate
    } else {
        QueryType::Simple
    }
}

//! Experiment toolkit for SQL-to-text generation.
//!
//! The pipeline: SQL statements are parsed into AST graphs, embedded with a
//! small graph-convolutional encoder, and clustered so that in-context-learning
//! demonstrations can be selected by structural similarity. Prompts built from
//! the selected demonstrations are sent to a chat-completion backend (remote or
//! deterministic mock), and outputs are scored with BLEU, embedding similarity
//! and significance tests.

pub mod ast;
pub mod dataset;
pub mod encoder;
pub mod experiment;
pub mod gateway;
pub mod metrics;
pub mod prompt;
pub mod selection;
pub mod text;

pub use ast::{build_vocab, classify_query, parse_sql, tokenize, AstGraph, QueryType, TokenVocab};
pub use encoder::{encode, EncoderParams, EmbeddingVector};

//! Pipeline orchestration: index building, demo selection + generation,
//! dataset repurposing, and evaluation. These functions are the backing for
//! the service endpoints; they are deterministic given their seeds and a
//! mock backend.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{build_vocab, classify_query, parse_sql, tokenize, AstError, TokenVocab};
use crate::dataset::QueryRecord;
use crate::encoder::{encode, EmbeddingVector, EncoderError, EncoderParams};
use crate::gateway::{prompt_hash, Backend, CallLogEntry, CostLedger, GenerationRequest};
use crate::metrics::{
    bleu4, embed_similarity, quality_filter, AlignScorer, EmbeddingProvider, MethodScores,
    MetricsError, SampleScore, ScoreReport,
};
use crate::prompt::{parse_iterative_response, IterativeResponse, PromptBuilder, PromptError};
use crate::selection::{
    select_ast_icl, select_ast_icl_top, select_bm25, select_random, DemoPool, IndexFile,
    SelectedDemos, SelectionError, SelectionIndex, Strategy, INDEX_SCHEMA_VERSION,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("record {id}: {source}")]
    UnparseableSql { id: String, source: AstError },
    #[error(transparent)]
    Ast(#[from] AstError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("strategy {0} needs a selection index")]
    MissingIndex(Strategy),
    #[error("index was built over different records than the supplied pool")]
    IndexPoolMismatch,
    #[error("no reference utterances for record {0}")]
    MissingReference(String),
    #[error("generation id {0} has no matching dataset record")]
    UnknownRecord(String),
}

/// Wall-clock per phase of an index build, milliseconds. Reported alongside
/// the index but never inside it, so index files stay byte-stable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub parse_ms: f64,
    pub encode_ms: f64,
    pub cluster_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexSettings {
    pub encoder_seed: u64,
    pub k: usize,
    pub kmeans_seed: u64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for IndexSettings {
    fn default() -> Self {
        IndexSettings {
            encoder_seed: 42,
            k: 20,
            kmeans_seed: 7,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

/// Parse, tokenize and encode every record's SQL with a vocabulary built
/// from the same pool.
pub fn encode_pool(
    records: &[QueryRecord],
    encoder_seed: u64,
) -> Result<(Vec<EmbeddingVector>, TokenVocab, EncoderParams), ExperimentError> {
    let mut graphs = Vec::with_capacity(records.len());
    for record in records {
        let graph = parse_sql(&record.sql).map_err(|source| ExperimentError::UnparseableSql {
            id: record.id.clone(),
            source,
        })?;
        graphs.push(graph);
    }
    let vocab = build_vocab(&graphs)?;
    let params = EncoderParams::init(vocab.len(), encoder_seed);
    let embeddings = graphs
        .iter()
        .map(|g| encode(&tokenize(g, &vocab), &params))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((embeddings, vocab, params))
}

/// Build the serializable selection index for a demonstration pool.
pub fn build_index(
    records: &[QueryRecord],
    settings: &IndexSettings,
) -> Result<(IndexFile, PhaseTimings), ExperimentError> {
    let started = Instant::now();

    let parse_started = Instant::now();
    let mut graphs = Vec::with_capacity(records.len());
    for record in records {
        let graph = parse_sql(&record.sql).map_err(|source| ExperimentError::UnparseableSql {
            id: record.id.clone(),
            source,
        })?;
        graphs.push(graph);
    }
    let vocab = build_vocab(&graphs)?;
    let parse_ms = parse_started.elapsed().as_secs_f64() * 1000.0;

    let encode_started = Instant::now();
    let params = EncoderParams::init(vocab.len(), settings.encoder_seed);
    let embeddings: Vec<EmbeddingVector> = graphs
        .iter()
        .map(|g| encode(&tokenize(g, &vocab), &params))
        .collect::<Result<Vec<_>, _>>()?;
    let encode_ms = encode_started.elapsed().as_secs_f64() * 1000.0;

    let cluster_started = Instant::now();
    let pool = DemoPool::new(records.to_vec(), embeddings.clone())?;
    let index = SelectionIndex::build(
        &pool,
        settings.k,
        settings.kmeans_seed,
        settings.max_iters,
        settings.tol,
    )?;
    let cluster_ms = cluster_started.elapsed().as_secs_f64() * 1000.0;

    let file = IndexFile {
        schema_version: INDEX_SCHEMA_VERSION,
        k: settings.k,
        kmeans_seed: settings.kmeans_seed,
        encoder_seed: settings.encoder_seed,
        encoder_params_hash: params.content_hash(),
        vocab_hash: vocab.content_hash(),
        vocab_labels: vocab.labels(),
        record_ids: records.iter().map(|r| r.id.clone()).collect(),
        embeddings: embeddings.iter().map(|e| e.0).collect(),
        centroids: index.centroids,
        assignments: index.assignments,
    };
    let timings = PhaseTimings {
        parse_ms,
        encode_ms,
        cluster_ms,
        total_ms: started.elapsed().as_secs_f64() * 1000.0,
    };
    Ok((file, timings))
}

/// The vocabulary and regenerated encoder weights recorded in an index.
pub fn encoder_of_index(index: &IndexFile) -> (TokenVocab, EncoderParams) {
    let vocab = TokenVocab::from_labels(index.vocab_labels.iter().cloned());
    let params = EncoderParams::init(vocab.len(), index.encoder_seed);
    (vocab, params)
}

/// Encode one SQL text against an index's vocabulary and encoder seed.
pub fn encode_against_index(sql: &str, index: &IndexFile) -> Result<EmbeddingVector, ExperimentError> {
    let (vocab, params) = encoder_of_index(index);
    let graph = parse_sql(sql)?;
    Ok(encode(&tokenize(&graph, &vocab), &params)?)
}

/// Sweep k over a range and pick the silhouette-maximizing clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneKReport {
    pub best_k: usize,
    pub scores: BTreeMap<usize, f64>,
}

pub fn tune_k(
    records: &[QueryRecord],
    settings: &IndexSettings,
    k_min: usize,
    k_max: usize,
) -> Result<TuneKReport, ExperimentError> {
    let (embeddings, _, _) = encode_pool(records, settings.encoder_seed)?;
    let points: Vec<[f64; 2]> = embeddings.iter().map(|e| e.0).collect();
    let mut scores = BTreeMap::new();
    let mut best_k = k_min.max(2);
    let mut best_score = f64::NEG_INFINITY;
    for k in k_min.max(2)..=k_max.min(points.len().saturating_sub(1)) {
        let result = crate::selection::kmeans(
            &points,
            &crate::selection::KMeansConfig {
                k,
                seed: settings.kmeans_seed,
                max_iters: settings.max_iters,
                tol: settings.tol,
            },
        )?;
        let score = crate::selection::silhouette(&points, &result.assignments, k)?;
        scores.insert(k, score);
        if score > best_score {
            best_score = score;
            best_k = k;
        }
    }
    Ok(TuneKReport { best_k, scores })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerateSettings {
    pub strategy: Strategy,
    pub n_demos: usize,
    pub selection_seed: u64,
    pub max_tokens: u32,
    pub temperature: f64,
    pub concurrency: usize,
}

impl Default for GenerateSettings {
    fn default() -> Self {
        GenerateSettings {
            strategy: Strategy::AstIclTop,
            n_demos: 2,
            selection_seed: 7,
            max_tokens: 256,
            temperature: 0.0,
            concurrency: 4,
        }
    }
}

/// One line of a generations JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub id: String,
    pub strategy: Strategy,
    pub n_demos: usize,
    pub prompt_hash: String,
    pub selection_seed: u64,
    pub demo_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cost: f64,
}

/// Select demonstrations for one test record under a strategy.
pub fn select_demos(
    strategy: Strategy,
    n: usize,
    test_record: &QueryRecord,
    pool: &DemoPool,
    index: Option<&SelectionIndex>,
    test_embedding: Option<&EmbeddingVector>,
    seed: u64,
) -> Result<SelectedDemos, ExperimentError> {
    let exclude = Some(test_record.id.as_str());
    let demos = match strategy {
        Strategy::ZeroShot => SelectedDemos::empty(Strategy::ZeroShot),
        Strategy::Random => select_random(pool, n, seed, exclude)?,
        Strategy::Bm25 => select_bm25(&test_record.sql, pool, n, exclude)?,
        Strategy::AstIclTop => {
            let embedding =
                test_embedding.ok_or(ExperimentError::MissingIndex(Strategy::AstIclTop))?;
            select_ast_icl_top(embedding, pool, n, exclude)?
        }
        Strategy::AstIcl => {
            let embedding = test_embedding.ok_or(ExperimentError::MissingIndex(Strategy::AstIcl))?;
            let index = index.ok_or(ExperimentError::MissingIndex(Strategy::AstIcl))?;
            select_ast_icl(embedding, index, pool, n, seed, exclude)?
        }
    };
    Ok(demos)
}

/// Generation pass over a test set: select, prompt, call the backend,
/// collect ordered records. Per-record failures are recorded inline.
#[allow(clippy::too_many_arguments)]
pub async fn run_generation(
    tests: &[QueryRecord],
    pool_records: &[QueryRecord],
    index_file: &IndexFile,
    settings: &GenerateSettings,
    builder: &PromptBuilder,
    template_id: &str,
    model: &str,
    backend: &Backend,
    ledger: &mut CostLedger,
) -> Result<Vec<GenerationRecord>, ExperimentError> {
    if pool_records.len() != index_file.record_ids.len()
        || pool_records
            .iter()
            .zip(index_file.record_ids.iter())
            .any(|(r, id)| &r.id != id)
    {
        return Err(ExperimentError::IndexPoolMismatch);
    }
    let pool = DemoPool::new(pool_records.to_vec(), index_file.embedding_vectors())?;
    let index = index_file.selection_index();
    let needs_embedding =
        matches!(settings.strategy, Strategy::AstIcl | Strategy::AstIclTop);
    let encoder = if needs_embedding {
        Some(encoder_of_index(index_file))
    } else {
        None
    };

    let mut prepared = Vec::with_capacity(tests.len());
    for (position, record) in tests.iter().enumerate() {
        let test_embedding = match &encoder {
            Some((vocab, params)) => {
                let graph = parse_sql(&record.sql)?;
                Some(encode(&tokenize(&graph, vocab), params)?)
            }
            None => None,
        };
        let n = if settings.strategy == Strategy::ZeroShot {
            0
        } else {
            settings.n_demos
        };
        let demos = select_demos(
            settings.strategy,
            n,
            record,
            &pool,
            Some(&index),
            test_embedding.as_ref(),
            settings.selection_seed,
        )?;
        let spec = builder.build_icl_prompt(None, &demos, &record.sql, template_id)?;
        let request = GenerationRequest {
            request_id: format!("gen-{}-{}", settings.strategy, record.id),
            model: model.to_string(),
            system_text: spec.system_text.clone(),
            user_text: spec.user_text.clone(),
            max_tokens: settings.max_tokens,
            temperature: settings.temperature,
        };
        prepared.push((position, record.id.clone(), spec, request));
    }

    let requests: Vec<GenerationRequest> =
        prepared.iter().map(|(_, _, _, r)| r.clone()).collect();
    let results = backend.run_batch(&requests, settings.concurrency).await;

    let mut records = Vec::with_capacity(prepared.len());
    for ((_, id, spec, request), outcome) in prepared.into_iter().zip(results) {
        let mut record = GenerationRecord {
            id,
            strategy: settings.strategy,
            n_demos: spec.demo_ids.len(),
            prompt_hash: prompt_hash(&request),
            selection_seed: settings.selection_seed,
            demo_ids: spec.demo_ids.clone(),
            output: None,
            error: None,
            prompt_tokens: 0,
            completion_tokens: 0,
            cost: 0.0,
        };
        match outcome {
            Ok(result) => {
                record.output = Some(result.text.clone());
                record.prompt_tokens = result.usage.prompt_tokens;
                record.completion_tokens = result.usage.completion_tokens;
                record.cost = result.cost;
                ledger.push(CallLogEntry::new(&request, &result));
            }
            Err(error) => {
                record.error = Some(error.to_string());
            }
        }
        records.push(record);
    }
    Ok(records)
}

/// Outcome of the iterative repurposing pass for one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectRecord {
    pub id: String,
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepurposeReport {
    pub processed: usize,
    pub succeeded: usize,
    pub rejected: usize,
    pub utterances_before_filter: usize,
    pub utterances_kept: usize,
    /// Records whose refined variations scored strictly better than the
    /// initial ones (embedding score vs the gold utterance, mean over 3).
    pub improved_finals: usize,
}

pub struct RepurposeOutcome {
    pub records: Vec<QueryRecord>,
    pub rejects: Vec<RejectRecord>,
    pub report: RepurposeReport,
}

/// Run the generate/review/refine workflow over a dataset and keep the top
/// three utterances per record.
#[allow(clippy::too_many_arguments)]
pub async fn run_repurpose(
    records: &[QueryRecord],
    builder: &PromptBuilder,
    model: &str,
    backend: &Backend,
    embed: &dyn EmbeddingProvider,
    align: Option<&dyn AlignScorer>,
    max_tokens: u32,
    concurrency: usize,
    ledger: &mut CostLedger,
) -> Result<RepurposeOutcome, ExperimentError> {
    let mut requests = Vec::with_capacity(records.len());
    for record in records {
        let prompt = builder.build_iterative_prompt(&record.sql)?;
        requests.push(GenerationRequest {
            request_id: format!("rep-{}", record.id),
            model: model.to_string(),
            system_text: prompt.system_text,
            user_text: format!("Original SQL Query: {}", record.sql),
            max_tokens,
            temperature: 0.0,
        });
    }
    let results = backend.run_batch(&requests, concurrency).await;

    let mut out_records = Vec::new();
    let mut rejects = Vec::new();
    let mut utterances_before = 0usize;
    let mut kept = 0usize;
    let mut improved = 0usize;

    for ((record, request), outcome) in records.iter().zip(requests.iter()).zip(results) {
        match outcome {
            Ok(result) => {
                ledger.push(CallLogEntry::new(request, &result));
                match parse_iterative_response(&result.text) {
                    Ok(parsed) => {
                        utterances_before += parsed.initial.len() + parsed.r#final.len();
                        let mut updated = record.clone();
                        updated.generated =
                            pick_top_three(record, &parsed, embed, align)?;
                        kept += updated.generated.len();
                        if let Some(gold) = &record.utterance {
                            if mean_embed(&parsed.r#final, gold, embed)?
                                > mean_embed(&parsed.initial, gold, embed)?
                            {
                                improved += 1;
                            }
                        }
                        out_records.push(updated);
                    }
                    Err(error) => rejects.push(RejectRecord {
                        id: record.id.clone(),
                        reason: error.to_string(),
                        raw_output: Some(result.text),
                    }),
                }
            }
            Err(error) => rejects.push(RejectRecord {
                id: record.id.clone(),
                reason: error.to_string(),
                raw_output: None,
            }),
        }
    }

    let report = RepurposeReport {
        processed: records.len(),
        succeeded: out_records.len(),
        rejected: rejects.len(),
        utterances_before_filter: utterances_before,
        utterances_kept: kept,
        improved_finals: improved,
    };
    Ok(RepurposeOutcome {
        records: out_records,
        rejects,
        report,
    })
}

fn pick_top_three(
    record: &QueryRecord,
    parsed: &IterativeResponse,
    embed: &dyn EmbeddingProvider,
    align: Option<&dyn AlignScorer>,
) -> Result<Vec<String>, ExperimentError> {
    match &record.utterance {
        Some(gold) => Ok(quality_filter(gold, &parsed.candidates(), embed, align)?),
        // Without a gold utterance there is nothing to score against; keep
        // the refined set.
        None => Ok(parsed.r#final.clone()),
    }
}

fn mean_embed(
    texts: &[String],
    reference: &str,
    embed: &dyn EmbeddingProvider,
) -> Result<f64, ExperimentError> {
    let reference = vec![reference.to_string()];
    let mut total = 0.0;
    for text in texts {
        total += embed_similarity(text, &reference, embed)?;
    }
    Ok(total / texts.len() as f64)
}

/// Score generation outputs against dataset references and build the report.
pub fn evaluate(
    generations: &[GenerationRecord],
    dataset: &[QueryRecord],
    embed: Option<&dyn EmbeddingProvider>,
    align: Option<&dyn AlignScorer>,
    alpha: f64,
) -> Result<ScoreReport, ExperimentError> {
    let by_id: BTreeMap<&str, &QueryRecord> =
        dataset.iter().map(|r| (r.id.as_str(), r)).collect();

    let mut grouped: BTreeMap<(Strategy, usize), Vec<SampleScore>> = BTreeMap::new();
    for generation in generations {
        let Some(output) = &generation.output else {
            continue;
        };
        let record = by_id
            .get(generation.id.as_str())
            .ok_or_else(|| ExperimentError::UnknownRecord(generation.id.clone()))?;
        let references = record.references();
        if references.is_empty() {
            return Err(ExperimentError::MissingReference(record.id.clone()));
        }
        let bleu = bleu4(output, &references)?;
        let embed_sim = match embed {
            Some(provider) => match embed_similarity(output, &references, provider) {
                Ok(v) => Some(v),
                Err(MetricsError::ProviderUnavailable(_)) => None,
                Err(e) => return Err(e.into()),
            },
            None => None,
        };
        let align_score = match align {
            Some(scorer) => {
                let mut best: Option<f64> = None;
                for reference in &references {
                    let v = scorer.score(reference, output)?;
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
                best
            }
            None => None,
        };
        let query_type = record
            .query_type
            .or_else(|| parse_sql(&record.sql).ok().map(|g| classify_query(&g)));
        grouped
            .entry((generation.strategy, generation.n_demos))
            .or_default()
            .push(SampleScore {
                id: generation.id.clone(),
                bleu,
                embed_sim,
                align: align_score,
                query_type,
            });
    }

    let methods: Vec<MethodScores> = grouped
        .into_iter()
        .map(|((strategy, n), samples)| MethodScores::from_samples(strategy, n, samples))
        .collect();
    let mut report = ScoreReport::new(methods, alpha);
    report.mark_significance(&[Strategy::Random, Strategy::Bm25])?;
    Ok(report)
}

/// Convenience used by handlers and the mock: ordered JSONL of generation
/// records.
pub fn generations_to_jsonl(records: &[GenerationRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("generation serialization"));
        out.push('\n');
    }
    out
}

pub fn generations_from_jsonl(text: &str) -> Result<Vec<GenerationRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[cfg(test)]
mod tests;

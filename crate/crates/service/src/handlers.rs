use std::time::Duration;

use axum::extract::State;
use axum::Json;
use serde_json::json;

use sql2text_core::ast::{classify_query, parse_sql};
use sql2text_core::dataset::{leakage_check, schema_terms, LeakageOutcome};
use sql2text_core::experiment::{
    self, build_index, encode_against_index, evaluate as evaluate_run, run_generation,
    run_repurpose, select_demos,
};
use sql2text_core::gateway::{Backend, CostLedger, MockBackend, RemoteBackend, RemoteConfig};
use sql2text_core::metrics::{bleu4, fleiss_kappa, paired_t_test, HashingProvider};
use sql2text_core::prompt::{
    parse_iterative_response, parse_iterative_response_strict, PromptBuilder,
};
use sql2text_core::selection::{DemoPool, Strategy};

use crate::error::ApiError;
use crate::wire::*;
use crate::SharedState;

pub async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

pub async fn parse(Json(request): Json<ParseRequest>) -> Result<Json<ParseResponse>, ApiError> {
    let graph = parse_sql(&request.sql)?;
    let query_type = classify_query(&graph);
    Ok(Json(ParseResponse { graph, query_type }))
}

pub async fn index_build(
    Json(request): Json<IndexBuildRequest>,
) -> Result<Json<IndexBuildResponse>, ApiError> {
    let (index, timings) = build_index(&request.records, &request.settings)?;
    Ok(Json(IndexBuildResponse { index, timings }))
}

pub async fn tune_k(Json(request): Json<TuneKRequest>) -> Result<Json<TuneKResponse>, ApiError> {
    let report = experiment::tune_k(&request.records, &request.settings, request.k_min, request.k_max)?;
    Ok(Json(report))
}

pub async fn select(Json(request): Json<SelectRequest>) -> Result<Json<SelectResponse>, ApiError> {
    let pool = DemoPool::new(request.pool.clone(), request.index.embedding_vectors())?;
    let index = request.index.selection_index();
    let test_embedding = if matches!(request.strategy, Strategy::AstIcl | Strategy::AstIclTop) {
        Some(encode_against_index(&request.test_sql, &request.index)?)
    } else {
        None
    };
    let test_record = sql2text_core::dataset::QueryRecord::new(
        request.exclude_id.clone().unwrap_or_default(),
        request.test_sql.clone(),
    );
    let demos = select_demos(
        request.strategy,
        request.n,
        &test_record,
        &pool,
        Some(&index),
        test_embedding.as_ref(),
        request.seed,
    )?;
    Ok(Json(demos))
}

pub async fn prompt_icl(
    Json(request): Json<IclPromptRequest>,
) -> Result<Json<IclPromptResponse>, ApiError> {
    let mut builder = PromptBuilder::default();
    if let Some(order) = request.demo_order {
        builder.demo_order = order;
    }
    if let Some(budget) = request.token_budget {
        builder.token_budget = budget;
    }
    let spec = builder.build_icl_prompt(
        request.instruction.as_deref(),
        &request.demos,
        &request.seed_sql,
        &request.template_id,
    )?;
    Ok(Json(spec))
}

pub async fn prompt_iterative(
    Json(request): Json<IterativePromptRequest>,
) -> Result<Json<IterativePromptResponse>, ApiError> {
    let builder = PromptBuilder::default();
    Ok(Json(builder.build_iterative_prompt(&request.sql)?))
}

pub async fn response_parse(
    Json(request): Json<ResponseParseRequest>,
) -> Result<Json<ResponseParseResponse>, ApiError> {
    let parsed = if request.strict {
        parse_iterative_response_strict(&request.text)?
    } else {
        parse_iterative_response(&request.text)?
    };
    Ok(Json(parsed))
}

fn backend_from_spec(spec: &BackendSpec) -> Result<Backend, ApiError> {
    match spec {
        BackendSpec::Mock {
            canned,
            latency_ms,
            prices,
        } => {
            let mut mock = MockBackend::default()
                .with_canned(canned.iter().cloned())
                .with_latency(Duration::from_millis(*latency_ms));
            mock.prices = *prices;
            Ok(Backend::Mock(mock))
        }
        BackendSpec::Remote { base_url, prices } => {
            let mut config = match base_url {
                Some(url) => RemoteConfig {
                    base_url: url.clone(),
                    api_key: std::env::var(sql2text_core::gateway::ENV_API_KEY)
                        .unwrap_or_default(),
                    prices: None,
                    backoff: Duration::from_millis(200),
                },
                None => RemoteConfig::from_env()
                    .map_err(|e| ApiError::bad_request("backend_config", e.to_string()))?,
            };
            config.prices = *prices;
            Ok(Backend::Remote(RemoteBackend::new(config)))
        }
    }
}

pub async fn generate(
    Json(request): Json<GenerateRequest>,
) -> Result<Json<GenerateResponse>, ApiError> {
    let backend = backend_from_spec(&request.backend)?;
    let builder = PromptBuilder::default();
    let mut ledger = CostLedger::default();
    let generations = run_generation(
        &request.tests,
        &request.pool,
        &request.index,
        &request.settings,
        &builder,
        &request.template_id,
        &request.model,
        &backend,
        &mut ledger,
    )
    .await?;
    Ok(Json(GenerateResponse {
        generations,
        ledger,
    }))
}

pub async fn repurpose(
    Json(request): Json<RepurposeRequest>,
) -> Result<Json<RepurposeResponse>, ApiError> {
    let backend = backend_from_spec(&request.backend)?;
    let builder = PromptBuilder::default();
    let embed = HashingProvider::default();
    let mut ledger = CostLedger::default();
    let outcome = run_repurpose(
        &request.records,
        &builder,
        &request.model,
        &backend,
        &embed,
        None,
        request.max_tokens,
        request.concurrency,
        &mut ledger,
    )
    .await?;
    Ok(Json(RepurposeResponse {
        records: outcome.records,
        rejects: outcome.rejects,
        report: outcome.report,
        ledger,
    }))
}

pub async fn evaluate(
    Json(request): Json<EvaluateRequest>,
) -> Result<Json<EvaluateResponse>, ApiError> {
    let provider = HashingProvider::default();
    let embed: Option<&dyn sql2text_core::metrics::EmbeddingProvider> = if request.with_embed {
        Some(&provider)
    } else {
        None
    };
    let report = evaluate_run(&request.generations, &request.dataset, embed, None, request.alpha)?;
    let table = report.render_table();
    Ok(Json(EvaluateResponse { report, table }))
}

pub async fn metrics_bleu(Json(request): Json<BleuRequest>) -> Result<Json<BleuResponse>, ApiError> {
    let score = bleu4(&request.candidate, &request.references)?;
    Ok(Json(BleuResponse { score }))
}

pub async fn metrics_ttest(
    Json(request): Json<TTestRequest>,
) -> Result<Json<TTestResponse>, ApiError> {
    Ok(Json(paired_t_test(&request.a, &request.b, request.alpha)?))
}

pub async fn metrics_fleiss(
    Json(request): Json<FleissRequest>,
) -> Result<Json<FleissResponse>, ApiError> {
    Ok(Json(FleissResponse {
        kappa: fleiss_kappa(&request.ratings)?,
    }))
}

pub async fn leakage(
    State(_state): State<SharedState>,
    Json(request): Json<LeakageRequest>,
) -> Result<Json<LeakageResponse>, ApiError> {
    let mut flagged = std::collections::BTreeMap::new();
    for record in &request.records {
        let terms = schema_terms(record);
        if let LeakageOutcome::Flagged(hits) = leakage_check(record, &terms) {
            flagged.insert(record.id.clone(), hits.into_iter().collect());
        }
    }
    Ok(Json(LeakageResponse { flagged }))
}

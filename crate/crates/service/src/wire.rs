//! Request/response bodies for the `/api/*` endpoints. Core types serialize
//! directly; these wrappers add the request-level knobs.

use serde::{Deserialize, Serialize};

use sql2text_core::ast::{AstGraph, QueryType};
use sql2text_core::dataset::QueryRecord;
use sql2text_core::experiment::{
    GenerateSettings, GenerationRecord, IndexSettings, PhaseTimings, RejectRecord,
    RepurposeReport, TuneKReport,
};
use sql2text_core::gateway::{CostLedger, PriceTable};
use sql2text_core::metrics::{ScoreReport, TTestOutcome};
use sql2text_core::prompt::{IterativePrompt, IterativeResponse, PromptSpec};
use sql2text_core::selection::{DemoOrder, IndexFile, SelectedDemos, Strategy};

#[derive(Debug, Serialize, Deserialize)]
pub struct ParseRequest {
    pub sql: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ParseResponse {
    pub graph: AstGraph,
    pub query_type: QueryType,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IndexBuildRequest {
    pub records: Vec<QueryRecord>,
    #[serde(default)]
    pub settings: IndexSettings,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IndexBuildResponse {
    pub index: IndexFile,
    pub timings: PhaseTimings,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TuneKRequest {
    pub records: Vec<QueryRecord>,
    #[serde(default)]
    pub settings: IndexSettings,
    pub k_min: usize,
    pub k_max: usize,
}

pub type TuneKResponse = TuneKReport;

#[derive(Debug, Serialize, Deserialize)]
pub struct SelectRequest {
    pub strategy: Strategy,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    pub test_sql: String,
    #[serde(default)]
    pub exclude_id: Option<String>,
    pub pool: Vec<QueryRecord>,
    pub index: IndexFile,
}

pub type SelectResponse = SelectedDemos;

#[derive(Debug, Serialize, Deserialize)]
pub struct IclPromptRequest {
    pub template_id: String,
    #[serde(default)]
    pub instruction: Option<String>,
    pub demos: SelectedDemos,
    pub seed_sql: String,
    #[serde(default)]
    pub demo_order: Option<DemoOrder>,
    #[serde(default)]
    pub token_budget: Option<usize>,
}

pub type IclPromptResponse = PromptSpec;

#[derive(Debug, Serialize, Deserialize)]
pub struct IterativePromptRequest {
    pub sql: String,
}

pub type IterativePromptResponse = IterativePrompt;

#[derive(Debug, Serialize, Deserialize)]
pub struct ResponseParseRequest {
    pub text: String,
    #[serde(default)]
    pub strict: bool,
}

pub type ResponseParseResponse = IterativeResponse;

/// Which chat backend a generation-style request should use.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    Mock {
        /// (sql, utterance) canned pairs keyed by the seed SQL.
        #[serde(default)]
        canned: Vec<(String, String)>,
        #[serde(default)]
        latency_ms: u64,
        #[serde(default)]
        prices: Option<PriceTable>,
    },
    Remote {
        /// Defaults to the `SQL2TEXT_API_BASE` environment variable.
        #[serde(default)]
        base_url: Option<String>,
        #[serde(default)]
        prices: Option<PriceTable>,
    },
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Mock {
            canned: Vec::new(),
            latency_ms: 0,
            prices: None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub tests: Vec<QueryRecord>,
    pub pool: Vec<QueryRecord>,
    pub index: IndexFile,
    #[serde(default)]
    pub settings: GenerateSettings,
    #[serde(default = "default_template")]
    pub template_id: String,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default)]
    pub backend: BackendSpec,
}

fn default_template() -> String {
    "default".to_string()
}

fn default_model() -> String {
    "mock".to_string()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub generations: Vec<GenerationRecord>,
    pub ledger: CostLedger,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RepurposeRequest {
    pub records: Vec<QueryRecord>,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default)]
    pub backend: BackendSpec,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
}

fn default_max_tokens() -> u32 {
    1024
}

fn default_concurrency() -> usize {
    4
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RepurposeResponse {
    pub records: Vec<QueryRecord>,
    pub rejects: Vec<RejectRecord>,
    pub report: RepurposeReport,
    pub ledger: CostLedger,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvaluateRequest {
    pub generations: Vec<GenerationRecord>,
    pub dataset: Vec<QueryRecord>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Score embedding similarity with the deterministic local provider.
    #[serde(default = "default_true")]
    pub with_embed: bool,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub report: ScoreReport,
    pub table: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BleuRequest {
    pub candidate: String,
    pub references: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BleuResponse {
    pub score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TTestRequest {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

pub type TTestResponse = TTestOutcome;

#[derive(Debug, Serialize, Deserialize)]
pub struct FleissRequest {
    pub ratings: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FleissResponse {
    pub kappa: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LeakageRequest {
    pub records: Vec<QueryRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LeakageResponse {
    /// Record ids mapped to the schema terms found in their utterances;
    /// clean records are omitted.
    pub flagged: std::collections::BTreeMap<String, Vec<String>>,
}

//! Thin typed client for the sql2text service. Every method maps to one
//! endpoint; request and response bodies are the service wire types.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use sql2text_service::wire::*;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("service returned {status}: {code}: {message}")]
    Api {
        status: u16,
        code: String,
        message: String,
    },
}

#[derive(Clone)]
pub struct Sql2TextClient {
    base_url: String,
    http: reqwest::Client,
}

impl Sql2TextClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        Sql2TextClient {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    async fn post<B: Serialize, R: DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<R, ClientError> {
        let response = self
            .http
            .post(format!("{}{}", self.base_url, path))
            .json(body)
            .send()
            .await?;
        let status = response.status();
        if status.is_success() {
            Ok(response.json().await?)
        } else {
            let body: serde_json::Value = response.json().await.unwrap_or_default();
            Err(ClientError::Api {
                status: status.as_u16(),
                code: body["error"]["code"].as_str().unwrap_or("unknown").to_string(),
                message: body["error"]["message"]
                    .as_str()
                    .unwrap_or("no message")
                    .to_string(),
            })
        }
    }

    pub async fn health(&self) -> Result<bool, ClientError> {
        let response = self
            .http
            .get(format!("{}/health", self.base_url))
            .send()
            .await?;
        Ok(response.status().is_success())
    }

    pub async fn parse(&self, request: &ParseRequest) -> Result<ParseResponse, ClientError> {
        self.post("/api/parse", request).await
    }

    pub async fn index_build(
        &self,
        request: &IndexBuildRequest,
    ) -> Result<IndexBuildResponse, ClientError> {
        self.post("/api/index/build", request).await
    }

    pub async fn tune_k(&self, request: &TuneKRequest) -> Result<TuneKResponse, ClientError> {
        self.post("/api/index/tune-k", request).await
    }

    pub async fn select(&self, request: &SelectRequest) -> Result<SelectResponse, ClientError> {
        self.post("/api/select", request).await
    }

    pub async fn prompt_icl(
        &self,
        request: &IclPromptRequest,
    ) -> Result<IclPromptResponse, ClientError> {
        self.post("/api/prompt/icl", request).await
    }

    pub async fn prompt_iterative(
        &self,
        request: &IterativePromptRequest,
    ) -> Result<IterativePromptResponse, ClientError> {
        self.post("/api/prompt/iterative", request).await
    }

    pub async fn response_parse(
        &self,
        request: &ResponseParseRequest,
    ) -> Result<ResponseParseResponse, ClientError> {
        self.post("/api/response/parse", request).await
    }

    pub async fn generate(&self, request: &GenerateRequest) -> Result<GenerateResponse, ClientError> {
        self.post("/api/generate", request).await
    }

    pub async fn repurpose(
        &self,
        request: &RepurposeRequest,
    ) -> Result<RepurposeResponse, ClientError> {
        self.post("/api/repurpose", request).await
    }

    pub async fn evaluate(&self, request: &EvaluateRequest) -> Result<EvaluateResponse, ClientError> {
        self.post("/api/evaluate", request).await
    }

    pub async fn metrics_bleu(&self, request: &BleuRequest) -> Result<BleuResponse, ClientError> {
        self.post("/api/metrics/bleu", request).await
    }

    pub async fn metrics_ttest(&self, request: &TTestRequest) -> Result<TTestResponse, ClientError> {
        self.post("/api/metrics/ttest", request).await
    }

    pub async fn metrics_fleiss(&self, request: &FleissRequest) -> Result<FleissResponse, ClientError> {
        self.post("/api/metrics/fleiss", request).await
    }

    pub async fn leakage(&self, request: &LeakageRequest) -> Result<LeakageResponse, ClientError> {
        self.post("/api/leakage", request).await
    }
}

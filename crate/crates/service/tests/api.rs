//! Endpoint tests over real HTTP against an in-process server.

use std::net::SocketAddr;
use std::time::Duration;

use serde_json::{json, Value};

use sql2text_core::dataset::QueryRecord;
use sql2text_core::gateway::{
    Backend, GenerationRequest, RemoteBackend, RemoteConfig,
};

async fn start() -> String {
    let addr: SocketAddr = "127.0.0.1:0".parse().unwrap();
    let (local, _handle) = sql2text_service::spawn(addr).await.unwrap();
    format!("http://{local}")
}

fn pool_records(n: usize) -> Vec<Value> {
    (0..n)
        .map(|i| {
            json!({
                "id": format!("p{i:03}"),
                "sql": format!("SELECT c{} FROM table{} WHERE x > {}", i % 5, i % 7, i),
                "utterance": format!("reference {i}")
            })
        })
        .collect()
}

#[tokio::test]
async fn health_and_parse() {
    let base = start().await;
    let client = reqwest::Client::new();

    let health: Value = client
        .get(format!("{base}/health"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(health["status"], "ok");

    let parsed: Value = client
        .post(format!("{base}/api/parse"))
        .json(&json!({"sql": "SELECT count(*) FROM Dogs WHERE dog_id NOT IN (SELECT dog_id FROM Treatments)"}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(parsed["query_type"], "nested");
    let nodes = parsed["graph"]["nodes"].as_array().unwrap();
    assert!(nodes.iter().any(|n| n == "not in"));

    let bad = client
        .post(format!("{base}/api/parse"))
        .json(&json!({"sql": "SELECT FROM"}))
        .send()
        .await
        .unwrap();
    assert_eq!(bad.status(), 400);
    let body: Value = bad.json().await.unwrap();
    assert_eq!(body["error"]["code"], "parse_error");
}

#[tokio::test]
async fn index_select_prompt_generate_evaluate_flow() {
    let base = start().await;
    let client = reqwest::Client::new();
    let records = pool_records(15);

    let built: Value = client
        .post(format!("{base}/api/index/build"))
        .json(&json!({
            "records": records,
            "settings": {"encoder_seed": 42, "k": 3, "kmeans_seed": 7, "max_iters": 50, "tol": 1e-6}
        }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let index = built["index"].clone();
    assert_eq!(index["assignments"].as_array().unwrap().len(), 15);
    assert!(built["timings"]["total_ms"].as_f64().unwrap() >= 0.0);

    let demos: Value = client
        .post(format!("{base}/api/select"))
        .json(&json!({
            "strategy": "ast_icl_top",
            "n": 2,
            "test_sql": "SELECT c1 FROM table2 WHERE x > 3",
            "pool": records,
            "index": index
        }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(demos["pairs"].as_array().unwrap().len(), 2);

    let prompt: Value = client
        .post(format!("{base}/api/prompt/icl"))
        .json(&json!({
            "template_id": "gpt4",
            "demos": demos,
            "seed_sql": "SELECT c1 FROM table2 WHERE x > 3"
        }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let user_text = prompt["user_text"].as_str().unwrap();
    assert_eq!(user_text.matches("SQL:").count(), 3);

    let tests: Vec<Value> = (0..4)
        .map(|i| {
            json!({
                "id": format!("t{i}"),
                "sql": format!("SELECT c{} FROM table{} WHERE x > {}", i % 5, i % 7, 50 + i),
                "utterance": format!("test reference {i}")
            })
        })
        .collect();
    let generated: Value = client
        .post(format!("{base}/api/generate"))
        .json(&json!({
            "tests": tests,
            "pool": records,
            "index": index,
            "settings": {
                "strategy": "ast_icl_top", "n_demos": 2, "selection_seed": 7,
                "max_tokens": 128, "temperature": 0.0, "concurrency": 4
            },
            "template_id": "default",
            "model": "mock",
            "backend": {"kind": "mock"}
        }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let generations = generated["generations"].as_array().unwrap();
    assert_eq!(generations.len(), 4);
    for generation in generations {
        assert!(generation["output"].is_string());
        assert_eq!(generation["n_demos"], 2);
    }

    let evaluated: Value = client
        .post(format!("{base}/api/evaluate"))
        .json(&json!({
            "generations": generated["generations"],
            "dataset": tests,
            "alpha": 0.05
        }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!(evaluated["table"].as_str().unwrap().contains("BLEU"));
    assert_eq!(evaluated["report"]["methods"][0]["strategy"], "ast_icl_top");
}

#[tokio::test]
async fn repurpose_flow_with_mock_backend() {
    let base = start().await;
    let client = reqwest::Client::new();
    let records: Vec<Value> = (0..3)
        .map(|i| {
            json!({
                "id": format!("r{i}"),
                "sql": format!("SELECT name FROM singers WHERE age > {i}"),
                "utterance": format!("who are the singers older than {i}?")
            })
        })
        .collect();
    let response: Value = client
        .post(format!("{base}/api/repurpose"))
        .json(&json!({"records": records, "backend": {"kind": "mock"}}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(response["report"]["processed"], 3);
    assert_eq!(response["report"]["rejected"], 0);
    for record in response["records"].as_array().unwrap() {
        assert_eq!(record["generated"].as_array().unwrap().len(), 3);
    }
}

#[tokio::test]
async fn metrics_endpoints() {
    let base = start().await;
    let client = reqwest::Client::new();

    let bleu: Value = client
        .post(format!("{base}/api/metrics/bleu"))
        .json(&json!({
            "candidate": "the cat sat on the mat",
            "references": ["the cat sat on a mat"]
        }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!((bleu["score"].as_f64().unwrap() - 0.537284965911771).abs() < 1e-9);

    let ttest: Value = client
        .post(format!("{base}/api/metrics/ttest"))
        .json(&json!({"a": [1.0, 2.0, 3.0, 4.0], "b": [0.5, 1.0, 2.0, 3.0]}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!(ttest["t"].as_f64().unwrap() > 0.0);

    let fleiss: Value = client
        .post(format!("{base}/api/metrics/fleiss"))
        .json(&json!({"ratings": [[5, 0], [0, 5], [5, 0]]}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!((fleiss["kappa"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[tokio::test]
async fn mock_chat_endpoint_speaks_openai_protocol() {
    let base = start().await;
    let client = reqwest::Client::new();
    let response: Value = client
        .post(format!("{base}/v1/chat/completions"))
        .json(&json!({
            "model": "mock",
            "messages": [
                {"role": "system", "content": "translate sql"},
                {"role": "user", "content": "SQL: SELECT a FROM t\nQuestion:"}
            ],
            "user": "req-1"
        }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let text = response["choices"][0]["message"]["content"].as_str().unwrap();
    assert!(!text.is_empty());
    assert!(response["usage"]["prompt_tokens"].as_u64().unwrap() > 0);

    // Identical request, identical completion.
    let again: Value = client
        .post(format!("{base}/v1/chat/completions"))
        .json(&json!({
            "model": "mock",
            "messages": [
                {"role": "system", "content": "translate sql"},
                {"role": "user", "content": "SQL: SELECT a FROM t\nQuestion:"}
            ],
            "user": "req-1"
        }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(text, again["choices"][0]["message"]["content"].as_str().unwrap());
}

#[tokio::test]
async fn remote_gateway_retries_transient_failures_once_per_key() {
    let base = start().await;
    let backend = Backend::Remote(RemoteBackend::new(RemoteConfig {
        base_url: base.clone(),
        api_key: "test-key".to_string(),
        prices: None,
        backoff: Duration::from_millis(10),
    }));
    // Fails twice per idempotency key, succeeds on the third attempt; the
    // gateway's three attempts are just enough.
    let request = GenerationRequest {
        request_id: "retry-req-1".to_string(),
        model: "mock-flaky-3".to_string(),
        system_text: String::new(),
        user_text: "SQL: SELECT a FROM t\nQuestion:".to_string(),
        max_tokens: 64,
        temperature: 0.0,
    };
    let result = backend.complete(&request).await.unwrap();
    assert!(!result.text.is_empty());

    // A fresh key with a threshold above the retry budget keeps failing.
    let hopeless = GenerationRequest {
        request_id: "retry-req-2".to_string(),
        model: "mock-flaky-9".to_string(),
        ..request.clone()
    };
    assert!(backend.complete(&hopeless).await.is_err());
}

#[tokio::test]
async fn batch_records_single_failure_in_place() {
    let base = start().await;
    let backend = Backend::Remote(RemoteBackend::new(RemoteConfig {
        base_url: base,
        api_key: "k".to_string(),
        prices: None,
        backoff: Duration::from_millis(1),
    }));
    // Nine healthy requests plus one that keeps failing past the retry
    // budget, in the middle of the batch.
    let mut requests: Vec<GenerationRequest> = (0..10)
        .map(|i| GenerationRequest {
            request_id: format!("mixed-{i}"),
            model: "mock".to_string(),
            system_text: String::new(),
            user_text: format!("SQL: SELECT c{i} FROM t\nQuestion:"),
            max_tokens: 32,
            temperature: 0.0,
        })
        .collect();
    requests[4].model = "mock-flaky-99".to_string();

    let results = backend.run_batch(&requests, 3).await;
    assert_eq!(results.len(), 10);
    for (i, result) in results.iter().enumerate() {
        if i == 4 {
            assert!(result.is_err(), "request 4 should fail");
        } else {
            let ok = result.as_ref().unwrap();
            assert_eq!(ok.request_id, format!("mixed-{i}"), "order preserved");
        }
    }
}

#[tokio::test]
async fn remote_gateway_reports_auth_errors() {
    let base = start().await;
    let backend = Backend::Remote(RemoteBackend::new(RemoteConfig {
        base_url: base,
        api_key: String::new(),
        prices: None,
        backoff: Duration::from_millis(1),
    }));
    let request = GenerationRequest {
        request_id: "auth-1".to_string(),
        model: "mock-unauthorized".to_string(),
        system_text: String::new(),
        user_text: "x".to_string(),
        max_tokens: 16,
        temperature: 0.0,
    };
    match backend.complete(&request).await {
        Err(sql2text_core::gateway::GatewayError::AuthError(_)) => {}
        other => panic!("expected AuthError, got {other:?}"),
    }
}

#[tokio::test]
async fn mock_embeddings_endpoint_returns_vectors() {
    let base = start().await;
    let client = reqwest::Client::new();
    let response: Value = client
        .post(format!("{base}/v1/embeddings"))
        .json(&json!({"input": ["hello world", "hello world"]}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let data = response["data"].as_array().unwrap();
    assert_eq!(data.len(), 2);
    assert_eq!(data[0]["embedding"], data[1]["embedding"]);
}

#[tokio::test]
async fn leakage_endpoint_flags_schema_words() {
    let base = start().await;
    let client = reqwest::Client::new();
    let response: Value = client
        .post(format!("{base}/api/leakage"))
        .json(&json!({"records": [
            {"id": "a", "sql": "SELECT count(*) FROM Dogs", "utterance": "How many dogs are there?"},
            {"id": "b", "sql": "SELECT name FROM singers", "utterance": "Who are the performers?"}
        ]}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!(response["flagged"]["a"].as_array().unwrap().iter().any(|t| t == "dogs"));
    assert!(response["flagged"].get("b").is_none());
}

#[tokio::test]
async fn malformed_iterative_response_maps_to_422() {
    let base = start().await;
    let client = reqwest::Client::new();
    let response = client
        .post(format!("{base}/api/response/parse"))
        .json(&json!({"text": "{\"Generated Variations\": [\"a\",\"b\",\"c\"]}"}))
        .send()
        .await
        .unwrap();
    assert_eq!(response.status(), 422);
}

// Keep the unused import warning away; QueryRecord is exercised through the
// JSON fixtures above.
#[allow(dead_code)]
fn _type_check(record: QueryRecord) -> String {
    record.id
}

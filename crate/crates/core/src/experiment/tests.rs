use super::*;
use crate::gateway::MockBackend;
use crate::metrics::HashingProvider;

fn fixture_pool(n: usize) -> Vec<QueryRecord> {
    let tables = ["dogs", "singers", "flights", "orders", "students"];
    let columns = ["name", "age", "price", "total", "grade"];
    (0..n)
        .map(|i| {
            let table = tables[i % tables.len()];
            let column = columns[(i / tables.len()) % columns.len()];
            let sql = match i % 4 {
                0 => format!("SELECT {column} FROM {table}"),
                1 => format!("SELECT count(*) FROM {table} WHERE {column} > {i}"),
                2 => format!(
                    "SELECT {column} FROM {table} WHERE id IN (SELECT id FROM archive_{table})"
                ),
                _ => format!("SELECT {column} FROM {table} ORDER BY {column} DESC LIMIT {}", i + 1),
            };
            QueryRecord::new(format!("pool{i:03}"), sql)
                .with_utterance(format!("reference utterance about {table} {column} {i}"))
        })
        .collect()
}

#[test]
fn index_build_is_deterministic_and_complete() {
    let records = fixture_pool(25);
    let settings = IndexSettings {
        k: 5,
        ..IndexSettings::default()
    };
    let (a, _) = build_index(&records, &settings).unwrap();
    let (b, _) = build_index(&records, &settings).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.assignments.len(), 25);
    assert_eq!(a.embeddings.len(), 25);
    assert_eq!(a.centroids.len(), 5);
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn encode_against_index_matches_pool_embeddings() {
    let records = fixture_pool(12);
    let settings = IndexSettings {
        k: 3,
        ..IndexSettings::default()
    };
    let (index, _) = build_index(&records, &settings).unwrap();
    for (i, record) in records.iter().enumerate() {
        let embedding = encode_against_index(&record.sql, &index).unwrap();
        assert_eq!(embedding.0, index.embeddings[i]);
    }
}

#[test]
fn tune_k_prefers_separated_structure() {
    let records = fixture_pool(30);
    let settings = IndexSettings::default();
    let report = tune_k(&records, &settings, 2, 6).unwrap();
    assert!(report.scores.len() >= 4);
    assert!(report.scores.contains_key(&report.best_k));
    let best = report.scores[&report.best_k];
    for score in report.scores.values() {
        assert!(best >= *score);
    }
}

#[tokio::test]
async fn generation_is_deterministic_with_mock() {
    let pool = fixture_pool(20);
    let tests = fixture_pool(20)
        .into_iter()
        .take(5)
        .map(|mut r| {
            r.id = format!("test-{}", r.id);
            r
        })
        .collect::<Vec<_>>();
    let settings = IndexSettings {
        k: 4,
        ..IndexSettings::default()
    };
    let (index, _) = build_index(&pool, &settings).unwrap();
    let builder = PromptBuilder::default();
    let backend = Backend::Mock(MockBackend::default());
    let generate = GenerateSettings {
        strategy: Strategy::AstIclTop,
        n_demos: 2,
        ..GenerateSettings::default()
    };
    let mut ledger_a = CostLedger::default();
    let a = run_generation(
        &tests, &pool, &index, &generate, &builder, "default", "mock", &backend, &mut ledger_a,
    )
    .await
    .unwrap();
    let mut ledger_b = CostLedger::default();
    let b = run_generation(
        &tests, &pool, &index, &generate, &builder, "default", "mock", &backend, &mut ledger_b,
    )
    .await
    .unwrap();
    assert_eq!(a, b);
    assert_eq!(generations_to_jsonl(&a), generations_to_jsonl(&b));
    assert_eq!(ledger_a, ledger_b);
    for record in &a {
        assert_eq!(record.n_demos, 2);
        assert!(record.output.is_some());
    }
}

#[tokio::test]
async fn zero_shot_generation_has_no_demos() {
    let pool = fixture_pool(10);
    let tests = vec![QueryRecord::new("t0", "SELECT name FROM dogs")];
    let settings = IndexSettings {
        k: 3,
        ..IndexSettings::default()
    };
    let (index, _) = build_index(&pool, &settings).unwrap();
    let builder = PromptBuilder::default();
    let backend = Backend::Mock(MockBackend::default());
    let generate = GenerateSettings {
        strategy: Strategy::ZeroShot,
        n_demos: 0,
        ..GenerateSettings::default()
    };
    let mut ledger = CostLedger::default();
    let records = run_generation(
        &tests, &pool, &index, &generate, &builder, "default", "mock", &backend, &mut ledger,
    )
    .await
    .unwrap();
    assert_eq!(records[0].n_demos, 0);
    assert!(records[0].demo_ids.is_empty());
}

#[tokio::test]
async fn random_generation_reproducible_per_seed() {
    let pool = fixture_pool(15);
    let tests = vec![
        QueryRecord::new("t0", "SELECT name FROM dogs"),
        QueryRecord::new("t1", "SELECT count(*) FROM flights"),
    ];
    let settings = IndexSettings {
        k: 3,
        ..IndexSettings::default()
    };
    let (index, _) = build_index(&pool, &settings).unwrap();
    let builder = PromptBuilder::default();
    let backend = Backend::Mock(MockBackend::default());
    let generate = GenerateSettings {
        strategy: Strategy::Random,
        n_demos: 3,
        selection_seed: 7,
        ..GenerateSettings::default()
    };
    let mut ledger = CostLedger::default();
    let a = run_generation(
        &tests, &pool, &index, &generate, &builder, "default", "mock", &backend, &mut ledger,
    )
    .await
    .unwrap();
    let b = run_generation(
        &tests, &pool, &index, &generate, &builder, "default", "mock", &backend, &mut ledger,
    )
    .await
    .unwrap();
    assert_eq!(a[0].demo_ids, b[0].demo_ids);
}

#[tokio::test]
async fn repurpose_attaches_three_utterances() {
    let records = fixture_pool(6);
    let builder = PromptBuilder::default();
    let backend = Backend::Mock(MockBackend::default());
    let embed = HashingProvider::default();
    let mut ledger = CostLedger::default();
    let outcome = run_repurpose(
        &records, &builder, "mock", &backend, &embed, None, 1024, 4, &mut ledger,
    )
    .await
    .unwrap();
    assert_eq!(outcome.report.processed, 6);
    assert_eq!(outcome.report.rejected, 0);
    assert_eq!(outcome.report.utterances_before_filter, 36);
    for record in &outcome.records {
        assert_eq!(record.generated.len(), 3);
    }
}

#[tokio::test]
async fn repurpose_at_benchmark_scale_keeps_three_per_query() {
    // 879 queries through the three-step workflow leave 879 x 3 = 2,637
    // retained utterances.
    let records: Vec<QueryRecord> = (0..879)
        .map(|i| {
            QueryRecord::new(
                format!("q{i:04}"),
                format!("SELECT c{} FROM t{} WHERE x > {}", i % 9, i % 13, i),
            )
            .with_utterance(format!("reference {i}"))
        })
        .collect();
    let builder = PromptBuilder::default();
    let backend = Backend::Mock(MockBackend::default());
    let embed = HashingProvider::default();
    let mut ledger = CostLedger::default();
    let outcome = run_repurpose(
        &records, &builder, "mock", &backend, &embed, None, 1024, 8, &mut ledger,
    )
    .await
    .unwrap();
    assert_eq!(outcome.report.succeeded, 879);
    assert_eq!(outcome.report.utterances_kept, 2637);
    assert_eq!(ledger.entries.len(), 879);
}

#[tokio::test]
async fn repurpose_quarantines_malformed_responses() {
    let records = vec![
        QueryRecord::new("ok", "SELECT a FROM t").with_utterance("list a"),
        QueryRecord::new("bad", "SELECT b FROM u").with_utterance("list b"),
    ];
    // The canned entry for "bad" is not a valid three-step response.
    let backend = Backend::Mock(MockBackend::default().with_canned([(
        "SELECT b FROM u".to_string(),
        "{\"Generated Variations\": [\"only one\"]}".to_string(),
    )]));
    let builder = PromptBuilder::default();
    let embed = HashingProvider::default();
    let mut ledger = CostLedger::default();
    let outcome = run_repurpose(
        &records, &builder, "mock", &backend, &embed, None, 1024, 2, &mut ledger,
    )
    .await
    .unwrap();
    assert_eq!(outcome.report.succeeded, 1);
    assert_eq!(outcome.report.rejected, 1);
    assert_eq!(outcome.rejects[0].id, "bad");
    assert!(outcome.rejects[0].reason.contains("step"));
}

#[tokio::test]
async fn evaluate_scores_perfect_outputs_at_one() {
    let pool = fixture_pool(10);
    let mut tests = fixture_pool(10);
    for r in &mut tests {
        r.id = format!("t-{}", r.id);
    }
    let settings = IndexSettings {
        k: 3,
        ..IndexSettings::default()
    };
    let (index, _) = build_index(&pool, &settings).unwrap();
    // Canned outputs equal to each test record's gold utterance.
    let backend = Backend::Mock(MockBackend::default().with_canned(
        tests
            .iter()
            .map(|r| (r.sql.clone(), r.utterance.clone().unwrap())),
    ));
    let builder = PromptBuilder::default();
    let generate = GenerateSettings {
        strategy: Strategy::Bm25,
        n_demos: 2,
        ..GenerateSettings::default()
    };
    let mut ledger = CostLedger::default();
    let generations = run_generation(
        &tests, &pool, &index, &generate, &builder, "default", "mock", &backend, &mut ledger,
    )
    .await
    .unwrap();
    let report = evaluate(&generations, &tests, None, None, 0.05).unwrap();
    assert_eq!(report.methods.len(), 1);
    assert!((report.methods[0].mean_bleu - 1.0).abs() < 1e-12);
}

#[tokio::test]
async fn evaluate_marks_synthetic_gap_significant() {
    // Two methods with a constructed, consistent gap; daggers must match an
    // independently computed t-test.
    let dataset: Vec<QueryRecord> = (0..20)
        .map(|i| {
            QueryRecord::new(format!("d{i}"), "SELECT a FROM t")
                .with_utterance("the gold reference utterance")
        })
        .collect();
    let make_generation = |strategy: Strategy, id: &str, output: &str| GenerationRecord {
        id: id.to_string(),
        strategy,
        n_demos: 2,
        prompt_hash: "x".repeat(16),
        selection_seed: 0,
        demo_ids: vec![],
        output: Some(output.to_string()),
        error: None,
        prompt_tokens: 0,
        completion_tokens: 0,
        cost: 0.0,
    };
    let mut generations = Vec::new();
    for (i, record) in dataset.iter().enumerate() {
        // ast_icl_top echoes the reference; random is perturbed except on
        // two samples to keep difference variance non-zero.
        generations.push(make_generation(
            Strategy::AstIclTop,
            &record.id,
            "the gold reference utterance",
        ));
        let noise = if i < 2 {
            "the gold reference utterance".to_string()
        } else {
            format!("completely unrelated words {i}")
        };
        generations.push(make_generation(Strategy::Random, &record.id, &noise));
    }
    let report = evaluate(&generations, &dataset, None, None, 0.05).unwrap();
    let top = report
        .methods
        .iter()
        .find(|m| m.strategy == Strategy::AstIclTop)
        .unwrap();
    assert!(top.significant_vs.contains(&"random".to_string()));

    // Independent check on the same arrays.
    let random = report
        .methods
        .iter()
        .find(|m| m.strategy == Strategy::Random)
        .unwrap();
    let a: Vec<f64> = top.samples.iter().map(|s| s.bleu).collect();
    let b: Vec<f64> = random.samples.iter().map(|s| s.bleu).collect();
    let outcome = crate::metrics::paired_t_test(&a, &b, 0.05).unwrap();
    assert!(outcome.significant && outcome.t > 0.0);
}

#[test]
fn evaluate_rejects_unknown_ids() {
    let dataset = vec![QueryRecord::new("known", "SELECT a FROM t").with_utterance("u")];
    let generations = vec![GenerationRecord {
        id: "unknown".to_string(),
        strategy: Strategy::Random,
        n_demos: 0,
        prompt_hash: "x".repeat(16),
        selection_seed: 0,
        demo_ids: vec![],
        output: Some("text".to_string()),
        error: None,
        prompt_tokens: 0,
        completion_tokens: 0,
        cost: 0.0,
    }];
    assert!(matches!(
        evaluate(&generations, &dataset, None, None, 0.05),
        Err(ExperimentError::UnknownRecord(_))
    ));
}

#[test]
fn generations_jsonl_round_trip() {
    let records = vec![GenerationRecord {
        id: "a".to_string(),
        strategy: Strategy::AstIcl,
        n_demos: 4,
        prompt_hash: "h".repeat(16),
        selection_seed: 9,
        demo_ids: vec!["p1".into(), "p2".into()],
        output: Some("text".to_string()),
        error: None,
        prompt_tokens: 12,
        completion_tokens: 5,
        cost: 0.0,
    }];
    let text = generations_to_jsonl(&records);
    let back = generations_from_jsonl(&text).unwrap();
    assert_eq!(records, back);
}

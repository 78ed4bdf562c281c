use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use sql2text_client::Sql2TextClient;
use sql2text_core::dataset::{load_dataset, write_dataset, DatasetFormat, QueryRecord};
use sql2text_core::experiment::{
    generations_from_jsonl, generations_to_jsonl, GenerateSettings, IndexSettings,
};
use sql2text_core::metrics::ScoreReport;
use sql2text_core::selection::IndexFile;
use sql2text_service::wire::*;

use crate::config::RunConfig;
use crate::lockfile::DirLock;

fn load_records(path: &Path, format: Option<&str>) -> anyhow::Result<Vec<QueryRecord>> {
    let format: DatasetFormat = format
        .unwrap_or("s2t-jsonl")
        .parse()
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let (records, manifest) = load_dataset(path, format)?;
    if !manifest.unparsed_sql.is_empty() {
        eprintln!(
            "note: {} record(s) in {} have SQL the parser rejects: {:?}",
            manifest.unparsed_sql.len(),
            path.display(),
            manifest.unparsed_sql
        );
    }
    Ok(records)
}

fn required<'a>(value: &'a Option<PathBuf>, name: &str) -> anyhow::Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| anyhow::anyhow!("missing required input: --{name} (or `{name}` in the config file)"))
}

fn index_settings(config: &RunConfig) -> IndexSettings {
    let defaults = IndexSettings::default();
    IndexSettings {
        encoder_seed: config.encoder_seed.unwrap_or(defaults.encoder_seed),
        k: config.k.unwrap_or(defaults.k),
        kmeans_seed: config.kmeans_seed.unwrap_or(defaults.kmeans_seed),
        max_iters: defaults.max_iters,
        tol: defaults.tol,
    }
}

fn backend_spec(config: &RunConfig) -> anyhow::Result<BackendSpec> {
    match config.backend.as_deref().unwrap_or("mock") {
        "mock" => Ok(BackendSpec::Mock {
            canned: Vec::new(),
            latency_ms: 0,
            prices: None,
        }),
        "remote" => Ok(BackendSpec::Remote {
            base_url: None,
            prices: None,
        }),
        other => bail!("unknown backend {other:?} (expected mock or remote)"),
    }
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub async fn index(
    client: &Sql2TextClient,
    config: &RunConfig,
    out: &Path,
) -> anyhow::Result<i32> {
    let _lock = DirLock::acquire(out)?;
    let pool_path = required(&config.pool, "pool")?;
    let records = load_records(pool_path, config.format.as_deref())?;
    let settings = index_settings(config);

    let response = client
        .index_build(&IndexBuildRequest {
            records,
            settings,
        })
        .await?;
    write_text(&out.join("index.json"), &response.index.to_json())?;
    let mut timings = serde_json::to_string_pretty(&response.timings)?;
    timings.push('\n');
    write_text(&out.join("timings.log.json"), &timings)?;
    config.freeze(out)?;
    println!(
        "indexed {} records into k={} clusters ({:.1} ms total)",
        response.index.record_ids.len(),
        response.index.k,
        response.timings.total_ms
    );
    Ok(0)
}

pub async fn generate(
    client: &Sql2TextClient,
    config: &RunConfig,
    out: &Path,
) -> anyhow::Result<i32> {
    config.validate_for_generate()?;
    let _lock = DirLock::acquire(out)?;
    let pool = load_records(required(&config.pool, "pool")?, config.format.as_deref())?;
    let tests = load_records(required(&config.test, "test")?, config.format.as_deref())?;
    let index_path = required(&config.index, "index")?;
    let index = IndexFile::from_json(
        &std::fs::read_to_string(index_path)
            .with_context(|| format!("reading {}", index_path.display()))?,
    )?;

    let strategy = config.strategy()?;
    let defaults = GenerateSettings::default();
    let settings = GenerateSettings {
        strategy,
        n_demos: config.n_demos.unwrap_or(2),
        selection_seed: config.seed.unwrap_or(defaults.selection_seed),
        max_tokens: config.max_tokens.unwrap_or(defaults.max_tokens),
        temperature: config.temperature.unwrap_or(defaults.temperature),
        concurrency: config.concurrency.unwrap_or(defaults.concurrency),
    };
    let response = client
        .generate(&GenerateRequest {
            tests,
            pool,
            index,
            settings,
            template_id: config.template.clone().unwrap_or_else(|| "default".into()),
            model: config.model.clone().unwrap_or_else(|| "mock".into()),
            backend: backend_spec(config)?,
        })
        .await?;

    write_text(
        &out.join("generations.jsonl"),
        &generations_to_jsonl(&response.generations),
    )?;
    write_text(&out.join("calls.jsonl"), &response.ledger.to_jsonl())?;
    config.freeze(out)?;

    let failures = response
        .generations
        .iter()
        .filter(|g| g.error.is_some())
        .count();
    println!(
        "generated {} outputs with {} ({} failures), cost ${:.4}",
        response.generations.len() - failures,
        strategy,
        failures,
        response.ledger.total_cost()
    );
    Ok(if failures > 0 { 2 } else { 0 })
}

pub async fn repurpose(
    client: &Sql2TextClient,
    config: &RunConfig,
    out: &Path,
) -> anyhow::Result<i32> {
    let _lock = DirLock::acquire(out)?;
    let records = load_records(required(&config.dataset, "dataset")?, config.format.as_deref())?;
    let response = client
        .repurpose(&RepurposeRequest {
            records,
            model: config.model.clone().unwrap_or_else(|| "mock".into()),
            backend: backend_spec(config)?,
            max_tokens: config.max_tokens.unwrap_or(1024),
            concurrency: config.concurrency.unwrap_or(4),
        })
        .await?;

    write_dataset(&response.records, &out.join("repurposed.jsonl"))?;
    let mut rejects = String::new();
    for reject in &response.rejects {
        rejects.push_str(&serde_json::to_string(reject)?);
        rejects.push('\n');
    }
    write_text(&out.join("rejects.jsonl"), &rejects)?;
    let mut report = serde_json::to_string_pretty(&response.report)?;
    report.push('\n');
    write_text(&out.join("quality_report.json"), &report)?;
    write_text(&out.join("calls.jsonl"), &response.ledger.to_jsonl())?;
    config.freeze(out)?;

    println!(
        "repurposed {}/{} records ({} utterances kept, {} rejects), cost ${:.4}",
        response.report.succeeded,
        response.report.processed,
        response.report.utterances_kept,
        response.report.rejected,
        response.ledger.total_cost()
    );
    Ok(if response.report.rejected > 0 { 2 } else { 0 })
}

pub async fn evaluate(
    client: &Sql2TextClient,
    config: &RunConfig,
    generation_paths: &[PathBuf],
    out: &Path,
) -> anyhow::Result<i32> {
    let _lock = DirLock::acquire(out)?;
    let dataset = load_records(required(&config.dataset, "dataset")?, config.format.as_deref())?;
    let mut generations = Vec::new();
    for path in generation_paths {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        generations.extend(generations_from_jsonl(&text)?);
    }

    let response = client
        .evaluate(&EvaluateRequest {
            generations,
            dataset,
            alpha: config.alpha.unwrap_or(0.05),
            with_embed: true,
        })
        .await?;

    let mut report = serde_json::to_string_pretty(&response.report)?;
    report.push('\n');
    write_text(&out.join("report.json"), &report)?;
    write_text(&out.join("report_table.txt"), &response.table)?;
    config.freeze(out)?;
    print!("{}", response.table);
    Ok(0)
}

pub fn report(path: &Path) -> anyhow::Result<i32> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report: ScoreReport = serde_json::from_str(&text)?;
    print!("{}", report.render_table());
    Ok(0)
}

pub async fn tune_k(
    client: &Sql2TextClient,
    config: &RunConfig,
    out: &Path,
) -> anyhow::Result<i32> {
    let _lock = DirLock::acquire(out)?;
    let records = load_records(required(&config.pool, "pool")?, config.format.as_deref())?;
    let response = client
        .tune_k(&TuneKRequest {
            records,
            settings: index_settings(config),
            k_min: config.k_min.unwrap_or(2),
            k_max: config.k_max.unwrap_or(40),
        })
        .await?;
    let mut text = serde_json::to_string_pretty(&response)?;
    text.push('\n');
    write_text(&out.join("tune_k.json"), &text)?;
    config.freeze(out)?;
    println!("best k = {} by silhouette", response.best_k);
    for (k, score) in &response.scores {
        println!("  k={k:>3}  silhouette={score:+.4}");
    }
    Ok(0)
}

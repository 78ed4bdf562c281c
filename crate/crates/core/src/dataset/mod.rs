//! Dataset ingestion and persistence for SQL/utterance pairs.
//!
//! Canonical on-disk form is JSONL, one record per line, with a JSON manifest
//! sidecar. A `text2sql-pairs` adapter accepts the raw benchmark layout
//! (objects with `query`/`question` fields, as a JSON array or JSONL).

use std::collections::BTreeSet;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{classify_query, parse_sql, parse_tree, QueryType};
use crate::text::word_tokens;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at line {line}: {field}")]
    SchemaError { line: usize, field: String },
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("unknown dataset format {0:?} (expected s2t-jsonl or text2sql-pairs)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// One dataset row: the SQL text, the gold utterance when present, and up to
/// three generated utterances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: String,
    pub sql: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generated: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_type: Option<QueryType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

impl QueryRecord {
    pub fn new(id: impl Into<String>, sql: impl Into<String>) -> Self {
        QueryRecord {
            id: id.into(),
            sql: sql.into(),
            utterance: None,
            generated: Vec::new(),
            query_type: None,
            split: None,
        }
    }

    pub fn with_utterance(mut self, utterance: impl Into<String>) -> Self {
        self.utterance = Some(utterance.into());
        self
    }

    /// All reference texts usable for scoring: gold plus generated.
    pub fn references(&self) -> Vec<String> {
        let mut refs: Vec<String> = self.utterance.iter().cloned().collect();
        refs.extend(self.generated.iter().cloned());
        refs
    }
}

/// Sidecar describing a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub schema_version: u32,
    pub records: usize,
    pub sql_count: usize,
    pub gold_count: usize,
    pub generated_count: usize,
    pub unparsed_sql: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

impl DatasetManifest {
    pub fn compute(name: &str, records: &[QueryRecord]) -> Self {
        let unparsed_sql = records
            .iter()
            .filter(|r| parse_sql(&r.sql).is_err())
            .map(|r| r.id.clone())
            .collect();
        DatasetManifest {
            name: name.to_string(),
            schema_version: MANIFEST_SCHEMA_VERSION,
            records: records.len(),
            sql_count: records.iter().filter(|r| !r.sql.is_empty()).count(),
            gold_count: records.iter().filter(|r| r.utterance.is_some()).count(),
            generated_count: records.iter().map(|r| r.generated.len()).sum(),
            unparsed_sql,
            seed: None,
            notes: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    S2tJsonl,
    Text2SqlPairs,
}

impl std::str::FromStr for DatasetFormat {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "s2t-jsonl" => Ok(DatasetFormat::S2tJsonl),
            "text2sql-pairs" => Ok(DatasetFormat::Text2SqlPairs),
            other => Err(DatasetError::UnknownFormat(other.to_string())),
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Load records plus their computed manifest. Records whose SQL fails to
/// parse are kept but listed in the manifest; structural problems in the
/// file itself are fatal.
pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
) -> Result<(Vec<QueryRecord>, DatasetManifest), DatasetError> {
    let records = match format {
        DatasetFormat::S2tJsonl => load_s2t_jsonl(path)?,
        DatasetFormat::Text2SqlPairs => load_text2sql_pairs(path)?,
    };
    let mut seen = BTreeSet::new();
    for record in &records {
        if !seen.insert(record.id.clone()) {
            return Err(DatasetError::DuplicateId(record.id.clone()));
        }
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "dataset".to_string());
    let manifest = DatasetManifest::compute(&name, &records);
    Ok((records, manifest))
}

fn load_s2t_jsonl(path: &Path) -> Result<Vec<QueryRecord>, DatasetError> {
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|_| DatasetError::SchemaError {
                line: i + 1,
                field: "invalid JSON".to_string(),
            })?;
        let record = record_from_value(&value, i + 1)?;
        records.push(record);
    }
    Ok(records)
}

fn record_from_value(value: &serde_json::Value, line: usize) -> Result<QueryRecord, DatasetError> {
    let get_str = |field: &str| -> Result<String, DatasetError> {
        value
            .get(field)
            .and_then(|v| v.as_str())
            .map(|s| s.to_string())
            .ok_or_else(|| DatasetError::SchemaError {
                line,
                field: field.to_string(),
            })
    };
    let sql = get_str("sql")?;
    if sql.trim().is_empty() {
        return Err(DatasetError::SchemaError {
            line,
            field: "sql (empty)".to_string(),
        });
    }
    let mut record: QueryRecord =
        serde_json::from_value(value.clone()).map_err(|e| DatasetError::SchemaError {
            line,
            field: e.to_string(),
        })?;
    if record.generated.len() > 3 {
        return Err(DatasetError::SchemaError {
            line,
            field: "generated (more than 3 entries)".to_string(),
        });
    }
    if record.query_type.is_none() {
        record.query_type = parse_sql(&record.sql).ok().map(|g| classify_query(&g));
    }
    Ok(record)
}

fn load_text2sql_pairs(path: &Path) -> Result<Vec<QueryRecord>, DatasetError> {
    let content = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let values: Vec<serde_json::Value> = if content.trim_start().starts_with('[') {
        serde_json::from_str(&content).map_err(|_| DatasetError::SchemaError {
            line: 1,
            field: "invalid JSON array".to_string(),
        })?
    } else {
        content
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|_| DatasetError::SchemaError {
                    line: i + 1,
                    field: "invalid JSON".to_string(),
                })
            })
            .collect::<Result<_, _>>()?
    };
    let mut records = Vec::new();
    for (i, value) in values.iter().enumerate() {
        let sql = value
            .get("query")
            .or_else(|| value.get("sql"))
            .and_then(|v| v.as_str())
            .ok_or_else(|| DatasetError::SchemaError {
                line: i + 1,
                field: "query".to_string(),
            })?;
        let utterance = value
            .get("question")
            .or_else(|| value.get("utterance"))
            .and_then(|v| v.as_str());
        let mut record = QueryRecord::new(format!("r{:05}", i), sql);
        record.utterance = utterance.map(|s| s.to_string());
        record.query_type = parse_sql(sql).ok().map(|g| classify_query(&g));
        records.push(record);
    }
    Ok(records)
}

/// Write records as JSONL with stable field order, plus a
/// `<name>.manifest.json` sidecar. Byte-identical for identical input.
pub fn write_dataset(records: &[QueryRecord], path: &Path) -> Result<DatasetManifest, DatasetError> {
    let mut out = Vec::new();
    for record in records {
        serde_json::to_writer(&mut out, record).expect("record serialization");
        out.push(b'\n');
    }
    std::fs::write(path, &out).map_err(|e| io_err(path, e))?;

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "dataset".to_string());
    let manifest = DatasetManifest::compute(&name, records);
    let manifest_path = path.with_file_name(format!("{name}.manifest.json"));
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serialization");
    manifest_bytes.push(b'\n');
    std::fs::write(&manifest_path, manifest_bytes).map_err(|e| io_err(&manifest_path, e))?;
    Ok(manifest)
}

/// Result of scanning one record's utterances for schema identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeakageOutcome {
    Pass,
    Flagged(BTreeSet<String>),
}

/// Extract the record's own schema terms (table/column identifiers) from its
/// SQL. Unparseable SQL yields the empty set.
pub fn schema_terms(record: &QueryRecord) -> BTreeSet<String> {
    parse_tree(&record.sql)
        .map(|tree| tree.identifiers())
        .unwrap_or_default()
}

/// Flag utterances that mention a schema identifier as a whole word,
/// case-insensitively.
pub fn leakage_check(record: &QueryRecord, terms: &BTreeSet<String>) -> LeakageOutcome {
    let mut flagged = BTreeSet::new();
    for utterance in record
        .utterance
        .iter()
        .chain(record.generated.iter())
    {
        let words: BTreeSet<String> = word_tokens(utterance).into_iter().collect();
        for term in terms {
            if words.contains(term.to_lowercase().as_str()) {
                flagged.insert(term.clone());
            }
        }
    }
    if flagged.is_empty() {
        LeakageOutcome::Pass
    } else {
        LeakageOutcome::Flagged(flagged)
    }
}

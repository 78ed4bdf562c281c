//! Shared fixture generation for the CLI and acceptance suites.

use std::path::Path;
use std::process::Output;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub const TABLES: [&str; 8] = [
    "singers", "concerts", "dogs", "treatments", "flights", "orders", "students", "courses",
];
pub const COLUMNS: [&str; 8] = [
    "name", "age", "price", "city", "grade", "owner_id", "total", "year",
];

/// Deterministic Spider-shaped SQL corpus.
pub fn synthetic_sql(rng: &mut ChaCha20Rng) -> String {
    let table = TABLES[rng.random_range(0..TABLES.len())];
    let column = COLUMNS[rng.random_range(0..COLUMNS.len())];
    let other = TABLES[rng.random_range(0..TABLES.len())];
    let value = rng.random_range(1..100);
    match rng.random_range(0..6) {
        0 => format!("SELECT {column} FROM {table}"),
        1 => format!("SELECT count(*) FROM {table} WHERE {column} > {value}"),
        2 => format!(
            "SELECT {column} FROM {table} WHERE id IN (SELECT id FROM {other} WHERE {column} < {value})"
        ),
        3 => format!("SELECT {column}, count(*) FROM {table} GROUP BY {column} HAVING count(*) > 2"),
        4 => format!("SELECT avg({column}) FROM {table} ORDER BY {column} DESC LIMIT {value}"),
        _ => format!(
            "SELECT t1.{column} FROM {table} AS t1 JOIN {other} AS t2 ON t1.id = t2.id WHERE t2.{column} = {value}"
        ),
    }
}

pub fn synthetic_utterance(rng: &mut ChaCha20Rng, index: usize) -> String {
    let verbs = ["show", "list", "count", "find", "return"];
    let verb = verbs[rng.random_range(0..verbs.len())];
    let table = TABLES[rng.random_range(0..TABLES.len())];
    let column = COLUMNS[rng.random_range(0..COLUMNS.len())];
    format!("{verb} the {column} of all {table} matching case {index}")
}

/// Write a JSONL dataset of `n` records with ids `<prefix>NNNN`.
pub fn write_fixture_dataset(path: &Path, prefix: &str, n: usize, seed: u64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = String::new();
    for i in 0..n {
        let record = serde_json::json!({
            "id": format!("{prefix}{i:04}"),
            "sql": synthetic_sql(&mut rng),
            "utterance": synthetic_utterance(&mut rng, i),
        });
        out.push_str(&serde_json::to_string(&record).unwrap());
        out.push('\n');
    }
    std::fs::write(path, out).unwrap();
}

pub fn sql2text(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_sql2text"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn assert_success(output: &Output) {
    assert!(
        output.status.success(),
        "command failed (status {:?})\nstdout: {}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

pub fn file_sha256(path: &Path) -> String {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path).unwrap_or_else(|_| panic!("missing file {}", path.display()));
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

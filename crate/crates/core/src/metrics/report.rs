use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{paired_t_test, MetricsError};
use crate::ast::QueryType;
use crate::selection::Strategy;

/// Scores for one generated sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub id: String,
    pub bleu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embed_sim: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub align: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_type: Option<QueryType>,
}

/// Aggregates for one method (strategy) column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScores {
    pub strategy: Strategy,
    pub n_demos: usize,
    pub samples: Vec<SampleScore>,
    pub mean_bleu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_embed_sim: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_align: Option<f64>,
    /// Per-query-type BLEU means.
    pub by_query_type: BTreeMap<String, f64>,
    /// Baselines this method beats with p < alpha on BLEU.
    pub significant_vs: Vec<String>,
}

impl MethodScores {
    pub fn from_samples(
        strategy: Strategy,
        n_demos: usize,
        samples: Vec<SampleScore>,
    ) -> Self {
        let mean = |values: Vec<f64>| -> Option<f64> {
            if values.is_empty() {
                None
            } else {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            }
        };
        let mean_bleu = mean(samples.iter().map(|s| s.bleu).collect()).unwrap_or(0.0);
        let mean_embed_sim = {
            let xs: Vec<f64> = samples.iter().filter_map(|s| s.embed_sim).collect();
            if xs.len() == samples.len() {
                mean(xs)
            } else {
                None
            }
        };
        let mean_align = {
            let xs: Vec<f64> = samples.iter().filter_map(|s| s.align).collect();
            if xs.len() == samples.len() && !xs.is_empty() {
                mean(xs)
            } else {
                None
            }
        };
        let mut by_type: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for s in &samples {
            if let Some(qt) = s.query_type {
                by_type.entry(qt.to_string()).or_default().push(s.bleu);
            }
        }
        let by_query_type = by_type
            .into_iter()
            .map(|(k, v)| {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                (k, m)
            })
            .collect();
        MethodScores {
            strategy,
            n_demos,
            samples,
            mean_bleu,
            mean_embed_sim,
            mean_align,
            by_query_type,
            significant_vs: Vec::new(),
        }
    }
}

/// Full evaluation report: one `MethodScores` per strategy, plus the
/// significance comparisons that were run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub methods: Vec<MethodScores>,
    pub alpha: f64,
    /// Which BLEU averaging convention produced the numbers.
    pub bleu_mode: String,
    pub reference_mode: String,
}

/// One rendered table row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub bleu: String,
    pub embed_sim: String,
    pub align: String,
}

impl ScoreReport {
    pub fn new(methods: Vec<MethodScores>, alpha: f64) -> Self {
        ScoreReport {
            methods,
            alpha,
            bleu_mode: "sentence-level, averaged over the test set".to_string(),
            reference_mode: "multi-reference (gold + retained generated)".to_string(),
        }
    }

    /// Mark methods whose BLEU beats a named baseline with p < alpha in a
    /// paired two-sided t-test over shared sample ids.
    pub fn mark_significance(&mut self, baselines: &[Strategy]) -> Result<(), MetricsError> {
        let baseline_scores: Vec<(Strategy, BTreeMap<String, f64>)> = self
            .methods
            .iter()
            .filter(|m| baselines.contains(&m.strategy))
            .map(|m| {
                let by_id = m
                    .samples
                    .iter()
                    .map(|s| (s.id.clone(), s.bleu))
                    .collect::<BTreeMap<_, _>>();
                (m.strategy, by_id)
            })
            .collect();
        let alpha = self.alpha;
        for method in &mut self.methods {
            method.significant_vs.clear();
            for (baseline, base_by_id) in &baseline_scores {
                if *baseline == method.strategy {
                    continue;
                }
                let mut a = Vec::new();
                let mut b = Vec::new();
                for sample in &method.samples {
                    if let Some(&base) = base_by_id.get(&sample.id) {
                        a.push(sample.bleu);
                        b.push(base);
                    }
                }
                if a.len() < 2 {
                    continue;
                }
                let outcome = paired_t_test(&a, &b, alpha)?;
                if outcome.significant && outcome.t > 0.0 {
                    method.significant_vs.push(baseline.to_string());
                }
            }
        }
        Ok(())
    }

    /// Aligned-text table, methods down the side and metrics across.
    pub fn render_table(&self) -> String {
        let fmt_opt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.4}"),
            None => "-".to_string(),
        };
        let mut rows: Vec<ReportRow> = Vec::new();
        for m in &self.methods {
            let daggers: String = m
                .significant_vs
                .iter()
                .map(|b| match b.as_str() {
                    "random" => "†",
                    "bm25" => "‡",
                    _ => "*",
                })
                .collect();
            rows.push(ReportRow {
                method: format!("{}-{}{}", m.strategy, m.n_demos, daggers),
                bleu: format!("{:.4}", m.mean_bleu),
                embed_sim: fmt_opt(m.mean_embed_sim),
                align: fmt_opt(m.mean_align),
            });
        }
        let headers = ["Method", "BLEU", "EmbedSim", "Align"];
        let width = |get: fn(&ReportRow) -> &str, header: &str| {
            rows.iter()
                .map(|r| get(r).chars().count())
                .chain(std::iter::once(header.chars().count()))
                .max()
                .unwrap_or(0)
        };
        let w0 = width(|r| &r.method, headers[0]);
        let w1 = width(|r| &r.bleu, headers[1]);
        let w2 = width(|r| &r.embed_sim, headers[2]);
        let w3 = width(|r| &r.align, headers[3]);
        let mut out = format!(
            "{:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}\n",
            headers[0], headers[1], headers[2], headers[3]
        );
        out.push_str(&format!(
            "{}  {}  {}  {}\n",
            "-".repeat(w0),
            "-".repeat(w1),
            "-".repeat(w2),
            "-".repeat(w3)
        ));
        for r in rows {
            out.push_str(&format!(
                "{:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}\n",
                r.method, r.bleu, r.embed_sim, r.align
            ));
        }
        // Per-query-type block mirroring the stratified layout.
        let mut has_types = false;
        for m in &self.methods {
            if !m.by_query_type.is_empty() {
                has_types = true;
                break;
            }
        }
        if has_types {
            out.push_str("\nBLEU by query type\n");
            for m in &self.methods {
                let parts: Vec<String> = m
                    .by_query_type
                    .iter()
                    .map(|(k, v)| format!("{k}={v:.4}"))
                    .collect();
                out.push_str(&format!(
                    "{:<w0$}  {}\n",
                    format!("{}-{}", m.strategy, m.n_demos),
                    parts.join("  ")
                ));
            }
        }
        out.push_str(&format!(
            "\n† p<{a} vs random, ‡ p<{a} vs bm25 (paired t-test on BLEU)\n",
            a = self.alpha
        ));
        out
    }
}
